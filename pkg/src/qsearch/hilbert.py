"""Dense state-vector arithmetic.

States are indexed by item label, one complex amplitude per basis vector.
Reflections are applied as rank-1 updates; nothing here ever builds an
N x N matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-10


class DimensionError(ValueError):
    """Raised for an invalid dimension or mismatched operands."""


class NormDriftError(ArithmeticError):
    """Raised when a state that should be unit-norm is not.

    Drift is never corrected silently: it means a non-unitary step slipped in.
    """


class StateVector:
    """A normalized vector of complex amplitudes.

    The constructor copies ``amps`` into a complex128 array and checks the
    norm against ``tol``; pass ``tol=None`` only for scratch vectors that are
    normalized by construction elsewhere.
    """

    __slots__ = ("amps",)

    def __init__(self, amps, tol: float | None = NORM_TOL):
        a = np.array(amps, dtype=np.complex128).reshape(-1)
        if a.size < 1:
            raise DimensionError("state must have dimension >= 1")
        self.amps = a
        if tol is not None:
            check_norm(self, tol)

    @property
    def dim(self) -> int:
        return self.amps.size

    def norm2(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def copy(self) -> "StateVector":
        return StateVector(self.amps, tol=None)

    def __len__(self) -> int:
        return self.dim

    def __repr__(self) -> str:
        return f"StateVector(dim={self.dim})"


def check_norm(v: StateVector, tol: float = NORM_TOL) -> float:
    n2 = v.norm2()
    if abs(n2 - 1.0) > tol:
        raise NormDriftError(f"norm^2 = {n2!r} deviates from 1 by more than {tol}")
    return n2


def uniform_state(n: int) -> StateVector:
    """The equal-amplitude superposition |s>, every amplitude 1/sqrt(n)."""
    if n < 1:
        raise DimensionError(f"invalid dimension {n}")
    return StateVector(np.full(n, 1.0 / np.sqrt(n)))


def basis_state(n: int, i: int) -> StateVector:
    if n < 1:
        raise DimensionError(f"invalid dimension {n}")
    if not 0 <= i < n:
        raise IndexError(f"basis index {i} out of range for dimension {n}")
    a = np.zeros(n, dtype=np.complex128)
    a[i] = 1.0
    return StateVector(a)


def _same_dim(a: StateVector, b: StateVector) -> None:
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} vs {b.dim}")


def overlap(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in the first argument."""
    _same_dim(a, b)
    return complex(np.vdot(a.amps, b.amps))


@dataclass(frozen=True)
class Reflection:
    """sign * (1 - 2|p><p|) for a unit vector p."""

    axis: StateVector
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("reflection sign must be +1 or -1")


def apply_reflection(r: Reflection, v: StateVector) -> StateVector:
    _same_dim(r.axis, v)
    p = r.axis.amps
    out = v.amps - 2.0 * np.vdot(p, v.amps) * p
    if r.sign < 0:
        out = -out
    res = StateVector(out, tol=None)
    check_norm(res)
    return res


def probability_at(v: StateVector, i: int) -> float:
    if not 0 <= i < v.dim:
        raise IndexError(f"index {i} out of range for dimension {v.dim}")
    return float(abs(v.amps[i]) ** 2)
