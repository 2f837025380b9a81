"""Grover database search: exact dynamics and closed-form query counts."""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field

import numpy as np

from .hilbert import DimensionError, StateVector, check_norm, uniform_state

# Equal-success ties are resolved toward fewer queries.
TIE_TOL = 1e-12


class NoAmplificationError(ValueError):
    """<t|V|s> vanishes, so there is nothing to amplify."""


@dataclass(frozen=True)
class AngleParams:
    theta: float
    per_query_rotation: float

    @classmethod
    def for_counts(cls, n: int, m: int = 1) -> "AngleParams":
        _check_counts(n, m)
        theta = math.asin(math.sqrt(m / n))
        return cls(theta, 2.0 * theta)


@dataclass
class GroverRun:
    n: int
    marked: frozenset[int]
    q_performed: int = 0
    trace: list[tuple[int, float]] = field(default_factory=list)
    state: StateVector | None = None


@dataclass(frozen=True)
class ClassicalBaselines:
    binary_sorted: int
    unsorted_mean_with_memory: float
    unsorted_mean_memoryless: float


def _check_counts(n: int, m: int) -> None:
    if n < 1:
        raise DimensionError(f"invalid database size {n}")
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= M <= N, got M={m}, N={n}")


def _marked_array(marked: Iterable[int], n: int) -> np.ndarray:
    idx = np.unique(np.fromiter(marked, dtype=np.int64))
    if idx.size == 0:
        raise ValueError("marked set is empty")
    if idx[0] < 0 or idx[-1] >= n:
        raise IndexError(f"marked index out of range for N={n}")
    return idx


def _grover_step(a: np.ndarray, idx: np.ndarray) -> np.ndarray:
    # -U_s U_t on raw amplitudes; -U_s x = 2<x>_mean - x
    a[idx] = -a[idx]
    return 2.0 * a.mean() - a


def grover_iterate(state: StateVector, marked: Iterable[int]) -> StateVector:
    """One Grover iteration (-U_s U_t) applied to ``state``."""
    idx = _marked_array(marked, state.dim)
    out = StateVector(_grover_step(state.amps.copy(), idx), tol=None)
    check_norm(out)
    return out


def run_grover(n: int, marked: Iterable[int], q: int, start: StateVector | None = None) -> GroverRun:
    """Iterate ``q`` times from |s> (or ``start``) recording the success trace."""
    idx = _marked_array(marked, n)
    if q < 0:
        raise ValueError("iteration count must be >= 0")
    a = (start if start is not None else uniform_state(n)).amps.copy()
    if a.size != n:
        raise DimensionError(f"start state has dimension {a.size}, expected {n}")
    trace = [(0, float(np.sum(np.abs(a[idx]) ** 2)))]
    for k in range(1, q + 1):
        a = _grover_step(a, idx)
        trace.append((k, float(np.sum(np.abs(a[idx]) ** 2))))
    st = StateVector(a, tol=None)
    check_norm(st)
    return GroverRun(n, frozenset(int(i) for i in idx), q, trace, st)


def _best_q(theta: float) -> tuple[int, float]:
    # Search the first sweep toward |t>; later revivals are not optimal queries.
    q_hi = int(math.floor(math.pi / (4.0 * theta))) + 1
    best_q, best_p = 0, math.sin(theta) ** 2
    for q in range(1, q_hi + 1):
        p = math.sin((2 * q + 1) * theta) ** 2
        if p > best_p + TIE_TOL:
            best_q, best_p = q, p
    return best_q, best_p


def optimal_queries(n: int, m: int = 1) -> tuple[int, float]:
    """Smallest Q maximizing sin^2((2Q+1) theta) with sin(theta) = sqrt(M/N)."""
    return _best_q(AngleParams.for_counts(n, m).theta)


def success_probability(n: int, m: int, q: int) -> float:
    if q < 0:
        raise ValueError("iteration count must be >= 0")
    theta = AngleParams.for_counts(n, m).theta
    return math.sin((2 * q + 1) * theta) ** 2


def solve_n_for_q(q: int) -> float:
    """Database size for which exactly ``q`` queries land on |t>.

    Solves (2Q+1) asin(1/sqrt(N)) = pi/2 for N. Q = 0 would give N = 1,
    which is reported as an error rather than a solution.
    """
    if q < 1:
        raise ValueError("Q must be >= 1 (Q = 0 is the trivial N = 1 case)")
    return 1.0 / math.sin(math.pi / (2 * (2 * q + 1))) ** 2


def rotation_eigenpairs(n: int) -> list[tuple[complex, np.ndarray]]:
    """Eigenpairs of the Grover rotation in the (|t>, |t_perp>) basis.

    |t_perp> is the normalized part of |s> orthogonal to |t>, so the
    restricted operator is the rotation [[cos 2t, sin 2t], [-sin 2t, cos 2t]].
    """
    if n < 2:
        raise DimensionError("rotation eigenpairs need N >= 2")
    theta = AngleParams.for_counts(n, 1).theta
    r = 1.0 / math.sqrt(2.0)
    return [
        (complex(np.exp(2j * theta)), np.array([r, 1j * r])),
        (complex(np.exp(-2j * theta)), np.array([r, -1j * r])),
    ]


def restricted_rotation(n: int) -> np.ndarray:
    """The 2x2 matrix of -U_s U_t on span{|t>, |t_perp>}."""
    theta = AngleParams.for_counts(n, 1).theta
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    return np.array([[c, s], [-s, c]])


def random_stopping_mean(
    n: int,
    samples: int,
    seed: int,
    window: int | None = None,
    start: int = 0,
) -> float:
    """Mean success when the search is stopped at a uniformly random iteration.

    The stopping iteration is drawn from [start, start + window). The default
    window is one full rotation of the state, ceil(pi / theta) iterations.
    Success probabilities come from an actual state-vector run.
    """
    if n < 2:
        raise DimensionError("random stopping needs N >= 2")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    theta = AngleParams.for_counts(n, 1).theta
    if window is None:
        window = math.ceil(math.pi / theta)
    run = run_grover(n, [0], start + window - 1)
    table = np.array([p for _, p in run.trace[start:]])
    rng = np.random.default_rng(seed)
    stops = rng.integers(0, window, size=samples)
    return float(table[stops].mean())


def _as_transform(v, n: int, v_adjoint):
    if callable(v):
        if v_adjoint is None:
            raise ValueError("a callable V needs its adjoint as well")
        return v, v_adjoint
    mat = np.asarray(v, dtype=np.complex128)
    if mat.shape != (n, n):
        raise DimensionError(f"V has shape {mat.shape}, expected {(n, n)}")
    adj = mat.conj().T
    return (lambda x: mat @ x), (lambda x: adj @ x)


def amplitude_amplify(
    v: np.ndarray | Callable[[np.ndarray], np.ndarray],
    s_index: int,
    t_index: int,
    n: int,
    v_adjoint: Callable[[np.ndarray], np.ndarray] | None = None,
) -> tuple[int, float]:
    """Amplify |<t|V|s>|^2 by iterating -(V U_s V^dagger) U_t from V|s>.

    ``v`` is either a dense unitary or a callable, in which case
    ``v_adjoint`` must apply V^dagger. Returns the optimal iteration count and
    the success probability measured after running it.
    """
    if not (0 <= s_index < n and 0 <= t_index < n):
        raise IndexError("s/t index out of range")
    fwd, adj = _as_transform(v, n, v_adjoint)
    e_s = np.zeros(n, dtype=np.complex128)
    e_s[s_index] = 1.0
    psi = fwd(e_s)
    amp = abs(psi[t_index])
    if amp < 1e-15:
        raise NoAmplificationError("<t|V|s> = 0")
    q, _ = _best_q(math.asin(min(1.0, amp)))
    for _ in range(q):
        psi[t_index] = -psi[t_index]
        y = adj(psi)
        y[s_index] = -y[s_index]
        psi = -fwd(y)
    check_norm(StateVector(psi, tol=None))
    return q, float(abs(psi[t_index]) ** 2)


def factorized_search(n: int, target: int) -> tuple[int, int]:
    """Locate ``target`` one base-4 digit at a time, one 4-item query per digit."""
    digits = round(math.log(n, 4)) if n >= 1 else -1
    if n < 4 or 4**digits != n:
        raise ValueError(f"N={n} is not a power of 4")
    if not 0 <= target < n:
        raise IndexError(f"target {target} out of range")
    found, queries = 0, 0
    for k in reversed(range(digits)):
        digit = (target // 4**k) % 4
        run = run_grover(4, [digit], 1)
        queries += 1
        found = 4 * found + int(np.argmax(run.state.probabilities()))
    return queries, found


def classical_baselines(n: int) -> ClassicalBaselines:
    if n < 1:
        raise DimensionError(f"invalid database size {n}")
    return ClassicalBaselines(
        binary_sorted=(n - 1).bit_length(),
        unsorted_mean_with_memory=(n + 1) / 2,
        unsorted_mean_memoryless=float(n),
    )
