"""Spatial search [W^t1 R]^t2 on a periodic hypercubic lattice.

The marked vertex defaults to the origin. Amplitudes stay real throughout
(uniform start, real walk, sign-flip oracle, real ancilla rotation), so the
loops run in float64.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .hilbert import NORM_TOL, NormDriftError, StateVector
from .lattice import Lattice, index_to_coords
from .walk import WalkOperator, tune_tau

log = logging.getLogger(__name__)

DIFFUSIONS = ("walk", "grover")
TULSI_ORDERS = ("reflect", "literal")


class ConsistencyError(RuntimeError):
    """A result violates a bound that any correct simulation must satisfy."""


class DegenerateRunError(ValueError):
    pass


@dataclass(frozen=True)
class Tulsi:
    """Ancilla-controlled regulator; cos_delta = 1 switches it off.

    ``order="reflect"`` (default) reflects about |t>(cos d|1> + sin d|0>),
    gives the paused branch a -1 phase and walks the ancilla-1 branch.
    ``order="literal"`` rotates the ancilla, flips the (1, t) sign and walks
    the ancilla-1 branch, with no undo and no paused-branch phase.
    """

    cos_delta: float
    order: str = "reflect"

    def __post_init__(self):
        if not 0.0 < self.cos_delta <= 1.0:
            raise ValueError(f"cos_delta must lie in (0, 1], got {self.cos_delta}")
        if self.order not in TULSI_ORDERS:
            raise ValueError(f"unknown Tulsi gate order {self.order!r}")


def default_cos_delta(n: int, scale: float = 1.0) -> float:
    """scale / sqrt(log2 N), clipped to 1."""
    return min(1.0, scale / math.sqrt(math.log2(n)))


def default_t2_max(lat: Lattice) -> int:
    n = lat.N
    if lat.d <= 2:
        return math.ceil(8 * math.sqrt(n * math.log2(n)))
    return math.ceil(8 * math.sqrt(n))


@dataclass
class SearchConfig:
    lattice: Lattice
    t1: int = 3
    tau: float | None = None
    regulator: Tulsi | None = None
    t2_max: int | None = None
    marked: int = 0
    diffusion: str = "walk"
    stop_at_peak: bool = False
    peak_drop: float = 0.5
    track_leakage: bool = False

    def __post_init__(self):
        if self.diffusion not in DIFFUSIONS:
            raise ValueError(f"diffusion must be one of {DIFFUSIONS}")
        if self.t2_max is not None and self.t2_max < 1:
            raise ValueError("t2_max must be >= 1")
        if not 0 <= self.marked < self.lattice.N:
            raise IndexError(f"marked vertex {self.marked} out of range")


@dataclass
class SearchResult:
    lattice: Lattice
    t1: int
    tau: float
    cos_delta: float | None
    p_curve: np.ndarray
    t2_star: int
    p_max: float
    status: str
    norm_drift: float
    leakage: np.ndarray | None = None
    final_state: StateVector | None = field(default=None, repr=False)

    @property
    def effective_queries(self) -> float:
        return effective_queries(self)

    @property
    def walk_steps_total(self) -> int:
        return self.t1 * self.t2_star


def find_peak(p_curve, drop: float = 0.5) -> tuple[int, float, bool]:
    """First prominent maximum of a success curve.

    Returns the earliest running maximum after which the curve falls below
    ``drop`` times that maximum. Unconfirmed curves fall back to the global
    maximum with ``confirmed=False``.
    """
    p = np.asarray(p_curve, dtype=float)
    best_t, best = 0, p[0]
    for t in range(1, len(p)):
        if p[t] > best:
            best_t, best = t, p[t]
        elif best_t > 0 and p[t] < drop * best:
            return best_t, float(best), True
    return best_t, float(best), False


def oracle_reflect(state: StateVector, marked: int) -> StateVector:
    """R = 1 - 2|m><m|: flip the sign of one amplitude."""
    if not 0 <= marked < state.dim:
        raise IndexError(f"marked index {marked} out of range")
    a = state.amps.copy()
    a[marked] = -a[marked]
    return StateVector(a, tol=None)


def _leak(flat: np.ndarray, m: int, extra: float = 0.0) -> float:
    # norm of the part outside span{|s>, |m>}, ancilla weight counted as outside
    rest = np.delete(flat, m)
    dev = rest - rest.mean()
    return math.sqrt(float(np.dot(dev, dev)) + extra**2)


def _resolve_tau(cfg: SearchConfig) -> float:
    if cfg.diffusion == "grover":
        return float("nan")
    if cfg.tau is not None:
        return float(cfg.tau)
    tau, score = tune_tau(cfg.lattice, cfg.t1)
    log.info("tuned tau=%.6f (Re<0|W^%d|0> = %.6f) for d=%d L=%d", tau, cfg.t1, score, cfg.lattice.d, cfg.lattice.L)
    return tau


def _evolve(cfg: SearchConfig) -> SearchResult:
    lat = cfg.lattice
    n, m = lat.N, cfg.marked
    tau = _resolve_tau(cfg)
    t2_max = cfg.t2_max if cfg.t2_max is not None else default_t2_max(lat)
    walk = None if cfg.diffusion == "grover" else WalkOperator(lat, tau, cfg.t1)
    reg = cfg.regulator
    if reg is not None:
        c = reg.cos_delta
        s = math.sqrt(max(0.0, 1.0 - c * c))

    psi = np.full(lat.shape, 1.0 / math.sqrt(n))
    paused = 0.0  # ancilla-0 amplitude, only ever nonzero at the marked vertex
    curve = [1.0 / n]
    leak = [_leak(psi.reshape(-1), m)] if cfg.track_leakage else None
    best_t, best = 0, curve[0]

    for t2 in range(1, t2_max + 1):
        flat = psi.reshape(-1)
        if reg is None:
            flat[m] = -flat[m]
        elif reg.order == "reflect":
            a0, a1 = paused, flat[m]
            a0, a1 = c * a0 + s * a1, -s * a0 + c * a1
            a1 = -a1
            a0, a1 = c * a0 - s * a1, s * a0 + c * a1
            paused, flat[m] = -a0, a1
        else:
            a0, a1 = paused, flat[m]
            paused, flat[m] = c * a0 - s * a1, -(s * a0 + c * a1)

        if walk is None:
            psi = 2.0 * psi.mean() - psi
        else:
            psi = walk.power_array(psi)

        flat = psi.reshape(-1)
        p = flat[m] ** 2 + paused**2
        curve.append(float(p))
        if leak is not None:
            leak.append(_leak(flat, m, paused))
        if cfg.stop_at_peak:
            if p > best:
                best_t, best = t2, p
            elif best_t > 0 and p < cfg.peak_drop * best:
                break

    flat = psi.reshape(-1)
    drift = abs(float(np.dot(flat, flat)) + paused**2 - 1.0)
    if drift > NORM_TOL:
        raise NormDriftError(f"search lost unitarity: |norm^2 - 1| = {drift:.3e}")

    t2_star, p_max, confirmed = find_peak(curve, cfg.peak_drop)
    status = "ok" if confirmed else "budget-limited"
    if not confirmed:
        log.warning("no confirmed peak within t2_max=%d (d=%d L=%d)", t2_max, lat.d, lat.L)

    if reg is None:
        final = StateVector(flat, tol=None)
    else:
        full = np.zeros(2 * n)
        full[n:] = flat
        full[m] = paused
        final = StateVector(full, tol=None)
    return SearchResult(
        lattice=lat,
        t1=cfg.t1 if walk is not None else 0,
        tau=tau,
        cos_delta=None if reg is None else reg.cos_delta,
        p_curve=np.asarray(curve),
        t2_star=t2_star,
        p_max=p_max,
        status=status,
        norm_drift=drift,
        leakage=None if leak is None else np.asarray(leak),
        final_state=final,
    )


def run_search(cfg: SearchConfig) -> SearchResult:
    """Start from |s>, alternate R and W^t1, record P(marked) after each query."""
    if cfg.regulator is not None:
        return run_search_tulsi(cfg)
    return _evolve(cfg)


def run_search_tulsi(cfg: SearchConfig) -> SearchResult:
    """Regulated search on ancilla x lattice, starting from |1>|s>.

    The final state is laid out ancilla-major: index a*N + x. The success
    probability sums both ancilla components at the marked vertex.
    """
    if cfg.regulator is None:
        raise ValueError("run_search_tulsi needs a Tulsi regulator")
    if cfg.lattice.d != 2:
        log.info("Tulsi regulator used with d=%d (designed for d=2)", cfg.lattice.d)
    return _evolve(cfg)


def effective_queries(r: SearchResult) -> float:
    """t2*/sqrt(P_max): the query count once amplitude amplification is folded in."""
    if r.p_max <= 0.0:
        raise DegenerateRunError("p_max = 0, effective query count undefined")
    return r.t2_star / math.sqrt(r.p_max)


@dataclass(frozen=True)
class LowerBoundReport:
    steps_over_dL: float
    queries_over_sqrt_n: float
    light_cone_bound: float
    p_max: float


def light_cone_bound(lat: Lattice, walk_steps: int) -> float:
    """Largest P(origin) reachable from |s> after ``walk_steps`` W steps.

    Each W step moves amplitude at most 2 sites per axis and the oracle
    moves nothing, so the origin can only gather amplitude from the L-inf
    ball of radius 2n: P <= |ball| / N by Cauchy-Schwarz.
    """
    side = min(lat.L, 4 * walk_steps + 1)
    return min(1.0, side**lat.d / lat.N)


def lower_bound_check(lattice: Lattice, r: SearchResult) -> LowerBoundReport:
    if r.p_max > 1.0 / lattice.N * (1 + 1e-9) and r.t2_star < 1:
        raise ConsistencyError("amplification reported with zero queries")
    if math.isnan(r.tau):
        bound = 1.0
    else:
        bound = light_cone_bound(lattice, r.walk_steps_total)
        if r.p_max > bound + 1e-12:
            raise ConsistencyError(
                f"p_max={r.p_max:.6g} exceeds the light-cone bound {bound:.6g} "
                f"after {r.walk_steps_total} walk steps"
            )
    eq = effective_queries(r) if r.p_max > 0 else float("inf")
    return LowerBoundReport(
        steps_over_dL=r.walk_steps_total / (lattice.d * lattice.L),
        queries_over_sqrt_n=eq / math.sqrt(lattice.N),
        light_cone_bound=bound,
        p_max=r.p_max,
    )


def marked_coords(cfg: SearchConfig) -> tuple[int, ...]:
    return index_to_coords(cfg.lattice, cfg.marked)
