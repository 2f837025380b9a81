"""Coinless quantum walk built from exactly exponentiated hypercube blocks.

Each block carries the staggered hopping Hamiltonian

    H_B = (i / sqrt(d)) * sum_mu eta_mu(x) (|x><x+mu| - |x+mu><x|),
    eta_mu(x) = (-1)**(x_0 + ... + x_{mu-1}),

whose d terms anticommute, so H_B**2 = 1 and

    exp(-i tau H_B) = cos(tau) + sin(tau) * K,   K = -i H_B (real).

The uniform state is annihilated by the full hopping operator and is an
exact +1 eigenvector of W = U_e U_o; modes near it disperse linearly.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .hilbert import DimensionError, StateVector, check_norm
from .lattice import EVEN, ODD, BlockPartition, Lattice

HALF_PI = 0.5 * math.pi


@lru_cache(maxsize=16)
def staggered_signs(lat: Lattice) -> tuple[np.ndarray, ...]:
    """eta_mu for every axis, shaped to broadcast against (..., *lat.shape)."""
    d, L = lat.d, lat.L
    alt = (-1.0) ** np.arange(L)
    out = [np.ones((1,) * d)]
    cur = np.ones((1,) * d)
    for mu in range(1, d):
        shape = [1] * d
        shape[d - mu] = L  # array axis of lattice axis mu-1
        cur = cur * alt.reshape(shape)
        out.append(cur)
    return tuple(out)


def _ix(ndim: int, ax: int, s) -> tuple:
    idx = [slice(None)] * ndim
    idx[ax] = s
    return tuple(idx)


def _hop(psi: np.ndarray, ax: int, parity: str, L: int) -> np.ndarray:
    """J psi along one axis: h[lo] = psi[hi], h[hi] = -psi[lo] for each block link."""
    n = psi.ndim
    h = np.empty_like(psi)
    if parity == ODD:
        h[_ix(n, ax, slice(0, None, 2))] = psi[_ix(n, ax, slice(1, None, 2))]
        h[_ix(n, ax, slice(1, None, 2))] = -psi[_ix(n, ax, slice(0, None, 2))]
    else:
        # lo = odd sites, hi = lo + 1 (mod L)
        h[_ix(n, ax, slice(1, L - 1, 2))] = psi[_ix(n, ax, slice(2, L, 2))]
        h[_ix(n, ax, L - 1)] = psi[_ix(n, ax, 0)]
        h[_ix(n, ax, slice(2, L, 2))] = -psi[_ix(n, ax, slice(1, L - 1, 2))]
        h[_ix(n, ax, 0)] = -psi[_ix(n, ax, L - 1)]
    return h


def block_step_array(psi: np.ndarray, lat: Lattice, parity: str, tau: float) -> np.ndarray:
    """exp(-i tau H_B) on every block of one parity; psi has shape (..., *lat.shape).

    Cost is O(N d): one hop per axis plus a sign mask.
    """
    d = lat.d
    c, s = math.cos(tau), math.sin(tau) / math.sqrt(d)
    etas = staggered_signs(lat)
    out = c * psi
    for mu in range(d):
        h = _hop(psi, psi.ndim - 1 - mu, parity, lat.L)
        if mu:
            h *= etas[mu]
        h *= s
        out += h
    return out


def block_hamiltonian(part: BlockPartition, b: int) -> np.ndarray:
    """Dense 2**d x 2**d H_B of block ``b`` in corner order (reference use)."""
    lat = part.lattice
    verts = part.blocks[b]
    h = np.zeros((2**lat.d, 2**lat.d), dtype=np.complex128)
    amp = 1j / math.sqrt(lat.d)
    for lo, hi, mu in part.corner_links():
        v = int(verts[lo])
        x = [(v // s) % lat.L for s in lat.strides]
        eta = (-1) ** sum(x[:mu])
        h[lo, hi] += amp * eta
        h[hi, lo] -= amp * eta
    return h


def apply_block_step(state: StateVector, part: BlockPartition, tau: float) -> StateVector:
    lat = part.lattice
    if state.dim != lat.N:
        raise DimensionError(f"state dimension {state.dim} != lattice N {lat.N}")
    psi = block_step_array(state.amps.reshape(lat.shape), lat, part.parity, tau)
    out = StateVector(psi.reshape(-1), tol=None)
    check_norm(out)
    return out


@dataclass(frozen=True)
class WalkOperator:
    """W = U_e U_o with step parameter tau, used t1 times per oracle query.

    ``tau_even`` overrides the even-parity step; by default both parities
    share ``tau``.
    """

    lattice: Lattice
    tau: float
    t1: int = 1
    tau_even: float | None = None

    def __post_init__(self):
        if self.t1 < 1:
            raise ValueError("t1 must be >= 1")

    def step_array(self, psi: np.ndarray) -> np.ndarray:
        lat = self.lattice
        te = self.tau if self.tau_even is None else self.tau_even
        return block_step_array(block_step_array(psi, lat, ODD, self.tau), lat, EVEN, te)

    def power_array(self, psi: np.ndarray, t: int | None = None) -> np.ndarray:
        for _ in range(self.t1 if t is None else t):
            psi = self.step_array(psi)
        return psi


def apply_W(state: StateVector, w: WalkOperator) -> StateVector:
    """One walk step W = U_e U_o (not W**t1)."""
    lat = w.lattice
    if state.dim != lat.N:
        raise DimensionError(f"state dimension {state.dim} != lattice N {lat.N}")
    out = StateVector(w.step_array(state.amps.reshape(lat.shape)).reshape(-1), tol=None)
    check_norm(out)
    return out


def _light_cone_lattice(lat: Lattice, t: int) -> Lattice:
    # Sites within 2t of the origin stay distinct mod L' once L' > 4t.
    small = 4 * t + 2
    return Lattice(lat.d, small) if small < lat.L else lat


def return_amplitude(w: WalkOperator) -> complex:
    """<0|W**t1|0>, evaluated on the smallest lattice the light cone allows."""
    lat = _light_cone_lattice(w.lattice, w.t1)
    psi = np.zeros(lat.shape)
    psi[(0,) * lat.d] = 1.0
    psi = WalkOperator(lat, w.tau, w.t1, w.tau_even).power_array(psi)
    return complex(psi[(0,) * lat.d])


def _objective(kind: str) -> Callable[[complex], float]:
    if kind == "real":
        return lambda z: z.real
    if kind == "abs":
        return abs
    raise ValueError(f"unknown tuning objective {kind!r}")


def tune_tau(
    lattice: Lattice,
    t1: int,
    grid: int = 64,
    refine: bool = True,
    objective: str = "real",
    tol: float = 1e-3,
) -> tuple[float, float]:
    """Choose tau in (0, pi/2] so that W**t1 best mimics -U_s.

    The default objective minimizes Re<0|W**t1|0> (most negative return
    amplitude), which is equivalent to maximizing Tr(-W**t1 U_s) on a
    translation-invariant lattice. ``objective="abs"`` minimizes the modulus
    instead. Grid search, then golden-section refinement around the best
    grid point.
    """
    if grid < 8:
        raise ValueError("grid must have at least 8 points")
    f = _objective(objective)
    score = lambda tau: f(return_amplitude(WalkOperator(lattice, tau, t1)))
    taus = HALF_PI * np.arange(1, grid + 1) / grid
    vals = [score(t) for t in taus]
    k = int(np.argmin(vals))
    best_tau, best = float(taus[k]), float(vals[k])
    if not refine:
        return best_tau, best
    a = HALF_PI * k / grid
    b = min(HALF_PI, HALF_PI * (k + 2) / grid)
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, e = b - g * (b - a), a + g * (b - a)
    fc, fe = score(c), score(e)
    while b - a > tol:
        if fc <= fe:
            b, e, fe = e, c, fc
            c = b - g * (b - a)
            fc = score(c)
        else:
            a, c, fc = c, e, fe
            e = a + g * (b - a)
            fe = score(e)
    for t, v in ((c, fc), (e, fe)):
        if v < best:
            best_tau, best = float(t), float(v)
    return best_tau, best


@dataclass
class ModeSpectrum:
    """Eigenphases of a period-2 translation-invariant operator per wave vector.

    ``ks[m]`` is a reduced-zone wave vector; ``phases[m]`` holds the 2**d
    eigenphases on span{e^{i(k + pi b).x}}, measured relative to the
    eigenphase of the uniform state and wrapped to (-pi, pi].
    """

    ks: np.ndarray
    phases: np.ndarray
    uniform_phase: float

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.ks, axis=1)

    def lowest_branch(self) -> np.ndarray:
        return np.abs(self.phases).min(axis=1)


def mode_spectrum(apply: Callable[[np.ndarray], np.ndarray], lat: Lattice, check_tol: float = 1e-9) -> ModeSpectrum:
    """Project ``apply`` onto plane-wave multiplets and diagonalize each.

    ``apply`` maps arrays of shape (B, *lat.shape) to the same shape and must
    commute with translations by two sites along every axis.
    """
    d, L, N = lat.d, lat.L, lat.N
    grids = np.meshgrid(*[np.arange(L)] * d, indexing="ij")
    # coordinate mu on array axis -1-mu
    coords = [grids[d - 1 - mu] for mu in range(d)]
    corners = (np.arange(2**d)[:, None] >> np.arange(d)[None, :]) & 1
    half = np.arange(L // 2) * 2 * np.pi / L
    base = np.stack(np.meshgrid(*[half] * d, indexing="ij"), axis=-1).reshape(-1, d)

    s = np.full((1,) + lat.shape, 1.0 / math.sqrt(N), dtype=np.complex128)
    u_phase = float(np.angle(np.vdot(s, apply(s))))

    phases = np.empty((len(base), 2**d))
    for m, k in enumerate(base):
        kb = k[None, :] + np.pi * corners
        waves = np.exp(1j * sum(kb[:, mu, None] * coords[mu].reshape(1, -1) for mu in range(d)))
        waves = waves.reshape((2**d,) + lat.shape) / math.sqrt(N)
        out = apply(waves)
        flat_w, flat_o = waves.reshape(2**d, -1), out.reshape(2**d, -1)
        mat = flat_w.conj() @ flat_o.T
        resid = np.linalg.norm(flat_o - mat.T @ flat_w)
        if resid > check_tol:
            raise ValueError(f"operator does not preserve the k-multiplet (residual {resid:.2e})")
        ev = np.linalg.eigvals(mat)
        phases[m] = np.angle(ev * np.exp(-1j * u_phase))
    return ModeSpectrum(base, phases, u_phase)


def dispersion_probe(lattice: Lattice, tau: float) -> ModeSpectrum:
    w = WalkOperator(lattice, tau)
    return mode_spectrum(w.step_array, lattice)


def dispersion_exponent(spec: ModeSpectrum, n_modes: int = 5) -> float:
    """Log-log slope of the lowest eigenphase branch over the smallest nonzero |k|."""
    kn = spec.norms()
    ph = spec.lowest_branch()
    nz = kn > 1e-12
    levels = np.unique(np.round(kn[nz], 12))[:n_modes]
    xs, ys = [], []
    for lv in levels:
        sel = nz & (np.abs(kn - lv) < 1e-9)
        xs.append(lv)
        ys.append(ph[sel].min())
    slope, _ = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(slope)


def tuned_walk(lattice: Lattice, t1: int, **kw) -> WalkOperator:
    tau, _ = tune_tau(lattice, t1, **kw)
    return WalkOperator(lattice, tau, t1)
