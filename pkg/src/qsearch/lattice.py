"""Periodic hypercubic lattices and their odd/even elementary-hypercube blocks.

Vertices are numbered row-major with axis 0 fastest: i = sum_j x_j L**j.
Arrays holding one value per vertex use shape (L,)*d in C order, so lattice
axis ``mu`` lives on array axis ``-1 - mu``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

MAX_DIM = 20
DEFAULT_MAX_N = 2**22


class GeometryError(ValueError):
    """Lattice parameters that the block decomposition cannot handle."""


class SizeError(ValueError):
    """L**d exceeds the configured size cap."""


@dataclass(frozen=True)
class Lattice:
    d: int
    L: int

    @property
    def N(self) -> int:
        return self.L**self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.L,) * self.d

    @property
    def strides(self) -> tuple[int, ...]:
        return tuple(self.L**j for j in range(self.d))

    def array_axis(self, mu: int) -> int:
        return -1 - mu


def make_lattice(d: int, L: int, max_n: int | None = DEFAULT_MAX_N) -> Lattice:
    if not 1 <= d <= MAX_DIM:
        raise GeometryError(f"dimension must be in [1, {MAX_DIM}], got {d}")
    if L < 2 or L % 2:
        raise GeometryError(f"side length must be even and >= 2, got {L}")
    if max_n is not None and L**d > max_n:
        raise SizeError(f"N = {L}^{d} = {L**d} exceeds the cap {max_n}")
    return Lattice(d, L)


def index_to_coords(lat: Lattice, i: int) -> tuple[int, ...]:
    if not 0 <= i < lat.N:
        raise IndexError(f"vertex {i} out of range for N={lat.N}")
    out = []
    for _ in range(lat.d):
        i, r = divmod(i, lat.L)
        out.append(r)
    return tuple(out)


def coords_to_index(lat: Lattice, x) -> int:
    x = tuple(int(c) for c in x)
    if len(x) != lat.d or any(not 0 <= c < lat.L for c in x):
        raise IndexError(f"coordinates {x} outside the lattice")
    return sum(c * s for c, s in zip(x, lat.strides))


def all_coords(lat: Lattice) -> np.ndarray:
    """(N, d) array of vertex coordinates in index order."""
    i = np.arange(lat.N)
    return np.stack([(i // s) % lat.L for s in lat.strides], axis=1)


def neighbors(lat: Lattice, i: int) -> list[int]:
    """The 2d periodic neighbours of vertex ``i`` (coincident pairs kept at L=2)."""
    x = index_to_coords(lat, i)
    out = []
    for mu, s in enumerate(lat.strides):
        for step in (1, -1):
            out.append(i + (((x[mu] + step) % lat.L) - x[mu]) * s)
    return out


def links(lat: Lattice) -> np.ndarray:
    """All d*N forward links as rows (x, x + e_mu, mu)."""
    c = all_coords(lat)
    idx = np.arange(lat.N)
    rows = []
    for mu, s in enumerate(lat.strides):
        fwd = idx + (((c[:, mu] + 1) % lat.L) - c[:, mu]) * s
        rows.append(np.stack([idx, fwd, np.full(lat.N, mu)], axis=1))
    return np.concatenate(rows)


def linf_distance(lat: Lattice, i: int, j) -> np.ndarray:
    """Periodic L-infinity distance from vertex ``i`` to vertices ``j``."""
    a = np.asarray(index_to_coords(lat, i))
    j = np.asarray(j)
    b = np.stack([(j // s) % lat.L for s in lat.strides], axis=-1)
    diff = np.abs(b - a) % lat.L
    return np.minimum(diff, lat.L - diff).max(axis=-1)


ODD, EVEN = "odd", "even"


@dataclass(frozen=True)
class BlockPartition:
    """One parity's tiling of the lattice by elementary hypercubes.

    Odd blocks are anchored at all-even coordinates and even blocks at all-odd
    ones. Row ``b`` of :attr:`blocks` lists that block's 2**d vertices with
    corner c in {0,1}^d at position sum_j c_j 2**j.
    """

    lattice: Lattice
    parity: str

    @cached_property
    def blocks(self) -> np.ndarray:
        lat = self.lattice
        d, L = lat.d, lat.L
        shift = 0 if self.parity == ODD else 1
        half = np.arange(0, L, 2) + shift
        anchors = np.stack(np.meshgrid(*([half] * d), indexing="ij"), axis=-1).reshape(-1, d)
        # reorder so anchors run in vertex-index order
        anchors = anchors[np.lexsort(anchors.T)]
        corners = (np.arange(2**d)[:, None] >> np.arange(d)[None, :]) & 1
        coords = (anchors[:, None, :] + corners[None, :, :]) % L
        return coords @ np.asarray(lat.strides)

    def corner_links(self) -> list[tuple[int, int, int]]:
        """(corner_lo, corner_hi, mu) for every link inside one block."""
        d = self.lattice.d
        return [(c, c | (1 << mu), mu) for mu in range(d) for c in range(2**d) if not c >> mu & 1]

    def intra_block_links(self) -> np.ndarray:
        """Links inside every block, as rows (lo vertex, hi vertex, mu)."""
        bl = self.blocks
        rows = [np.stack([bl[:, lo], bl[:, hi], np.full(len(bl), mu)], axis=1)
                for lo, hi, mu in self.corner_links()]
        return np.concatenate(rows)


def block_partition(lat: Lattice, parity: str) -> BlockPartition:
    if parity not in (ODD, EVEN):
        raise ValueError(f"parity must be 'odd' or 'even', got {parity!r}")
    return BlockPartition(lat, parity)
