"""Finite periodic (or Dirichlet) lattices and their percolation configurations.

Site indexing is little-endian: axis 0 is the fastest-varying coordinate,
``index = x0 + L*x1 + L^2*x2 + ...``.  The 2d step directions are interleaved
as ``[+e0, -e0, +e1, -e1, ...]`` so that ``j ^ 1`` is the reverse of
direction ``j``.  Each undirected edge is owned by the site at its lower end
along its axis: ``edge_id = site * d + axis``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

TORUS = "torus"
BOX = "box"  # Dirichlet boundary, used only by the Gaussian-field sampler


def direction_vectors(d: int) -> np.ndarray:
    """(2d, d) array of unit steps in the interleaved direction order."""
    dirs = np.zeros((2 * d, d), dtype=np.int64)
    for axis in range(d):
        dirs[2 * axis, axis] = 1
        dirs[2 * axis + 1, axis] = -1
    return dirs


@dataclass(frozen=True)
class TorusLattice:
    """A d-dimensional side-L lattice, periodic by default.

    ``boundary`` is ``"torus"`` for all percolation models; ``"box"`` selects
    Dirichlet (absorbing) boundaries and exists only for the Gaussian free
    field sampler.
    """

    d: int
    L: int
    boundary: str = TORUS

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"dimension must be >= 2, got {self.d}")
        if self.L < 2:
            raise ValueError(f"side length must be >= 2, got {self.L}")
        if self.boundary not in (TORUS, BOX):
            raise ValueError(f"unknown boundary {self.boundary!r}")

    @property
    def n_sites(self) -> int:
        return self.L**self.d

    @property
    def n_edges(self) -> int:
        return self.d * self.L**self.d

    def site_coords(self, sites) -> np.ndarray:
        """Coordinates of site indices, shape (..., d)."""
        sites = np.asarray(sites)
        out = np.empty(sites.shape + (self.d,), dtype=np.int64)
        rem = sites
        for axis in range(self.d):
            out[..., axis] = rem % self.L
            rem = rem // self.L
        return out

    def site_index(self, coords) -> np.ndarray:
        """Inverse of :meth:`site_coords`; coordinates are wrapped mod L."""
        coords = np.mod(np.asarray(coords), self.L)
        idx = np.zeros(coords.shape[:-1], dtype=np.int64)
        stride = 1
        for axis in range(self.d):
            idx = idx + coords[..., axis] * stride
            stride *= self.L
        return idx

    @cached_property
    def neighbor_table(self) -> np.ndarray:
        """(n_sites, 2d) neighbor indices; -1 marks off-box neighbors."""
        sites = np.arange(self.n_sites)
        coords = self.site_coords(sites)
        nbr = np.empty((self.n_sites, 2 * self.d), dtype=np.int64)
        for j, step in enumerate(direction_vectors(self.d)):
            shifted = coords + step
            if self.boundary == TORUS:
                nbr[:, j] = self.site_index(shifted)
            else:
                inside = np.all((shifted >= 0) & (shifted < self.L), axis=1)
                nbr[:, j] = np.where(inside, self.site_index(shifted), -1)
        nbr.setflags(write=False)
        return nbr

    def edge_for_direction(self, sites, directions) -> np.ndarray:
        """Edge ids crossed when stepping from ``sites`` along ``directions``."""
        sites = np.asarray(sites)
        directions = np.asarray(directions)
        axis = directions >> 1
        owner = np.where(
            directions & 1 == 0, sites, self.neighbor_table[sites, directions]
        )
        return owner * self.d + axis

    def edge_endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        """Arrays (u, v) of the two endpoint sites of every edge."""
        sites = np.repeat(np.arange(self.n_sites), self.d)
        axis = np.tile(np.arange(self.d), self.n_sites)
        u = sites
        v = self.neighbor_table[sites, 2 * axis]
        return u, v

    def l1_torus_distance(self, a, b) -> np.ndarray:
        """Minimal l1 distance on the torus between site indices a and b."""
        ca = self.site_coords(a)
        cb = self.site_coords(b)
        diff = np.abs(ca - cb)
        if self.boundary == TORUS:
            diff = np.minimum(diff, self.L - diff)
        return diff.sum(axis=-1)


@dataclass
class BondConfig:
    """One bond-percolation configuration: a bit per lattice edge."""

    lattice: TorusLattice
    bits: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=bool)
        if self.bits.shape != (self.lattice.n_edges,):
            raise ValueError(
                f"bond config needs {self.lattice.n_edges} bits, "
                f"got shape {self.bits.shape}"
            )

    @property
    def kind(self) -> str:
        return "bond"

    def open_fraction(self) -> float:
        return float(self.bits.mean())

    def open_directions(self) -> np.ndarray:
        """(n_sites, 2d) bool: is the edge out of each site open."""
        lat = self.lattice
        sites = np.arange(lat.n_sites)
        out = np.empty((lat.n_sites, 2 * lat.d), dtype=bool)
        for j in range(2 * lat.d):
            out[:, j] = self.bits[lat.edge_for_direction(sites, np.full_like(sites, j))]
        return out


@dataclass
class SiteConfig:
    """One site-percolation configuration: a bit per lattice site."""

    lattice: TorusLattice
    bits: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=bool)
        if self.bits.shape != (self.lattice.n_sites,):
            raise ValueError(
                f"site config needs {self.lattice.n_sites} bits, "
                f"got shape {self.bits.shape}"
            )

    @property
    def kind(self) -> str:
        return "site"

    def open_fraction(self) -> float:
        return float(self.bits.mean())

    def open_directions(self) -> np.ndarray:
        """(n_sites, 2d) bool: both endpoints open (and the neighbor exists)."""
        lat = self.lattice
        nbr = lat.neighbor_table
        valid = nbr >= 0
        out = self.bits[:, None] & valid
        out &= self.bits[np.where(valid, nbr, 0)]
        return out
