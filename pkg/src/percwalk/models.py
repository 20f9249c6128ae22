"""Samplers for the five percolation environments.

Every sampler is deterministic given (lattice, parameters, seed).  Bernoulli
bond/site configurations are product measures; the random-cluster model is
approximated by heat-bath Glauber sweeps on the torus from an all-open
start; random interlacements use the torus definition (the trace of one
walk run for floor(u * N^d) steps); the Gaussian free field is sampled on a
Dirichlet box, exactly for small boxes and by red-black Gibbs sweeps for
large ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import fkglauber
from .lattice import BOX, TORUS, BondConfig, SiteConfig, TorusLattice
from .rng import generator

MODEL_TAGS = (
    "bernoulli-bond",
    "bernoulli-site",
    "random-cluster",
    "interlacement",
    "vacant-set",
    "gff-level-set",
)

DEFAULT_GLAUBER_SWEEPS = 200

# Dense exact factorization of the box Laplacian up to this many interior
# sites; beyond it the sampler falls back to Gibbs sweeps.
_GFF_EXACT_LIMIT = 4096


@dataclass(frozen=True)
class ModelParams:
    """Model tag plus the parameters that tag actually uses."""

    model: str
    seed: int
    p: float | None = None
    q: float | None = None
    u: float | None = None
    h: float | None = None
    sweeps: int | None = None

    def __post_init__(self):
        if self.model not in MODEL_TAGS:
            raise ValueError(f"unknown model tag {self.model!r}")
        if self.model in ("bernoulli-bond", "bernoulli-site", "random-cluster"):
            if self.p is None or not 0.0 <= self.p <= 1.0:
                raise ValueError(f"{self.model} needs p in [0, 1], got {self.p}")
        if self.model == "random-cluster":
            if self.q is None or self.q < 1.0:
                raise ValueError(f"random-cluster needs q >= 1, got {self.q}")
            if self.sweeps is not None and self.sweeps < 1:
                raise ValueError("sweeps must be >= 1")
        if self.model in ("interlacement", "vacant-set"):
            if self.u is None or self.u <= 0.0:
                raise ValueError(f"{self.model} needs u > 0, got {self.u}")
        if self.model == "gff-level-set" and self.h is None:
            raise ValueError("gff-level-set needs a level h")


def sample_bernoulli(lattice: TorusLattice, p: float, seed: int,
                     kind: str = "bond") -> BondConfig | SiteConfig:
    """Open every edge (or site) independently with probability p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    rng = generator(seed)
    if kind == "bond":
        return BondConfig(lattice, rng.random(lattice.n_edges) < p)
    if kind == "site":
        return SiteConfig(lattice, rng.random(lattice.n_sites) < p)
    raise ValueError(f"kind must be 'bond' or 'site', got {kind!r}")


def _site_edge_adjacency(lattice: TorusLattice):
    """CSR-style (indptr, sites, edges) over the incidence structure."""
    u, v = lattice.edge_endpoints()
    n = lattice.n_sites
    deg = np.zeros(n, dtype=np.int64)
    np.add.at(deg, u, 1)
    np.add.at(deg, v, 1)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(deg, out=indptr[1:])
    sites = np.empty(2 * lattice.n_edges, dtype=np.int64)
    edges = np.empty(2 * lattice.n_edges, dtype=np.int64)
    cursor = indptr[:-1].copy()
    for e in range(lattice.n_edges):
        a, b = u[e], v[e]
        sites[cursor[a]] = b
        edges[cursor[a]] = e
        cursor[a] += 1
        sites[cursor[b]] = a
        edges[cursor[b]] = e
        cursor[b] += 1
    return indptr, sites, edges


def sample_random_cluster(lattice: TorusLattice, p: float, q: float,
                          sweeps: int, seed: int) -> BondConfig:
    """One FK(p, q) configuration after `sweeps` heat-bath sweeps."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    if q < 1.0:
        raise ValueError(f"q must be >= 1 (no FKG below), got {q}")
    if sweeps < 1:
        raise ValueError(f"sweeps must be >= 1, got {sweeps}")
    if lattice.boundary != TORUS:
        raise ValueError("random-cluster sampling runs on the torus")
    if p == 0.0:
        return BondConfig(lattice, np.zeros(lattice.n_edges, dtype=bool))
    if p == 1.0:
        return BondConfig(lattice, np.ones(lattice.n_edges, dtype=bool))
    bits = np.ones(lattice.n_edges, dtype=bool)
    u, v = lattice.edge_endpoints()
    indptr, sites, edges = _site_edge_adjacency(lattice)
    fkglauber.glauber_sweeps(
        bits, u, v, indptr, sites, edges, float(p), float(q), int(sweeps),
        np.uint32(seed & 0xFFFFFFFF),
    )
    return BondConfig(lattice, bits)


def _interior_sites(lattice: TorusLattice) -> np.ndarray:
    coords = lattice.site_coords(np.arange(lattice.n_sites))
    inner = np.all((coords >= 1) & (coords <= lattice.L - 2), axis=1)
    return np.flatnonzero(inner)


def killed_walk_green(lattice: TorusLattice, sites=None) -> np.ndarray:
    """Green function (I - P)^-1 of the walk killed at the box boundary.

    Restricted to interior sites; this is the covariance of the Dirichlet
    Gaussian field.  Dense, so only for small boxes.
    """
    interior = _interior_sites(lattice)
    n = interior.size
    pos = -np.ones(lattice.n_sites, dtype=np.int64)
    pos[interior] = np.arange(n)
    P = np.zeros((n, n))
    nbr = lattice.neighbor_table
    for j in range(2 * lattice.d):
        dest = nbr[interior, j]
        ok = dest >= 0
        ok[ok] &= pos[dest[ok]] >= 0
        rows = np.arange(n)[ok]
        P[rows, pos[dest[ok]]] += 1.0 / (2 * lattice.d)
    G = np.linalg.inv(np.eye(n) - P)
    if sites is None:
        return G
    return G[np.ix_(pos[sites], pos[sites])]


def sample_gff_field(lattice: TorusLattice, seed: int,
                     sweeps: int | None = None) -> np.ndarray:
    """Gaussian field with zero boundary; returns values on all sites."""
    if lattice.d < 3:
        raise ValueError("the Gaussian field level set requires d >= 3")
    if lattice.boundary != BOX:
        raise ValueError("the Gaussian field is sampled on a Dirichlet box")
    rng = generator(seed)
    interior = _interior_sites(lattice)
    phi = np.zeros(lattice.n_sites)
    if interior.size <= _GFF_EXACT_LIMIT:
        # phi = L^-T z has covariance (L L^T)^-1 = (I - P)^-1
        interiorG = killed_walk_green(lattice)
        ImP = np.linalg.inv(interiorG)
        ImP = 0.5 * (ImP + ImP.T)
        chol = np.linalg.cholesky(ImP)
        z = rng.standard_normal(interior.size)
        phi[interior] = scipy.linalg.solve_triangular(chol.T, z, lower=False)
        return phi
    # red-black Gibbs: phi(x) | rest ~ N(mean over 2d lattice neighbors, 1)
    if sweeps is None:
        sweeps = 2 * lattice.L**2
    coords = lattice.site_coords(interior)
    color = coords.sum(axis=1) % 2
    nbr = lattice.neighbor_table[interior]
    nbr_safe = np.where(nbr >= 0, nbr, 0)
    inv2d = 1.0 / (2 * lattice.d)
    for _ in range(sweeps):
        for c in (0, 1):
            mask = color == c
            mean = (phi[nbr_safe[mask]] * (nbr[mask] >= 0)).sum(axis=1) * inv2d
            phi[interior[mask]] = mean + rng.standard_normal(mask.sum())
    return phi


def sample_gff_level_set(lattice: TorusLattice, h: float, seed: int,
                         sweeps: int | None = None) -> SiteConfig:
    """Indicator of {field >= h}; boundary sites are always closed."""
    phi = sample_gff_field(lattice, seed, sweeps)
    bits = np.zeros(lattice.n_sites, dtype=bool)
    interior = _interior_sites(lattice)
    bits[interior] = phi[interior] >= h
    return SiteConfig(lattice, bits)


def sample_interlacement(lattice: TorusLattice, u: float, seed: int,
                         vacant: bool = False) -> SiteConfig:
    """Trace of one walk run for floor(u * N^d) steps from a uniform start."""
    if lattice.d < 3:
        raise ValueError("random interlacements require d >= 3")
    if lattice.boundary != TORUS:
        raise ValueError("interlacements are sampled on the torus")
    if u <= 0.0:
        raise ValueError(f"u must be positive, got {u}")
    steps = int(np.floor(u * lattice.n_sites))
    rng = generator(seed)
    visited = np.zeros(lattice.n_sites, dtype=bool)
    if steps >= 1:
        start = int(rng.integers(lattice.n_sites))
        moves = rng.integers(0, 2 * lattice.d, size=steps)
        axis = moves >> 1
        sign = np.where(moves & 1 == 0, 1, -1)
        deltas = np.zeros((steps, lattice.d), dtype=np.int64)
        deltas[np.arange(steps), axis] = sign
        path = lattice.site_coords(start)[None, :] + np.cumsum(deltas, axis=0)
        visited[lattice.site_index(path)] = True
        visited[start] = True
    bits = ~visited if vacant else visited
    return SiteConfig(lattice, bits)


def sample(lattice: TorusLattice, params: ModelParams) -> BondConfig | SiteConfig:
    """Dispatch on the model tag; the single entry point used by the runner."""
    m = params.model
    if m == "bernoulli-bond":
        return sample_bernoulli(lattice, params.p, params.seed, "bond")
    if m == "bernoulli-site":
        return sample_bernoulli(lattice, params.p, params.seed, "site")
    if m == "random-cluster":
        sweeps = params.sweeps if params.sweeps else DEFAULT_GLAUBER_SWEEPS
        return sample_random_cluster(lattice, params.p, params.q, sweeps,
                                     params.seed)
    if m == "interlacement":
        return sample_interlacement(lattice, params.u, params.seed, vacant=False)
    if m == "vacant-set":
        return sample_interlacement(lattice, params.u, params.seed, vacant=True)
    if m == "gff-level-set":
        return sample_gff_level_set(lattice, params.h, params.seed,
                                    sweeps=params.sweeps)
    raise ValueError(f"unknown model tag {m!r}")
