"""Cluster identification and the geometry of the giant component.

The giant cluster (largest component, ties broken by smallest member site)
stands in for the unique infinite cluster at desk scale.  Chemical distance
is plain BFS distance through open edges; the induced shift along a
direction e jumps from a giant site to the first giant site further along
the e-ray (with torus wrap), and ell is the chemical distance covered by
that jump.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, shortest_path

from .lattice import BondConfig, SiteConfig, TorusLattice
from .rng import generator

UNREACHABLE = -1  # chemical-distance value for sites in different components


class InsufficientData(ValueError):
    """Raised when too few valid pairs exist for a tail fit."""


class NoReturn(RuntimeError):
    """The e-ray through a giant site never re-enters the giant cluster."""


@dataclass
class ClusterLabeling:
    """Component ids per site, component sizes, and the giant component."""

    config: BondConfig | SiteConfig
    labels: np.ndarray = field(repr=False)  # -1 on closed sites (site models)
    sizes: np.ndarray = field(repr=False)
    giant_id: int
    giant_sites: np.ndarray = field(repr=False)

    @property
    def theta_hat(self) -> float:
        """Empirical density: |giant| / L^d."""
        return self.giant_sites.size / self.config.lattice.n_sites

    def in_giant(self, sites) -> np.ndarray:
        return self.labels[sites] == self.giant_id


def open_adjacency(config: BondConfig | SiteConfig) -> sp.csr_matrix:
    """Symmetric adjacency over all lattice sites through open edges."""
    lat = config.lattice
    open_dirs = config.open_directions()
    rows, dirs = np.nonzero(open_dirs)
    cols = lat.neighbor_table[rows, dirs]
    data = np.ones(rows.size, dtype=np.int8)
    return sp.csr_matrix((data, (rows, cols)), shape=(lat.n_sites, lat.n_sites))


def label_clusters(config: BondConfig | SiteConfig) -> ClusterLabeling:
    """Connected components of the open graph.

    Bond models: all sites are labeled (isolated sites form singletons).
    Site models: closed sites get label -1 and are not part of any cluster.
    """
    lat = config.lattice
    adj = open_adjacency(config)
    _, raw = connected_components(adj, directed=False)
    labels = raw.astype(np.int64)
    if config.kind == "site":
        labels[~config.bits] = -1
        if not config.bits.any():
            return ClusterLabeling(config, labels, np.zeros(0, dtype=np.int64),
                                   -1, np.zeros(0, dtype=np.int64))
    counts = np.bincount(labels[labels >= 0])
    biggest = int(counts.max())
    # ties broken by the smallest site index among candidate components
    candidates = np.flatnonzero(counts == biggest)
    if candidates.size == 1:
        giant = int(candidates[0])
    else:
        in_candidate = np.isin(labels, candidates)
        giant = int(labels[np.flatnonzero(in_candidate)[0]])
    giant_sites = np.flatnonzero(labels == giant)
    return ClusterLabeling(config, labels, counts, giant, giant_sites)


def bfs_distances(config, sources) -> np.ndarray:
    """Chemical distances from each source to every site (inf if unreachable)."""
    adj = open_adjacency(config)
    return shortest_path(adj, method="D", directed=False, unweighted=True,
                         indices=np.atleast_1d(sources))


def chemical_distance(config, labeling: ClusterLabeling, x: int, y: int) -> int:
    """Shortest open-path length; UNREACHABLE in different components."""
    if x == y:
        return 0
    if labeling.labels[x] < 0 or labeling.labels[x] != labeling.labels[y]:
        return UNREACHABLE
    dist = bfs_distances(config, x)[0, y]
    return int(dist)


def induced_shift(config, labeling: ClusterLabeling, x: int, direction: int):
    """First giant site along the e-ray from x: returns (k, v_e, ell).

    k is the smallest k >= 1 with x + k e in the giant cluster (torus wrap),
    v_e that site, and ell the chemical distance from x to v_e.  Because x
    itself lies on its own ray, k <= L always; NoReturn guards the
    impossible exhaustion case.
    """
    lat = config.lattice
    if not labeling.in_giant(x):
        raise ValueError(f"site {x} is not in the giant cluster")
    site = x
    for k in range(1, lat.L + 1):
        site = int(lat.neighbor_table[site, direction])
        if labeling.in_giant(site):
            ell = chemical_distance(config, labeling, x, site)
            return k, site, ell
    raise NoReturn(f"no giant site on the ray from {x} in direction {direction}")


def induced_shift_targets(labeling: ClusterLabeling, direction: int) -> np.ndarray:
    """Vectorized v_e for every giant site: the next giant site on its ray.

    Returns an array aligned with ``labeling.giant_sites``.
    """
    lat = labeling.config.lattice
    giant = labeling.giant_sites
    coords = lat.site_coords(giant)
    axis = direction >> 1
    forward = (direction & 1) == 0
    along = coords[:, axis]
    # group sites into rays: all coordinates except `axis` fixed
    trans = np.delete(coords, axis, axis=1)
    keys = np.zeros(giant.size, dtype=np.int64)
    stride = 1
    for c in range(trans.shape[1]):
        keys += trans[:, c] * stride
        stride *= lat.L
    order = np.lexsort((along, keys))
    sorted_keys = keys[order]
    sorted_idx = np.arange(giant.size)[order]
    targets = np.empty(giant.size, dtype=np.int64)
    start = 0
    n = giant.size
    while start < n:
        stop = start
        while stop < n and sorted_keys[stop] == sorted_keys[start]:
            stop += 1
        ray = sorted_idx[start:stop]  # ray members in increasing coordinate
        if forward:
            nxt = np.roll(ray, -1)
        else:
            nxt = np.roll(ray, 1)
        targets[ray] = nxt
        start = stop
    return targets


@dataclass
class GeometryStats:
    """Empirical tails of the giant-cluster geometry.

    ``ratio_samples`` holds d_ch / l1-distance for sampled giant pairs;
    ``ell_tail[j]`` is the curve P(ell > n) for direction j with its
    least-squares log-slope and a 95% half-width for that slope.
    """

    ratio_samples: np.ndarray
    ratio_quantiles: dict
    ell_samples: list
    ell_tail: list
    slopes: list
    slope_half_widths: list
    n_pairs: int

    def tail_rows(self):
        rows = []
        for j, (ns, tail) in enumerate(self.ell_tail):
            for n, t in zip(ns, tail):
                rows.append((int(n), float(t), j))
        return rows


def _tail_curve(samples: np.ndarray, min_count: int):
    """P(X > n) for n = 1.. while at least min_count samples exceed n."""
    ns, tails = [], []
    total = samples.size
    n = 1
    while True:
        count = int((samples > n).sum())
        if count < min_count:
            break
        ns.append(n)
        tails.append(count / total)
        n += 1
    return np.array(ns), np.array(tails)


def _slope_fit(ns: np.ndarray, log_tail: np.ndarray):
    """Unweighted OLS slope with a 95% confidence half-width."""
    if ns.size < 3:
        return float("nan"), float("inf")
    A = np.vstack([ns, np.ones_like(ns, dtype=float)]).T
    coef, res, _, _ = np.linalg.lstsq(A, log_tail, rcond=None)
    dof = ns.size - 2
    sigma2 = (res[0] / dof) if res.size else 0.0
    var_slope = sigma2 * np.linalg.inv(A.T @ A)[0, 0]
    return float(coef[0]), 1.96 * float(np.sqrt(var_slope))


def geometry_tail_stats(samples, pair_budget: int = 4000, seed: int = 0,
                        sources_per_config: int | None = None) -> GeometryStats:
    """Tail statistics pooled over (config, labeling) samples.

    For each sampled source in the giant cluster one BFS yields (a) ratios
    d_ch / |x-y|_1 against random giant targets within L/4 (to suppress wrap
    artifacts) and (b) ell for all 2d directions.  Tail bins keep a floor of
    10 observations.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("need at least one (config, labeling) sample")
    lat = samples[0][0].lattice
    two_d = 2 * lat.d
    rng = generator(seed)
    if sources_per_config is None:
        sources_per_config = max(1, pair_budget // (4 * len(samples)))
    ratios = []
    ells = [[] for _ in range(two_d)]
    n_pairs = 0
    for config, labeling in samples:
        giant = labeling.giant_sites
        if giant.size < 2:
            continue
        n_src = min(sources_per_config, giant.size)
        sources = rng.choice(giant, size=n_src, replace=False)
        targets_by_dir = [induced_shift_targets(labeling, j) for j in range(two_d)]
        pos_in_giant = -np.ones(lat.n_sites, dtype=np.int64)
        pos_in_giant[giant] = np.arange(giant.size)
        for chunk_start in range(0, n_src, 64):
            chunk = sources[chunk_start:chunk_start + 64]
            dist = bfs_distances(config, chunk)
            for row, src in enumerate(chunk):
                gi = pos_in_giant[src]
                for j in range(two_d):
                    v = giant[targets_by_dir[j][gi]]
                    ells[j].append(dist[row, v])
                cand = rng.choice(giant, size=min(4, giant.size), replace=False)
                l1 = lat.l1_torus_distance(src, cand)
                ok = (l1 > 0) & (l1 <= lat.L // 4)
                for tgt, dd in zip(cand[ok], dist[row, cand[ok]]):
                    if np.isfinite(dd):
                        ratios.append(dd / lat.l1_torus_distance(src, tgt))
                        n_pairs += 1
    if n_pairs < 100:
        raise InsufficientData(f"only {n_pairs} valid pairs, need >= 100")
    ratios = np.asarray(ratios, dtype=float)
    quantiles = {q: float(np.quantile(ratios, q)) for q in (0.5, 0.9, 0.99)}
    tails, slopes, widths, ell_arrays = [], [], [], []
    for j in range(two_d):
        arr = np.asarray(ells[j], dtype=float)
        arr = arr[np.isfinite(arr)]
        ell_arrays.append(arr)
        ns, tail = _tail_curve(arr, min_count=10)
        tails.append((ns, tail))
        if ns.size:
            slope, width = _slope_fit(ns.astype(float), np.log(tail))
        else:
            slope, width = float("nan"), float("inf")
        slopes.append(slope)
        widths.append(width)
    return GeometryStats(ratios, quantiles, ell_arrays, tails, slopes, widths,
                         n_pairs)


def density_in_cubes(labeling: ClusterLabeling, side_fractions) -> dict:
    """Giant-cluster density inside axis-aligned sub-cubes.

    For each fraction the torus is tiled by disjoint cubes of side
    round(f * L) (capped to [1, L]); the value is a flat array of per-cube
    densities in lexicographic cube order.
    """
    lat = labeling.config.lattice
    in_giant = np.zeros(lat.n_sites, dtype=bool)
    in_giant[labeling.giant_sites] = True
    coords = lat.site_coords(np.arange(lat.n_sites))
    out = {}
    for frac in side_fractions:
        side = int(round(frac * lat.L))
        side = max(1, min(lat.L, side))
        per_axis = lat.L // side
        cube_idx = np.zeros(lat.n_sites, dtype=np.int64)
        valid = np.ones(lat.n_sites, dtype=bool)
        stride = 1
        for axis in range(lat.d):
            block = coords[:, axis] // side
            valid &= block < per_axis
            cube_idx += np.minimum(block, per_axis - 1) * stride
            stride *= per_axis
        n_cubes = per_axis**lat.d
        counts = np.bincount(cube_idx[valid & in_giant], minlength=n_cubes)
        out[frac] = counts / side**lat.d
    return out
