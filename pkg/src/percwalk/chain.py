"""The environment chain: the walk seen from the particle, on a fixed torus.

On a finite torus the orbit of a configuration under translations is the
site set itself, so the abstract environment chain collapses to a Markov
chain whose states are the giant-cluster sites.  The reference measure
(the finite stand-in for conditioning on the origin lying in the infinite
cluster) is uniform over those states.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .clusters import ClusterLabeling
from .lattice import direction_vectors


@dataclass
class EnvironmentChain:
    """Giant-cluster sites with their open-direction structure.

    ``nbr[s, j]`` is the state index reached from state s along direction j,
    or -1 when that direction is closed.  ``open_mask`` marks usable
    directions; rows of the reference kernel are uniform over them.
    """

    config: object
    labeling: ClusterLabeling
    states: np.ndarray = field(repr=False, default=None)
    site_to_state: np.ndarray = field(repr=False, default=None)
    nbr: np.ndarray = field(repr=False, default=None)
    open_mask: np.ndarray = field(repr=False, default=None)
    degrees: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        lat = self.config.lattice
        giant = self.labeling.giant_sites
        if giant.size == 0:
            raise ValueError("empty giant cluster")
        self.states = giant
        self.site_to_state = -np.ones(lat.n_sites, dtype=np.int64)
        self.site_to_state[giant] = np.arange(giant.size)
        open_dirs = self.config.open_directions()[giant]
        nbr_sites = lat.neighbor_table[giant]
        nbr_state = np.where(
            open_dirs, self.site_to_state[np.where(nbr_sites >= 0, nbr_sites, 0)], -1
        )
        self.nbr = nbr_state
        self.open_mask = open_dirs
        self.degrees = open_dirs.sum(axis=1)
        if not (self.degrees > 0).all():
            raise ValueError("giant cluster contains a site with no open edge")

    @property
    def n_states(self) -> int:
        return self.states.size

    @property
    def d(self) -> int:
        return self.config.lattice.d

    @property
    def direction_vecs(self) -> np.ndarray:
        return direction_vectors(self.d)

    def srw_rows(self) -> np.ndarray:
        """Reference kernel: uniform over open directions, row per state."""
        return np.where(self.open_mask, 1.0 / self.degrees[:, None], 0.0)

    def srw_stationary_density(self) -> np.ndarray:
        """Density (mean 1 under the uniform reference) proportional to degree."""
        return self.degrees / self.degrees.mean()

    def incoming(self):
        """(src_state, dir, dst_state) triplets over all open directions."""
        src, dirs = np.nonzero(self.open_mask)
        return src, dirs, self.nbr[src, dirs]


def stationary_density(chain: EnvironmentChain, probs: np.ndarray) -> np.ndarray:
    """Exact stationary density (mean 1 under uniform) of a kernel on the chain.

    Solves (K^T - I) pi = 0 with the normalization sum(pi) = 1 by a dense
    linear solve; the chain is irreducible because the giant cluster is
    connected and kernels are supported exactly on open directions.
    """
    m = chain.n_states
    K = np.zeros((m, m))
    src, dirs, dst = chain.incoming()
    np.add.at(K, (src, dst), probs[src, dirs])
    A = K.T - np.eye(m)
    A[-1, :] = 1.0
    b = np.zeros(m)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    pi = np.maximum(pi, 0.0)
    pi /= pi.sum()
    return pi * m
