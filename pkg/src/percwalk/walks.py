"""Quenched walks driven by a kernel, and their pair empirical measures.

A path is stored as its start site plus the sequence of direction indices;
displacement is accumulated without torus wrapping, which is what the
moment generating functions tilt.  The pair empirical measure puts weight
1/n on each visited (state, step direction) atom.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chain import EnvironmentChain
from .kernels import TransitionKernel
from .rng import generator


class EmptyPath(ValueError):
    """The empirical measure of a zero-step path is undefined."""


@dataclass
class WalkPath:
    chain: EnvironmentChain
    start_state: int
    directions: np.ndarray = field(repr=False)

    @property
    def n_steps(self) -> int:
        return self.directions.size

    def states(self) -> np.ndarray:
        """State index at every time 0..n (length n+1)."""
        out = np.empty(self.n_steps + 1, dtype=np.int64)
        out[0] = self.start_state
        nbr = self.chain.nbr
        s = self.start_state
        for i, j in enumerate(self.directions):
            s = nbr[s, j]
            out[i + 1] = s
        return out

    def sites(self) -> np.ndarray:
        return self.chain.states[self.states()]

    def displacement(self) -> np.ndarray:
        """Unwrapped displacement vector in Z^d."""
        vecs = self.chain.direction_vecs
        if self.n_steps == 0:
            return np.zeros(self.chain.d, dtype=np.int64)
        return vecs[self.directions].sum(axis=0)


def simulate_walk(kernel: TransitionKernel, start: int, n: int,
                  seed: int) -> WalkPath:
    """n kernel steps from a giant-cluster site; deterministic under seed."""
    chain = kernel.chain
    state = int(chain.site_to_state[start])
    if state < 0:
        raise ValueError(f"start site {start} is not in the giant cluster")
    rng = generator(seed)
    cum = kernel.cumulative_rows()
    nbr = chain.nbr
    directions = np.empty(n, dtype=np.int8)
    chunk = 65536
    pos = chunk
    uniforms = None
    for i in range(n):
        if pos == chunk:
            uniforms = rng.random(chunk)
            pos = 0
        u = uniforms[pos]
        pos += 1
        row = cum[state]
        # number of cumsum entries <= u: skips the empty closed intervals
        j = int(np.searchsorted(row, u, side="right"))
        directions[i] = j
        state = nbr[state, j]
    return WalkPath(chain, int(chain.site_to_state[start]), directions)


def walk_batch(kernel: TransitionKernel, starts: np.ndarray, n: int, seed: int,
               log_ratio_vs: np.ndarray | None = None):
    """Advance many walks in lockstep for n steps.

    Returns (end_states, displacement (W, d), log_ratio) where log_ratio is
    the per-walk sum of log(ref/actual) step probabilities against the
    optional reference row table ``log_ratio_vs`` (used for exact
    importance reweighting), else None.
    """
    chain = kernel.chain
    rng = generator(seed)
    states = chain.site_to_state[np.asarray(starts, dtype=np.int64)]
    if np.any(states < 0):
        raise ValueError("all start sites must lie in the giant cluster")
    w = states.size
    cum = kernel.cumulative_rows()
    nbr = chain.nbr
    vecs = chain.direction_vecs
    disp = np.zeros((w, chain.d), dtype=np.int64)
    log_ratio = np.zeros(w) if log_ratio_vs is not None else None
    if log_ratio_vs is not None:
        log_ref = np.where(chain.open_mask, np.log(log_ratio_vs), 0.0)
        log_act = np.where(chain.open_mask, np.log(kernel.probs), 0.0)
    for _ in range(n):
        u = rng.random(w)
        rows = cum[states]
        j = (rows <= u[:, None]).sum(axis=1)
        if log_ratio is not None:
            log_ratio += log_ref[states, j] - log_act[states, j]
        disp += vecs[j]
        states = nbr[states, j]
    return states, disp, log_ratio


@dataclass
class PairEmpiricalMeasure:
    """Sparse measure on (giant state, step direction) pairs."""

    chain: EnvironmentChain
    weights: np.ndarray = field(repr=False)
    n_steps: int = 0

    def total(self) -> float:
        return float(self.weights.sum())

    def support_ok(self) -> bool:
        return not np.any(self.weights[~self.chain.open_mask] > 0.0)

    def first_marginal(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    def second_marginal(self) -> np.ndarray:
        m2 = np.zeros(self.chain.n_states)
        src, dirs, dst = self.chain.incoming()
        np.add.at(m2, dst, self.weights[src, dirs])
        return m2


def pair_empirical_measure(path: WalkPath) -> PairEmpiricalMeasure:
    """Occupation measure of (state, next step) atoms, each weighted 1/n."""
    n = path.n_steps
    if n == 0:
        raise EmptyPath("a path must make at least one step")
    chain = path.chain
    states = path.states()[:-1]
    weights = np.zeros(chain.open_mask.shape)
    np.add.at(weights, (states, path.directions.astype(np.int64)), 1.0 / n)
    return PairEmpiricalMeasure(chain, weights, n)


def measure_marginals(mu: PairEmpiricalMeasure):
    """Both site marginals and their total-variation gap sum |m1 - m2|."""
    m1 = mu.first_marginal()
    m2 = mu.second_marginal()
    gap = float(np.abs(m1 - m2).sum())
    return m1, m2, gap
