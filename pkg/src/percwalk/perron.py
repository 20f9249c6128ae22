"""Logarithmic moment generating function via the tilted Perron root.

For the linear functional f(x, e) = theta . e the limiting cumulant of the
walk is the log of the top eigenvalue of A(x, x+e) = pi(x, e) exp(theta . e)
on the connected giant cluster.  Power iteration runs on A + I: the shift
removes the period-2 oscillation of bipartite clusters and moves every
eigenvalue by exactly one, so the Perron pair is unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import EnvironmentChain
from .kernels import TransitionKernel

DEFAULT_TOL = 1e-13
DEFAULT_MAX_ITER = 100_000


@dataclass
class PerronResult:
    value: float          # log of the Perron root
    root: float
    vector: np.ndarray    # right Perron vector, positive, max-normalized
    iterations: int
    residual: float
    converged: bool


def tilted_weights(chain: EnvironmentChain, theta,
                   kernel: TransitionKernel | None = None) -> np.ndarray:
    """Per-(state, direction) entries pi(x,e) exp(theta . e)."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (chain.d,):
        raise ValueError(f"theta must have shape ({chain.d},), got {theta.shape}")
    rows = kernel.probs if kernel is not None else chain.srw_rows()
    return rows * np.exp(chain.direction_vecs @ theta)[None, :]


def matvec(chain: EnvironmentChain, weights: np.ndarray,
           v: np.ndarray) -> np.ndarray:
    """(A v)(x) = sum_e weights(x, e) v(x + e); closed directions carry 0."""
    nbr_safe = np.where(chain.nbr >= 0, chain.nbr, 0)
    return np.einsum("sj,sj->s", weights, v[nbr_safe])


def perron_root(chain: EnvironmentChain, weights: np.ndarray,
                tol: float = DEFAULT_TOL,
                max_iter: int = DEFAULT_MAX_ITER) -> PerronResult:
    """Power iteration for the Perron pair of a nonnegative weight matrix."""
    m = chain.n_states
    v = np.full(m, 1.0 / np.sqrt(m))
    lam = 1.0
    residual = np.inf
    it = 0
    stall = 0
    while it < max_iter:
        av = matvec(chain, weights, v)
        bv = av + v
        norm = np.linalg.norm(bv)
        new_lam = float(v @ av)  # Rayleigh quotient of A at unit v
        v = bv / norm
        it += 1
        if it % 16 == 0 or it < 32:
            av_check = matvec(chain, weights, v)
            residual = float(np.max(np.abs(av_check - new_lam * v)))
            scale = max(abs(new_lam), 1e-300)
            if residual <= tol * scale:
                lam = new_lam
                break
            if abs(new_lam - lam) <= 1e-16 * scale:
                stall += 1
                if stall >= 8:  # float stagnation; accept the iterate
                    lam = new_lam
                    break
            else:
                stall = 0
        lam = new_lam
    converged = residual <= max(tol, 1e-10) * max(abs(lam), 1e-300)
    v = np.abs(v)
    v /= v.max()
    return PerronResult(float(np.log(lam)), lam, v, it, residual, converged)


def log_mgf_perron(chain: EnvironmentChain, theta,
                   kernel: TransitionKernel | None = None,
                   tol: float = DEFAULT_TOL,
                   max_iter: int = DEFAULT_MAX_ITER) -> PerronResult:
    """Lambda(theta) with the Perron vector (for h-transform tilting)."""
    weights = tilted_weights(chain, theta, kernel)
    return perron_root(chain, weights, tol=tol, max_iter=max_iter)


def h_transform_kernel(chain: EnvironmentChain, theta,
                       result: PerronResult | None = None) -> tuple[TransitionKernel, PerronResult]:
    """The conditioned walk pi(x,e) e^(theta.e) h(x+e) / (root h(x)).

    Rows are renormalized to remove float drift; importance weights should
    be accumulated against the realized rows, which keeps reweighting exact.
    """
    if result is None:
        result = log_mgf_perron(chain, theta)
    weights = tilted_weights(chain, theta)
    nbr_safe = np.where(chain.nbr >= 0, chain.nbr, 0)
    rows = weights * result.vector[nbr_safe]
    rows[~chain.open_mask] = 0.0
    rows /= rows.sum(axis=1, keepdims=True)
    return TransitionKernel(chain, rows, f"h-transform({np.asarray(theta).tolist()})"), result
