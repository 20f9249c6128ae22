"""Level-2 entropy of pair measures and the measure <-> (kernel, density) map.

The entropy of a pair measure mu against the walk kernel pi is

    sum_(x,e) mu(x,e) log[ mu(x,e) / (m1(x) pi(x,e)) ],

finite exactly when the two site marginals of mu agree and mu's conditional
kernel is positive precisely on the open directions; otherwise the value is
infinity (math.inf, compared symbolically, never a large float).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import EnvironmentChain, stationary_density
from .kernels import SupportViolation, TransitionKernel
from .walks import PairEmpiricalMeasure

MARGINAL_TOL = 1e-8
INVARIANCE_TOL = 1e-8


class NotInStarSet(ValueError):
    """The measure's marginals differ, so it has no (kernel, density) form."""


@dataclass
class MeasureKernelPair:
    """A kernel with a candidate invariant density (mean 1 under uniform)."""

    kernel: TransitionKernel
    phi: np.ndarray

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float)
        if np.any(self.phi < 0.0):
            raise ValueError("density must be nonnegative")
        mean = self.phi.mean()
        if abs(mean - 1.0) > 1e-9:
            raise ValueError(f"density must have mean 1, got {mean!r}")

    def invariance_residual(self) -> float:
        """max_x |phi(x) - sum_in kernel * phi| over states."""
        chain = self.kernel.chain
        inflow = np.zeros(chain.n_states)
        src, dirs, dst = chain.incoming()
        np.add.at(inflow, dst, self.kernel.probs[src, dirs] * self.phi[src])
        return float(np.max(np.abs(self.phi - inflow)))

    def is_invariant(self, tol: float = INVARIANCE_TOL) -> bool:
        return self.invariance_residual() <= tol

    def pair_measure(self) -> PairEmpiricalMeasure:
        """mu(x,e) = kernel(x,e) phi(x) / m."""
        chain = self.kernel.chain
        weights = self.kernel.probs * self.phi[:, None] / chain.n_states
        return PairEmpiricalMeasure(chain, weights, 0)


def invariant_pair(kernel: TransitionKernel) -> MeasureKernelPair:
    """The kernel paired with its exact stationary density (linear solve)."""
    phi = stationary_density(kernel.chain, kernel.probs)
    return MeasureKernelPair(kernel, phi)


def _support_violated(mu: PairEmpiricalMeasure) -> bool:
    mask = mu.chain.open_mask
    if np.any(mu.weights[~mask] > 0.0):
        return True
    m1 = mu.first_marginal()
    charged = m1 > 0.0
    return bool(np.any((mu.weights[charged] == 0.0) & mask[charged]))


def entropy_level2(mu: PairEmpiricalMeasure,
                   chain: EnvironmentChain | None = None) -> float:
    """Relative entropy of mu against the walk kernel; math.inf off the
    equal-marginal, open-support set."""
    if chain is None:
        chain = mu.chain
    total = mu.total()
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"measure must be normalized, total is {total!r}")
    m1 = mu.first_marginal()
    m2 = mu.second_marginal()
    if np.abs(m1 - m2).sum() > MARGINAL_TOL:
        return math.inf
    if _support_violated(mu):
        return math.inf
    w = mu.weights
    pos = w > 0.0
    pi = chain.srw_rows()
    ref = m1[:, None] * pi
    return float(np.sum(w[pos] * (np.log(w[pos]) - np.log(ref[pos]))))


def pair_bijection(mu: PairEmpiricalMeasure) -> MeasureKernelPair:
    """Split mu into (conditional kernel, marginal density).

    Sites carrying no marginal mass get the reference walk row, so the
    returned kernel is valid everywhere; the inverse map restores mu
    exactly on its support.
    """
    chain = mu.chain
    m1 = mu.first_marginal()
    m2 = mu.second_marginal()
    if np.abs(m1 - m2).sum() > MARGINAL_TOL:
        raise NotInStarSet(
            f"marginals differ by {np.abs(m1 - m2).sum():.3e} in total variation"
        )
    if _support_violated(mu):
        raise SupportViolation(
            "measure support does not match the open directions"
        )
    charged = m1 > 0.0
    rows = chain.srw_rows().copy()
    rows[charged] = mu.weights[charged] / m1[charged, None]
    kernel = TransitionKernel(chain, rows, "from-measure")
    phi = m1 * chain.n_states
    return MeasureKernelPair(kernel, phi)


def pair_inverse(pair: MeasureKernelPair,
                 tol: float = INVARIANCE_TOL) -> PairEmpiricalMeasure:
    """Back from an invariant pair to its measure; rejects drifting pairs."""
    residual = pair.invariance_residual()
    if residual > tol:
        raise ValueError(
            f"pair is not invariant: residual {residual:.3e} > {tol:.0e}"
        )
    return pair.pair_measure()
