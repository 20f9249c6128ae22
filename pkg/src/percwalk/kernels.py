"""Transition kernels on the giant cluster.

A kernel assigns each giant-cluster site a probability vector over the 2d
step directions, with positive mass exactly on the open directions.  The
built-in modes are the simple random walk (uniform over open directions),
the drifted walk (extra weight beta on +e1), and the exponential tilt
pi(x, e) exp(theta . e) renormalized per row.  The tilt is a proposal
kernel for importance sampling, not the conditioned law; the exact
Perron h-transform lives next to the eigenvalue solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chain import EnvironmentChain

ROW_SUM_TOL = 1e-12


class SupportViolation(ValueError):
    """A kernel row puts mass on a closed direction or none on an open one."""


@dataclass
class TransitionKernel:
    chain: EnvironmentChain
    probs: np.ndarray = field(repr=False)
    mode: str = "custom"

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.shape != self.chain.open_mask.shape:
            raise ValueError(
                f"kernel shape {self.probs.shape} does not match chain "
                f"{self.chain.open_mask.shape}"
            )
        self.validate()

    def validate(self):
        mask = self.chain.open_mask
        if np.any(self.probs[~mask] != 0.0):
            raise SupportViolation("positive mass on a closed direction")
        if np.any(self.probs[mask] <= 0.0):
            raise SupportViolation("zero mass on an open direction")
        sums = self.probs.sum(axis=1)
        if np.max(np.abs(sums - 1.0)) > ROW_SUM_TOL:
            worst = int(np.argmax(np.abs(sums - 1.0)))
            raise ValueError(f"row {worst} sums to {sums[worst]!r}")

    def cumulative_rows(self) -> np.ndarray:
        """Row cumsums with the last entry pinned to 1.

        Pinning makes inversion sampling select an open direction for every
        uniform in [0, 1): closed directions occupy empty intervals.
        """
        cum = np.cumsum(self.probs, axis=1)
        cum[:, -1] = 1.0
        return cum


def build_kernel(chain: EnvironmentChain, mode: str = "srw", *,
                 beta: float | None = None,
                 theta=None,
                 table: np.ndarray | None = None) -> TransitionKernel:
    """Build a kernel in one of the modes srw | drift | tilted | custom."""
    mask = chain.open_mask
    if mode == "srw":
        return TransitionKernel(chain, chain.srw_rows(), "srw")
    if mode == "drift":
        if beta is None or beta <= 0.0:
            raise ValueError(f"drift mode needs beta > 0, got {beta}")
        weights = np.ones_like(mask, dtype=float)
        weights[:, 0] = beta  # +e1 is direction 0
        weights[~mask] = 0.0
        rows = weights / weights.sum(axis=1, keepdims=True)
        return TransitionKernel(chain, rows, f"drift({beta})")
    if mode == "tilted":
        if theta is None:
            raise ValueError("tilted mode needs a direction vector theta")
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (chain.d,):
            raise ValueError(f"theta must have shape ({chain.d},)")
        tilt = np.exp(chain.direction_vecs @ theta)
        weights = chain.srw_rows() * tilt[None, :]
        rows = weights / weights.sum(axis=1, keepdims=True)
        return TransitionKernel(chain, rows, f"tilted({theta.tolist()})")
    if mode == "custom":
        if table is None:
            raise ValueError("custom mode needs a probability table")
        return TransitionKernel(chain, table, "custom")
    raise ValueError(f"unknown kernel mode {mode!r}")
