"""Seeding discipline.

All randomness flows from 64-bit master seeds through numpy's PCG64 bit
generator.  Child streams are derived with ``SeedSequence.spawn``, which is
collision-resistant, so independent operations (one per configuration, one
per walk batch) can be keyed off a single master seed.  PCG64 output for a
fixed seed is stable across numpy releases, which is what makes reruns
bit-identical.
"""

from __future__ import annotations

import numpy as np


def generator(seed: int) -> np.random.Generator:
    """PCG64 generator for a 64-bit seed."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def spawn(seed: int, n: int) -> list[np.random.Generator]:
    """n independent child generators derived from one master seed."""
    seqs = np.random.SeedSequence(seed).spawn(n)
    return [np.random.Generator(np.random.PCG64(s)) for s in seqs]


def child_seed(seed: int, index: int) -> int:
    """Stable 64-bit subseed for the index-th child of a master seed."""
    seq = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return int(seq.generate_state(1, np.uint64)[0])
