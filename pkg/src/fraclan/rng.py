"""Reproducible random-stream derivation.

Contract: a 64-bit master seed plus a replica index deterministically
derives each stream.  The same (seed, index) pair yields a bit-identical
stream on one platform, independent of how replicas are partitioned over
workers.
"""

from __future__ import annotations

import numpy as np


def replica_stream(master_seed: int, replica_index: int) -> np.random.Generator:
    """Stream for one Monte Carlo replica."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(replica_index,))
    return np.random.default_rng(ss)


def replica_streams(master_seed: int, n: int, start: int = 0) -> list[np.random.Generator]:
    return [replica_stream(master_seed, start + i) for i in range(n)]
