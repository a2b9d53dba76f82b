"""Deterministic random-stream derivation from one master seed.

Every stream is keyed by (master_seed, task_id, run_index) through numpy's
SeedSequence spawn mechanism, so results are reproducible independently of
how work is batched or ordered.
"""

from __future__ import annotations

import zlib

import numpy as np


def task_id(name: str) -> int:
    """Stable 32-bit id for a named task (crc32, not Python hash)."""
    return zlib.crc32(name.encode("utf-8"))


def substream(master_seed: int, task: int | str, run_index: int = 0) -> np.random.Generator:
    """Generator for one task/run slot under a master seed.

    The same (master_seed, task, run_index) always yields the same stream;
    distinct slots are statistically independent.
    """
    if isinstance(task, str):
        task = task_id(task)
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(task), int(run_index)))
    return np.random.default_rng(seq)
