"""Labelled, counter-based random substreams derived from one 64-bit seed."""

from __future__ import annotations

import zlib

import numpy as np

SEED_MASK = (1 << 64) - 1


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise ValueError(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed <= SEED_MASK:
        raise ValueError("seed must fit in 64 unsigned bits")
    return seed


def label_key(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


def substream(seed: int, label: str, *counters: int) -> np.random.Generator:
    """Generator for (seed, label, counters); identical inputs give identical streams."""
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=(label_key(label), *(int(c) for c in counters)))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, label: str, *counters: int) -> int:
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=(label_key(label), *(int(c) for c in counters)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
