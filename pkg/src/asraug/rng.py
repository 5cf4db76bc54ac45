"""Deterministic derivation of independent random streams.

Every stochastic step derives its own generator from (base seed, label
path), so utterances can be processed in parallel and in any order
without changing results.
"""

from __future__ import annotations

import zlib

import numpy as np


def _tag_to_int(tag) -> int:
    if isinstance(tag, (int, np.integer)):
        return int(tag) & 0xFFFFFFFF
    return zlib.crc32(str(tag).encode("utf-8"))


def derive_rng(seed: int, *tags) -> np.random.Generator:
    """Return a Generator unique to (seed, *tags) and stable across runs.

    Tags may be strings or integers; strings are hashed with crc32 so the
    derivation does not depend on Python's randomized hash.
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [_tag_to_int(t) for t in tags]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derive_seed(seed: int, *tags) -> int:
    """Collapse (seed, *tags) to a single 63-bit child seed."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [_tag_to_int(t) for t in tags]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0] >> 1)
