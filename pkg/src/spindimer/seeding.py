"""Deterministic RNG trees.

Every run draws all of its randomness from one top-level integer seed.
Subsystems obtain independent streams by label, so results are
bit-reproducible regardless of evaluation order or thread scheduling.
"""
from __future__ import annotations

import hashlib

import numpy as np


def _label_key(labels: tuple) -> int:
    digest = hashlib.sha256("/".join(str(x) for x in labels).encode()).digest()
    return int.from_bytes(digest[:8], "big")


def child_rng(seed: int, *labels) -> np.random.Generator:
    """Independent generator for (seed, labels), stable across platforms."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), _label_key(labels)]))


def as_rng(seed_or_rng) -> np.random.Generator:
    """Accept either an integer seed or an existing Generator."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)
