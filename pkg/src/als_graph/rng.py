"""Deterministic random stream derivation.

A single 64-bit experiment seed fans out into independent child streams via
numpy's SeedSequence spawn keys. Every consumer (dataset synthesis, weight
init, sampling, dropout, ...) owns a distinct path, so adding or removing one
consumer never perturbs the draws seen by another.
"""
from __future__ import annotations

import numpy as np

# Stream identifiers used as the first spawn-key component by the harness.
SBM = 1
MODEL_INIT = 2
REFINEMENT_INIT = 3
SAMPLER = 4
PARTITION = 5
DROPOUT = 6


def stream(seed: int, *path: int) -> np.random.Generator:
    """Child generator for (seed, *path); same inputs give the same stream."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path)))


def child_seed(seed: int, *path: int) -> int:
    """Collapse (seed, *path) into a plain integer seed for APIs that take one."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])
