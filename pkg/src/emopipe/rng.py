"""Deterministic random streams.

Every stochastic step in the pipeline draws from a Philox4x64-10 counter-based
generator keyed by ``(seed, stream_id)``, counter starting at zero.  Philox is
platform-independent, so the same (seed, stream) pair yields the same draws on
any machine; independent stream ids yield statistically independent streams.

Stream id layout (documented so tests can re-derive any draw):

================  =====================================================
stream id         purpose
================  =====================================================
1                 cross-validation fold shuffling
2                 label shuffling (permutation controls)
3                 synthetic corpus generation
10 + m            bootstrap replicate of ensemble member m (0=KNN, 1=RF, 2=CART)
100 + t           forest tree t (bootstrap draw + per-node feature subsets)
1000 + f          per-fold training seed derivation inside cross-validation
================  =====================================================

Nested components (e.g. the forest inside an ensemble member) receive a child
seed produced by ``derive_seed`` from the parent stream, then key their own
substreams off it.
"""

from __future__ import annotations

import numpy as np

STREAM_FOLDS = 1
STREAM_SHUFFLE = 2
STREAM_SYNTH = 3
STREAM_MEMBER_BASE = 10
STREAM_TREE_BASE = 100
STREAM_FOLD_SEED_BASE = 1000

_MASK64 = (1 << 64) - 1


def substream(seed: int, stream_id: int) -> np.random.Generator:
    """Generator for the (seed, stream_id) Philox substream."""
    key = np.array([seed & _MASK64, stream_id & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(seed: int, stream_id: int) -> int:
    """First 63-bit draw of a substream; used to seed nested components."""
    return int(substream(seed, stream_id).integers(0, 1 << 63))


def bootstrap_indices(seed: int, stream_id: int, n: int) -> np.ndarray:
    """Size-n with-replacement sample of range(n) from the given substream."""
    return substream(seed, stream_id).integers(0, n, size=n)
