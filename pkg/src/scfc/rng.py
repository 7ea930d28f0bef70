"""Deterministic pseudorandom substreams.

All randomness comes from numpy's PCG64 bit generator seeded through
``SeedSequence(entropy=seed, spawn_key=key)``. A substream depends only on
the run seed and its key (a resample index, or a hashed stratum label), so
work can be split across threads in any order without changing results.
"""

from __future__ import annotations

import hashlib
import json
from typing import Iterable

import numpy as np


def substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=key)))


def label_key(parts: Iterable[tuple[str, str]]) -> tuple[int, ...]:
    """Stable integer key for a text label (independent of ``PYTHONHASHSEED``)."""
    digest = hashlib.sha256(json.dumps(list(parts), ensure_ascii=False).encode("utf-8")).digest()
    return tuple(int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4))
