"""Per-model counter-based random streams.

Every draw tied to a model comes from its own Philox stream keyed by
(seed, purpose, model identity).  Values therefore do not depend on record
order or on the order in which models are evaluated.
"""

from __future__ import annotations

import zlib
from typing import Sequence

import numpy as np


def _purpose_key(purpose: str) -> int:
    return zlib.crc32(purpose.encode("utf-8"))


def model_stream(seed: int, purpose: str, coord: Sequence[int], replica: int = 0) -> np.random.Generator:
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    entropy = [int(seed), _purpose_key(purpose), int(replica), len(coord), *(int(c) for c in coord)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def stream(seed: int, purpose: str) -> np.random.Generator:
    """Population-level stream (not tied to a model)."""
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), _purpose_key(purpose)])))
