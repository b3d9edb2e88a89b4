"""Per-replication random streams.

Every replication gets its own Philox (counter-based) generator keyed by a
64-bit seed derived from ``(base_seed, index)``. The derivation is a bijection
of the index for a fixed base seed, so streams never collide and a
replication's draws do not depend on which worker produced them.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    # splitmix64 finalizer; a bijection on 64-bit words
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK64
    return z ^ (z >> 31)


def replication_seed(base_seed: int, index: int) -> int:
    """Seed of replication ``index`` in a campaign started from ``base_seed``."""
    if index < 0:
        raise ValueError(f"replication index must be non-negative, got {index}")
    return _mix64((int(base_seed) + (index + 1) * _GOLDEN) & MASK64)


def make_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed) & MASK64))
