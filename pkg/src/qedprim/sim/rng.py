"""Counter-based uniforms keyed by (shot seed, draw index).

A shot's random stream is a pure function of its seed, so results do not
depend on batching, ordering or worker count.
"""
from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)
_STREAM = np.uint64(0xD1B54A32D192ED03)


def _mix(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> np.uint64(30))
    x = x * _C1
    x = x ^ (x >> np.uint64(27))
    x = x * _C2
    return x ^ (x >> np.uint64(31))


def shot_keys(seeds) -> np.ndarray:
    s = np.asarray(seeds, dtype=np.int64).astype(np.uint64)
    with np.errstate(over="ignore"):
        return _mix(s * _GOLDEN + _GOLDEN)


def uniforms(keys: np.ndarray, draw: int) -> np.ndarray:
    """Uniform floats in [0, 1), one per key, for draw index ``draw``."""
    with np.errstate(over="ignore"):
        x = _mix(keys ^ (np.uint64(draw + 1) * _STREAM))
    return (x >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
