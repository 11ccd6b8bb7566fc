"""Deterministic counter-based random streams.

Every variate is a pure function of (key, stream, index, dim), so render
workloads can be split across threads or re-run years later and still
produce bit-identical results. The mixer is the splitmix64 finalizer
applied to the combined counter words; it vectorizes over numpy uint64
arrays.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    x = (x + _GOLDEN).astype(np.uint64)
    x ^= x >> np.uint64(30)
    x *= _MIX1
    x ^= x >> np.uint64(27)
    x *= _MIX2
    x ^= x >> np.uint64(31)
    return x


def counter_uniform(key: int, stream, index, dim: int = 0) -> np.ndarray:
    """Uniform float64 in [0, 1) for each (stream, index) counter pair.

    key: global seed; stream: logical stream id (pixel, probe, ...);
    index: sample counter within the stream; dim: dimension within a sample.
    stream and index broadcast against each other.
    """
    idx = np.asarray(index, dtype=np.uint64)
    sid = np.asarray(stream, dtype=np.uint64)
    with np.errstate(over="ignore"):
        h = _splitmix64(np.uint64(key & 0xFFFFFFFFFFFFFFFF) * _GOLDEN ^ sid)
        h = _splitmix64(h ^ (np.uint64(dim) * _MIX1))
        bits = _splitmix64(idx * _MIX2 ^ h)
    return (bits >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


class CounterStream:
    """Convenience wrapper fixing (key, stream) and handing out dimensions."""

    def __init__(self, key: int, stream: int):
        self.key = int(key)
        self.stream = int(stream)

    def uniform(self, index, dim: int = 0) -> np.ndarray:
        return counter_uniform(self.key, self.stream, index, dim)
