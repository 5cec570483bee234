"""Counter-based uniform stream.

Draw ``i`` of stream ``seed`` is a pure function of ``(seed, i)`` (SplitMix64
finaliser over a Weyl sequence), so any sharding of the cycle range yields
the same numbers.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _stream_key(seed: int) -> np.uint64:
    with np.errstate(over="ignore"):
        return _mix(np.uint64(seed & _MASK64) + _GOLDEN)


def uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """Uniforms in ``[0, 1)`` for counters ``start .. start + count - 1``."""
    if start < 0 or count < 0:
        raise ValueError("counter range must be nonnegative")
    key = _stream_key(seed)
    idx = np.arange(start, start + count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = _mix(idx * _GOLDEN + key)
    return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53


def uniform(seed: int, index: int) -> float:
    return float(uniforms(seed, index, 1)[0])
