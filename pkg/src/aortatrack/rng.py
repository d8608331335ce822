"""SplitMix64 with Box-Muller normals, vectorised over numpy ``uint64``.

SplitMix64 (Steele, Lea & Flood, 2014) is a counter-based generator: the
``i``-th output (1-based) is ``mix(seed + i * GOLDEN_GAMMA)``, so a whole
stream can be produced in one array expression and results are identical
on every platform.
"""

import numpy as np

GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def splitmix64(seed: int, n: int) -> np.ndarray:
    """First ``n`` outputs of the SplitMix64 stream seeded with ``seed``."""
    seed = int(seed) & _MASK64
    with np.errstate(over="ignore"):
        z = np.uint64(seed) + np.arange(1, n + 1, dtype=np.uint64) * np.uint64(GOLDEN_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def uniform53(bits: np.ndarray) -> np.ndarray:
    """Top 53 bits as doubles in ``[0, 1)``."""
    return (bits >> np.uint64(11)).astype(np.float64) * (2.0**-53)


def standard_normal(seed: int, n: int) -> np.ndarray:
    """``n`` standard normal deviates via the Box-Muller transform.

    Outputs ``2i`` and ``2i+1`` of the stream form one uniform pair; the
    first is shifted to ``(0, 1]`` so the logarithm is always finite.
    """
    pairs = (n + 1) // 2
    bits = splitmix64(seed, 2 * pairs)
    u1 = 1.0 - uniform53(bits[0::2])
    u2 = uniform53(bits[1::2])
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    out = np.empty(2 * pairs, dtype=np.float64)
    out[0::2] = r * np.cos(theta)
    out[1::2] = r * np.sin(theta)
    return out[:n]
