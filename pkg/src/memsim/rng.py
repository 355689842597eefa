"""SplitMix64: the single PRNG used everywhere (traces, epoch lotteries).

Algorithm (fixed, so traces and lotteries are reproducible in any language)::

    state = (state + 0x9E3779B97F4A7C15) mod 2**64
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 mod 2**64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB mod 2**64
    return z ^ (z >> 31)

A uniform double in [0, 1) is ``(next_u64() >> 11) * 2**-53``.
"""
import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Seedable 64-bit generator; ``state`` is the whole generator state."""

    def __init__(self, seed: int = 0):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))


def splitmix64_block(seed: int, n: int) -> np.ndarray:
    """The first ``n`` outputs of ``SplitMix64(seed)``, vectorised (uint64)."""
    if n == 0:
        return np.zeros(0, dtype=np.uint64)
    with np.errstate(over="ignore"):
        k = np.arange(1, n + 1, dtype=np.uint64)
        z = np.uint64(int(seed) & MASK64) + k * np.uint64(GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
        z = z ^ (z >> np.uint64(31))
    return z


def to_unit(u: np.ndarray) -> np.ndarray:
    """Map uint64 outputs to doubles in [0, 1) exactly like ``SplitMix64.random``."""
    return (u >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
