"""Seeded deterministic integer RNG for schedule generation.

Schedule prefixes must be reproducible bit-for-bit across platforms and
library versions, so label streams are driven by splitmix64 (a published
64-bit mixing generator) implemented here on plain Python ints instead of
delegating to numpy's generator objects.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """splitmix64 finalizer: avalanche a 64-bit value."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *indices: int) -> int:
    """Derive an independent sub-seed from (seed, index path).

    Used to give each block/cycle of a label stream its own stream, so
    values at arbitrary positions can be computed without generating
    predecessors.
    """
    state = mix64(seed)
    for idx in indices:
        state = mix64(state ^ ((idx + 1) * _GAMMA))
    return state


class SplitMix64:
    """Minimal sequential splitmix64 stream."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return mix64(self._state)

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = _MASK64 + 1 - ((_MASK64 + 1) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n


def shuffled(items: list, seed: int) -> list:
    """Fisher-Yates shuffle of a copy of `items`, driven by splitmix64."""
    rng = SplitMix64(seed)
    out = list(items)
    for i in range(len(out) - 1, 0, -1):
        j = rng.next_below(i + 1)
        out[i], out[j] = out[j], out[i]
    return out
