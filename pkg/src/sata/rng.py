"""Deterministic 64-bit PRNG and the sampling procedures built on it.

The generator is SplitMix64: a published 64-bit mixer over a 64-bit
counter state (public-domain reference constants). It is tiny, seedable,
and produces the same stream on every platform, which is what mask
generation needs for byte-identical golden files.

Sampling procedures are fixed so that they, too, are portable:

* ``randbelow(n)`` draws 64-bit words, rejecting any word >= the largest
  multiple of ``n`` that fits in 64 bits, then reduces modulo ``n``.
* ``sample(n, k)`` runs a partial Fisher-Yates pass over ``range(n)``
  (swapping position i with ``i + randbelow(n - i)``) and returns the
  first ``k`` entries in draw order.

Golden tests pin outputs of both the raw stream and the procedures;
changing anything here invalidates every generated-mask golden.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    """SplitMix64 stream over a 64-bit counter state."""

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling."""
        if n <= 0:
            raise ValueError("randbelow requires n >= 1")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def sample(self, n: int, k: int) -> list[int]:
        """k distinct integers from [0, n), in draw order (partial Fisher-Yates)."""
        if not 0 <= k <= n:
            raise ValueError(f"cannot sample {k} of {n}")
        pool = list(range(n))
        for i in range(k):
            j = i + self.randbelow(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]


def derive_stream(seed: int, ordinal: int) -> SplitMix64:
    """Independent substream: the ordinal-th output of a master stream seeds it."""
    master = SplitMix64(seed)
    sub_seed = seed & _MASK64
    for _ in range(ordinal + 1):
        sub_seed = master.next_u64()
    return SplitMix64(sub_seed)
