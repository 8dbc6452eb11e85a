"""SplitMix64, a counter-based splittable PRNG.

Output ``n`` (1-based) of a stream with key ``seed`` is
``mix64(seed + n * 0x9E3779B97F4A7C15 mod 2**64)`` using the standard
SplitMix64 finalizer. Child streams are keyed by
``mix64(seed XOR fnv1a64(label))`` so they do not depend on how many values
the parent has produced. The definition is small enough to reproduce
bit-for-bit in any language.
"""

from __future__ import annotations

from typing import MutableSequence, Sequence, TypeVar

T = TypeVar("T")

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def fnv1a64(label: str) -> int:
    h = FNV_OFFSET
    for byte in label.encode("utf-8"):
        h ^= byte
        h = (h * FNV_PRIME) & MASK64
    return h


class SplitMix64:
    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self.counter = 0

    def next_u64(self) -> int:
        self.counter += 1
        return mix64(self.seed + self.counter * GOLDEN_GAMMA)

    def split(self, label: str) -> "SplitMix64":
        return SplitMix64(mix64(self.seed ^ fnv1a64(label)))

    def randbelow(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` by rejection (no modulo bias)."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in ``[lo, hi]``."""
        return lo + self.randbelow(hi - lo + 1)

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def bernoulli(self, num: int, den: int) -> bool:
        """True with probability ``num/den``, exactly."""
        return self.randbelow(den) < num

    def shuffle(self, items: MutableSequence) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample(self, population: Sequence[T], k: int) -> list[T]:
        pool = list(population)
        self.shuffle(pool)
        return pool[:k]

    def choice(self, population: Sequence[T]) -> T:
        return population[self.randbelow(len(population))]
