"""Bit-string solutions, seeded randomness, and the standard bit-flip mutation.

Solutions are fixed-length binary vectors stored as Python ints (bit ``i`` of
``word`` is variable ``i``), which makes XOR-based mutation and set-union
evaluation cheap enough for multi-million-evaluation runs in pure Python.
"""

from __future__ import annotations

import math
import random
from bisect import bisect_right
from dataclasses import dataclass
from functools import lru_cache

from .errors import ParameterError

__all__ = [
    "Solution",
    "RandomSource",
    "FlipMask",
    "random_solution",
    "sample_flip_mask",
    "apply_mask",
    "bitwise_mutate",
]


@dataclass(frozen=True, slots=True)
class Solution:
    """An assignment of ``n`` binary decision variables.

    ``Solution(4, 0b0110)`` selects items 1 and 2.  In string form the
    character at position ``i`` is variable ``i``, so the same solution reads
    ``"0110"``.  Instances are immutable and hashable; operators return new
    objects.
    """

    n: int
    word: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ParameterError(f"need at least one variable, got n={self.n}")
        if not 0 <= self.word < (1 << self.n):
            raise ParameterError(
                f"word {self.word:#x} does not fit in {self.n} bits"
            )

    def ones(self) -> int:
        """Number of selected variables (Hamming weight)."""
        return self.word.bit_count()

    @property
    def bits(self) -> tuple[bool, ...]:
        w = self.word
        return tuple(bool((w >> i) & 1) for i in range(self.n))

    @classmethod
    def zero(cls, n: int) -> "Solution":
        return cls(n, 0)

    @classmethod
    def from_bits(cls, bits) -> "Solution":
        seq = list(bits)
        word = 0
        for i, b in enumerate(seq):
            if b:
                word |= 1 << i
        return cls(len(seq), word)

    @classmethod
    def from_string(cls, text: str) -> "Solution":
        if not text or any(c not in "01" for c in text):
            raise ParameterError(f"expected a non-empty string over 0/1, got {text!r}")
        return cls(len(text), sum(1 << i for i, c in enumerate(text) if c == "1"))

    def to_string(self) -> str:
        w = self.word
        return "".join("1" if (w >> i) & 1 else "0" for i in range(self.n))

    def __str__(self) -> str:
        return self.to_string()


class RandomSource(random.Random):
    """Seeded deterministic random stream.

    A thin subclass of :class:`random.Random` (Mersenne Twister) that insists
    on an explicit non-negative integer seed and remembers it.  CPython
    documents the core generator and its ``random()`` / ``getrandbits()``
    streams as reproducible across releases and platforms, so one seed pins
    down an entire run.
    """

    def __init__(self, seed: int):
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise ParameterError(f"seed must be a non-negative integer, got {seed!r}")
        super().__init__(seed)
        self.initial_seed = seed

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"RandomSource(seed={self.initial_seed})"


@dataclass(frozen=True, slots=True)
class FlipMask:
    """A set of variable positions to invert, stored as a bitmask.

    The empty mask is legal: applying it copies the parent, and those copy
    events are part of the mutation distribution, not an error.
    """

    n: int
    word: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ParameterError(f"need at least one variable, got n={self.n}")
        if not 0 <= self.word < (1 << self.n):
            raise ParameterError(f"mask {self.word:#x} does not fit in {self.n} bits")

    @property
    def positions(self) -> frozenset[int]:
        w = self.word
        out = []
        while w:
            low = w & -w
            out.append(low.bit_length() - 1)
            w ^= low
        return frozenset(out)

    @classmethod
    def from_positions(cls, n: int, positions) -> "FlipMask":
        word = 0
        for p in positions:
            if not 0 <= p < n:
                raise ParameterError(f"flip position {p} outside 0..{n - 1}")
            word |= 1 << p
        return cls(n, word)

    def __len__(self) -> int:
        return self.word.bit_count()


def random_solution(n: int, rng: RandomSource) -> Solution:
    """A solution drawn uniformly from all 2^n assignments."""
    if n < 1:
        raise ParameterError(f"need at least one variable, got n={n}")
    return Solution(n, rng.getrandbits(n))


@lru_cache(maxsize=None)
def _flip_count_cdf(n: int) -> tuple[float, ...]:
    """P(Binomial(n, 1/n) <= k) for k = 0..n, from exact integer tallies.

    Entry k is sum_{j<=k} C(n,j) (n-1)^(n-j) / n^n evaluated with arbitrary
    precision integers before the single rounding to float.
    """
    total = n**n
    acc = 0
    cdf = []
    for k in range(n + 1):
        acc += math.comb(n, k) * (n - 1) ** (n - k)
        cdf.append(acc / total)
    cdf[-1] = 1.0  # guard against rounding ever stranding a uniform draw
    return tuple(cdf)


def sample_flip_mask(n: int, rng: RandomSource) -> FlipMask:
    """Draw a mask that includes each position independently with probability 1/n.

    Sampled as a binomial flip count followed by a uniform subset of that
    size — the standard decomposition, identical in distribution to n
    independent coin flips but needing ~2 draws per call instead of n.
    """
    if n < 1:
        raise ParameterError(f"need at least one variable, got n={n}")
    count = bisect_right(_flip_count_cdf(n), rng.random())
    word = 0
    while count:
        bit = 1 << rng.randrange(n)
        if not word & bit:
            word |= bit
            count -= 1
    return FlipMask(n, word)


def apply_mask(x: Solution, mask: FlipMask) -> Solution:
    """Invert the masked positions of ``x``.  Applying the same mask twice is a no-op."""
    if mask.n != x.n:
        raise ParameterError(f"mask length {mask.n} does not match solution length {x.n}")
    return Solution(x.n, x.word ^ mask.word)


def bitwise_mutate(x: Solution, rng: RandomSource) -> Solution:
    """Standard bit-wise mutation: flip each position independently with probability 1/n."""
    return apply_mask(x, sample_flip_mask(x.n, rng))
