"""SplitMix64 random stream shared by every stochastic component.

The generator is restated here bit-exactly so schedules and episodes can be
reproduced from a seed in any language::

    state  <- (state + 0x9E3779B97F4A7C15) mod 2**64
    z      <- state
    z      <- (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 mod 2**64
    z      <- (z ^ (z >> 27)) * 0x94D049BB133111EB mod 2**64
    output <- z ^ (z >> 31)

Derived quantities:

* ``random()``  = ``(next_u64() >> 11) * 2**-53``, uniform on [0, 1).
* ``below(n)``  = ``(next_u64() * n) >> 64``, one draw per call.
* ``derive_seed(master, j)`` = first output of a generator seeded with
  ``master XOR j``; used for all sub-streams.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
ATTACKER_STREAM = 1 << 63


def mix64(z: int) -> int:
    """SplitMix64 output finalizer."""
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class Rng:
    """A SplitMix64 stream. Owned by one task at a time."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return mix64(self.state)

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def below(self, n: int) -> int:
        if n <= 0:
            raise ValueError(f"below() needs n >= 1, got {n}")
        return (self.next_u64() * n) >> 64

    def choice_index(self, weights) -> int:
        """Inverse-CDF draw of an index from a probability vector (one draw)."""
        u = self.random()
        acc = 0.0
        last = 0
        for i, w in enumerate(weights):
            if w <= 0.0:
                continue
            last = i
            acc += w
            if u < acc:
                return i
        return last

    def __repr__(self) -> str:
        return f"Rng(state=0x{self.state:016x})"


def derive_seed(master: int, stream: int) -> int:
    return Rng((int(master) ^ int(stream)) & MASK64).next_u64()
