"""Roaming-IDS defender: uniform k-subset placements re-drawn every period."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .rng import Rng, derive_seed


class DefenseError(ValueError):
    pass


@dataclass(frozen=True)
class DefenseConfig:
    """``resample_period=None`` means the placement never changes (frequency 0)."""

    k: int
    resample_period: int | None
    candidates: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))
        if self.k < 0:
            raise DefenseError(f"k must be non-negative, got {self.k}")
        if self.k > len(self.candidates):
            raise DefenseError(f"k={self.k} exceeds the candidate pool size {len(self.candidates)}")
        if self.resample_period is not None and self.resample_period < 1:
            raise DefenseError(f"resample period must be a positive integer, got {self.resample_period}")

    @property
    def frequency(self) -> float:
        return 0.0 if self.resample_period is None else 1.0 / self.resample_period


def period_from_frequency(frequency) -> int | None:
    """Map 0 to None and 1/T_r to T_r; anything else is rejected."""
    f = Fraction(frequency).limit_denominator(10**6) if not isinstance(frequency, Fraction) else frequency
    if f == 0:
        return None
    if f < 0 or f > 1 or f.numerator != 1 or abs(float(f) - float(frequency)) > 1e-12:
        raise DefenseError(f"frequency must be 0 or 1/T_r for a positive integer T_r, got {frequency}")
    return f.denominator


@dataclass(frozen=True)
class IdsSchedule:
    """``placements[t]`` is the set of IDS-equipped nodes at time t."""

    placements: tuple[frozenset[int], ...]

    def __len__(self):
        return len(self.placements)

    def __getitem__(self, t: int) -> frozenset[int]:
        return self.placements[t]

    @property
    def t_max(self) -> int:
        return len(self.placements) - 1

    def truncated(self, t_max: int) -> "IdsSchedule":
        return IdsSchedule(self.placements[: t_max + 1])


def sample_placement(candidates: Sequence[int], k: int, rng: Rng) -> frozenset[int]:
    """Uniform k-subset by partial Fisher-Yates; consumes exactly k draws."""
    n = len(candidates)
    if not 0 <= k <= n:
        raise DefenseError(f"cannot choose {k} of {n} candidates")
    pool = list(candidates)
    for i in range(k):
        j = i + rng.below(n - i)
        pool[i], pool[j] = pool[j], pool[i]
    return frozenset(pool[:k])


def build_schedule(config: DefenseConfig, t_max: int, seed: int) -> IdsSchedule:
    """Placements for t = 0..t_max.

    Epoch ``e`` covers ``[e*T_r, (e+1)*T_r)`` and draws its placement from
    the stream ``derive_seed(seed, e)``, so epochs are independent and any
    epoch can be reproduced on its own.
    """
    period = config.resample_period
    placements = []
    current = None
    for t in range(t_max + 1):
        if t == 0 or (period is not None and t % period == 0):
            epoch = 0 if period is None else t // period
            current = sample_placement(config.candidates, config.k, Rng(derive_seed(seed, epoch)))
        placements.append(current)
    return IdsSchedule(tuple(placements))
