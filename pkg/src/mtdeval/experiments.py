"""Evaluation protocols: defense sweeps and the distance/regret study.

Every point of a sweep reuses the same master seed (common random numbers),
so differences between points come from the swept parameter rather than
from different episode streams.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .clairvoyant import dynamic_regret
from .defense import DefenseConfig, build_schedule, period_from_frequency
from .graph import AttackGraph, distances_to
from .planner import Backend, PlanCache
from .rng import ATTACKER_STREAM, Rng, derive_seed
from .sim import MonteCarloStats, Outcome, run_episode, run_monte_carlo
from .stats import chi_squared

TABLE_I = {"horizon": 19, "t_max": 100, "success_prob": 0.9, "lam": 1.0, "k": 3, "h": 19}


@dataclass(frozen=True)
class SweepRow:
    frequency: float
    k: int
    stats: MonteCarloStats
    seed: int


@dataclass(frozen=True)
class SweepResult:
    parameter: str  # "frequency" or "k"
    rows: tuple[SweepRow, ...]

    def values(self) -> list[float]:
        return [r.frequency if self.parameter == "frequency" else r.k for r in self.rows]

    def success_rates(self) -> np.ndarray:
        return np.array([r.stats.success_rate for r in self.rows])

    def slope(self) -> float:
        """Least-squares slope of success rate against the swept value."""
        x = np.asarray(self.values(), dtype=float)
        if len(x) < 2:
            raise ValueError("slope needs at least two sweep points")
        return float(np.polyfit(x, self.success_rates(), 1)[0])


def _sweep_point(g, k, frequency, horizon, lam, t_max, trials, seed, backend, workers) -> SweepRow:
    config = DefenseConfig(k, period_from_frequency(frequency), g.ids_candidates)
    stats = run_monte_carlo(g, config, horizon, lam, t_max, backend, trials, seed, workers)
    return SweepRow(float(frequency), k, stats, seed)


def sweep_frequency(
    g: AttackGraph,
    k: int,
    frequencies: Sequence,
    horizon: int = 19,
    lam: float = 1.0,
    t_max: int = 100,
    trials: int = 1000,
    seed: int = 0,
    backend: Backend = Backend.DUAL_LP,
    workers: int = 1,
) -> SweepResult:
    for f in frequencies:
        period_from_frequency(f)  # reject bad values before any work
    rows = tuple(
        _sweep_point(g, k, f, horizon, lam, t_max, trials, seed, backend, workers) for f in frequencies
    )
    return SweepResult("frequency", rows)


def sweep_ids_count(
    g: AttackGraph,
    ks: Sequence[int],
    frequency,
    horizon: int = 19,
    lam: float = 1.0,
    t_max: int = 100,
    trials: int = 1000,
    seed: int = 0,
    backend: Backend = Backend.DUAL_LP,
    workers: int = 1,
) -> SweepResult:
    period = period_from_frequency(frequency)
    for k in ks:
        DefenseConfig(k, period, g.ids_candidates)
    rows = tuple(
        _sweep_point(g, k, frequency, horizon, lam, t_max, trials, seed, backend, workers) for k in ks
    )
    return SweepResult("k", rows)


@dataclass(frozen=True)
class RegretRow:
    initial_state: int
    distance: int
    schedule_index: int
    optimal_value: float
    online_value: float
    regret: float
    optimal_success: float
    online_success: float


@dataclass
class RegretStudy:
    rows: list[RegretRow]
    wins: dict[int, int] = field(default_factory=dict)  # per distance
    losses: dict[int, int] = field(default_factory=dict)

    def distances(self) -> list[int]:
        return sorted({r.distance for r in self.rows})

    def mean_regret(self, distances) -> float:
        sel = [r.regret for r in self.rows if r.distance in set(distances)]
        if not sel:
            raise ValueError(f"no rows at distances {sorted(distances)}")
        return float(np.mean(sel))

    def contingency_table(self) -> np.ndarray:
        """Rows win/lose, one column per distance that has episodes."""
        cols = [d for d in sorted(self.wins) if self.wins[d] + self.losses[d] > 0]
        return np.array([[self.wins[d] for d in cols], [self.losses[d] for d in cols]])

    def chi_squared(self) -> tuple[float, int, float]:
        return chi_squared(self.contingency_table())


def distance_regret_study(
    g: AttackGraph,
    initial_states: Sequence[int],
    k: int = 3,
    frequency=Fraction(1, 3),
    horizon: int = 19,
    lam: float = 1.0,
    h: int = 19,
    n_schedules: int = 10,
    seed: int = 0,
    backend: Backend = Backend.DUAL_LP,
    episodes: int = 100,
) -> RegretStudy:
    """Regret and analytic success probabilities per (initial state, schedule).

    Schedule ``j`` uses seed ``derive_seed(seed, j)`` and covers ``0..h``.
    The win/lose table comes from ``episodes`` simulated online runs per
    (initial state, schedule), each limited to ``h`` steps; episode ``e`` from
    node ``s`` draws from ``derive_seed(schedule_seed ^ 2**63, s * episodes + e)``.
    """
    if n_schedules < 1:
        raise ValueError("n_schedules must be at least 1")
    dist = distances_to(g, g.target_node)
    for s in initial_states:
        if not 0 <= s < g.node_count:
            raise ValueError(f"initial state {s} is not a node")
        if dist[s] is None:
            raise ValueError(f"target is unreachable from initial state {s}")
    config = DefenseConfig(k, period_from_frequency(frequency), g.ids_candidates)
    plans = PlanCache(g, horizon, lam, backend)  # plans ignore the initial node
    study = RegretStudy([])
    for j in range(n_schedules):
        sched_seed = derive_seed(seed, j)
        schedule = build_schedule(config, h, sched_seed)
        for s in initial_states:
            gs = g.with_endpoints(s, g.target_node)
            rep = dynamic_regret(gs, schedule, horizon, lam, h, backend, plans)
            d = dist[s]
            study.rows.append(
                RegretRow(
                    s, d, j, rep.optimal_value, rep.online_value, rep.regret,
                    rep.optimal_success, rep.online_success,
                )
            )
            wins = 0
            for e in range(episodes):
                rng = Rng(derive_seed(sched_seed ^ ATTACKER_STREAM, s * episodes + e))
                res = run_episode(gs, schedule, horizon, lam, h, backend, rng, plans, record=False)
                wins += res.outcome is Outcome.SUCCESS
            study.wins[d] = study.wins.get(d, 0) + wins
            study.losses[d] = study.losses.get(d, 0) + episodes - wins
    study.rows.sort(key=lambda r: (r.distance, r.initial_state, r.schedule_index))
    return study


def one_state_per_distance(g: AttackGraph) -> list[int]:
    """Lowest-numbered node at each hop distance to the target (unreachable nodes skipped)."""
    picked: dict[int, int] = {}
    for s, d in enumerate(distances_to(g, g.target_node)):
        if d is not None and d not in picked:
            picked[d] = s
    return [picked[d] for d in sorted(picked)]
