"""Episode engine: the receding-horizon attacker against a live IDS schedule.

Per step ``t``:

1. the attacker has succeeded if it stands on the target;
2. at ``t == t_max`` the episode times out;
3. it scans the placement ``S_IDS,t`` and plans;
4. it samples an action from the current-step policy;
5. WAIT keeps it in place and is never detected;
6. an exploit is detected when its intended target is in ``S_IDS,t+1``
   (the defender moves concurrently), otherwise it succeeds with the
   exploit's probability.

Monte-Carlo episode ``i`` uses the schedule stream ``derive_seed(master, i)``
and the attacker stream ``derive_seed(master, i + 2**63)``.
"""

from __future__ import annotations

import enum
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .defense import DefenseConfig, IdsSchedule, build_schedule
from .graph import WAIT, AttackGraph
from .planner import Backend, PlanCache
from .rng import ATTACKER_STREAM, MASK64, Rng, derive_seed
from .stats import wilson_interval


class Outcome(enum.Enum):
    SUCCESS = "S"
    DETECTED = "D"
    TIMEOUT = "T"


@dataclass(frozen=True)
class Step:
    t: int
    state: int
    action: int
    intended_target: int | None
    placement: frozenset[int]


@dataclass
class EpisodeResult:
    outcome: Outcome
    step: int
    trajectory: list[Step] = field(default_factory=list)
    seed: int | None = None
    final_state: int = -1

    def dump(self) -> str:
        """Tab-separated trace: ``t state action intended_target placement outcome_flag``.

        One line per attempted step; Success and Timeout add a final line with
        ``-`` for action and target. The flag is ``.`` for an ordinary step.
        """
        lines = []
        for i, s in enumerate(self.trajectory):
            last = i == len(self.trajectory) - 1
            flag = "D" if (last and self.outcome is Outcome.DETECTED) else "."
            lines.append(
                "\t".join(
                    [
                        str(s.t),
                        str(s.state),
                        "wait" if s.action == WAIT else f"x{s.action}",
                        "-" if s.intended_target is None else str(s.intended_target),
                        _fmt_set(s.placement),
                        flag,
                    ]
                )
            )
        if self.outcome is not Outcome.DETECTED:
            lines.append(f"{self.step}\t{self.final_state}\t-\t-\t-\t{self.outcome.value}")
        return "\n".join(lines) + "\n"


def _fmt_set(nodes) -> str:
    return ",".join(str(v) for v in sorted(nodes)) or "-"


def parse_trajectory(text: str) -> list[tuple[int, int, str, int | None, frozenset[int], str]]:
    """Inverse of :meth:`EpisodeResult.dump` (placement ``-`` parses as empty)."""
    rows = []
    for line in text.splitlines():
        t, state, action, target, placement, flag = line.split("\t")
        nodes = frozenset() if placement == "-" else frozenset(int(v) for v in placement.split(","))
        rows.append((int(t), int(state), action, None if target == "-" else int(target), nodes, flag))
    return rows


def run_episode(
    g: AttackGraph,
    schedule: IdsSchedule,
    horizon: int,
    lam: float,
    t_max: int,
    backend: Backend = Backend.DUAL_LP,
    rng: Rng | None = None,
    plans: PlanCache | None = None,
    record: bool = True,
) -> EpisodeResult:
    if len(schedule) < t_max + 1:
        raise ValueError(f"schedule covers {len(schedule)} steps, need {t_max + 1}")
    if rng is None:
        rng = Rng(0)
    if plans is None:
        plans = PlanCache(g, horizon, lam, backend)
    seed = rng.state
    target = g.target_node
    state = g.initial_node
    trajectory: list[Step] = []
    t = 0
    while True:
        if state == target:
            return EpisodeResult(Outcome.SUCCESS, t, trajectory, seed, state)
        if t >= t_max:
            return EpisodeResult(Outcome.TIMEOUT, t, trajectory, seed, state)
        observed = schedule[t]
        action = rng.choice_index(plans.distribution(observed, state))
        intended = g.action_target(state, action)
        if record:
            trajectory.append(Step(t, state, action, intended, observed))
        if action != WAIT:
            if intended in schedule[t + 1]:
                return EpisodeResult(Outcome.DETECTED, t, trajectory, seed, state)
            if rng.random() < g.exploits[state][action - 1].success_prob:
                state = intended
        t += 1


@dataclass(frozen=True)
class MonteCarloStats:
    trials: int
    successes: int
    detections: int
    timeouts: int

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials

    @property
    def interval(self) -> tuple[float, float]:
        return wilson_interval(self.successes, self.trials)

    @property
    def ci_low(self) -> float:
        return self.interval[0]

    @property
    def ci_high(self) -> float:
        return self.interval[1]

    def __add__(self, other: "MonteCarloStats") -> "MonteCarloStats":
        return MonteCarloStats(
            self.trials + other.trials,
            self.successes + other.successes,
            self.detections + other.detections,
            self.timeouts + other.timeouts,
        )


def episode_seeds(master_seed: int, index: int) -> tuple[int, int]:
    """(schedule seed, attacker seed) for Monte-Carlo episode ``index``."""
    return (
        derive_seed(master_seed, index),
        derive_seed(master_seed, (index + ATTACKER_STREAM) & MASK64),
    )


def _run_range(args) -> MonteCarloStats:
    g, config, horizon, lam, t_max, backend, master_seed, start, stop = args
    plans = PlanCache(g, horizon, lam, backend)
    counts = {o: 0 for o in Outcome}
    for i in range(start, stop):
        sched_seed, attack_seed = episode_seeds(master_seed, i)
        schedule = build_schedule(config, t_max, sched_seed)
        res = run_episode(g, schedule, horizon, lam, t_max, backend, Rng(attack_seed), plans, record=False)
        counts[res.outcome] += 1
    return MonteCarloStats(
        stop - start, counts[Outcome.SUCCESS], counts[Outcome.DETECTED], counts[Outcome.TIMEOUT]
    )


def run_monte_carlo(
    g: AttackGraph,
    config: DefenseConfig,
    horizon: int,
    lam: float,
    t_max: int,
    backend: Backend,
    trials: int,
    master_seed: int,
    workers: int = 1,
) -> MonteCarloStats:
    """Aggregate ``trials`` independent episodes; counts do not depend on ``workers``."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if workers <= 1:
        return _run_range((g, config, horizon, lam, t_max, backend, master_seed, 0, trials))
    bounds = [trials * w // workers for w in range(workers + 1)]
    jobs = [
        (g, config, horizon, lam, t_max, backend, master_seed, lo, hi)
        for lo, hi in zip(bounds, bounds[1:])
        if hi > lo
    ]
    total = MonteCarloStats(0, 0, 0, 0)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_run_range, jobs):
            total = total + part
    return total
