"""One receding-horizon planning step of the attacker.

The attacker sees the current IDS placement, assumes it stays put for the
next ``T`` steps, and solves a risk-sensitive problem in which any exploit
aimed at an IDS-equipped node drops into an absorbing, zero-reward sink.
Reaching the target at the end of the horizon pays 1.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .graph import WAIT, AttackGraph
from .risk import (
    FiniteHorizonProblem,
    RiskPolicy,
    extract_policy,
    point_mass,
    solve_dual,
    value_recursion,
)


class Backend(enum.Enum):
    DUAL_LP = "dual-lp"
    GREEDY = "greedy"


@dataclass(frozen=True)
class PlannerMdp:
    """Graph nodes 0..n-1 plus the sink at index n; action 0 is WAIT."""

    transitions: np.ndarray  # (n+1, A, n+1)
    action_mask: np.ndarray  # (n+1, A)
    observed_ids: frozenset[int]

    @property
    def sink(self) -> int:
        return self.transitions.shape[0] - 1


def build_planner_mdp(g: AttackGraph, observed_ids: Iterable[int]) -> PlannerMdp:
    observed = frozenset(observed_ids)
    bad = [v for v in observed if not 0 <= v < g.node_count]
    if bad:
        raise ValueError(f"observed IDS nodes outside the graph: {sorted(bad)}")
    n, A = g.node_count, g.max_actions
    sink = n
    P = np.zeros((n + 1, A, n + 1))
    mask = np.zeros((n + 1, A), dtype=bool)
    for s in g.nodes:
        mask[s, WAIT] = True
        P[s, WAIT, s] = 1.0
        for i, e in enumerate(g.exploits[s], start=1):
            mask[s, i] = True
            if e.target in observed:
                P[s, i, sink] = 1.0
            else:
                P[s, i, e.target] += e.success_prob
                P[s, i, s] += 1.0 - e.success_prob
    mask[sink, WAIT] = True
    P[sink, WAIT, sink] = 1.0
    return PlannerMdp(P, mask, observed)


def make_rewards(g: AttackGraph, horizon: int, start_time: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """All-zero immediate rewards and the target indicator as terminal reward.

    ``start_time`` only labels the window; the rewards do not depend on it.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    immediate = np.zeros((horizon, g.node_count + 1, g.max_actions))
    terminal = np.zeros(g.node_count + 1)
    terminal[g.target_node] = 1.0
    return immediate, terminal


@dataclass
class PlanningStep:
    observed_ids: frozenset[int]
    horizon: int
    policy: RiskPolicy
    value: float
    state: int
    start_time: int = 0

    @property
    def action_distribution(self) -> np.ndarray:
        """``pi_t(s_t, .)``: what the attacker plays right now."""
        return self.policy.probs[0, self.state]


def planning_problem(
    g: AttackGraph, observed_ids: Iterable[int], state: int, horizon: int, lam: float, start_time: int = 0
) -> FiniteHorizonProblem:
    mdp = build_planner_mdp(g, observed_ids)
    immediate, terminal = make_rewards(g, horizon, start_time)
    return FiniteHorizonProblem(
        mdp.transitions,
        mdp.action_mask,
        immediate,
        terminal,
        point_mass(g.node_count + 1, state),
        risk_factor=lam,
        start_time=start_time,
    )


def plan_step(
    g: AttackGraph,
    observed_ids: Iterable[int],
    state: int,
    horizon: int,
    lam: float,
    backend: Backend = Backend.DUAL_LP,
    start_time: int = 0,
) -> PlanningStep:
    if not 0 <= state < g.node_count:
        raise ValueError(f"current state must be a graph node, got {state}")
    observed = frozenset(observed_ids)
    problem = planning_problem(g, observed, state, horizon, lam, start_time)
    if backend is Backend.GREEDY:
        table = value_recursion(problem)
        value, policy = float(table.values[0, state]), table.policy
    else:
        value, occupation = solve_dual(problem)
        policy = extract_policy(occupation)
    return PlanningStep(observed, horizon, policy, value, state, start_time)


class PlanCache:
    """Memoizes the current-step action distribution by (placement, state).

    A plan depends only on the observed placement and the current node, so
    one cache can serve every episode of a Monte-Carlo run.
    """

    def __init__(self, g: AttackGraph, horizon: int, lam: float, backend: Backend):
        self.g = g
        self.horizon = horizon
        self.lam = lam
        self.backend = backend
        self._dist: dict[tuple[frozenset[int], int], np.ndarray] = {}
        self._greedy: dict[frozenset[int], np.ndarray] = {}

    def distribution(self, observed: frozenset[int], state: int) -> np.ndarray:
        key = (observed, state)
        hit = self._dist.get(key)
        if hit is not None:
            return hit
        if self.backend is Backend.GREEDY:
            # one recursion yields the first-step policy at every node
            table = self._greedy.get(observed)
            if table is None:
                problem = planning_problem(self.g, observed, state, self.horizon, self.lam)
                table = value_recursion(problem).policy.probs[0]
                self._greedy[observed] = table
            dist = table[state]
        else:
            dist = plan_step(self.g, observed, state, self.horizon, self.lam, self.backend).action_distribution
        dist = np.array(dist, copy=True)
        dist.setflags(write=False)
        self._dist[key] = dist
        return dist

    def __len__(self):
        return len(self._dist)
