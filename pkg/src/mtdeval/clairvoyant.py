"""Clairvoyant baseline on the time-augmented MDP, and dynamic regret.

States are ``(s, t)`` for ``t = 0..T_max`` plus one absorbing sink. Every
action advances time, so each row has at most two successors and backward
induction over ``t`` is exact. Transition precedence, highest first:

* ``t == T_max``: every action goes to the sink;
* ``s == s_f``: every action goes to the sink (the reward was collected);
* an exploit whose target is in ``S_IDS,t+1`` goes to the sink;
* otherwise an exploit moves to ``(s', t+1)`` with ``p`` and to ``(s, t+1)``
  with ``1 - p``; WAIT moves to ``(s, t+1)``.

Reward is ``1`` on every ``(s_f, t)`` and ``0`` elsewhere, so it is
collected at most once and ``exp`` utility is ``1 + (e^lam - 1) * P(win)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .defense import IdsSchedule
from .graph import WAIT, AttackGraph
from .planner import Backend, PlanCache
from .risk import greedy_choice


@dataclass(frozen=True)
class AugmentedMdp:
    """Compact time-augmented MDP.

    ``succ[t, s, a]`` holds two flat successor indices and ``prob[t, s, a]``
    their probabilities; flat index of ``(s, t)`` is ``t * n + s`` and the
    sink is ``n * (t_max + 1)``. Unused slots point at the sink with
    probability 0.
    """

    node_count: int
    t_max: int
    initial_node: int
    target_node: int
    action_mask: np.ndarray  # (n, A)
    succ: np.ndarray  # (t_max+1, n, A, 2) int
    prob: np.ndarray  # (t_max+1, n, A, 2)

    @property
    def sink(self) -> int:
        return self.node_count * (self.t_max + 1)

    @property
    def n_states(self) -> int:
        return self.sink + 1

    @property
    def n_actions(self) -> int:
        return self.action_mask.shape[1]

    def index(self, state: int, t: int) -> int:
        return t * self.node_count + state

    def rewards(self) -> np.ndarray:
        """``r(s, t)`` over the flat state space (sink last)."""
        r = np.zeros(self.n_states)
        r[self.target_node : self.sink : self.node_count] = 1.0
        return r

    def transition_row(self, state: int, t: int, action: int) -> np.ndarray:
        """Dense distribution over flat successors; for inspection and tests."""
        if not self.action_mask[state, action]:
            raise ValueError(f"action {action} unavailable at node {state}")
        row = np.zeros(self.n_states)
        np.add.at(row, self.succ[t, state, action], self.prob[t, state, action])
        return row


def build_augmented(g: AttackGraph, schedule: IdsSchedule, t_max: int) -> AugmentedMdp:
    if len(schedule) < t_max + 1:
        raise ValueError(f"schedule covers {len(schedule)} steps, need {t_max + 1}")
    n, A = g.node_count, g.max_actions
    sink = n * (t_max + 1)
    mask = np.zeros((n, A), dtype=bool)
    succ = np.full((t_max + 1, n, A, 2), sink, dtype=np.int64)
    prob = np.zeros((t_max + 1, n, A, 2))
    for s in g.nodes:
        mask[s, : len(g.exploits[s]) + 1] = True
    prob[..., 0] = np.where(mask, 1.0, 0.0)  # default: Dirac at sink
    for t in range(t_max):
        blocked = schedule[t + 1]
        for s in g.nodes:
            if s == g.target_node:
                continue
            stay = (t + 1) * n + s
            succ[t, s, WAIT] = (stay, sink)
            prob[t, s, WAIT] = (1.0, 0.0)
            for i, e in enumerate(g.exploits[s], start=1):
                if e.target in blocked:
                    continue
                succ[t, s, i] = ((t + 1) * n + e.target, stay)
                prob[t, s, i] = (e.success_prob, 1.0 - e.success_prob)
    return AugmentedMdp(n, t_max, g.initial_node, g.target_node, mask, succ, prob)


def _layers(aug: AugmentedMdp):
    n = aug.node_count
    return [(t, slice(t * n, (t + 1) * n)) for t in range(aug.t_max, -1, -1)]


def _expected(aug: AugmentedMdp, t: int, v: np.ndarray) -> np.ndarray:
    """``sum_s' P(s'|(s,t),a) v(s')`` for every node and action at time t."""
    return (aug.prob[t] * v[aug.succ[t]]).sum(axis=-1)


@dataclass(frozen=True)
class ClairvoyantSolution:
    values: np.ndarray  # flat, sink last
    policy: np.ndarray  # (t_max+1, n, A) one-hot

    def value(self, aug: AugmentedMdp, state: int | None = None) -> float:
        s = aug.initial_node if state is None else state
        return float(self.values[aug.index(s, 0)])


def solve_optimal(aug: AugmentedMdp, lam: float) -> ClairvoyantSolution:
    """Backward induction; greedy policy with lowest-index ties."""
    gain = np.exp(lam * aug.rewards())
    v = np.ones(aug.n_states)
    policy = np.zeros((aug.t_max + 1, aug.node_count, aug.n_actions))
    rows = np.arange(aug.node_count)
    for t, layer in _layers(aug):
        q = _expected(aug, t, v)
        choice = greedy_choice(q, aug.action_mask)
        policy[t, rows, choice] = 1.0
        v[layer] = gain[layer] * q[rows, choice]
    return ClairvoyantSolution(v, policy)


def _check_policy(aug: AugmentedMdp, policy: np.ndarray) -> np.ndarray:
    policy = np.asarray(policy, dtype=float)
    if policy.shape != (aug.t_max + 1, aug.node_count, aug.n_actions):
        raise ValueError(
            f"policy shape {policy.shape} does not match ({aug.t_max + 1}, {aug.node_count}, {aug.n_actions})"
        )
    return policy


def evaluate(aug: AugmentedMdp, policy: np.ndarray, lam: float) -> np.ndarray:
    """Exact ``J((s,t), pi)`` for every flat state under a time-indexed policy."""
    policy = _check_policy(aug, policy)
    gain = np.exp(lam * aug.rewards())
    v = np.ones(aug.n_states)
    for t, layer in _layers(aug):
        v[layer] = gain[layer] * (policy[t] * _expected(aug, t, v)).sum(axis=-1)
    return v


def success_probability(aug: AugmentedMdp, policy: np.ndarray) -> np.ndarray:
    """Probability of reaching some ``(s_f, t)`` before the sink, per flat state."""
    policy = _check_policy(aug, policy)
    win = aug.rewards()
    v = np.zeros(aug.n_states)
    for t, layer in _layers(aug):
        reach = (policy[t] * _expected(aug, t, v)).sum(axis=-1)
        v[layer] = np.where(win[layer] == 1.0, 1.0, reach)
    return v


def induced_online_policy(
    g: AttackGraph,
    schedule: IdsSchedule,
    horizon: int,
    lam: float,
    h: int,
    backend: Backend = Backend.DUAL_LP,
    plans: PlanCache | None = None,
) -> np.ndarray:
    """``Pi^0`` as a ``(h+1, n, A)`` array: row ``t`` is the receding-horizon
    first-step policy against ``S_IDS,t``, planned from every node."""
    if len(schedule) < h + 1:
        raise ValueError(f"schedule covers {len(schedule)} steps, need {h + 1}")
    if plans is None:
        plans = PlanCache(g, horizon, lam, backend)
    out = np.zeros((h + 1, g.node_count, g.max_actions))
    for t in range(h + 1):
        for s in g.nodes:
            out[t, s] = plans.distribution(schedule[t], s)
    return out


@dataclass(frozen=True)
class RegretReport:
    online_value: float
    optimal_value: float
    h: int
    online_success: float
    optimal_success: float

    @property
    def regret(self) -> float:
        return abs(self.online_value - self.optimal_value)


def dynamic_regret(
    g: AttackGraph,
    schedule: IdsSchedule,
    horizon: int,
    lam: float,
    h: int,
    backend: Backend = Backend.DUAL_LP,
    plans: PlanCache | None = None,
) -> RegretReport:
    """Compare the receding-horizon attacker with the clairvoyant optimum.

    Both are evaluated on the augmented MDP built over ``S_IDS,0..h``, so the
    clairvoyant policy optimizes over exactly the window the online policy
    is scored on.
    """
    aug = build_augmented(g, schedule, h)
    best = solve_optimal(aug, lam)
    online = induced_online_policy(g, schedule, horizon, lam, h, backend, plans)
    start = aug.index(g.initial_node, 0)
    return RegretReport(
        online_value=float(evaluate(aug, online, lam)[start]),
        optimal_value=float(best.values[start]),
        h=h,
        online_success=float(success_probability(aug, online)[start]),
        optimal_success=float(success_probability(aug, best.policy)[start]),
    )
