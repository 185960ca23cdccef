"""Finite-horizon risk-sensitive MDPs.

The objective is the expected exponential utility

    J(nu, policy) = E[ exp( lam * (sum_t r_t(S_t, A_t) + r_T(S_T)) ) ]

maximized over nonstationary stochastic policies. Every reward, immediate
and terminal, is multiplied by ``lam`` before any recursion or LP is built,
so the LPs below are written over the exponentiated scaled rewards only.

Three routes compute the same optimum: the backward recursion
(:func:`value_recursion`), the primal LP over value variables
(:func:`build_primal_lp`) and the dual LP over occupation measures
(:func:`build_dual_lp`), whose normalized solution is an optimal policy
(:func:`extract_policy`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lp as lpmod
from .lp import EQ, GE, LpSolution, Sense, StandardLp

ROW_TOL = 1e-9
TIE_RTOL = 1e-12
ZERO_MASS = 1e-12


class SolverError(RuntimeError):
    pass


@dataclass
class FiniteHorizonProblem:
    """An MDP with horizon ``T`` and exponential-utility rewards.

    Array shapes: ``transitions`` (S, A, S), ``action_mask`` (S, A),
    ``immediate_rewards`` (T, S, A), ``terminal_reward`` (S,),
    ``initial_distribution`` (S,). Rows of unavailable actions are ignored.
    """

    transitions: np.ndarray
    action_mask: np.ndarray
    immediate_rewards: np.ndarray
    terminal_reward: np.ndarray
    initial_distribution: np.ndarray
    risk_factor: float = 1.0
    start_time: int = 0

    def __post_init__(self):
        self.transitions = np.asarray(self.transitions, dtype=float)
        self.action_mask = np.asarray(self.action_mask, dtype=bool)
        self.immediate_rewards = np.asarray(self.immediate_rewards, dtype=float)
        self.terminal_reward = np.asarray(self.terminal_reward, dtype=float)
        self.initial_distribution = np.asarray(self.initial_distribution, dtype=float)
        S, A = self.action_mask.shape
        if self.transitions.shape != (S, A, S):
            raise ValueError(f"transitions must have shape {(S, A, S)}, got {self.transitions.shape}")
        if self.immediate_rewards.ndim != 3 or self.immediate_rewards.shape[1:] != (S, A):
            raise ValueError(f"immediate_rewards must have shape (T, {S}, {A})")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.terminal_reward.shape != (S,) or self.initial_distribution.shape != (S,):
            raise ValueError("terminal_reward and initial_distribution must have one entry per state")
        if not self.action_mask.any(axis=1).all():
            raise ValueError("every state needs at least one action")
        if self.risk_factor <= 0:
            raise ValueError("risk_factor must be positive")
        sums = self.transitions.sum(axis=2)[self.action_mask]
        if np.any(np.abs(sums - 1.0) > ROW_TOL) or np.any(self.transitions < 0):
            raise ValueError("transition rows of available actions must be distributions")
        if abs(self.initial_distribution.sum() - 1.0) > ROW_TOL:
            raise ValueError("initial distribution must sum to 1")
        if not (np.all(np.isfinite(self.immediate_rewards)) and np.all(np.isfinite(self.terminal_reward))):
            raise ValueError("rewards must be finite")

    @property
    def horizon(self) -> int:
        return self.immediate_rewards.shape[0]

    @property
    def n_states(self) -> int:
        return self.action_mask.shape[0]

    @property
    def n_actions(self) -> int:
        return self.action_mask.shape[1]

    def exp_rewards(self) -> tuple[np.ndarray, np.ndarray]:
        """``exp(lam * r_t)`` over (T, S, A) and ``exp(lam * r_T)`` over S."""
        lam = self.risk_factor
        return np.exp(lam * self.immediate_rewards), np.exp(lam * self.terminal_reward)

    def terminal_coefficients(self) -> np.ndarray:
        """``b[s, a] = e^{r_{T-1}(s,a)} * sum_s' P(s'|s,a) e^{r_T(s')}``."""
        imm, term = self.exp_rewards()
        return imm[-1] * (self.transitions @ term)


def point_mass(n_states: int, state: int) -> np.ndarray:
    nu = np.zeros(n_states)
    nu[state] = 1.0
    return nu


@dataclass
class RiskPolicy:
    """``probs[k, s, a]`` is the probability of action ``a`` at state ``s``
    at time ``start_time + k``."""

    probs: np.ndarray
    start_time: int = 0

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)

    @property
    def horizon(self) -> int:
        return self.probs.shape[0]

    def at(self, t: int, state: int) -> np.ndarray:
        return self.probs[t - self.start_time, state]

    def check(self, action_mask: np.ndarray) -> None:
        if self.probs.shape[1:] != action_mask.shape:
            raise ValueError("policy shape does not match the problem")
        if np.any(self.probs[:, ~action_mask] > 0):
            raise ValueError("policy puts mass on unavailable actions")
        if np.any(np.abs(self.probs.sum(axis=2) - 1.0) > ROW_TOL):
            raise ValueError("policy rows must sum to 1")


@dataclass
class OccupationMeasure:
    y: np.ndarray
    action_mask: np.ndarray
    start_time: int = 0


@dataclass
class ValueTable:
    values: np.ndarray
    policy: RiskPolicy

    def value(self, distribution: np.ndarray) -> float:
        return float(distribution @ self.values[0])


def greedy_choice(q: np.ndarray, mask: np.ndarray, refine=()) -> np.ndarray:
    """Index of the best available action per row.

    Near-ties are narrowed by each array in ``refine`` in turn (same shape as
    ``q``); whatever is still tied goes to the lowest index.
    """
    near = np.asarray(mask, dtype=bool)
    for key in (q, *refine):
        key = np.where(near, key, -np.inf)
        best = key.max(axis=-1, keepdims=True)
        near = near & (key >= best - TIE_RTOL * np.abs(best))
        if not np.any(near.sum(axis=-1) > 1):
            break
    return np.argmax(near, axis=-1)


def value_recursion(problem: FiniteHorizonProblem) -> ValueTable:
    """Backward recursion ``u_t(s) = max_a e^{r_t(s,a)} sum P(s'|s,a) u_{t+1}(s')``.

    ``values[k]`` is ``u_{t0+k}``; the returned policy is the greedy
    deterministic one. Without discounting, late success is worth as much
    as early success, and in floating point the two often tie exactly. Such
    ties are re-ranked against the continuation values of shorter windows
    (``u_{t+2}``, ``u_{t+3}``, ..., terminal), which favours actions that
    win sooner. Only exact-to-tolerance ties fall through to the lowest index.
    """
    imm, term = problem.exp_rewards()
    T, S, A = problem.horizon, problem.n_states, problem.n_actions
    P = problem.transitions
    values = np.empty((T, S))
    probs = np.zeros((T, S, A))
    rows = np.arange(S)
    for k in range(T - 1, -1, -1):
        later = [values[j] for j in range(k + 1, T)] + [term]
        q = imm[k] * (P @ later[0])
        refine = (imm[k] * (P @ u) for u in later[1:])
        choice = greedy_choice(q, problem.action_mask, refine)
        values[k] = q[rows, choice]
        probs[k, rows, choice] = 1.0
    return ValueTable(values, RiskPolicy(probs, problem.start_time))


def evaluate_policy(problem: FiniteHorizonProblem, policy: RiskPolicy) -> float:
    """Exact expected exponential utility of ``policy`` from the initial distribution."""
    if policy.probs.shape != (problem.horizon, problem.n_states, problem.n_actions):
        raise ValueError(
            f"policy shape {policy.probs.shape} does not match problem "
            f"{(problem.horizon, problem.n_states, problem.n_actions)}"
        )
    imm, term = problem.exp_rewards()
    v = term
    for k in range(problem.horizon - 1, -1, -1):
        q = imm[k] * (problem.transitions @ v)
        v = np.einsum("sa,sa->s", policy.probs[k], np.where(problem.action_mask, q, 0.0))
    return float(problem.initial_distribution @ v)


# --------------------------------------------------------------------------
# Linear programs


def build_primal_lp(problem: FiniteHorizonProblem) -> StandardLp:
    """Minimize ``sum_s nu(s) u_0(s)`` over the value variables.

    Variable ``k * S + s`` is ``u_{t0+k}(s)``. Rows, in order: for each
    available (s, a) the terminal row ``u_{T-1}(s) >= b[s,a]``; then for
    ``k = 0..T-2`` and each (s, a) the row
    ``u_k(s) - e^{r_k(s,a)} sum_s' P(s'|s,a) u_{k+1}(s') >= 0``.

    The rows already force ``u > 0`` (every ``b`` and every exponentiated
    reward is positive), so the variables carry the default ``u >= 0``
    bound; this leaves the feasible set unchanged and keeps the simplex
    from splitting each variable into two.
    """
    T, S = problem.horizon, problem.n_states
    imm, _ = problem.exp_rewards()
    b = problem.terminal_coefficients()
    pairs = list(zip(*np.nonzero(problem.action_mask)))
    n = T * S
    rows = []
    rhs = []
    for s, a in pairs:
        row = np.zeros(n)
        row[(T - 1) * S + s] = 1.0
        rows.append(row)
        rhs.append(b[s, a])
    for k in range(T - 1):
        for s, a in pairs:
            row = np.zeros(n)
            row[(k + 1) * S : (k + 2) * S] = -imm[k, s, a] * problem.transitions[s, a]
            row[k * S + s] += 1.0
            rows.append(row)
            rhs.append(0.0)
    costs = np.zeros(n)
    costs[:S] = problem.initial_distribution
    return StandardLp(
        Sense.MINIMIZE,
        costs,
        np.array(rows).reshape(len(rows), n),
        [GE] * len(rows),
        rhs,
    )


def dual_layout(problem: FiniteHorizonProblem) -> np.ndarray:
    """Column index of ``y(t0+k, s, a)`` in the dual LP (-1 where unavailable)."""
    T, S, A = problem.horizon, problem.n_states, problem.n_actions
    layout = np.full((T, S, A), -1, dtype=int)
    mask = np.broadcast_to(problem.action_mask, (T, S, A))
    layout[mask] = np.arange(int(mask.sum()))
    return layout


def build_dual_lp(problem: FiniteHorizonProblem) -> StandardLp:
    """Maximize ``sum b[s,a] y(T-1, s, a)`` over occupation measures.

    Rows: ``sum_a y(0, s', a) = nu(s')`` for every s', then for
    ``k = 1..T-1`` the flow rows
    ``sum_a y(k, s', a) - sum_{s,a} e^{r_{k-1}(s,a)} P(s'|s,a) y(k-1, s, a) = 0``.
    """
    T, S = problem.horizon, problem.n_states
    imm, _ = problem.exp_rewards()
    b = problem.terminal_coefficients()
    layout = dual_layout(problem)
    n = int(problem.action_mask.sum()) * T
    A_eq = np.zeros((T * S, n))
    rhs = np.zeros(T * S)
    pairs = list(zip(*np.nonzero(problem.action_mask)))
    for k in range(T):
        for s, a in pairs:
            A_eq[k * S + s, layout[k, s, a]] += 1.0
    rhs[:S] = problem.initial_distribution
    for k in range(1, T):
        for s, a in pairs:
            col = layout[k - 1, s, a]
            A_eq[k * S : (k + 1) * S, col] -= imm[k - 1, s, a] * problem.transitions[s, a]
    costs = np.zeros(n)
    for s, a in pairs:
        costs[layout[T - 1, s, a]] = b[s, a]
    return StandardLp(Sense.MAXIMIZE, costs, A_eq, [EQ] * (T * S), rhs)


def _checked(sol: LpSolution, which: str) -> LpSolution:
    if not sol.optimal:
        raise SolverError(f"{which} LP returned {sol.status.value}")
    return sol


def solve_primal(problem: FiniteHorizonProblem, tolerance: float = 1e-9) -> tuple[float, np.ndarray]:
    """Optimal value and the (T, S) value table from the primal LP."""
    sol = _checked(lpmod.solve(build_primal_lp(problem), tolerance), "primal")
    return sol.objective_value, sol.primal_values.reshape(problem.horizon, problem.n_states)


def solve_dual(problem: FiniteHorizonProblem, tolerance: float = 1e-9) -> tuple[float, OccupationMeasure]:
    sol = _checked(lpmod.solve(build_dual_lp(problem), tolerance), "dual")
    layout = dual_layout(problem)
    y = np.where(layout >= 0, sol.primal_values[np.maximum(layout, 0)], 0.0)
    return sol.objective_value, OccupationMeasure(y, problem.action_mask.copy(), problem.start_time)


def extract_policy(occupation: OccupationMeasure) -> RiskPolicy:
    """Normalize occupation over actions; unreachable (t, s) get a uniform policy."""
    mask = occupation.action_mask
    y = np.where(mask, np.maximum(occupation.y, 0.0), 0.0)
    total = y.sum(axis=2, keepdims=True)
    uniform = mask / mask.sum(axis=1, keepdims=True)
    safe = np.where(total > ZERO_MASS, total, 1.0)
    probs = np.where(total > ZERO_MASS, y / safe, uniform[None, :, :])
    return RiskPolicy(probs, occupation.start_time)
