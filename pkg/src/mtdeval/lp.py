"""Dense two-phase simplex with Bland's anti-cycling rule.

Small problems only (a few thousand columns at most). The tableau is a plain
numpy array and every pivot choice is deterministic, so identical input
always walks the same vertex path.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class Sense(enum.Enum):
    MINIMIZE = "min"
    MAXIMIZE = "max"


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


LE, EQ, GE = "<=", "=", ">="

PIVOT_RTOL = 1e-7
TIE_RTOL = 1e-3


@dataclass
class StandardLp:
    """``sense  c @ x  s.t.  A[i] @ x  rel[i]  b[i],  lower <= x <= upper``.

    ``lower`` entries may be ``-inf`` (free variable), ``upper`` entries
    ``+inf``. Defaults are ``x >= 0`` with no upper bound.
    """

    sense: Sense
    costs: np.ndarray
    A: np.ndarray
    relations: list[str]
    b: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        self.costs = np.asarray(self.costs, dtype=float).ravel()
        n = self.costs.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.relations = list(self.relations)
        self.lower = np.zeros(n) if self.lower is None else np.asarray(self.lower, dtype=float).ravel()
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float).ravel()
        m = self.A.shape[0]
        if self.b.size != m or len(self.relations) != m:
            raise ValueError(f"{m} constraint rows but {self.b.size} rhs and {len(self.relations)} relations")
        if self.lower.size != n or self.upper.size != n:
            raise ValueError("bounds must have one entry per variable")
        bad = [r for r in self.relations if r not in (LE, EQ, GE)]
        if bad:
            raise ValueError(f"unknown relations: {bad}")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")
        if np.any(np.isposinf(self.lower)) or np.any(np.isneginf(self.upper)):
            raise ValueError("infinite bound on the wrong side")
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b)) and np.all(np.isfinite(self.costs))):
            raise ValueError("LP data must be finite")

    @property
    def n_vars(self) -> int:
        return self.costs.size

    def violation(self, x: np.ndarray) -> float:
        """Largest constraint or bound violation of ``x``."""
        x = np.asarray(x, dtype=float)
        worst = 0.0
        if self.A.shape[0]:
            lhs = self.A @ x
            for r, v, rhs in zip(self.relations, lhs, self.b):
                if r == LE:
                    worst = max(worst, v - rhs)
                elif r == GE:
                    worst = max(worst, rhs - v)
                else:
                    worst = max(worst, abs(v - rhs))
        worst = max(worst, float(np.max(self.lower - x, initial=0.0)))
        worst = max(worst, float(np.max(x - self.upper, initial=0.0)))
        return worst


@dataclass
class LpSolution:
    status: Status
    objective_value: float = math.nan
    primal_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def _to_equality_form(lp: StandardLp):
    """Rewrite as ``min c' z  s.t.  M z (rel) rhs, z >= 0`` plus a map back to x.

    Returns (cost, M, rels, rhs, recover, shift, twins) with
    x = recover @ z + shift; ``twins`` pairs the two halves of each split
    free variable.
    """
    n = lp.n_vars
    cols = []  # (original var, sign)
    shift = np.zeros(n)
    for j in range(n):
        lo = lp.lower[j]
        if np.isfinite(lo):
            shift[j] = lo
            cols.append((j, 1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    recover = np.zeros((n, len(cols)))
    for k, (j, sgn) in enumerate(cols):
        recover[j, k] = sgn

    M = lp.A @ recover
    rhs = lp.b - lp.A @ shift
    rels = list(lp.relations)
    extra_rows = []
    extra_rhs = []
    for j in range(n):
        if np.isfinite(lp.upper[j]):
            extra_rows.append(recover[j])
            extra_rhs.append(lp.upper[j] - shift[j])
            rels.append(LE)
    if extra_rows:
        M = np.vstack([M, np.array(extra_rows)])
        rhs = np.concatenate([rhs, np.array(extra_rhs)])

    c = lp.costs @ recover
    if lp.sense is Sense.MAXIMIZE:
        c = -c
    twins = {}
    for k, (j, sgn) in enumerate(cols):
        if sgn < 0:
            twins[k - 1], twins[k] = k, k - 1
    return c, M, rels, rhs, recover, shift, twins


class _Tableau:
    """Simplex tableau over fixed original rows ``A x = b``.

    Rows 0..m-1 hold ``B^-1 [A | b]`` and row m the reduced costs with
    ``-c_B x_B`` in the last column. The tableau is rebuilt from the original
    rows whenever the basic solution drifts from them (checked every
    ``CHECK_EVERY`` pivots) and at least every ``REFACTOR_EVERY`` pivots.
    """

    CHECK_EVERY = 25
    REFACTOR_EVERY = 200
    DRIFT_TOL = 1e-11

    def __init__(self, A, b, basis, tol, twins=None):
        self.twins = twins or {}
        self.A = A
        self.b = b
        self.basis = list(basis)
        self.tol = tol
        self.pivots = 0
        self.cost = np.zeros(A.shape[1])
        self.T = np.zeros((A.shape[0] + 1, A.shape[1] + 1))
        self.fresh = False
        self.refactor()

    def refactor(self):
        m = self.A.shape[0]
        if m:
            B = self.A[:, self.basis]
            X = np.linalg.solve(B, np.column_stack([self.A, self.b]))
            X[np.abs(X) < 1e-14] = 0.0
            rhs = X[:, -1]
            rhs[(rhs < 0) & (rhs > -self.tol)] = 0.0
            self.T[:m] = X
        self._price()
        self.fresh = True

    def _price(self):
        row = np.zeros(self.T.shape[1])
        row[:-1] = self.cost
        cb = self.cost[self.basis]
        if cb.size:
            row -= cb @ self.T[:-1]
        self.T[-1] = row

    def set_objective(self, c):
        self.cost = np.asarray(c, dtype=float)
        self._price()

    def restrict(self, rows, width):
        """Keep only ``rows`` and the first ``width`` columns."""
        self.A = self.A[rows][:, :width]
        self.b = self.b[rows]
        self.basis = [self.basis[i] for i in rows]
        self.cost = self.cost[:width]
        self.T = np.zeros((len(rows) + 1, width + 1))
        self.refactor()

    def pivot(self, r, j):
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        nz = np.nonzero(col)[0]
        if nz.size:
            T[nz] -= np.outer(col[nz], T[r])
        T[:, j] = 0.0
        T[r, j] = 1.0
        self.basis[r] = j
        self.pivots += 1
        self.fresh = False
        if self.pivots % self.REFACTOR_EVERY == 0:
            self.refactor()
        elif self.pivots % self.CHECK_EVERY == 0 and self.drift() > self.DRIFT_TOL:
            self.refactor()

    def drift(self) -> float:
        if not self.basis:
            return 0.0
        resid = self.A[:, self.basis] @ self.T[:-1, -1] - self.b
        return float(np.abs(resid).max()) / max(1.0, float(np.abs(self.b).max()))

    def run(self, bounded: bool = False) -> bool:
        """Bland's rule: lowest-index improving column, lowest-index leaving
        variable among ratio ties. Returns False on an unbounded ray.

        Entries below ``PIVOT_RTOL`` times the largest positive entry of the
        column are treated as zero, and among ratio ties only pivots within
        ``TIE_RTOL`` of the largest tied pivot are eligible, which keeps Bland's choice off noise-level
        elements in degenerate vertices. Both verdicts are confirmed on a
        tableau rebuilt from the original rows before they are returned.

        A column with no usable pivot is a ray only if none of its entries is
        positive and the problem may be unbounded; otherwise it is rounding
        noise and is passed over until the next pivot.
        """
        tol = self.tol
        skipped: set[int] = set()
        while True:
            T = self.T
            entering = np.nonzero(T[-1, :-1] < -tol)[0]
            if entering.size and (self.twins or skipped):
                # a split variable never enters while its twin is basic
                basic = set(self.basis)
                entering = entering[
                    [self.twins.get(int(k)) not in basic and int(k) not in skipped for k in entering]
                ]
            if entering.size == 0:
                if not self.fresh:
                    self.refactor()
                    skipped.clear()
                    continue
                return True
            j = int(entering[0])
            col = T[:-1, j]
            scale = max(1.0, float(col.max(initial=0.0)))
            rows = np.nonzero(col > max(tol, PIVOT_RTOL * scale))[0]
            if rows.size == 0:
                if not self.fresh:
                    self.refactor()
                    skipped.clear()
                    continue
                if not bounded and float(col.max(initial=0.0)) <= 0.0:
                    return False
                skipped.add(j)
                continue
            ratios = np.maximum(T[rows, -1], 0.0) / col[rows]
            best = ratios.min()
            tied = rows[ratios <= best + tol * max(1.0, best)]
            safe = tied[col[tied] >= TIE_RTOL * col[tied].max()]
            r = int(min(safe, key=lambda i: self.basis[i]))
            self.pivot(r, j)
            skipped.clear()


def solve(lp: StandardLp, tolerance: float = 1e-9) -> LpSolution:
    """Solve ``lp`` and report the objective in its native sense."""
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    c, M, rels, rhs, recover, shift, twins = _to_equality_form(lp)
    m, nz = M.shape

    M = M.copy()
    rhs = rhs.copy()
    for i in range(m):
        if rhs[i] < 0:
            M[i] = -M[i]
            rhs[i] = -rhs[i]
            rels[i] = {LE: GE, GE: LE, EQ: EQ}[rels[i]]

    # columns: structural | slack/surplus | artificial
    n_slack = sum(r != EQ for r in rels)
    n_art = sum(r != LE for r in rels)
    width = nz + n_slack + n_art
    big = np.zeros((m, width))
    big[:, :nz] = M
    basis = [0] * m
    s_col = nz
    a_col = nz + n_slack
    for i, r in enumerate(rels):
        if r == LE:
            big[i, s_col] = 1.0
            basis[i] = s_col
            s_col += 1
        elif r == GE:
            big[i, s_col] = -1.0
            s_col += 1
            big[i, a_col] = 1.0
            basis[i] = a_col
            a_col += 1
        else:
            big[i, a_col] = 1.0
            basis[i] = a_col
            a_col += 1

    tab = _Tableau(big, rhs, basis, tolerance, twins)
    first_art = nz + n_slack

    if n_art:
        phase1 = np.zeros(width)
        phase1[first_art:] = 1.0
        tab.set_objective(phase1)
        tab.run(bounded=True)
        if -tab.T[-1, -1] > tolerance * max(1.0, float(np.abs(rhs).max(initial=0.0))):
            return LpSolution(Status.INFEASIBLE, pivots=tab.pivots)
        # drive remaining artificials out of the basis, dropping redundant rows
        keep = []
        for i in range(len(tab.basis)):
            if tab.basis[i] >= first_art:
                cand = np.nonzero(np.abs(tab.T[i, :first_art]) > tolerance)[0]
                if cand.size:
                    tab.pivot(i, int(cand[np.argmax(np.abs(tab.T[i, cand]))]))
                    keep.append(i)
            else:
                keep.append(i)
        tab.restrict(keep, first_art)
        width = first_art

    cost = np.zeros(width)
    cost[:nz] = c
    tab.set_objective(cost)
    if not tab.run():
        return LpSolution(Status.UNBOUNDED, pivots=tab.pivots)
    tab.refactor()

    z = np.zeros(width)
    z[tab.basis] = np.maximum(tab.T[:-1, -1], 0.0)
    x = recover @ z[:nz] + shift
    return LpSolution(Status.OPTIMAL, float(lp.costs @ x), x, tab.pivots)
