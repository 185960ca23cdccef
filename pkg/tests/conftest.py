import numpy as np
import pytest

from mtdeval.graph import from_edges
from mtdeval.lp import EQ, GE, LE, Sense, StandardLp
from mtdeval.risk import FiniteHorizonProblem, point_mass

E = float(np.e)


def chain(p=0.9, candidates=(1,)):
    """0 -> 1 with success ``p``; attacker starts at 0 and targets 1."""
    return from_edges(2, [(0, 1, p)], 0, 1, candidates)


def two_state_problem(horizon=2, lam=1.0):
    """The chain as a bare problem: action 0 waits, action 1 exploits."""
    P = np.zeros((2, 2, 2))
    P[0, 0, 0] = 1.0
    P[0, 1] = [0.1, 0.9]
    P[1, 0, 1] = 1.0
    P[1, 1, 1] = 1.0
    mask = np.array([[True, True], [True, False]])
    return FiniteHorizonProblem(
        P, mask, np.zeros((horizon, 2, 2)), np.array([0.0, 1.0]), point_mass(2, 0), risk_factor=lam
    )


def random_problem(gen: np.random.Generator, max_states=8, max_actions=3, max_horizon=6, lam=None, sparse=True):
    S = int(gen.integers(1, max_states + 1))
    A = int(gen.integers(1, max_actions + 1))
    T = int(gen.integers(1, max_horizon + 1))
    mask = gen.random((S, A)) < 0.7
    mask[:, 0] = True
    P = gen.random((S, A, S))
    if sparse:
        P *= gen.random((S, A, S)) < 0.5
        P[np.arange(S), :, gen.integers(0, S, size=S)] += 0.05
    P /= P.sum(axis=2, keepdims=True)
    imm = gen.random((T, S, A)) * (gen.random((T, S, A)) < 0.6)
    term = gen.random(S)
    lam = float(gen.choice([0.5, 1.0, 2.0])) if lam is None else lam
    nu = point_mass(S, int(gen.integers(0, S)))
    return FiniteHorizonProblem(P, mask, imm, term, nu, risk_factor=lam)


def random_policy(gen: np.random.Generator, problem, deterministic=False):
    from mtdeval.risk import RiskPolicy

    T, S, A = problem.horizon, problem.n_states, problem.n_actions
    if deterministic:
        probs = np.zeros((T, S, A))
        for t in range(T):
            for s in range(S):
                probs[t, s, gen.choice(np.flatnonzero(problem.action_mask[s]))] = 1.0
    else:
        probs = gen.random((T, S, A)) * problem.action_mask
        probs[..., 0] += 1e-3
        probs /= probs.sum(axis=2, keepdims=True)
    return RiskPolicy(probs, problem.start_time)


@pytest.fixture
def gen():
    return np.random.default_rng(20240917)


def random_feasible_lp(gen):
    """``max c x`` with mixed rows built around a known feasible point, plus
    a box row so it is bounded. Data are small integers."""
    n = int(gen.integers(1, 11))
    m = int(gen.integers(1, 10))
    A = gen.integers(-4, 5, size=(m, n)).astype(float)
    x0 = gen.integers(0, 4, size=n).astype(float)
    rel = list(gen.choice([LE, EQ, GE], size=m, p=[0.5, 0.2, 0.3]))
    slack = gen.integers(0, 3, size=m)
    b = A @ x0 + np.array([s if r == LE else (-s if r == GE else 0) for r, s in zip(rel, slack)])
    A = np.vstack([A, np.ones(n)])
    b = np.append(b, x0.sum() + gen.integers(1, 6))
    rel.append(LE)
    c = gen.integers(-5, 6, size=n).astype(float)
    return StandardLp(Sense.MAXIMIZE, c, A, rel, b)


def hand_built_dual(lp: StandardLp) -> StandardLp:
    """Dual of ``max c x, A x rel b, x >= 0``: ``min b y, A^T y >= c`` with
    y >= 0 on <= rows, free on = rows and y <= 0 on >= rows."""
    lower = [0.0 if r == LE else -np.inf for r in lp.relations]
    upper = [0.0 if r == GE else np.inf for r in lp.relations]
    return StandardLp(Sense.MINIMIZE, lp.b, lp.A.T, [GE] * lp.n_vars, lp.costs, lower=lower, upper=upper)


# acceptance reporting: one line per test marked ``criterion``
_CRITERIA: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when == "teardown" or (report.when == "setup" and report.passed):
        return
    number, title = mark.args
    detail = "; ".join(str(v) for k, v in report.user_properties if k == "detail")
    _CRITERIA[number] = (title, "PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, verdict, detail = _CRITERIA[number]
        line = f"criterion {number:>2} {verdict}: {title}"
        terminalreporter.write_line(f"{line} ({detail})" if detail else line)
