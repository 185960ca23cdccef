import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtdeval.graph import WAIT, from_edges, generate_synthetic, hop_distance
from mtdeval.planner import Backend, PlanCache, build_planner_mdp, make_rewards, plan_step

from .conftest import E, chain

CHAIN_VALUE = 0.99 * E + 0.01


def test_sink_rewrite():
    mdp = build_planner_mdp(chain(), {1})
    assert mdp.sink == 2
    assert mdp.transitions[0, 1].tolist() == [0.0, 0.0, 1.0]
    assert mdp.transitions[1, WAIT].tolist() == [0.0, 1.0, 0.0]  # WAIT on an IDS node is not redirected
    assert mdp.transitions[2, WAIT].tolist() == [0.0, 0.0, 1.0]


def test_no_ids_keeps_graph():
    mdp = build_planner_mdp(chain(), set())
    np.testing.assert_allclose(mdp.transitions[0, 1], [0.1, 0.9, 0.0], rtol=0, atol=1e-15)
    assert mdp.transitions[0, WAIT].tolist() == [1.0, 0.0, 0.0]
    np.testing.assert_allclose(mdp.transitions.sum(axis=2)[mdp.action_mask], 1.0)
    assert not mdp.action_mask[2, 1]


def test_observed_ids_must_be_nodes():
    with pytest.raises(ValueError):
        build_planner_mdp(chain(), {5})


def test_rewards():
    g = chain()
    imm, term = make_rewards(g, 3)
    assert imm.shape == (3, 3, 2) and not imm.any()
    assert term.tolist() == [0.0, 1.0, 0.0]
    with pytest.raises(ValueError):
        make_rewards(g, 0)


@pytest.mark.parametrize("backend", list(Backend))
def test_chain_without_ids(backend):
    step = plan_step(chain(), set(), 0, 2, 1.0, backend)
    assert step.value == pytest.approx(CHAIN_VALUE, abs=1e-9)
    assert step.action_distribution.tolist() == [0.0, 1.0]


@pytest.mark.parametrize("backend", list(Backend))
def test_chain_with_ids_waits(backend):
    step = plan_step(chain(), {1}, 0, 2, 1.0, backend)
    assert step.value == pytest.approx(1.0, abs=1e-12)
    assert step.action_distribution.tolist() == [1.0, 0.0]


@pytest.mark.parametrize("backend", list(Backend))
def test_at_target(backend):
    step = plan_step(chain(), set(), 1, 4, 1.5, backend)
    assert step.value == pytest.approx(np.exp(1.5))


def test_state_must_be_node():
    with pytest.raises(ValueError):
        plan_step(chain(), set(), 2, 2, 1.0)


@pytest.mark.parametrize("backend", list(Backend))
def test_long_horizon_still_moves(backend):
    g = from_edges(3, [(0, 1, 0.9), (1, 2, 0.9)], 0, 2)
    for s in (0, 1):
        assert plan_step(g, set(), s, 19, 1.0, backend).action_distribution[WAIT] == 0.0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.sets(st.integers(0, 7), max_size=3), st.integers(0, 7), st.integers(1, 5))
def test_backends_agree_and_values_are_antitone(seed, observed, extra, horizon):
    g = generate_synthetic(8, 2, 0.8, 4, seed)
    s = g.initial_node
    dual = plan_step(g, observed, s, horizon, 1.0, Backend.DUAL_LP)
    greedy = plan_step(g, observed, s, horizon, 1.0, Backend.GREEDY)
    assert dual.value == pytest.approx(greedy.value, abs=1e-6)
    more = plan_step(g, observed | {extra}, s, horizon, 1.0, Backend.GREEDY)
    assert more.value <= greedy.value + 1e-12
    d = hop_distance(g, s, g.target_node)
    if d is not None and d > horizon:
        assert greedy.value == 1.0


def test_plan_cache_matches_plan_step():
    g = generate_synthetic(10, 2, 0.9, 5, seed=4)
    for backend in Backend:
        cache = PlanCache(g, 6, 1.0, backend)
        for s in g.nodes:
            d = cache.distribution(frozenset({g.ids_candidates[0]}), s)
            ref = plan_step(g, {g.ids_candidates[0]}, s, 6, 1.0, backend).action_distribution
            np.testing.assert_array_equal(d, ref)
        assert len(cache) == g.node_count
