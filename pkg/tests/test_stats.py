import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from mtdeval.stats import chi2_sf, chi_squared, gamma_q, wilson_interval

from .oracles import permutation_p_value


def test_chi_squared_reference_table():
    stat, df, p = chi_squared([[10, 20], [20, 10]])
    assert stat == pytest.approx(20 / 3, abs=1e-12)
    assert df == 1
    assert p == pytest.approx(0.00983, abs=1e-4)


def test_chi_squared_independent_table():
    assert chi_squared([[5, 5], [5, 5]]) == (0.0, 1, 1.0)


def test_chi_squared_matches_scipy():
    gen = np.random.default_rng(5)
    for _ in range(30):
        t = gen.integers(1, 40, size=(2, int(gen.integers(2, 7))))
        ref = stats.chi2_contingency(t, correction=False)
        stat, df, p = chi_squared(t)
        assert stat == pytest.approx(ref.statistic, rel=1e-12)
        assert df == ref.dof
        assert p == pytest.approx(ref.pvalue, rel=1e-9, abs=1e-15)


@pytest.mark.parametrize("table", [[[0, 0], [1, 2]], [[1, 0], [2, 0]], [[-1, 2], [3, 4]], [[1.5, 2], [3, 4]], [1, 2]])
def test_chi_squared_rejects_bad_tables(table):
    with pytest.raises(ValueError):
        chi_squared(table)


@settings(max_examples=200)
@given(st.floats(0.05, 60), st.floats(0, 200))
def test_gamma_q_matches_scipy(a, x):
    assert gamma_q(a, x) == pytest.approx(special.gammaincc(a, x), rel=1e-10, abs=1e-300)


def test_gamma_q_limits():
    assert gamma_q(2.5, 0.0) == 1.0
    assert gamma_q(2.5, math.inf) == 0.0
    assert gamma_q(3.0, 1e4) == pytest.approx(0.0, abs=1e-300)
    with pytest.raises(ValueError):
        gamma_q(0.0, 1.0)
    with pytest.raises(ValueError):
        gamma_q(1.0, -1.0)


@given(st.floats(0, 80))
def test_one_degree_of_freedom_is_erfc(x):
    assert chi2_sf(x, 1) == pytest.approx(math.erfc(math.sqrt(x / 2)), rel=1e-10, abs=1e-300)


def test_chi2_sf_degenerate_df():
    assert chi2_sf(3.0, 0) == 1.0


def test_wilson_edges():
    assert wilson_interval(0, 20)[0] == 0.0
    assert wilson_interval(20, 20)[1] == 1.0
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert (0.5 - lo) == pytest.approx(hi - 0.5, abs=1e-12)


def test_wilson_against_closed_form():
    lo, hi = wilson_interval(30, 80)
    ref = stats.binomtest(30, 80).proportion_ci(0.95, method="wilson")
    assert (lo, hi) == pytest.approx((ref.low, ref.high), abs=1e-9)


def test_wilson_rejects_bad_counts():
    with pytest.raises(ValueError):
        wilson_interval(3, 2)
    with pytest.raises(ValueError):
        wilson_interval(0, 0)


def test_permutation_oracle_balanced_table():
    # the mid-p convention puts the all-tied balanced table near 0.83, not 1
    assert permutation_p_value([[5, 5], [5, 5]], 100000, 1) == pytest.approx(1.0, abs=0.01)


def test_permutation_oracle_reference_table():
    assert permutation_p_value([[10, 20], [20, 10]], 100000, 2) == pytest.approx(0.00983, abs=0.005)


def test_permutation_oracle_single_column():
    assert permutation_p_value([[4], [6]], 10, 3) == 1.0


def test_chi_squared_agrees_with_permutation_test():
    gen = np.random.default_rng(8)
    checked = 0
    while checked < 20:
        t = gen.integers(5, 16, size=(2, 2))
        if t.sum() > 60:
            continue
        _, _, p = chi_squared(t)
        assert p == pytest.approx(permutation_p_value(t, 200000, checked), abs=0.005)
        checked += 1
