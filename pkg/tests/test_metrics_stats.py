import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from swarmlearn.metrics import (MetricAccumulator, SeasonMetrics, drop_missing, end_value,
                                pn_diff_normalised, total_token_ratio)
from swarmlearn.stats import at_least, compare, magnitude, vargha_delaney_a

from oracles import brute_a


def test_ratio_examples():
    assert total_token_ratio(5, 5) == 0.5
    assert total_token_ratio(10, 0) == 1.0
    assert total_token_ratio(0, 0) is None
    assert pn_diff_normalised(3, 1) == 0.5 and pn_diff_normalised(0, 0) is None
    with pytest.raises(ValueError):
        total_token_ratio(-1, 2)
    m = SeasonMetrics(0, 2, 6)
    assert m.total_token_ratio == 0.25 and m.pn_diff_normalised == -0.5


@given(st.integers(0, 10 ** 6), st.integers(0, 10 ** 6))
def test_ratio_bounds(p, n):
    r = total_token_ratio(p, n)
    d = pn_diff_normalised(p, n)
    if p + n:
        assert 0.0 <= r <= 1.0 and -1.0 <= d <= 1.0
        assert d == pytest.approx(2 * r - 1)


def test_accumulator_windows():
    acc = MetricAccumulator(run=0, epoch_length=10, season_period=20)
    for it in range(45):
        acc.add(it, (it // 20) % 2, 1 if it % 2 else 0, 1 if it % 3 == 0 else 0, 5, 100.0, 1.0)
    acc.finish(45)
    assert [e.epoch for e in acc.epochs] == [0, 1, 2, 3, 4]
    assert [s.season for s in acc.seasons] == [0, 1, 0]
    assert acc.seasons[0].start == 0 and acc.seasons[0].end == 20
    assert acc.epochs[0].p == 5 and acc.epochs[0].n == 4
    assert acc.epochs[-1].alive == 5
    assert sum(e.p for e in acc.epochs) == sum(s.p for s in acc.seasons)


def test_static_single_season():
    acc = MetricAccumulator(run=1, epoch_length=10)
    for it in range(30):
        acc.add(it, 0, 1, 0, 1, 1.0, 0.0)
    acc.finish(30)
    assert len(acc.seasons) == 1 and acc.seasons[0].p == 30


def test_end_value_drops_missing():
    assert end_value([0.1, 0.4, 0.6]) == (0.5, 0)
    assert end_value([0.1, None, 0.6]) == (0.6, 1)
    assert end_value([None, None]) == (None, 2)
    assert drop_missing([1.0, None, float("nan"), 2]) == ([1.0, 2.0], 2)


def test_vd_examples():
    assert vargha_delaney_a([1, 2, 3], [1, 2, 3]) == 0.5
    assert magnitude(0.5) == "none"
    assert vargha_delaney_a([1, 2, 3], [4, 5, 6]) == 0.0
    assert vargha_delaney_a([1, 4], [2, 3]) == 0.5 == brute_a([1, 4], [2, 3])
    with pytest.raises(ValueError):
        vargha_delaney_a([], [1.0])


def test_magnitude_levels():
    assert [magnitude(a) for a in (0.55, 0.45, 0.6, 0.66, 0.75, 0.0)] == \
        ["none", "none", "small", "medium", "large", "large"]
    assert at_least("medium", "small") and not at_least("none", "small")


samples = st.lists(st.integers(-5, 5).map(float), min_size=1, max_size=12)


@given(samples, samples)
def test_vd_matches_brute_force_and_complements(x, y):
    a = vargha_delaney_a(x, y)
    assert a == brute_a(x, y)
    assert a + vargha_delaney_a(y, x) == 1.0


@given(samples, samples)
def test_vd_monotone_invariance(x, y):
    f = lambda v: np.exp(v / 3.0) * 7 - 2  # noqa: E731
    assert vargha_delaney_a(x, y) == vargha_delaney_a([f(v) for v in x], [f(v) for v in y])


def test_compare_null_case():
    rng = np.random.default_rng(0)
    hits = sum(compare(rng.normal(0, 1, 30), rng.normal(0, 1, 30)).significant for _ in range(200))
    assert hits / 200 < 0.1


def test_compare_shifted():
    rng = np.random.default_rng(1)
    rep = compare(rng.normal(5, 1, 30), rng.normal(0, 1, 30))
    assert rep.significant and rep.direction == "higher" and rep.symbol == ">"
    assert rep.magnitude == "large"


def test_compare_skewed_goes_to_kruskal():
    rng = np.random.default_rng(2)
    skewed = rng.lognormal(0, 2, 40)
    rep = compare(skewed, rng.normal(0, 1, 40))
    assert rep.normality_a < 0.05 and rep.chosen_test == "Kruskal-Wallis"
    assert rep.variance_test is None


def test_compare_unequal_variance_goes_to_welch():
    rng = np.random.default_rng(3)
    rep = compare(rng.normal(0, 1, 40), rng.normal(0, 8, 40))
    assert rep.variance_test < 0.05 and rep.chosen_test == "Welch"


def test_compare_identical_and_constant():
    rep = compare([0.5, 0.5, 0.5], [0.5, 0.5, 0.5])
    assert rep.p_value == 1.0 and rep.direction == "equal" and rep.vd_a == 0.5
    rep = compare([1.0, 1.0, 1.0], [0.0, 0.0, 0.0])
    assert rep.significant and rep.direction == "higher"
    with pytest.raises(ValueError):
        compare([1.0, 2.0], [1.0, 2.0, 3.0])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=3, max_size=15),
       st.lists(st.floats(-100, 100), min_size=3, max_size=15))
def test_decision_tree_exclusive(x, y):
    rep = compare(x, y)
    normal = rep.normality_a >= 0.05 and rep.normality_b >= 0.05
    if not normal:
        assert rep.chosen_test == "Kruskal-Wallis"
    elif rep.variance_test >= 0.05:
        assert rep.chosen_test == "ANOVA"
    else:
        assert rep.chosen_test == "Welch"
    assert 0.0 <= rep.p_value <= 1.0
    assert rep.significant == (rep.p_value < 0.05)
    if not rep.significant:
        assert rep.direction == "equal"
