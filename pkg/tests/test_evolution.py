import statistics

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import chisquare

from swarmlearn.evolution import broadcast_kernel, relative_fitness, select_roulette, selection_weights

finite = st.floats(-1e4, 1e4, allow_nan=False)


def test_worked_example():
    assert relative_fitness(30.0, [10.0, 20.0, 30.0]) == pytest.approx(10 / statistics.pstdev([10, 20, 30]))
    assert relative_fitness(30.0, [10.0, 20.0, 30.0]) == pytest.approx(1.2247, abs=1e-4)


def test_mean_member_and_singleton():
    assert relative_fitness(20.0, [10.0, 20.0, 30.0]) == 0.0
    assert relative_fitness(5.0, [5.0]) == 0.0
    assert relative_fitness(5.0, [5.0, 5.0, 5.0]) == 0.0
    with pytest.raises(ValueError):
        relative_fitness(1.0, [])


@given(st.lists(finite, min_size=1, max_size=20))
def test_zscore_property(deltas):
    fs = [relative_fitness(d, deltas) for d in deltas]
    sd = statistics.pstdev(deltas)
    if sd > 1e-6 * (abs(statistics.fmean(deltas)) + 1):
        assert abs(statistics.fmean(fs)) < 1e-9
        assert abs(statistics.pstdev(fs) - 1.0) < 1e-9
    elif len(set(deltas)) == 1:
        assert all(f == 0.0 for f in fs)


@given(st.lists(finite, min_size=1, max_size=20), st.floats(-1e3, 1e3))
def test_shift_invariance(deltas, c):
    for d in deltas:
        a = relative_fitness(d, deltas)
        b = relative_fitness(d + c, [x + c for x in deltas])
        assert a == pytest.approx(b, abs=1e-6)


def test_selection_weights():
    assert np.allclose(selection_weights([-1.0, 1.0]), [1e-6, 2.0 + 1e-6])
    assert np.array_equal(selection_weights([0.3, 0.3, 0.3]), [1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        selection_weights([])


def test_roulette_ratio_one_to_three():
    rng = np.random.default_rng(11)
    # shifted weights {eps, 2 + eps}: add the third entry so the shift gives {1, 3}
    fit = [0.0, 2.0, -1.0]
    w = selection_weights(fit)
    picks = np.bincount([select_roulette(fit, rng) for _ in range(100_000)], minlength=3)
    expected = w / w.sum() * picks.sum()
    assert chisquare(picks, expected).pvalue > 0.01
    assert picks[0] / picks[1] == pytest.approx(1 / 3, rel=0.05)


def test_roulette_uniform_when_equal():
    rng = np.random.default_rng(12)
    picks = np.bincount([select_roulette([0.7] * 4, rng) for _ in range(100_000)], minlength=4)
    assert np.all(np.abs(picks / 100_000 - 0.25) < 0.01)


def _broadcast(pos, live, delta, gid, charge_dup=False, refresh=False, cap=8,
               list_ids=None, list_fit=None, list_len=None):
    n = len(pos)
    pos = np.asarray(pos, dtype=float)
    list_ids = np.zeros((n, cap), dtype=np.int64) if list_ids is None else list_ids
    list_fit = np.zeros((n, cap)) if list_fit is None else list_fit
    list_len = np.zeros(n, dtype=np.int64) if list_len is None else list_len
    fit, tx, rx = np.zeros(n), np.zeros(n), np.zeros(n, dtype=np.int64)
    stats = np.zeros(3, dtype=np.int64)
    broadcast_kernel(pos, np.asarray(live), np.asarray(delta, dtype=float), np.asarray(gid, dtype=np.int64),
                     128.0, 0.01379, 0.000614, charge_dup, refresh, list_ids, list_fit, list_len,
                     fit, tx, rx, stats)
    return dict(ids=list_ids, fit=list_fit, len=list_len, f=fit, tx=tx, rx=rx, stats=stats)


def test_out_of_range_no_delivery():
    r = _broadcast([(0, 0), (200, 0)], [True, True], [0, 0], [1, 2])
    assert r["stats"][0] == 0 and r["len"].sum() == 0 and r["tx"].sum() == 0


def test_pair_in_range_costs():
    r = _broadcast([(0, 0), (100, 0)], [True, True], [5.0, 1.0], [1, 2])
    assert list(r["len"]) == [1, 1]
    assert r["ids"][0, 0] == 2 and r["ids"][1, 0] == 1
    assert np.allclose(r["tx"], 0.01379 + 0.000614 * 100 ** 2)
    assert list(r["rx"]) == [1, 1]
    assert r["f"][0] == pytest.approx(1.0) and r["f"][1] == pytest.approx(-1.0)


def test_dead_robots_receive_but_do_not_send():
    r = _broadcast([(0, 0), (50, 0)], [True, False], [3.0, 0.0], [1, 2])
    assert list(r["len"]) == [0, 1]
    # the sender is alone among live robots, so its fitness is 0
    assert r["fit"][1, 0] == 0.0


def test_add_if_unique_and_duplicate_charging():
    ids = np.zeros((2, 8), dtype=np.int64)
    fit = np.zeros((2, 8))
    ln = np.zeros(2, dtype=np.int64)
    kw = dict(list_ids=ids, list_fit=fit, list_len=ln)
    _broadcast([(0, 0), (10, 0)], [True, True], [1.0, 0.0], [7, 8], **kw)
    r = _broadcast([(0, 0), (10, 0)], [True, True], [0.0, 1.0], [7, 8], **kw)
    assert list(ln) == [1, 1]
    assert r["tx"].sum() == 0.0 and r["stats"][1] == 0
    assert fit[1, 0] == pytest.approx(1.0)  # first value kept
    r = _broadcast([(0, 0), (10, 0)], [True, True], [0.0, 1.0], [7, 8], charge_dup=True, refresh=True, **kw)
    assert r["tx"][0] > 0 and fit[1, 0] == pytest.approx(-1.0)


def test_capacity_overflow_counted():
    pos = [(0, 0)] + [(i + 1.0, 0) for i in range(5)]
    r = _broadcast(pos, [True] * 6, np.arange(6.0), np.arange(6), cap=2)
    assert r["len"].max() == 2 and r["stats"][2] > 0


def test_synchronous_fitness():
    # identical geometry, robot order reversed: each robot sees the same fitness
    pos = [(0, 0), (60, 0), (120, 0)]
    a = _broadcast(pos, [True] * 3, [1.0, 5.0, 2.0], [0, 1, 2])
    b = _broadcast(pos[::-1], [True] * 3, [2.0, 5.0, 1.0], [2, 1, 0])
    assert np.allclose(a["f"], b["f"][::-1])
