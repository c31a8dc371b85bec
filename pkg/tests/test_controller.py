import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from swarmlearn.controller import Genome, RnnSpec, apply_variation, forward, random_genome

SPEC = RnnSpec()


def reference_elman(weights, inputs_seq, hidden=16, n_in=16):
    """Straightforward matrix form of the recurrence."""
    w = np.asarray(weights)
    k = 0
    w_ih = w[k:k + hidden * n_in].reshape(hidden, n_in); k += hidden * n_in
    w_hh = w[k:k + hidden * hidden].reshape(hidden, hidden); k += hidden * hidden
    b_h = w[k:k + hidden]; k += hidden
    w_ho = w[k:k + 2 * hidden].reshape(2, hidden); k += 2 * hidden
    b_o = w[k:k + 2]
    ctx = np.zeros(hidden)
    out = []
    for x in inputs_seq:
        ctx = np.tanh(w_ih @ x + w_hh @ ctx + b_h)
        o = w_ho @ ctx + b_o
        out.append((1 / (1 + np.exp(-o[0])), np.tanh(o[1])))
    return out


def test_weight_count():
    assert SPEC.n_weights == 16 * 16 + 16 * 16 + 16 + 2 * 16 + 2


def test_zero_weights():
    g = Genome(np.zeros(SPEC.n_weights))
    vt, vr, ctx = forward(g, np.zeros(16), np.random.default_rng(0).uniform(-1, 1, 16))
    assert vt == 0.5 and vr == 0.0
    assert np.all(ctx == 0.0)


def test_biases_only():
    w = np.zeros(SPEC.n_weights)
    w[-2:] = [2.0, -0.5]
    g = Genome(w)
    a = forward(g, np.zeros(16), np.zeros(16))
    b = forward(g, np.zeros(16), np.ones(16))
    assert a[0] == pytest.approx(1 / (1 + np.exp(-2.0)))
    assert a[1] == pytest.approx(np.tanh(-0.5))
    assert a[:2] == b[:2]


def test_matches_reference_sequence():
    rng = np.random.default_rng(7)
    g = random_genome(SPEC, rng, "Baseline")
    xs = rng.uniform(-1, 1, (50, 16))
    ref = reference_elman(g.weights, xs)
    ctx = np.zeros(16)
    for x, (rv, rr) in zip(xs, ref):
        vt, vr, ctx = forward(g, ctx, x)
        assert abs(vt - rv) < 1e-12 and abs(vr - rr) < 1e-12


def test_forward_is_pure():
    rng = np.random.default_rng(1)
    g = random_genome(SPEC, rng, "Baseline")
    ctx = rng.uniform(-1, 1, 16)
    x = rng.uniform(-1, 1, 16)
    before = ctx.copy(), x.copy(), g.weights.copy()
    r1 = forward(g, ctx, x)
    r2 = forward(g, ctx, x)
    assert np.array_equal(ctx, before[0]) and np.array_equal(x, before[1])
    assert np.array_equal(g.weights, before[2])
    assert r1[:2] == r2[:2]


def test_forward_rejects_bad_shape():
    with pytest.raises(ValueError):
        forward(Genome(np.zeros(SPEC.n_weights)), np.zeros(16), np.zeros(15))


def test_random_genome_per_variant():
    rng = np.random.default_rng(0)
    base = random_genome(SPEC, rng, "Baseline")
    assert base.lr is None and base.ls is None and not base.has_multipliers
    il = random_genome(SPEC, rng, "IL")
    assert il.lr is None and -1 <= il.ls <= 1
    evo = random_genome(SPEC, rng, "EVO")
    assert evo.has_multipliers and evo.lr is None
    both = random_genome(SPEC, rng, "EVO+IL")
    assert both.lr == 1.02 and both.has_multipliers
    assert np.all(np.abs(both.weights) <= 1.0)


def test_mutation_statistics():
    rng = np.random.default_rng(3)
    g = Genome(np.zeros(SPEC.n_weights))
    deltas = np.array([apply_variation(g, 0.1, rng).weights[5] for _ in range(10_000)])
    assert abs(deltas.mean()) < 0.005
    assert deltas.std() == pytest.approx(0.1, rel=0.05)


def test_tiny_sigma_keeps_parent():
    rng = np.random.default_rng(0)
    g = random_genome(SPEC, rng, "EVO+IL").with_multiplier(0, 0.3)
    child = apply_variation(g, 1e-300, rng)
    assert np.array_equal(child.weights, g.weights)
    assert child.lr == g.lr and child.ls == g.ls and child.init_multipliers == g.init_multipliers


def test_variation_leaves_parent_untouched():
    rng = np.random.default_rng(0)
    g = random_genome(SPEC, rng, "EVO+IL").with_multiplier(1, -0.2)
    snap = (g.weights.copy(), g.lr, g.ls, dict(g.init_multipliers))
    apply_variation(g, 0.5, rng)
    assert np.array_equal(g.weights, snap[0]) and (g.lr, g.ls, g.init_multipliers) == snap[1:]
    with pytest.raises(ValueError):
        g.weights[0] = 1.0


def test_sigma_must_be_positive():
    with pytest.raises(ValueError):
        apply_variation(Genome(np.zeros(3)), 0.0, np.random.default_rng(0))


@settings(max_examples=60)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2 ** 31))
def test_clamps_after_variation(lr, ls, m, seed):
    g = Genome(np.zeros(4), lr=lr, ls=ls, init_multipliers={0: max(-1, min(1, m))}, has_multipliers=True)
    child = apply_variation(g, 2.0, np.random.default_rng(seed))
    assert 1.0 <= child.lr <= 1.5
    assert -1.0 <= child.ls <= 1.0
    assert all(-1.0 <= v <= 1.0 for v in child.init_multipliers.values())


def test_lr_clamped_to_bounds():
    rng = np.random.default_rng(0)
    g = Genome(np.zeros(4), lr=1.5, ls=0.0)
    seen = {apply_variation(g, 1.0, rng).lr for _ in range(50)}
    assert 1.5 in seen and 1.0 in seen


def test_serialisation_round_trip():
    rng = np.random.default_rng(5)
    g = random_genome(SPEC, rng, "EVO+IL", gid=17).with_multiplier(1, 0.25).with_multiplier(0, -0.5)
    back = Genome.from_bytes(g.to_bytes(SPEC), SPEC)
    assert back.same_as(g) and back.gid == 17
    plain = random_genome(SPEC, rng, "Baseline")
    assert Genome.from_bytes(plain.to_bytes(SPEC), SPEC).same_as(plain)
    with pytest.raises(ValueError):
        Genome.from_bytes(g.to_bytes(SPEC), RnnSpec(hidden=8))
    with pytest.raises(ValueError):
        Genome.from_bytes(b"XXXX" + g.to_bytes(SPEC)[4:], SPEC)
