import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gluon import norms, optimizer as opt
from gluon.norms import NormSpec

nonneg = st.floats(0.0, 1e6, allow_nan=False)


def test_schedule_values():
    assert opt.radius_at(opt.Constant(0.3), 7, 5.0) == 0.3
    assert opt.radius_at(opt.PolynomialDecay(1.0), 15, 0.0) == pytest.approx(16**-0.75)
    assert opt.radius_at(opt.AdaptiveDeterministic(1.0, 2.0), 0, 3.0) == pytest.approx(3.0 / 7.0)
    assert opt.radius_at(opt.AdaptiveStochastic(1.0, 2.0, 0.5), 0, 3.0) == pytest.approx(0.5 * 3.0 / (1.0 + 1.5 * 6.0))
    # L0 = 0: radius approaches 1 / L1 and is 0 at g = 0
    assert opt.radius_at(opt.AdaptiveDeterministic(0.0, 4.0), 0, 10.0) == pytest.approx(0.25)
    assert opt.radius_at(opt.AdaptiveDeterministic(0.0, 4.0), 0, 0.0) == 0.0


def test_schedule_errors():
    for bad in (lambda: opt.Constant(0.0), lambda: opt.PolynomialDecay(-1.0), lambda: opt.AdaptiveDeterministic(0.0, 0.0),
                lambda: opt.AdaptiveDeterministic(-1.0, 1.0), lambda: opt.AdaptiveStochastic(1.0, 1.0, 1.0)):
        with pytest.raises(ValueError):
            bad()
    with pytest.raises(ValueError):
        opt.radius_at(opt.Constant(1.0), -1, 0.0)
    with pytest.raises(ValueError):
        opt.radius_at(opt.Constant(1.0), 0, -1.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 100.0), st.floats(0.0, 100.0), nonneg, nonneg)
def test_adaptive_radius_monotone_and_capped(l0, l1, g_a, g_b):
    if l0 == 0 and l1 == 0:
        return
    sched = opt.AdaptiveDeterministic(l0, l1)
    lo, hi = sorted((g_a, g_b))
    assert sched.radius(0, lo) <= sched.radius(0, hi) * (1 + 1e-12) + 1e-300
    if l1 > 0:
        assert sched.radius(0, hi) <= 1.0 / l1 * (1 + 1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 10.0), st.floats(0.01, 10.0), st.floats(0.0, 0.99), st.floats(0.0, 1e3))
def test_stochastic_radius_reduces_to_deterministic(l0, l1, zeta, g):
    det = opt.AdaptiveDeterministic(l0, l1).radius(0, g)
    assert opt.AdaptiveStochastic(l0, l1, 0.0).radius(0, g) == det
    assert opt.AdaptiveStochastic(l0, l1, zeta).radius(0, g) <= det * (1 + 1e-12)


def test_momentum_rules():
    assert opt.beta_at(opt.NoMomentum(), 5) == 0.0
    assert opt.beta_at(opt.ConstantBeta(0.9), 5) == 0.9
    assert opt.beta_at(opt.SqrtDecay(), 0) == 0.0
    assert opt.beta_at(opt.SqrtDecay(), 3) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        opt.ConstantBeta(1.0)
    betas = [opt.beta_at(opt.SqrtDecay(), k) for k in range(100)]
    assert all(0 <= b < 1 for b in betas) and betas == sorted(betas)


def _state(specs, schedules, shapes, seed=0, **kw):
    rng = np.random.default_rng(seed)
    return opt.init_state([rng.standard_normal(s) for s in shapes], specs, schedules, **kw)


def test_deterministic_step_matches_lmo_step():
    specs = [NormSpec.spectral(2.0), NormSpec.max_entry(3.0), NormSpec.euclidean(0.5)]
    shapes = [(3, 4), (2, 2), (5, 1)]
    sched = [opt.Constant(0.1), opt.PolynomialDecay(0.2), opt.AdaptiveDeterministic(1.0, 1.0)]
    state = _state(specs, sched, shapes)
    grads = [np.random.default_rng(1).standard_normal(s) for s in shapes]
    new = opt.step_deterministic(state, grads)
    assert new.k == 1
    for i, (grp, g) in enumerate(zip(state.groups, grads)):
        r = opt.radius_at(grp.schedule, 0, norms.dual_norm(grp.norm, g))
        assert new.last_radii[i] == r
        assert np.allclose(new.params[i], norms.lmo_step(grp.norm, grp.x, g, r))
    # the input state is untouched
    assert state.k == 0 and not np.shares_memory(new.params[0], state.params[0])


def test_zero_gradient_freezes_group():
    state = _state([NormSpec.euclidean()] * 2, [opt.Constant(0.1)] * 2, [(2, 2), (2, 2)])
    new = opt.step_deterministic(state, [np.zeros((2, 2)), np.ones((2, 2))])
    assert new.last_frozen == (True, False)
    assert np.array_equal(new.params[0], state.params[0])


def test_gradients_by_id_and_shape_errors():
    state = _state([NormSpec.euclidean()] * 2, [opt.Constant(0.1)] * 2, [(2, 2), (3, 1)], ids=["a", "b"])
    new = opt.step_deterministic(state, {"b": np.ones((3, 1)), "a": np.ones((2, 2))})
    assert new.k == 1
    with pytest.raises(ValueError, match="'b'"):
        opt.step_deterministic(state, [np.ones((2, 2)), np.ones((2, 2))])
    with pytest.raises(ValueError):
        opt.step_deterministic(state, {"a": np.ones((2, 2))})
    with pytest.raises(ValueError):
        opt.init_state([np.ones((1, 1))] * 2, [NormSpec.euclidean()] * 2, [opt.Constant(1.0)] * 2, ids=["x", "x"])


def test_stochastic_momentum_recursion():
    rng = np.random.default_rng(2)
    shapes = [(2, 3)]
    state = _state([NormSpec.euclidean()], [opt.Constant(0.01)], shapes, momentum_rule=opt.ConstantBeta(0.75))
    g0, g1 = rng.standard_normal((2, 3)), rng.standard_normal((2, 3))
    s1 = opt.step_stochastic(state, [g0])
    assert np.allclose(s1.momentum[0], g0)  # M^0 seeded by the first gradient
    s2 = opt.step_stochastic(s1, [g1])
    assert np.allclose(s2.momentum[0], 0.75 * g0 + 0.25 * g1)


def test_no_momentum_stochastic_equals_deterministic():
    rng = np.random.default_rng(3)
    specs = [NormSpec.spectral(), NormSpec.max_entry(2.0)]
    sched = [opt.AdaptiveDeterministic(1.0, 0.5), opt.PolynomialDecay(0.3)]
    a = b = _state(specs, sched, [(3, 3), (2, 4)])
    for _ in range(5):
        grads = [rng.standard_normal((3, 3)), rng.standard_normal((2, 4))]
        a, b = opt.step_deterministic(a, grads), opt.step_stochastic(b, grads)
        for x, y in zip(a.params, b.params):
            assert np.array_equal(x, y)


def test_adaptive_stochastic_driven_by_momentum_norm():
    spec = NormSpec.euclidean()
    state = _state([spec], [opt.AdaptiveStochastic(1.0, 1.0, 0.2)], [(2, 2)], momentum_rule=opt.ConstantBeta(0.5),
                   momentum=[np.full((2, 2), 2.0)])
    g = np.ones((2, 2))
    new = opt.step_stochastic(state, [g])
    m = 0.5 * np.full((2, 2), 2.0) + 0.5 * g
    assert new.last_radii[0] == pytest.approx(opt.AdaptiveStochastic(1.0, 1.0, 0.2).radius(0, norms.dual_norm(spec, m)))


def test_preset_rules():
    layers = [opt.LayerSpec.hidden(8, 2), opt.LayerSpec.embedding(5, 3), opt.LayerSpec.head(4, 6)]
    llm = opt.preset("unscion_llm", layers)
    assert llm[0] == NormSpec.spectral(math.sqrt(2 / 8))
    assert llm[1] == NormSpec.max_entry(3.0) and llm[2] == NormSpec.max_entry(6.0)
    assert all(s == NormSpec.spectral() for s in opt.preset("muon", layers))
    assert all(s == NormSpec.euclidean() for s in opt.preset("normalized_gd", layers))
    assert all(s == NormSpec.max_entry() for s in opt.preset("sign_gd", layers))
    cnn = opt.preset("unscion_cnn", [opt.LayerSpec.conv(3, 16, 3), opt.LayerSpec.bias(16), opt.LayerSpec.head(10, 32)])
    assert cnn[0].family is norms.Family.SPECTRAL and cnn[0].scale == pytest.approx(9 * math.sqrt(3 / 16))
    assert cnn[1] == NormSpec.euclidean(math.sqrt(1 / 16))
    assert cnn[2] == NormSpec.max_entry(32.0)
    with pytest.raises(ValueError):
        opt.preset("unscion_llm", [opt.LayerSpec.bias(4)])
    with pytest.raises(ValueError):
        opt.preset("adam", layers)


def test_cnn_preset_updates():
    rng = np.random.default_rng(4)
    c_in, c_out, k = 2, 3, 3
    layers = [opt.LayerSpec.conv(c_in, c_out, k), opt.LayerSpec.bias(c_out)]
    kernel = rng.standard_normal((c_out, c_in, k, k))
    w = opt.conv_kernel_to_matrix(kernel)
    assert np.array_equal(opt.matrix_to_conv_kernel(w, c_in, k), kernel)
    b = rng.standard_normal((c_out, 1))
    gw, gb = rng.standard_normal(w.shape), rng.standard_normal(b.shape)
    t = 0.1
    state = opt.step_deterministic(
        opt.init_state([w, b], opt.preset("unscion_cnn", layers), [opt.Constant(t)] * 2), [gw, gb]
    )
    u, _, vt = np.linalg.svd(gw, full_matrices=False)
    assert np.allclose(state.params[0], w - t / k**2 * math.sqrt(c_out / c_in) * u @ vt)
    assert np.allclose(state.params[1], b - t * math.sqrt(c_out) * gb / np.linalg.norm(gb))
