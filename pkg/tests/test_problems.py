import math

import numpy as np
import pytest

from gluon import norms, problems
from gluon.norms import NormSpec


def test_quadratic_metadata_and_value():
    anchors = [np.zeros((2, 2)), np.ones((1, 3))]
    obj = problems.layered_quadratic([2.0, 3.0], anchors)
    assert obj.metadata["l0"] == [2.0, 3.0] and obj.metadata["l1"] == [0.0, 0.0] and obj.metadata["mu"] == 2.0
    assert obj.value(anchors) == 0.0
    x = [np.ones((2, 2)), np.zeros((1, 3))]
    assert obj.value(x) == pytest.approx(0.5 * 2 * 4 + 0.5 * 3 * 3)
    with pytest.raises(ValueError):
        problems.layered_quadratic([0.0], [np.zeros((1, 1))])


def test_quadratic_constants_are_valid_bounds():
    rng = np.random.default_rng(0)
    shapes = [(3, 4), (2, 2), (5, 1)]
    specs = [NormSpec.spectral(0.5), NormSpec.max_entry(2.0), NormSpec.euclidean(3.0)]
    c = [1.0, 2.0, 0.5]
    l0, l1 = problems.quadratic_constants(c, shapes, specs)
    assert l1 == [0.0] * 3
    for _ in range(200):
        for ci, s, shape, bound in zip(c, specs, shapes, l0):
            d = rng.standard_normal(shape)
            assert norms.dual_norm(s, ci * d) <= bound * norms.primal_norm(s, d) * (1 + 1e-12)


def test_cosh_minimum():
    obj = problems.cosh_separable([1.0, 2.0], [(2, 2), (1, 3)])
    zero = [np.zeros((2, 2)), np.zeros((1, 3))]
    assert obj.value(zero) == pytest.approx(obj.metadata["f_inf"])
    assert all(not np.any(g) for g in obj.grad(zero))


def test_mlp_shapes_and_full_batch():
    obj = problems.tiny_mlp((3, 5, 2), n_samples=12, batch_size=12)
    params = obj.init(0)
    assert [p.shape for p in params] == [(5, 3), (5, 1), (2, 5), (2, 1)]
    assert obj.ids == ["W1", "b1", "W2", "b2"]
    full = obj.grad(params)
    for a, b in zip(full, obj.stoch_grad(params, 123)):
        assert np.array_equal(a, b)


def test_mlp_minibatch_is_unbiased_in_mean():
    obj = problems.tiny_mlp((3, 4, 2), n_samples=8, batch_size=2)
    params = obj.init(1)
    full = obj.grad(params)
    mean = [np.mean([obj.stoch_grad(params, s)[i] for s in range(4000)], axis=0) for i in range(4)]
    for a, b in zip(full, mean):
        assert np.linalg.norm(a - b) <= 0.05 * np.linalg.norm(a) + 1e-3


def test_mlp_dataset_determinism():
    a, b = problems.tiny_mlp((2, 3, 1), dataset_seed=5), problems.tiny_mlp((2, 3, 1), dataset_seed=5)
    p = a.init(0)
    assert a.value(p) == b.value(p)
    assert problems.tiny_mlp((2, 3, 1), dataset_seed=6).value(p) != a.value(p)


@pytest.mark.parametrize("spec", [NormSpec.euclidean(2.0), NormSpec.max_entry(3.0), NormSpec.spectral(0.5)])
def test_noise_calibration(spec):
    base = problems.layered_quadratic([1.0], [np.zeros((3, 4))])
    noisy = problems.with_gaussian_noise(base, 0.7, seed=3, specs=[spec])
    x = base.init(0)
    g = base.grad(x)
    second = np.mean([norms.dual_norm(spec, noisy.stoch_grad(x, s)[0] - g[0]) ** 2 for s in range(3000)])
    assert second <= 0.7**2 * 1.05
    if spec.family is not norms.Family.SPECTRAL:
        assert second == pytest.approx(0.49, rel=0.08)


def test_noise_is_zero_mean_and_seeded():
    base = problems.layered_quadratic([1.0], [np.zeros((2, 2))])
    noisy = problems.with_gaussian_noise(base, 1.0, seed=0)
    x = base.init(0)
    assert np.array_equal(noisy.stoch_grad(x, 5)[0], noisy.stoch_grad(x, 5)[0])
    assert not np.array_equal(noisy.stoch_grad(x, 5)[0], noisy.stoch_grad(x, 6)[0])
    mean = np.mean([noisy.stoch_grad(x, s)[0] for s in range(4000)], axis=0)
    assert np.allclose(mean, base.grad(x)[0], atol=0.05)
    quiet = problems.with_gaussian_noise(base, 0.0, seed=0)
    assert np.array_equal(quiet.stoch_grad(x, 1)[0], base.grad(x)[0])
    with pytest.raises(ValueError):
        problems.with_gaussian_noise(base, -1.0, seed=0)


def test_finite_difference_oracle_on_known_function():
    value = lambda ps: float(np.sum(ps[0] ** 3))
    x = [np.array([[1.0, -2.0]])]
    g = problems.finite_difference_grad(value, x)[0]
    assert np.allclose(g, 3 * x[0] ** 2, rtol=1e-8)
