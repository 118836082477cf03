import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from gluon import linalg


def _orthonormal_cols(q, tol=1e-10):
    return np.allclose(q.T @ q, np.eye(q.shape[1]), atol=tol)


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
matrices = st.tuples(st.integers(1, 7), st.integers(1, 7)).flatmap(lambda s: arrays(np.float64, s, elements=finite))


def test_diagonal_example():
    svd = linalg.reduced_svd([[3.0, 0.0], [0.0, 4.0]])
    assert np.allclose(svd.sigma, [4.0, 3.0])
    assert np.allclose(svd.polar(), np.eye(2))
    assert np.allclose(svd.reconstruct(), [[3, 0], [0, 4]])


def test_identity_example():
    svd = linalg.reduced_svd(np.eye(3))
    assert np.allclose(svd.sigma, 1.0)
    assert np.allclose(svd.polar(), np.eye(3))


def test_huge_tolerance_gives_empty_factors():
    a = np.random.default_rng(0).standard_normal((2, 3))
    svd = linalg.reduced_svd(a, rank_tolerance=1e6)
    assert svd.rank == 0
    assert svd.u.shape == (2, 0) and svd.v.shape == (3, 0)
    assert np.array_equal(svd.polar(), np.zeros((2, 3)))


def test_reconstruction_500_random():
    rng = np.random.default_rng(1)
    for _ in range(500):
        m, n = rng.integers(1, 33, size=2)
        a = rng.standard_normal((m, n))
        svd = linalg.reduced_svd(a)
        assert np.linalg.norm(svd.reconstruct() - a) <= 1e-8 * np.linalg.norm(a)
        assert _orthonormal_cols(svd.u) and _orthonormal_cols(svd.v)
        assert np.all(np.diff(svd.sigma) <= 0)


def test_matches_numpy_oracle_and_rank_deficiency():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 5))
    svd = linalg.reduced_svd(a)
    assert svd.rank == 2
    ref = np.linalg.svd(a, compute_uv=False)
    assert np.allclose(svd.sigma, ref[:2])
    u, _, vt = np.linalg.svd(a, full_matrices=False)
    assert np.allclose(svd.polar(), u[:, :2] @ vt[:2])


def test_non_convergence_reports_residual():
    a = np.random.default_rng(3).standard_normal((8, 8))
    with pytest.raises(linalg.ConvergenceError) as info:
        linalg.reduced_svd(a, max_sweeps=1)
    assert info.value.residual > 0


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        linalg.reduced_svd(np.ones(3))
    with pytest.raises(ValueError):
        linalg.reduced_svd([[np.nan]])
    with pytest.raises(ValueError):
        linalg.reduced_svd(np.eye(2), rank_tolerance=-1.0)


def test_norm_examples():
    a = [[3.0, 0.0], [0.0, 4.0]]
    assert linalg.nuclear_norm(a) == pytest.approx(7.0)
    assert linalg.spectral_norm(a) == pytest.approx(4.0)
    assert linalg.frobenius_norm(a) == pytest.approx(5.0)
    b = [[1.0, -2.0], [0.0, 3.0]]
    assert linalg.entrywise_l1(b) == 6.0 and linalg.max_abs_entry(b) == 3.0
    z = np.zeros((3, 2))
    for fn in (linalg.nuclear_norm, linalg.spectral_norm, linalg.frobenius_norm, linalg.entrywise_l1, linalg.max_abs_entry):
        assert fn(z) == 0.0


@settings(max_examples=60, deadline=None)
@given(matrices, st.integers(0, 2**32 - 1))
def test_spectral_nuclear_duality(a, seed):
    b = np.random.default_rng(seed).standard_normal(a.shape)
    assert linalg.spectral_norm(a) * linalg.nuclear_norm(b) >= abs(linalg.trace_inner(a, b)) - 1e-9 * (1 + np.abs(a).sum())


@settings(max_examples=60, deadline=None)
@given(matrices)
def test_svd_property(a):
    svd = linalg.reduced_svd(a)
    scale = max(np.linalg.norm(a), 1e-300)
    assert np.linalg.norm(svd.reconstruct() - a) <= 1e-8 * scale
    assert np.allclose(svd.sigma, np.linalg.svd(a, compute_uv=False)[: svd.rank], atol=1e-9 * scale)


def test_ns_scalar_and_diagonal_examples():
    out = linalg.ns_orthogonalize([[5.0]])
    assert 0.7 <= out[0, 0] <= 1.3
    diag = linalg.ns_orthogonalize([[3.0, 0.0], [0.0, 4.0]])
    assert np.linalg.norm(diag - np.eye(2)) <= 0.3


def test_ns_orthogonal_input_with_more_iterations():
    rng = np.random.default_rng(4)
    q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    out = linalg.ns_orthogonalize(q, iterations=30, coefficients=linalg.CUBIC_NS_COEFFICIENTS)
    assert np.linalg.norm(out - q) <= 0.3


def test_ns_band_for_condition_number_100():
    rng = np.random.default_rng(5)
    lo, hi = linalg.NS_DEFAULT_BAND
    for _ in range(50):
        m, n = rng.integers(1, 40, size=2)
        r = min(m, n)
        u, _ = np.linalg.qr(rng.standard_normal((m, r)))
        v, _ = np.linalg.qr(rng.standard_normal((n, r)))
        s = np.geomspace(1.0, 1e-2, r) if r > 1 else np.ones(1)
        out = linalg.ns_orthogonalize((u * s) @ v.T)
        sv = np.linalg.svd(out, compute_uv=False)
        assert lo <= sv.min() and sv.max() <= hi


def test_ns_preserves_singular_subspaces():
    rng = np.random.default_rng(6)
    u, _ = np.linalg.qr(rng.standard_normal((7, 4)))
    v, _ = np.linalg.qr(rng.standard_normal((5, 4)))
    s = np.array([3.0, 1.0, 0.5, 0.1])
    out = linalg.ns_orthogonalize((u * s) @ v.T)
    # out = U p(S) V^T, so U^T out V is diagonal and the residuals vanish
    core = u.T @ out @ v
    assert np.allclose(core, np.diag(np.diag(core)), atol=1e-6)
    assert np.linalg.norm(out - u @ core @ v.T) <= 1e-6


def test_ns_wide_and_tall_agree_and_deterministic():
    a = np.random.default_rng(7).standard_normal((3, 8))
    wide = linalg.ns_orthogonalize(a)
    tall = linalg.ns_orthogonalize(a.T)
    assert np.allclose(wide, tall.T, atol=1e-12)
    assert np.array_equal(wide, linalg.ns_orthogonalize(a))


def test_ns_errors():
    with pytest.raises(ValueError):
        linalg.ns_orthogonalize(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        linalg.ns_orthogonalize(np.eye(2), iterations=0)


def test_muon_quintic_available_as_option():
    out = linalg.ns_orthogonalize(np.diag([1.0, 0.5, 0.2]), coefficients=linalg.MUON_QUINTIC)
    assert np.all(np.abs(np.diag(out)) > 0.5)


@pytest.mark.parametrize("magnitude", [1e-300, 1e-150, 1.0, 1e150, 1e300])
def test_extreme_magnitudes(magnitude):
    a = np.random.default_rng(8).standard_normal((4, 3)) * magnitude
    svd = linalg.reduced_svd(a)
    assert svd.rank == 3
    assert np.allclose(svd.sigma / magnitude, np.linalg.svd(a / magnitude, compute_uv=False))
    assert np.linalg.norm(svd.reconstruct() / magnitude - a / magnitude) <= 1e-10
    assert linalg.frobenius_norm(a) / magnitude == pytest.approx(np.linalg.norm(a / magnitude))
    assert np.all(np.isfinite(linalg.ns_orthogonalize(a)))


def test_mixed_scale_columns_converge():
    a = np.array([[1.0, 1e-200, 0.0], [0.0, 2e-200, 1e-310], [1e-310, 0.0, 3.0]])
    svd = linalg.reduced_svd(a)
    assert np.allclose(svd.sigma, [3.0, 1.0])
    assert svd.rank == 2
