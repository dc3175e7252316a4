import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from asadmm.linalg import (DiagMetric, as_csr, diag_metric_solve, is_identity, is_negative_identity,
                           power_iteration_norm, spmv, weighted_norm_sq)

finite = st.floats(-1e3, 1e3, allow_nan=False)
positive = st.floats(1e-3, 1e3)


def test_weighted_norm_sq_examples():
    assert weighted_norm_sq([1.0, 2.0], DiagMetric([1.0, 1.0])) == 5.0
    assert weighted_norm_sq(np.zeros(3), DiagMetric.scaled_identity(2.0, 3)) == 0.0
    assert weighted_norm_sq([3.0], DiagMetric([2e-5])) == pytest.approx(1.8e-4, rel=1e-14)


def test_weighted_norm_sq_dimension_mismatch():
    with pytest.raises(ValueError):
        weighted_norm_sq([1.0, 2.0], DiagMetric([1.0]))


@settings(max_examples=50, deadline=None)
@given(arrays(float, 4, elements=finite), arrays(float, 4, elements=finite),
       arrays(float, 4, elements=positive))
def test_parallelogram_law(u, v, d):
    m = DiagMetric(d)
    lhs = weighted_norm_sq(u + v, m) + weighted_norm_sq(u - v, m)
    rhs = 2 * weighted_norm_sq(u, m) + 2 * weighted_norm_sq(v, m)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-9)


def test_diag_metric_rejects_nonpositive():
    with pytest.raises(ValueError):
        DiagMetric([1.0, 0.0])
    with pytest.raises(ValueError):
        DiagMetric([1.0, np.inf])


def test_diag_metric_is_immutable():
    m = DiagMetric([1.0, 2.0])
    with pytest.raises(ValueError):
        m.diagonal[0] = 5.0


def test_diag_metric_solve_examples():
    np.testing.assert_array_equal(diag_metric_solve(DiagMetric([1.0]), DiagMetric([1.0]), [4.0]), [2.0])
    np.testing.assert_array_equal(diag_metric_solve(DiagMetric([2.0]), DiagMetric([3.0]), [10.0]), [2.0])
    with pytest.raises(ValueError):
        diag_metric_solve(DiagMetric([1.0]), DiagMetric([1.0, 2.0]), [1.0])


def test_diag_metric_solve_vs_dense_solve():
    rng = np.random.default_rng(1)
    a, b = rng.uniform(0.1, 5, 7), rng.uniform(0.1, 5, 7)
    rhs = rng.normal(size=7)
    z = diag_metric_solve(DiagMetric(a), DiagMetric(b), rhs)
    np.testing.assert_allclose(z, np.linalg.solve(np.diag(a + b), rhs), rtol=1e-13)
    # multiplying back recovers the right-hand side
    np.testing.assert_allclose((a + b) * z, rhs, rtol=1e-12, atol=1e-14)


def test_spmv_identity_and_zero():
    v = np.array([1.0, -2.0, 3.0])
    np.testing.assert_array_equal(spmv(as_csr(sp.identity(3)), v), v)
    np.testing.assert_array_equal(spmv(as_csr(sp.csr_matrix((2, 3))), v), np.zeros(2))


def test_spmv_vs_dense_product():
    rng = np.random.default_rng(0)
    M = sp.random(5, 4, density=0.5, random_state=3, format="csr")
    v, w = rng.normal(size=4), rng.normal(size=5)
    Md = M.toarray()
    np.testing.assert_allclose(spmv(M, v), Md @ v, rtol=0, atol=1e-14)
    np.testing.assert_allclose(spmv(M, w, transpose=True), Md.T @ w, rtol=0, atol=1e-14)
    with pytest.raises(ValueError):
        spmv(M, w)


@settings(max_examples=40, deadline=None)
@given(arrays(float, 6, elements=finite), arrays(float, 6, elements=finite), finite, finite)
def test_spmv_is_linear(u, v, alpha, beta):
    M = as_csr(sp.random(5, 6, density=0.4, random_state=7))
    lhs = spmv(M, alpha * u + beta * v)
    rhs = alpha * spmv(M, u) + beta * spmv(M, v)
    scale = max(1.0, np.abs(lhs).max(), np.abs(rhs).max())
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-12 * scale)


def test_as_csr_canonical_form():
    M = as_csr(([0, 0, 1, 0], [2, 0, 1, 2], [1.0, 2.0, 3.0, 4.0]), shape=(2, 3))
    assert M.has_canonical_format
    np.testing.assert_array_equal(M.toarray(), [[2.0, 0, 5.0], [0, 3.0, 0]])
    for r in range(M.shape[0]):
        cols = M.indices[M.indptr[r]:M.indptr[r + 1]]
        assert np.all(np.diff(cols) > 0)


def test_as_csr_rejects_bad_input():
    with pytest.raises(ValueError):
        as_csr(np.array([[1.0, np.nan]]))
    with pytest.raises(ValueError):
        as_csr(([0], [0], [1.0]))
    with pytest.raises(ValueError):
        as_csr(np.eye(2), shape=(3, 3))


def test_identity_detection():
    assert is_identity(sp.identity(4))
    assert not is_identity(2 * sp.identity(4))
    assert not is_identity(sp.csr_matrix((3, 4)))
    assert is_negative_identity(-sp.identity(3))
    assert not is_negative_identity(sp.identity(3))


def test_power_iteration_matches_dense_eigenvalue():
    rng = np.random.default_rng(2)
    A = rng.normal(size=(12, 8))
    lam = power_iteration_norm(as_csr(A), iters=2000, tol=1e-14)
    assert lam == pytest.approx(np.linalg.eigvalsh(A.T @ A).max(), rel=1e-8)
    assert power_iteration_norm(as_csr(np.zeros((3, 3)))) == 0.0
