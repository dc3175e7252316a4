"""Vector, sparse-matrix and diagonal-metric helpers.

Sparse matrices are plain ``scipy.sparse.csr_matrix`` objects normalized by
:func:`as_csr` (sorted column indices, duplicates summed, finite values).
Metrics are diagonal; :class:`DiagMetric` is the only metric type.
"""

import numpy as np
import scipy.sparse as sp

__all__ = [
    "DiagMetric",
    "as_csr",
    "as_vector",
    "diag_metric_solve",
    "is_identity",
    "is_negative_identity",
    "power_iteration_norm",
    "spmv",
    "weighted_norm_sq",
]


def as_vector(v, dim=None, name="vector"):
    """Return `v` as a 1-D float array, checking its length."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        arr = arr.ravel()
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"{name} has dimension {arr.shape[0]}, expected {dim}")
    return arr


class DiagMetric:
    """Positive diagonal matrix used as a metric ``||v||_D^2 = sum d_i v_i^2``."""

    __slots__ = ("_diag",)

    def __init__(self, diagonal):
        d = np.array(diagonal, dtype=float).ravel()
        if d.size == 0:
            raise ValueError("metric must have at least one entry")
        if not np.all(np.isfinite(d)) or np.any(d <= 0):
            raise ValueError("metric diagonal must be finite and strictly positive")
        d.setflags(write=False)
        self._diag = d

    @classmethod
    def scaled_identity(cls, scale, dim):
        return cls(np.full(dim, float(scale)))

    @property
    def diagonal(self):
        return self._diag

    @property
    def dim(self):
        return self._diag.shape[0]

    def min(self):
        return float(self._diag.min())

    def max(self):
        return float(self._diag.max())

    def inverse(self):
        return DiagMetric(1.0 / self._diag)

    def __mul__(self, c):
        return DiagMetric(self._diag * float(c))

    __rmul__ = __mul__

    def __repr__(self):
        if np.all(self._diag == self._diag[0]):
            return f"DiagMetric({self._diag[0]:g} * I_{self.dim})"
        return f"DiagMetric(dim={self.dim})"


def weighted_norm_sq(v, m):
    """Return ``sum_i m_i v_i^2`` for a :class:`DiagMetric` `m`."""
    v = as_vector(v, m.dim)
    return float(np.dot(m.diagonal, v * v))


def diag_metric_solve(a, b, rhs):
    """Solve ``(a + b) z = rhs`` for diagonal metrics `a` and `b`."""
    if a.dim != b.dim:
        raise ValueError(f"metric dimensions differ: {a.dim} != {b.dim}")
    rhs = as_vector(rhs, a.dim, "rhs")
    return rhs / (a.diagonal + b.diagonal)


def as_csr(M, shape=None):
    """Convert `M` to a canonical CSR matrix.

    Duplicate entries are summed and column indices sorted within each row.
    Dense arrays, any scipy sparse format and ``(rows, cols, vals)`` triplets
    (with an explicit `shape`) are accepted.
    """
    if isinstance(M, tuple) and len(M) == 3:
        if shape is None:
            raise ValueError("shape is required for triplet input")
        rows, cols, vals = (np.asarray(t) for t in M)
        M = sp.coo_matrix((vals.astype(float), (rows, cols)), shape=shape)
    if sp.issparse(M):
        out = sp.csr_matrix(M, dtype=float, copy=True)
    else:
        out = sp.csr_matrix(np.atleast_2d(np.asarray(M, dtype=float)))
    if shape is not None and out.shape != tuple(shape):
        raise ValueError(f"matrix has shape {out.shape}, expected {tuple(shape)}")
    out.sum_duplicates()
    out.sort_indices()
    if not np.all(np.isfinite(out.data)):
        raise ValueError("matrix has non-finite entries")
    return out


def spmv(M, v, transpose=False):
    """Sparse matrix-vector product ``M v`` (or ``M^T v``)."""
    nrow, ncol = M.shape
    expected = nrow if transpose else ncol
    v = as_vector(v, expected)
    if transpose:
        return np.asarray(M.T @ v).ravel()
    return np.asarray(M @ v).ravel()


def is_identity(M):
    """True when `M` is exactly the square identity."""
    if M.shape[0] != M.shape[1]:
        return False
    M = as_csr(M)
    M.eliminate_zeros()
    n = M.shape[0]
    return (
        M.nnz == n
        and np.array_equal(M.indices, np.arange(n))
        and np.all(M.data == 1.0)
    )


def is_negative_identity(M):
    return is_identity(-as_csr(M))


def power_iteration_norm(M, iters=200, tol=1e-10, seed=0):
    """Estimate ``||M^T M||`` (largest eigenvalue) by power iteration.

    The returned value is a lower estimate that converges from below.
    """
    n = M.shape[1]
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = M.T @ (M @ v)
        w = np.asarray(w).ravel()
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        new_lam = float(v @ w)
        v = w / nw
        if abs(new_lam - lam) <= tol * max(abs(new_lam), 1.0):
            lam = new_lam
            break
        lam = new_lam
    return lam
