"""Logistic loss, l1 regularizer and the graph-guided fused lasso assembly."""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .linalg import as_csr
from .problem import ProblemSpec

__all__ = [
    "Dataset",
    "GgflModel",
    "build_ggfl",
    "build_graph_G",
    "logistic_component_grad",
    "logistic_loss",
    "soft_shrink",
    "synthetic_instance",
]


@dataclass(frozen=True)
class Dataset:
    """Samples ``a_j`` as rows of a CSR matrix, labels in {-1, +1}."""

    features: sp.csr_matrix
    labels: np.ndarray

    def __post_init__(self):
        X = as_csr(self.features)
        y = np.asarray(self.labels, dtype=float).ravel()
        if X.shape[0] < 1:
            raise ValueError("dataset must have at least one sample")
        if y.shape[0] != X.shape[0]:
            raise ValueError(f"{y.shape[0]} labels for {X.shape[0]} samples")
        if not np.all(np.abs(y) == 1.0):
            raise ValueError("labels must be -1 or +1")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def N(self):
        return self.features.shape[0]

    @property
    def l(self):
        return self.features.shape[1]


def _log1pexp(z):
    # log(1 + exp(z)) without overflow
    return np.where(z > 0, z + np.log1p(np.exp(-np.abs(z))), np.log1p(np.exp(-np.abs(z))))


def logistic_loss(ds, x):
    """Mean logistic loss ``mean_j log(1 + exp(-b_j a_j^T x))``."""
    margins = ds.labels * (ds.features @ x)
    return float(np.mean(_log1pexp(-margins)))


def logistic_component_grad(ds, j, x):
    """Gradient of ``log(1 + exp(-b_j a_j^T x))``."""
    X = ds.features
    lo, hi = X.indptr[j], X.indptr[j + 1]
    cols = X.indices[lo:hi]
    vals = X.data[lo:hi]
    bj = ds.labels[j]
    coeff = -bj * expit(-bj * np.dot(vals, x[cols]))
    g = np.zeros(X.shape[1])
    g[cols] = coeff * vals
    return g


def _logistic_batch_grad(ds, indices, x):
    idx = np.asarray(indices)
    if idx.size == 1:
        return logistic_component_grad(ds, int(idx[0]), x)
    Xs = ds.features[idx]
    bs = ds.labels[idx]
    coeff = -bs * expit(-bs * (Xs @ x))
    return np.asarray(Xs.T @ coeff).ravel() / idx.size


def _logistic_full_grad(ds, x):
    coeff = -ds.labels * expit(-ds.labels * (ds.features @ x))
    return np.asarray(ds.features.T @ coeff).ravel() / ds.N


def soft_shrink(kappa, v):
    """Componentwise ``sign(v) * max(|v| - kappa, 0)``."""
    if kappa < 0:
        raise ValueError("shrinkage threshold must be nonnegative")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - kappa, 0.0)


@dataclass(frozen=True)
class GgflModel:
    dataset: Dataset
    mu: float = 1e-5
    A_kind: str = "identity"
    G: Optional[sp.csr_matrix] = None

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if self.A_kind not in ("identity", "stacked_graph"):
            raise ValueError(f"unknown A_kind {self.A_kind!r}")
        if self.A_kind == "stacked_graph":
            if self.G is None:
                raise ValueError("stacked_graph requires a graph matrix G")
            if self.G.shape[1] != self.dataset.l:
                raise ValueError(f"G has {self.G.shape[1]} columns, expected {self.dataset.l}")


def build_ggfl(model):
    """Assemble ``min mean_j f_j(x) + mu ||y||_1  s.t.  Ax - y = 0``.

    ``A`` is the identity or ``[G; I]``.
    """
    ds = model.dataset
    l = ds.l
    eye = sp.identity(l, format="csr")
    if model.A_kind == "identity":
        A = eye
    else:
        A = sp.vstack([as_csr(model.G), eye], format="csr")
    n = A.shape[0]
    mu = model.mu
    row_sq = np.asarray(ds.features.multiply(ds.features).sum(axis=1)).ravel()
    nu = max(float(row_sq.max()) / 4.0, 1e-12)

    return ProblemSpec(
        A=A,
        B=-sp.identity(n, format="csr"),
        b=np.zeros(n),
        N=ds.N,
        component_grad=lambda j, x: logistic_component_grad(ds, j, x),
        batch_grad=lambda idx, x: _logistic_batch_grad(ds, idx, x),
        full_grad=lambda x: _logistic_full_grad(ds, x),
        f_value=lambda x: logistic_loss(ds, x),
        g_value=lambda y: mu * float(np.abs(y).sum()),
        g_prox=lambda tau, q: soft_shrink(mu / tau, q),
        lipschitz_nu=nu,
        name=f"ggfl[{model.A_kind}]",
        meta={"mu": mu, "dataset": ds},
    )


def build_graph_G(ds, corr_threshold):
    """Edge-difference matrix from thresholded feature correlations.

    One row per pair ``i < j`` with ``|corr(i, j)| > corr_threshold``, with
    ``+1`` in column ``i`` and ``-1`` in column ``j``. Constant features never
    form edges.
    """
    if not 0 < corr_threshold < 1:
        raise ValueError("corr_threshold must lie in (0, 1)")
    X = ds.features
    N, l = X.shape
    mean = np.asarray(X.mean(axis=0)).ravel()
    cov = np.asarray((X.T @ X).todense()) / N - np.outer(mean, mean)
    var = np.clip(np.diag(cov), 0.0, None)
    scale = np.sqrt(var)
    live = scale > 1e-12 * max(1.0, float(scale.max(initial=0.0)))
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = cov / np.outer(scale, scale)
    corr[~live, :] = 0.0
    corr[:, ~live] = 0.0
    iu, ju = np.triu_indices(l, k=1)
    keep = np.abs(corr[iu, ju]) > corr_threshold
    iu, ju = iu[keep], ju[keep]
    m = iu.size
    rows = np.repeat(np.arange(m), 2)
    cols = np.column_stack([iu, ju]).ravel()
    vals = np.tile([1.0, -1.0], m)
    return as_csr((rows, cols, vals), shape=(m, l))


def synthetic_instance(seed, N, l, sparsity, density=1.0, n_groups=None):
    """Reproducible logistic-regression data with a planted sparse weight.

    Features are grouped: columns in one group share a latent factor, so the
    correlation graph is nonempty. Rows are scaled to unit norm on average.

    Parameters
    ----------
    seed : int
    N, l : int
        Samples and features.
    sparsity : float
        Fraction of nonzero entries of the planted weight vector.
    density : float
        Fraction of nonzero feature entries.
    n_groups : int, optional
        Number of correlated feature groups (default ``max(1, l // 5)``).

    Returns
    -------
    dataset : Dataset
    w_true : ndarray
    """
    if N < 1 or l < 1:
        raise ValueError("N and l must be positive")
    if not 0 <= sparsity <= 1:
        raise ValueError("sparsity must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    n_groups = n_groups or max(1, l // 5)
    group = rng.integers(0, n_groups, size=l)
    latent = rng.standard_normal((N, n_groups))
    X = 0.8 * latent[:, group] + 0.6 * rng.standard_normal((N, l))
    if density < 1.0:
        X *= rng.random((N, l)) < density
    X /= np.sqrt(max(l * density, 1.0))

    w = np.zeros(l)
    k = int(round(sparsity * l))
    if k > 0:
        support = rng.choice(l, size=k, replace=False)
        w[support] = rng.choice([-1.0, 1.0], size=k) * rng.uniform(1.0, 3.0, size=k)
    p = expit(X @ w)
    labels = np.where(rng.random(N) < p, 1.0, -1.0)
    return Dataset(sp.csr_matrix(X), labels), w
