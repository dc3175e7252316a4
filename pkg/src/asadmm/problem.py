"""Problem instances ``min f(x) + g(y)  s.t.  Ax + By = b``.

``f`` is the average of ``N`` smooth components and is accessed only through
gradient oracles; ``g`` is accessed through its value and its proximal map.
Component indices are 0-based.
"""

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .linalg import as_csr, as_vector, is_negative_identity, spmv

__all__ = [
    "ProblemSpec",
    "SaddleReference",
    "full_gradient",
    "objective_value",
    "project_x",
    "residual",
    "single_component_view",
]


@dataclass(frozen=True)
class ProblemSpec:
    """Oracle description of one instance.

    Parameters
    ----------
    A, B : csr_matrix
        Constraint matrices of shapes ``(n, n1)`` and ``(n, n2)``.
    b : ndarray
        Right-hand side of length ``n``.
    N : int
        Number of components of ``f``.
    component_grad : callable ``(j, x) -> ndarray``
        Gradient of the j-th component.
    f_value : callable ``x -> float``
        ``f(x) = mean_j f_j(x)``.
    g_value : callable ``y -> float``
    g_prox : callable ``(tau, q) -> ndarray``
        ``argmin_y g(y) + tau/2 ||y - q||^2``.
    lipschitz_nu : float
        Euclidean Lipschitz constant shared by every component gradient.
    batch_grad : callable ``(indices, x) -> ndarray``, optional
        Mean gradient over a set of components; falls back to looping over
        `component_grad`.
    full_grad : callable ``x -> ndarray``, optional
        Fast path for the full gradient.
    x_box : (lo, hi), optional
        Box constraint on ``x``; ``None`` means ``x`` is unconstrained.
    eval_weight : int
        Number of underlying component-gradient evaluations charged per
        oracle call (``N`` for a problem collapsed to a single component).
    """

    A: object
    B: object
    b: np.ndarray
    N: int
    component_grad: Callable
    f_value: Callable
    g_value: Callable
    g_prox: Callable
    lipschitz_nu: float
    batch_grad: Optional[Callable] = None
    full_grad: Optional[Callable] = None
    x_box: Optional[tuple] = None
    eval_weight: int = 1
    name: str = "problem"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        A = as_csr(self.A)
        B = as_csr(self.B)
        if A.shape[0] != B.shape[0]:
            raise ValueError(f"A has {A.shape[0]} rows but B has {B.shape[0]}")
        b = as_vector(self.b, A.shape[0], "b")
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if not self.lipschitz_nu > 0:
            raise ValueError("lipschitz_nu must be positive")
        box = self.x_box
        if box is not None:
            lo, hi = (np.broadcast_to(np.asarray(t, dtype=float), (A.shape[1],)).copy() for t in box)
            if np.any(lo > hi):
                raise ValueError("x_box has lo > hi")
            box = (lo, hi)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "x_box", box)
        object.__setattr__(self, "_B_neg_eye", is_negative_identity(B))

    @property
    def n1(self):
        return self.A.shape[1]

    @property
    def n2(self):
        return self.B.shape[1]

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def B_is_neg_identity(self):
        return self._B_neg_eye

    def mean_grad(self, indices, x):
        if self.batch_grad is not None:
            return self.batch_grad(indices, x)
        g = np.zeros(self.n1)
        for j in indices:
            g += self.component_grad(int(j), x)
        return g / len(indices)


@dataclass(frozen=True)
class SaddleReference:
    x_star: np.ndarray
    y_star: np.ndarray
    f_star: float
    lam_star: Optional[np.ndarray] = None
    feas_tol: float = 1e-6


def full_gradient(p, x):
    """``(1/N) sum_j grad f_j(x)``."""
    x = as_vector(x, p.n1, "x")
    if p.full_grad is not None:
        return p.full_grad(x)
    return p.mean_grad(range(p.N), x)


def objective_value(p, x, y):
    """``F(x, y) = f(x) + g(y)``."""
    return float(p.f_value(x)) + float(p.g_value(y))


def residual(p, x, y):
    """``Ax + By - b``."""
    return spmv(p.A, x) + spmv(p.B, y) - p.b


def project_x(p, x):
    """Project onto the x-box.

    For a separable box and a diagonal metric the metric projection is the
    componentwise clamp, so the metric is not needed here.
    """
    if p.x_box is None:
        return x
    lo, hi = p.x_box
    return np.clip(x, lo, hi)


def single_component_view(p):
    """View of `p` with ``N = 1`` whose only component is the full gradient.

    Each oracle call is charged ``N`` component evaluations.
    """

    def grad(j, x):
        return full_gradient(p, x)

    def batch(indices, x):
        return full_gradient(p, x)

    return replace(
        p,
        N=1,
        component_grad=grad,
        batch_grad=batch,
        full_grad=lambda x: full_gradient(p, x),
        eval_weight=p.N * p.eval_weight,
        name=p.name + "[N=1]",
        meta=dict(p.meta),
    )
