"""Shared fixtures: small analytic instances and independent reference solvers."""

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.optimize import minimize

import _report
from asadmm.models import GgflModel, _logistic_full_grad, build_ggfl, logistic_loss, synthetic_instance
from asadmm.problem import ProblemSpec, SaddleReference


def quadratic_problem(seed, n1=6, n=None, N=5, scale=1.0, x_box=None, A=None):
    """Separable quadratics with a closed-form saddle point.

    ``f_j(x) = 1/2 (x - c_j)^T D_j (x - c_j)`` with ``D_j`` diagonal in [1, 2],
    ``g(y) = 1/2 ||y - e||^2``, ``B = -I``. Without a box the solution solves
    ``(mean D + A^T A) x = mean(D c) + A^T (b + e)``, ``y = Ax - b``,
    ``lam = e - y``.
    """
    rng = np.random.default_rng(seed)
    n = n1 if n is None else n
    D = rng.uniform(1.0, 2.0, (N, n1))
    C = rng.normal(size=(N, n1)) * scale
    if A is None:
        A = rng.normal(size=(n, n1)) / np.sqrt(n)
    b = rng.normal(size=n) * scale
    e = rng.normal(size=n) * scale

    def f_value(x):
        return 0.5 * float(np.mean(np.sum(D * (x - C) ** 2, axis=1)))

    def full_grad(x):
        return np.mean(D * (x - C), axis=0)

    p = ProblemSpec(
        A=A, B=-sp.identity(n), b=b, N=N,
        component_grad=lambda j, x: D[j] * (x - C[j]),
        f_value=f_value,
        g_value=lambda y: 0.5 * float(np.sum((y - e) ** 2)),
        g_prox=lambda tau, q: (e + tau * q) / (1.0 + tau),
        lipschitz_nu=2.0,
        full_grad=full_grad,
        x_box=x_box,
        name="quadratic",
    )
    Ad = np.asarray(p.A.todense())
    xs = np.linalg.solve(np.diag(D.mean(0)) + Ad.T @ Ad, (D * C).mean(0) + Ad.T @ (b + e))
    ys = Ad @ xs - b
    lam = e - ys
    ref = SaddleReference(xs, ys, f_value(xs) + 0.5 * float(np.sum((ys - e) ** 2)), lam, 1e-12)
    return p, ref


def lbfgs_l1_logistic(ds, mu):
    """``min logistic(x) + mu ||x||_1`` via the split ``x = u - v``, ``u, v >= 0``.

    Independent of every ADMM code path; used as an oracle for ``A = I``.
    """
    l = ds.l

    def fun(z):
        x = z[:l] - z[l:]
        g = _logistic_full_grad(ds, x)
        return logistic_loss(ds, x) + mu * z.sum(), np.concatenate([g + mu, -g + mu])

    r = minimize(fun, np.zeros(2 * l), jac=True, method="L-BFGS-B",
                 bounds=[(0, None)] * (2 * l),
                 options=dict(ftol=1e-15, gtol=1e-12, maxiter=20000))
    x = r.x[:l] - r.x[l:]
    return x, float(r.fun)


@pytest.fixture(scope="session")
def lasso_500():
    """The N=500, l=50, A=I instance with an L-BFGS-B reference."""
    ds, _ = synthetic_instance(0, 500, 50, 0.2)
    p = build_ggfl(GgflModel(ds, 1e-5))
    x, F = lbfgs_l1_logistic(ds, 1e-5)
    return p, SaddleReference(x, x.copy(), F, None, 1e-8)


def pytest_terminal_summary(terminalreporter):
    if _report.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_report.LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
