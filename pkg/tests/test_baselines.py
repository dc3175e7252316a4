import numpy as np
import pytest
import scipy.sparse as sp
from conftest import quadratic_problem

from asadmm.baselines import (CGError, LAdmmConfig, conjugate_gradient, det_inexact_admm,
                              ladmm_solve, ladmm_step)
from asadmm.problem import ProblemSpec, SaddleReference, full_gradient
from asadmm.solver import ConfigError, IterateState, ScheduleConfig, SolverConfig


def test_cg_matches_dense_solve():
    rng = np.random.default_rng(0)
    Q = rng.normal(size=(20, 20))
    M = Q @ Q.T + 0.5 * np.eye(20)
    rhs = rng.normal(size=20)
    x = conjugate_gradient(lambda v: M @ v, rhs, tol=1e-13, max_iter=200)
    np.testing.assert_allclose(x, np.linalg.solve(M, rhs), atol=1e-8)


def test_cg_reports_residual_on_failure():
    M = np.diag(np.logspace(0, 6, 30))
    with pytest.raises(CGError) as ei:
        conjugate_gradient(lambda v: M @ v, np.ones(30), max_iter=2)
    assert ei.value.residual > 0


def test_cg_zero_rhs():
    np.testing.assert_array_equal(conjugate_gradient(lambda v: 2 * v, np.zeros(3)), np.zeros(3))


def test_ladmm_step_identity_closed_form():
    p, _ = quadratic_problem(0, n1=4, A=np.eye(4))
    rng = np.random.default_rng(1)
    st = IterateState.initial(p, *rng.normal(size=(3, 4)))
    cfg = LAdmmConfig(beta=0.3, nu=2.5)
    new = ladmm_step(p, cfg, st)
    g = full_gradient(p, st.x)
    expected = (2.5 * st.x - g + 0.3 * (p.b + st.y + st.lam / 0.3)) / (2.5 + 0.3)
    np.testing.assert_allclose(new.x, expected, rtol=1e-13)
    r = new.x - new.y - p.b
    np.testing.assert_allclose(new.lam, st.lam - 0.3 * r, rtol=1e-12, atol=1e-14)


def test_ladmm_fixed_point():
    p = ProblemSpec(A=sp.identity(3), B=-sp.identity(3), b=np.zeros(3), N=1,
                    component_grad=lambda j, x: x, f_value=lambda x: 0.5 * x @ x,
                    g_value=lambda y: 0.0, g_prox=lambda t, q: q, lipschitz_nu=1.0)
    st = IterateState.initial(p)
    new = ladmm_step(p, LAdmmConfig(), st)
    for a in (new.x, new.y, new.lam):
        np.testing.assert_array_equal(a, 0.0)


def test_ladmm_cg_path_vs_dense():
    rng = np.random.default_rng(2)
    A = rng.normal(size=(30, 20))
    p, _ = quadratic_problem(3, n1=20, n=30, A=A)
    st = IterateState.initial(p, *[rng.normal(size=k) for k in (20, 30, 30)])
    cfg = LAdmmConfig(beta=0.7, nu=3.0)
    new = ladmm_step(p, cfg, st)
    rhs = 3.0 * st.x - full_gradient(p, st.x) + 0.7 * A.T @ (p.b + st.y + st.lam / 0.7)
    expected = np.linalg.solve(3.0 * np.eye(20) + 0.7 * A.T @ A, rhs)
    np.testing.assert_allclose(new.x, expected, atol=1e-8)


def test_ladmm_solve_converges_and_counts():
    p, ref = quadratic_problem(4, n1=5, n=7, N=6)
    res = ladmm_solve(p, LAdmmConfig(beta=1.0, max_outer=400, record_wall_time=False), ref)
    assert all(np.isfinite(r.obj_err) and np.isfinite(r.equ_err) for r in res.trace)
    assert res.trace[-1].equ_err <= 1e-4
    assert [r.grad_components for r in res.trace[:3]] == [6, 12, 18]
    np.testing.assert_allclose(res.state.x, ref.x_star, atol=1e-4)


def test_ladmm_budget_and_validation():
    p, ref = quadratic_problem(4, n1=5, N=6)
    res = ladmm_solve(p, LAdmmConfig(max_outer=100, grad_budget=30), ref)
    assert res.stopped == "grad_budget" and len(res.trace) == 5
    for bad in (dict(beta=0.0), dict(nu=-1.0), dict(cg_tol=0.0), dict(cg_max_iter=0)):
        with pytest.raises(ConfigError):
            LAdmmConfig(**bad)
    q = ProblemSpec(A=np.eye(2), B=np.eye(2), b=np.zeros(2), N=1, component_grad=lambda j, x: x,
                    f_value=lambda x: 0.0, g_value=lambda y: 0.0, g_prox=lambda t, q: q,
                    lipschitz_nu=1.0)
    with pytest.raises(ConfigError):
        ladmm_solve(q, LAdmmConfig())


def test_det_inexact_is_deterministic_and_converges():
    p = ProblemSpec(A=sp.identity(3), B=-sp.identity(3), b=np.zeros(3), N=4,
                    component_grad=lambda j, x: x, f_value=lambda x: 0.5 * x @ x,
                    g_value=lambda y: 0.0, g_prox=lambda t, q: q, lipschitz_nu=1.0)
    ref = SaddleReference(np.zeros(3), np.zeros(3), 0.0)
    cfg = SolverConfig(beta=1.0, s=1.0, sigma=1.0, schedule=ScheduleConfig(M_floor=10),
                       max_outer=200, record_wall_time=False)
    a = det_inexact_admm(p, cfg, ref, x0=np.ones(3))
    b = det_inexact_admm(p, cfg, ref, x0=np.ones(3))
    assert a.trace == b.trace
    assert a.raw_trace[-1].opt_err <= 1e-6
    # every inner step costs one full pass over the N components
    assert a.trace[0].grad_components == 10 * 4
