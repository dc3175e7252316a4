"""Deterministic comparison solvers.

* L-ADMM: classic ADMM with ``f`` linearized at ``x^k`` plus a ``nu/2`` proximal
  term; the x-update is a linear solve with ``nu I + beta A^T A``.
* The deterministic inexact ADMM: the accelerated solver run on the problem
  collapsed to a single component (the full gradient) with no sampling noise.
"""

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import is_identity, spmv
from .metrics import MetricsRecord, compute_metrics
from .problem import full_gradient, single_component_view
from .sampler import SamplerConfig
from .solver import ConfigError, DivergenceError, IterateState, SolveResult, lambda_step, solve, y_step

__all__ = [
    "CGError",
    "LAdmmConfig",
    "conjugate_gradient",
    "det_inexact_admm",
    "ladmm_solve",
    "ladmm_step",
]


class CGError(RuntimeError):
    def __init__(self, msg, residual):
        super().__init__(msg)
        self.residual = residual


def conjugate_gradient(matvec, rhs, x0=None, tol=1e-10, max_iter=500):
    """Solve a symmetric positive definite system; `tol` is relative to ``||rhs||``."""
    x = np.zeros_like(rhs) if x0 is None else x0.copy()
    r = rhs - matvec(x)
    target = tol * max(np.linalg.norm(rhs), 1e-300)
    rs = float(r @ r)
    if math.sqrt(rs) <= target:
        return x
    p = r.copy()
    for _ in range(max_iter):
        Ap = matvec(p)
        alpha = rs / float(p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        rs_new = float(r @ r)
        if math.sqrt(rs_new) <= target:
            return x
        p = r + (rs_new / rs) * p
        rs = rs_new
    raise CGError(f"CG did not converge in {max_iter} iterations "
                  f"(residual {math.sqrt(rs):.3e}, target {target:.3e})", math.sqrt(rs))


@dataclass(frozen=True)
class LAdmmConfig:
    beta: float = 0.04
    nu: Optional[float] = None  # default: the problem's Lipschitz constant
    s: float = 1.0
    cg_tol: float = 1e-10
    cg_max_iter: int = 500
    max_outer: int = 100
    grad_budget: Optional[int] = None
    time_budget: Optional[float] = None
    record_wall_time: bool = True

    def __post_init__(self):
        if not self.beta > 0:
            raise ConfigError("beta must be positive")
        if self.nu is not None and not self.nu > 0:
            raise ConfigError("nu must be positive")
        if not self.cg_tol > 0:
            raise ConfigError("cg_tol must be positive")
        if self.cg_max_iter < 1:
            raise ConfigError("cg_max_iter must be >= 1")


def ladmm_step(p, cfg, st, grad=None):
    """One L-ADMM iteration; returns the new :class:`IterateState`."""
    nu = cfg.nu if cfg.nu is not None else p.lipschitz_nu
    beta = cfg.beta
    if grad is None:
        grad = full_gradient(p, st.x)
    rhs = nu * st.x - grad + beta * spmv(p.A, p.b - spmv(p.B, st.y) + st.lam / beta, transpose=True)
    if is_identity(p.A):
        x = rhs / (nu + beta)
    else:
        A = p.A
        x = conjugate_gradient(lambda v: nu * v + beta * (A.T @ (A @ v)), rhs, st.x,
                               cfg.cg_tol, cfg.cg_max_iter)
    y = y_step(p, beta, x, st)
    r = spmv(p.A, x) + spmv(p.B, y) - p.b
    lam = lambda_step(st.lam, cfg.s, beta, r)
    return IterateState(x, y, lam, x.copy(), st.k + 1, r)


def ladmm_solve(p, cfg, reference=None, x0=None, y0=None, lam0=None):
    """Run L-ADMM; each iteration costs ``N`` component gradients."""
    if not p.B_is_neg_identity:
        raise ConfigError("L-ADMM needs B = -I")
    st = IterateState.initial(p, x0, y0, lam0)
    t0 = time.perf_counter()
    count = 0
    trace = []
    stopped = "max_outer"
    for _ in range(cfg.max_outer):
        k = st.k
        st = ladmm_step(p, cfg, st)
        count += p.N * p.eval_weight
        if not np.all(np.isfinite(st.x)):
            raise DivergenceError(f"L-ADMM produced non-finite iterate at k={k}")
        wall = time.perf_counter() - t0 if cfg.record_wall_time else 0.0
        obj, equ, opt = compute_metrics(p, reference, st.x, st.y)
        trace.append(MetricsRecord(k, obj, equ, opt, count, wall, False))
        if cfg.grad_budget is not None and count >= cfg.grad_budget:
            stopped = "grad_budget"
            break
        if cfg.time_budget is not None and time.perf_counter() - t0 >= cfg.time_budget:
            stopped = "time_budget"
            break
    return SolveResult(st, None, None, None, trace, {}, stopped)


def det_inexact_admm(p, cfg, reference=None, x0=None, y0=None, lam0=None):
    """Accelerated ADMM with exact gradients (``N = 1``, no correction term)."""
    view = single_component_view(p)
    return solve(view, cfg, SamplerConfig(mode="plain", rng_seed=0), reference, x0, y0, lam0)
