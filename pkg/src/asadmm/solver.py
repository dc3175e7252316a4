"""Accelerated stochastic ADMM.

Outer loop::

    h^k       = -A^T [lam^k - beta (A x^k + B y^k - b)]
    x^{k+1}   = xsub(x^k, x_breve^k, h^k)             # M_k inner steps
    y^{k+1}   = argmin g(y) + beta/2 ||A x^{k+1} + B y - b - lam^k / beta||^2
    lam^{k+1} = lam^k - s beta (A x^{k+1} + B y^{k+1} - b)

Inner loop (``t = 1..M_k``, with ``beta_t = 2/(t+1)``, ``gamma_t = 2/(t eta_k)``)::

    x_hat     = beta_t x_breve_t + (1 - beta_t) x_t
    d_t       = stochastic gradient at x_hat
    x_breve   = argmin <d_t + h, x> + gamma_t/2 ||x - x_breve_t||_H^2
                       + rho_k/2 ||x - x^k||^2        over the x-box
    x_{t+1}   = beta_t x_breve_{t+1} + (1 - beta_t) x_t

Only diagonal ``H`` and proximal matrices ``rho_k I`` are supported, which
makes every inner step a componentwise update.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linalg import DiagMetric, as_vector, power_iteration_norm, spmv
from .metrics import MetricsRecord, compute_metrics
from .problem import project_x, residual
from .sampler import Sampler, SamplerConfig

__all__ = [
    "AdaptiveProxConfig",
    "AdaptiveProxState",
    "ConfigError",
    "DivergenceError",
    "ErgodicAccumulator",
    "InnerStepParams",
    "IterateState",
    "ScheduleConfig",
    "SolveResult",
    "SolverConfig",
    "ASADMM",
    "adaptive_rho_update",
    "compute_h",
    "inner_params",
    "lambda_step",
    "metric_lipschitz",
    "schedule_step",
    "solve",
    "xsub",
    "y_step",
    "y_step_linearized",
]

log = logging.getLogger(__name__)

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


class ConfigError(ValueError):
    """Invalid or inconsistent solver configuration."""


class DivergenceError(RuntimeError):
    """Raised when the iterates blow up."""


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ScheduleConfig:
    """Inner-iteration count ``M_k`` and step parameter ``eta_k``.

    ``power``:  ``M_k = max(ceil(c3 k^rho_exp), M_floor)``,
    ``eta_k = min(c1 / (M_k (M_k + 1)), c2)``.

    ``constant``: ``M_k = M_floor``, ``eta_k = eta_const``.

    ``geometric``: ``M_k = ceil((1+theta)^2 M_{k-1} (||x_breve^k||^2 + 1))``
    starting from ``M_floor``, ``eta_k = (1+theta)^{-k} / M_k``; capped at
    ``M_cap``.

    ``c1``, ``c2`` and ``eta_const`` default to ``1/nu``, ``1/(2 nu)`` and
    ``1/(2 nu)``; which ``nu`` is used is set by ``SolverConfig.nu_metric``.
    """

    kind: str = "power"
    c1: Optional[float] = None
    c2: Optional[float] = None
    c3: float = 0.01
    rho_exp: float = 1.1
    M_floor: int = 200
    eta_const: Optional[float] = None
    theta: float = 0.1
    M_cap: int = 10**6

    def __post_init__(self):
        if self.kind not in ("power", "constant", "geometric"):
            raise ConfigError(f"unknown schedule kind {self.kind!r}")
        for name in ("c1", "c2", "eta_const"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigError(f"{name} must be positive")
        if not self.c3 > 0:
            raise ConfigError("c3 must be positive")
        if not self.rho_exp >= 1:
            raise ConfigError("rho_exp must be >= 1")
        if self.M_floor < 1:
            raise ConfigError("M_floor must be >= 1")
        if not self.theta > 0:
            raise ConfigError("theta must be positive")
        if self.M_cap < self.M_floor:
            raise ConfigError("M_cap must be >= M_floor")


@dataclass(frozen=True)
class AdaptiveProxConfig:
    enabled: bool = True
    rho0: float = 1.0
    rho_min: float = 1e-5
    growth: float = 1.1

    def __post_init__(self):
        if not (self.rho0 > 0 and self.rho_min > 0):
            raise ConfigError("rho0 and rho_min must be positive")
        if not self.growth > 1:
            raise ConfigError("growth must exceed 1")


@dataclass(frozen=True)
class SolverConfig:
    beta: float = 0.04
    s: float = 1.618
    sigma: float = 2e-5
    H: Optional[DiagMetric] = None  # overrides sigma * I when given
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    adaptive_prox: AdaptiveProxConfig = field(default_factory=AdaptiveProxConfig)
    nu_metric: str = "euclidean"  # or "H": nu measured as ||.||_{H^-1} <= nu ||.||_H
    y_mode: str = "exact"
    tau: Optional[float] = None
    max_outer: int = 100
    obj_tol: float = 0.0  # stop once the ergodic opt_err reaches this (needs a reference)
    feas_tol: float = 0.0  # ... and the ergodic equ_err reaches this
    ergodic_kappa: int = 0
    grad_budget: Optional[int] = None
    time_budget: Optional[float] = None
    divergence_factor: float = 1e6
    record_wall_time: bool = True

    def __post_init__(self):
        if not self.beta > 0:
            raise ConfigError("beta must be positive")
        if not 0 < self.s <= GOLDEN:
            raise ConfigError(f"s must lie in (0, {GOLDEN:.6f}]")
        if not self.sigma > 0:
            raise ConfigError("sigma must be positive")
        if self.nu_metric not in ("euclidean", "H"):
            raise ConfigError(f"unknown nu_metric {self.nu_metric!r}")
        if self.y_mode not in ("exact", "linearized"):
            raise ConfigError(f"unknown y_mode {self.y_mode!r}")
        if self.y_mode == "linearized" and not (self.tau is not None and self.tau > 0):
            raise ConfigError("linearized y_mode needs tau > 0")
        if self.max_outer < 1:
            raise ConfigError("max_outer must be >= 1")
        if self.ergodic_kappa < 0:
            raise ConfigError("ergodic_kappa must be >= 0")

    def metric(self, dim):
        if self.H is not None:
            if self.H.dim != dim:
                raise ConfigError(f"H has dimension {self.H.dim}, expected {dim}")
            return self.H
        return DiagMetric.scaled_identity(self.sigma, dim)


def metric_lipschitz(nu_euclid, H):
    """Lipschitz constant of the gradients measured as ``||.||_{H^-1} <= nu ||.||_H``."""
    return nu_euclid / H.min()


# --------------------------------------------------------------------------
# small operations


@dataclass(frozen=True)
class InnerStepParams:
    beta_t: float
    gamma_t: float
    Gamma_t: float


def inner_params(t, eta_k):
    if t < 1 or not eta_k > 0:
        raise ValueError("need t >= 1 and eta_k > 0")
    return InnerStepParams(2.0 / (t + 1), 2.0 / (t * eta_k), 2.0 / (t * (t + 1)))


def schedule_step(sc, k, nu, x_breve_norm_sq=0.0, M_prev=None):
    """Return ``(M_k, eta_k, capped)`` for outer iteration `k`."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    capped = False
    if sc.kind == "power":
        M = max(math.ceil(sc.c3 * k**sc.rho_exp), sc.M_floor)
        c1 = sc.c1 if sc.c1 is not None else 1.0 / nu
        c2 = sc.c2 if sc.c2 is not None else 1.0 / (2.0 * nu)
        eta = min(c1 / (M * (M + 1.0)), c2)
    elif sc.kind == "constant":
        M = sc.M_floor
        eta = sc.eta_const if sc.eta_const is not None else 1.0 / (2.0 * nu)
    else:
        if k == 0 or M_prev is None:
            M = sc.M_floor
        else:
            grow = (1.0 + sc.theta) ** 2 * M_prev * (x_breve_norm_sq + 1.0)
            M = math.ceil(grow) if math.isfinite(grow) else sc.M_cap + 1
        if M > sc.M_cap:
            log.warning("geometric schedule capped at M=%d (k=%d)", sc.M_cap, k)
            M, capped = sc.M_cap, True
        eta = (1.0 + sc.theta) ** (-k) / M
    return int(M), float(eta), capped


@dataclass
class AdaptiveProxState:
    rho_cur: float
    rho_min: float
    growth_eta: float
    bump_count: int = 0
    prev_x: Optional[np.ndarray] = None

    @classmethod
    def from_config(cls, cfg):
        return cls(cfg.rho0, cfg.rho_min, cfg.growth)


def adaptive_rho_update(aps, A, beta, x_new, x_prev):
    """Update ``rho`` from the Rayleigh quotient of ``beta A^T A`` along the last step.

    ``rho_min`` is multiplied by the growth factor whenever the previous
    ``rho`` falls below the new estimate. Without a usable step the current
    value is kept.
    """
    if x_prev is None:
        return aps.rho_cur
    diff = x_new - x_prev
    d1 = float(diff @ diff)
    if d1 == 0.0:
        return aps.rho_cur
    Ad = spmv(A, diff)
    est = beta * float(Ad @ Ad) / d1
    if aps.rho_cur < est:
        aps.rho_min *= aps.growth_eta
        aps.bump_count += 1
    aps.rho_cur = max(aps.rho_min, est)
    return aps.rho_cur


@dataclass
class IterateState:
    x: np.ndarray
    y: np.ndarray
    lam: np.ndarray
    x_breve: np.ndarray
    k: int
    residual: np.ndarray

    @classmethod
    def initial(cls, p, x0=None, y0=None, lam0=None):
        x = np.zeros(p.n1) if x0 is None else as_vector(x0, p.n1, "x0").copy()
        y = np.zeros(p.n2) if y0 is None else as_vector(y0, p.n2, "y0").copy()
        lam = np.zeros(p.n) if lam0 is None else as_vector(lam0, p.n, "lam0").copy()
        return cls(x, y, lam, x.copy(), 0, residual(p, x, y))


def compute_h(p, st, beta):
    """``-A^T (lam - beta (A x + B y - b))``."""
    return -spmv(p.A, st.lam - beta * st.residual, transpose=True)


def xsub(p, H, sampler, x_k, x_breve_k, h, M_k, eta_k, rho_k, trace=None):
    """Run `M_k` accelerated stochastic steps on the linearized x-subproblem.

    Returns ``(x_new, x_breve_new, evaluations)``. When `trace` is a list,
    every ``x_breve_{t+1}`` is appended to it.
    """
    Hd = H.diagonal
    x = x_k.copy()
    xb = x_breve_k.copy()
    rho_xk_minus_h = rho_k * x_k - h
    cost = 0
    for t in range(1, M_k + 1):
        bt = 2.0 / (t + 1)
        gH = (2.0 / (t * eta_k)) * Hd
        x_hat = bt * xb + (1.0 - bt) * x
        direction = sampler.draw(x_hat)
        d = direction.d
        if not np.all(np.isfinite(d)):
            raise DivergenceError(f"non-finite stochastic gradient at inner step t={t}")
        cost += direction.components_used
        xb = (gH * xb + rho_xk_minus_h - d) / (gH + rho_k)
        xb = project_x(p, xb)
        x = bt * xb + (1.0 - bt) * x
        if trace is not None:
            trace.append(xb.copy())
    return x, xb, cost


def y_step(p, beta, x_new, st):
    """Exact y-update; needs ``B = -I`` so it reduces to a prox of ``g``."""
    if not p.B_is_neg_identity:
        raise ConfigError("exact y-step needs B = -I; use y_mode='linearized'")
    v = spmv(p.A, x_new) - p.b - st.lam / beta
    return p.g_prox(beta, v)


def y_step_linearized(p, beta, x_new, st, tau):
    """Prox step on g with the penalty linearized around ``y^k``."""
    q = st.y - spmv(p.B, beta * (spmv(p.A, x_new) + spmv(p.B, st.y) - p.b) - st.lam,
                    transpose=True) / tau
    return p.g_prox(tau, q)


def lambda_step(lam, s, beta, r_new):
    return lam - s * beta * r_new


class ErgodicAccumulator:
    """Running means of ``x^{k+1}``, ``y^{k+1}`` and ``lam^k - beta (A x^{k+1} + B y^k - b)``."""

    def __init__(self, n1, n2, n):
        self.count = 0
        self.sum_x = np.zeros(n1)
        self.sum_y = np.zeros(n2)
        self.sum_lam = np.zeros(n)

    def add(self, x, y, lam_tilde):
        self.count += 1
        self.sum_x += x
        self.sum_y += y
        self.sum_lam += lam_tilde

    def read(self):
        if self.count == 0:
            raise ValueError("ergodic accumulator is empty")
        c = self.count
        return self.sum_x / c, self.sum_y / c, self.sum_lam / c


# --------------------------------------------------------------------------
# driver


@dataclass
class SolveResult:
    state: IterateState
    x_erg: Optional[np.ndarray]
    y_erg: Optional[np.ndarray]
    lam_erg: Optional[np.ndarray]
    trace: list
    history: dict
    stopped: str

    @property
    def raw_trace(self):
        return [r for r in self.trace if not r.ergodic_flag]

    @property
    def ergodic_trace(self):
        return [r for r in self.trace if r.ergodic_flag]


class ASADMM:
    """One accelerated stochastic ADMM run.

    Parameters
    ----------
    problem : ProblemSpec
    cfg : SolverConfig
    sampler : Sampler or SamplerConfig
    reference : SaddleReference, optional
        Used for error metrics and the objective stopping rule.
    """

    def __init__(self, problem, cfg, sampler, reference=None, x0=None, y0=None, lam0=None):
        p = problem
        self.p = p
        self.cfg = cfg
        self.sampler = sampler if isinstance(sampler, Sampler) else Sampler(sampler, p)
        self.reference = reference
        self.H = cfg.metric(p.n1)
        if cfg.nu_metric == "H":
            self.nu = metric_lipschitz(p.lipschitz_nu, self.H)
        else:
            self.nu = p.lipschitz_nu
        if cfg.y_mode == "exact" and not p.B_is_neg_identity:
            raise ConfigError("exact y-step needs B = -I; use y_mode='linearized'")
        if cfg.y_mode == "linearized":
            bound = cfg.beta * power_iteration_norm(p.B)
            if cfg.tau < bound * (1 - 1e-9):
                raise ConfigError(f"tau={cfg.tau} is below beta*||B^T B|| ~ {bound:.6g}")

        self.state = IterateState.initial(p, x0, y0, lam0)
        self.aps = AdaptiveProxState.from_config(cfg.adaptive_prox)
        self.erg = ErgodicAccumulator(p.n1, p.n2, p.n)
        self.M_prev = None
        self.x_prev = None
        self.grad_count = 0
        self.r0 = max(float(np.linalg.norm(self.state.residual)), 1.0)
        self.history = {"M": [], "eta": [], "rho": [], "bumps": [], "capped": [], "anchored": []}
        self.trace = []
        self._t0 = time.perf_counter()
        self.xsub_trace = None  # set to a list to record inner iterates

    def _wall(self):
        return time.perf_counter() - self._t0 if self.cfg.record_wall_time else 0.0

    def ergodic_anchor(self):
        if self.erg.count == 0:
            return self.state.x
        return self.erg.sum_x / self.erg.count

    def step(self):
        """One outer iteration; returns the metrics records it produced."""
        p, cfg, st = self.p, self.cfg, self.state
        k = st.k
        M_k, eta_k, capped = schedule_step(cfg.schedule, k, self.nu,
                                           float(st.x_breve @ st.x_breve), self.M_prev)
        if cfg.adaptive_prox.enabled:
            rho_k = adaptive_rho_update(self.aps, p.A, cfg.beta, st.x, self.x_prev)
        else:
            rho_k = cfg.adaptive_prox.rho0
        h = compute_h(p, st, cfg.beta)
        self.grad_count += self.sampler.prepare(k, M_k, self.ergodic_anchor())

        inner = [] if self.xsub_trace is not None else None
        x_new, xb_new, cost = xsub(p, self.H, self.sampler, st.x, st.x_breve, h,
                                   M_k, eta_k, rho_k, trace=inner)
        if inner is not None:
            self.xsub_trace.append((M_k, x_new, inner))
        self.grad_count += cost

        Ax_new = spmv(p.A, x_new)
        lam_tilde = st.lam - cfg.beta * (Ax_new + spmv(p.B, st.y) - p.b)
        if cfg.y_mode == "exact":
            y_new = y_step(p, cfg.beta, x_new, st)
        else:
            y_new = y_step_linearized(p, cfg.beta, x_new, st, cfg.tau)
        r_new = Ax_new + spmv(p.B, y_new) - p.b
        lam_new = lambda_step(st.lam, cfg.s, cfg.beta, r_new)

        rn = float(np.linalg.norm(r_new))
        if not (math.isfinite(rn) and np.all(np.isfinite(x_new))) or rn > cfg.divergence_factor * self.r0:
            raise DivergenceError(
                f"diverged at k={k}: residual {rn:.3e} vs initial {self.r0:.3e}")

        if k >= cfg.ergodic_kappa:
            self.erg.add(x_new, y_new, lam_tilde)

        self.x_prev = st.x
        self.M_prev = M_k
        self.state = IterateState(x_new, y_new, lam_new, xb_new, k + 1, r_new)
        h_ = self.history
        h_["M"].append(M_k)
        h_["eta"].append(eta_k)
        h_["rho"].append(rho_k)
        h_["bumps"].append(self.aps.bump_count)
        h_["capped"].append(capped)
        h_["anchored"].append(self.sampler.anchored)

        wall = self._wall()
        recs = [self._record(k, x_new, y_new, wall, False)]
        if self.erg.count:
            xe, ye, _ = self.erg.read()
            recs.append(self._record(k, xe, ye, wall, True))
        self.trace.extend(recs)
        return recs

    def _record(self, k, x, y, wall, ergodic):
        obj, equ, opt = compute_metrics(self.p, self.reference, x, y)
        return MetricsRecord(k, obj, equ, opt, self.grad_count, wall, ergodic)

    def _should_stop(self, recs):
        cfg = self.cfg
        if cfg.grad_budget is not None and self.grad_count >= cfg.grad_budget:
            return "grad_budget"
        if cfg.time_budget is not None and time.perf_counter() - self._t0 >= cfg.time_budget:
            return "time_budget"
        use_obj = cfg.obj_tol > 0 and self.reference is not None
        if (use_obj or cfg.feas_tol > 0) and self.erg.count:
            last = recs[-1]
            ok_obj = not use_obj or last.opt_err <= cfg.obj_tol
            ok_feas = cfg.feas_tol <= 0 or last.equ_err <= cfg.feas_tol
            if ok_obj and ok_feas:
                return "tolerance"
        return None

    def run(self):
        stopped = "max_outer"
        for _ in range(self.cfg.max_outer):
            recs = self.step()
            why = self._should_stop(recs)
            if why:
                stopped = why
                break
        if self.erg.count:
            xe, ye, le = self.erg.read()
        else:
            xe = ye = le = None
        return SolveResult(self.state, xe, ye, le, self.trace, self.history, stopped)


def solve(problem, cfg, sampler=None, reference=None, x0=None, y0=None, lam0=None):
    """Run the accelerated stochastic ADMM and return a :class:`SolveResult`."""
    if sampler is None:
        sampler = SamplerConfig()
    return ASADMM(problem, cfg, sampler, reference, x0, y0, lam0).run()
