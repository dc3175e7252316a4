"""Stochastic gradient directions for the inner accelerated loop.

Three modes are supported:

``plain``
    ``d = grad f_xi(x_hat)`` for one uniformly drawn component.
``svrg_anchor``
    ``d = grad f_xi(x_hat) - grad f_xi(x_bar) + grad f(x_bar)`` where
    ``x_bar`` is an anchor point with a stored full gradient.
``minibatch``
    ``d = mean_{i in U} [grad f_i(x_hat) - grad f_i(x_bar)] + grad f(x_bar)``
    with ``U`` drawn without replacement and ``|U| = min(ceil(c (1+k)^rho), N)``.

The anchor correction is only applied in outer iterations whose inner loop
length exceeds ``anchor_threshold``; otherwise anchored modes fall back to
their uncorrected form. All randomness comes from a Philox generator so a
seed fixes the entire sample sequence.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .problem import full_gradient

__all__ = [
    "AnchorState",
    "GradientDirection",
    "Sampler",
    "SamplerConfig",
    "batch_size",
    "draw_direction",
    "refresh_anchor",
]

MODES = ("plain", "svrg_anchor", "minibatch")


@dataclass(frozen=True)
class SamplerConfig:
    mode: str = "svrg_anchor"
    rng_seed: int = 0
    batch_c: float = 1.0
    batch_rho: float = 1.0
    anchor_threshold: Optional[int] = None  # None: use the x dimension

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"sampler mode must be one of {MODES}, got {self.mode!r}")
        if not self.batch_c > 0:
            raise ValueError("batch_c must be positive")
        if not self.batch_rho >= 1:
            raise ValueError("batch_rho must be >= 1")
        if self.anchor_threshold is not None and self.anchor_threshold < 0:
            raise ValueError("anchor_threshold must be nonnegative")


@dataclass
class AnchorState:
    anchor_point: Optional[np.ndarray] = None
    anchor_full_grad: Optional[np.ndarray] = None
    valid: bool = False


@dataclass
class GradientDirection:
    d: np.ndarray
    components_used: int
    sample_indices: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    anchored: bool = False


def batch_size(cfg, k, N):
    """``min(ceil(c (1+k)^rho), N)``, never below 1."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    m = math.ceil(cfg.batch_c * (1.0 + k) ** cfg.batch_rho)
    return int(min(max(m, 1), N))


def refresh_anchor(anchor, p, point):
    """Return a valid anchor at `point` and the evaluation cost it incurred.

    Refreshing at the current anchor point costs nothing and returns the
    same state.
    """
    point = np.asarray(point, dtype=float)
    if anchor.valid and np.array_equal(anchor.anchor_point, point):
        return anchor, 0
    g = full_gradient(p, point)
    return AnchorState(point.copy(), g, True), p.N * p.eval_weight


def draw_direction(cfg, anchor, p, x_hat, k, rng, use_anchor=True):
    """Draw one direction ``d_t`` at `x_hat` for outer iteration `k`."""
    if cfg.mode != "plain" and use_anchor and not anchor.valid:
        raise ValueError(f"mode {cfg.mode!r} needs a valid anchor")
    anchored = cfg.mode != "plain" and use_anchor
    w = p.eval_weight

    if cfg.mode == "minibatch":
        m = batch_size(cfg, k, p.N)
        idx = rng.choice(p.N, size=m, replace=False) if m < p.N else np.arange(p.N)
    else:
        m = 1
        idx = np.array([rng.integers(p.N)])

    if m == 1:
        j = int(idx[0])
        d = p.component_grad(j, x_hat)
        if anchored:
            d = d - p.component_grad(j, anchor.anchor_point) + anchor.anchor_full_grad
    else:
        d = p.mean_grad(idx, x_hat)
        if anchored:
            d = d - p.mean_grad(idx, anchor.anchor_point) + anchor.anchor_full_grad

    cost = m * w * (2 if anchored else 1)
    return GradientDirection(d, cost, idx, anchored)


class Sampler:
    """Stateful direction generator owned by one solve.

    Parameters
    ----------
    cfg : SamplerConfig
    problem : ProblemSpec
    """

    def __init__(self, cfg, problem):
        self.cfg = cfg
        self.problem = problem
        self.rng = np.random.Generator(np.random.Philox(cfg.rng_seed))
        self.anchor = AnchorState()
        self.threshold = problem.n1 if cfg.anchor_threshold is None else cfg.anchor_threshold
        self._use_anchor = False
        self.k = 0

    def prepare(self, k, M_k, anchor_point):
        """Set up outer iteration `k`; returns gradient evaluations spent."""
        self.k = k
        self._use_anchor = self.cfg.mode != "plain" and M_k > self.threshold
        if not self._use_anchor:
            return 0
        self.anchor, cost = refresh_anchor(self.anchor, self.problem, anchor_point)
        return cost

    @property
    def anchored(self):
        return self._use_anchor

    def draw(self, x_hat):
        return draw_direction(self.cfg, self.anchor, self.problem, x_hat, self.k,
                              self.rng, self._use_anchor)
