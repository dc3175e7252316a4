"""Per-iteration error records."""

import math
from dataclasses import dataclass

import numpy as np

from .problem import objective_value, project_x, residual

__all__ = ["MetricsRecord", "compute_metrics", "kkt_residual"]


@dataclass(frozen=True)
class MetricsRecord:
    k: int
    obj_err: float
    equ_err: float
    opt_err: float
    grad_components: int
    wall_seconds: float
    ergodic_flag: bool


def compute_metrics(p, ref, x, y):
    """Return ``(obj_err, equ_err, opt_err)`` at ``(x, y)``.

    ``obj_err = |F(x, y) - F*| / max(F*, 1)`` and ``equ_err = ||Ax + By - b||``.
    Without a reference the objective error is NaN.
    """
    equ = float(np.linalg.norm(residual(p, x, y)))
    if ref is None:
        return math.nan, equ, math.nan
    F = objective_value(p, x, y)
    obj = abs(F - ref.f_star) / max(ref.f_star, 1.0)
    return obj, equ, max(obj, equ)


def kkt_residual(p, x, y, lam, grad_f):
    """``max(||Ax + By - b||, ||grad f(x) - A^T lam||)``.

    With an x-box the stationarity part is the projected-gradient residual
    ``||x - P(x - (grad f(x) - A^T lam))||``. The y-part of the optimality
    system holds by construction after an exact y-step, so it is not measured.
    """
    r = np.linalg.norm(residual(p, x, y))
    g = grad_f - p.A.T @ lam
    if p.x_box is not None:
        g = x - project_x(p, x - g)
    return float(max(r, np.linalg.norm(g)))
