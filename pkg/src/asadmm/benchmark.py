"""Benchmark harness: reference solves, seeded solver runs, aggregation and plot data.

Output layout of :func:`run_benchmark` under ``cfg.output_dir``::

    traces/<solver>_seed<seed>.csv   full raw + ergodic trace of one run
    aggregate.csv                    mean/min/max opt_err per (solver, series, k)
    plot_grad.dat, plot_wall.dat     gnuplot-style series, one block per solver
    failures.txt                     one line per failed run (only if any failed)
"""

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.io

from .baselines import LAdmmConfig, det_inexact_admm, ladmm_solve
from .io import parse_libsvm, write_metrics_csv
from .metrics import compute_metrics, kkt_residual
from .models import GgflModel, build_ggfl, build_graph_G, synthetic_instance
from .problem import SaddleReference, full_gradient, objective_value, single_component_view
from .sampler import SamplerConfig
from .solver import ASADMM, ScheduleConfig, SolverConfig, solve

__all__ = [
    "AggregateRow",
    "BenchmarkResult",
    "ConvergenceError",
    "aggregate_traces",
    "build_problem",
    "compute_metrics",
    "compute_reference",
    "emit_plotdata",
    "load_reference",
    "plot_series",
    "run_benchmark",
    "run_one",
    "save_reference",
    "write_aggregate_csv",
]

log = logging.getLogger(__name__)

PLOT_FLOOR = 1e-16


class ConvergenceError(RuntimeError):
    """The reference solve missed its tolerance; carries the best point found."""

    def __init__(self, msg, best_value, best_kkt, best_reference):
        super().__init__(msg)
        self.best_value = best_value
        self.best_kkt = best_kkt
        self.best_reference = best_reference


# --------------------------------------------------------------------------
# reference solutions


def compute_reference(p, budget=5000, tol=1e-6, beta=0.002, M=20, check_every=25):
    """High-accuracy saddle point from a long deterministic run.

    Runs the deterministic inexact ADMM (the accelerated solver on the
    full-gradient view of `p`, as in :func:`asadmm.baselines.det_inexact_admm`)
    with penalty `beta`, unit dual step and `M` inner steps per outer
    iteration, and stops once the KKT residual drops to `tol`. The small
    default `beta` suits the fused-lasso instances.

    Parameters
    ----------
    p : ProblemSpec
    budget : int
        Maximum number of outer iterations.
    tol : float
        Target KKT residual (see :func:`asadmm.metrics.kkt_residual`).

    Raises
    ------
    ConvergenceError
        If `tol` is not reached within `budget` iterations.
    """
    if budget < 1:
        raise ValueError("budget must be positive")
    cfg = SolverConfig(beta=beta, s=1.0, sigma=1.0, nu_metric="H",
                       schedule=ScheduleConfig(kind="constant", M_floor=M),
                       max_outer=budget, record_wall_time=False)
    run = ASADMM(single_component_view(p), cfg, SamplerConfig(mode="plain"))
    best = None
    for it in range(1, budget + 1):
        run.step()
        if it % check_every and it != budget:
            continue
        st = run.state
        kkt = kkt_residual(p, st.x, st.y, st.lam, full_gradient(p, st.x))
        if best is None or kkt < best[0]:
            ref = SaddleReference(st.x.copy(), st.y.copy(), objective_value(p, st.x, st.y),
                                  st.lam.copy(), feas_tol=max(tol, kkt))
            best = (kkt, ref)
        if kkt <= tol:
            log.info("reference converged: k=%d kkt=%.3e f*=%.12g", it, kkt, best[1].f_star)
            return best[1]
    kkt, ref = best
    raise ConvergenceError(
        f"reference KKT residual {kkt:.3e} above {tol:.1e} after {budget} iterations "
        f"(best objective {ref.f_star:.12g})", ref.f_star, kkt, ref)


def save_reference(ref, path):
    np.savez(path, x_star=ref.x_star, y_star=ref.y_star, f_star=ref.f_star,
             lam_star=ref.lam_star if ref.lam_star is not None else np.empty(0),
             feas_tol=ref.feas_tol)


def load_reference(path):
    with np.load(path) as z:
        lam = z["lam_star"]
        return SaddleReference(z["x_star"].copy(), z["y_star"].copy(), float(z["f_star"]),
                               lam.copy() if lam.size else None, float(z["feas_tol"]))


# --------------------------------------------------------------------------
# problems and single runs


def build_problem(cfg):
    """The GGFL instance described by a :class:`RunConfig`."""
    if cfg.problem == "synthetic":
        ds, _ = synthetic_instance(cfg.synth_seed, cfg.synth_N, cfg.synth_l,
                                   cfg.synth_sparsity, cfg.synth_density)
    else:
        ds = parse_libsvm(cfg.dataset_path)
    G = None
    if cfg.A_kind == "stacked_graph":
        if cfg.graph_path:
            G = scipy.io.mmread(cfg.graph_path).tocsr()
        else:
            G = build_graph_G(ds, cfg.corr_threshold)
    return build_ggfl(GgflModel(ds, cfg.mu, cfg.A_kind, G))


def run_one(cfg, solver, seed, p, reference=None):
    """Run one solver once; returns its :class:`SolveResult`."""
    if solver == "asadmm":
        return solve(p, cfg.solver_config(), cfg.sampler_config(seed), reference)
    if solver == "ladmm":
        lc = LAdmmConfig(beta=cfg.beta, nu=cfg.ladmm_nu, s=cfg.ladmm_s, max_outer=cfg.max_outer,
                         grad_budget=cfg.grad_budget, time_budget=cfg.time_budget,
                         record_wall_time=cfg.record_wall_time)
        return ladmm_solve(p, lc, reference)
    if solver == "det_inexact":
        return det_inexact_admm(p, cfg.solver_config(), reference)
    raise ValueError(f"unknown solver {solver!r}")


def _job(cfg, solver, seed, reference):
    # worker entry point: problems hold closures, so each worker rebuilds its own
    return run_one(cfg, solver, seed, build_problem(cfg), reference).trace


# --------------------------------------------------------------------------
# aggregation and plot data


@dataclass(frozen=True)
class AggregateRow:
    solver: str
    series: str  # "raw" or "ergodic"
    k: int
    n_runs: int
    grad_mean: float
    wall_mean: float
    opt_mean: float
    opt_min: float
    opt_max: float


def aggregate_traces(traces):
    """Per-iteration statistics across seeds.

    Parameters
    ----------
    traces : dict
        ``solver -> list of traces`` (one trace per seed).

    Returns
    -------
    list of AggregateRow
        Only iterations present in every run of a solver are kept.
    """
    rows = []
    for solver in sorted(traces):
        runs = traces[solver]
        if not runs:
            continue
        for series, flag in (("raw", False), ("ergodic", True)):
            per_run = [[r for r in tr if r.ergodic_flag == flag] for tr in runs]
            length = min(len(t) for t in per_run)
            for i in range(length):
                recs = [t[i] for t in per_run]
                ks = {r.k for r in recs}
                if len(ks) != 1:
                    raise ValueError(f"{solver}: runs disagree on iteration index at row {i}")
                opt = np.array([r.opt_err for r in recs])
                rows.append(AggregateRow(
                    solver, series, recs[0].k, len(recs),
                    float(np.mean([r.grad_components for r in recs])),
                    float(np.mean([r.wall_seconds for r in recs])),
                    float(np.mean(opt)), float(np.min(opt)), float(np.max(opt))))
    return rows


AGG_COLUMNS = ("solver", "series", "k", "n_runs", "grad_mean", "wall_mean",
               "opt_mean", "opt_min", "opt_max")


def write_aggregate_csv(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGG_COLUMNS)
        for r in rows:
            w.writerow([r.solver, r.series, r.k, r.n_runs] +
                       [f"{v:.16e}" if math.isfinite(v) else repr(v)
                        for v in (r.grad_mean, r.wall_mean, r.opt_mean, r.opt_min, r.opt_max)])


def plot_series(rows, axis="grad", raw_fraction=1.0 / 3.0):
    """Reported curve per solver.

    Solvers with an ergodic series report raw iterates up to `raw_fraction`
    of the largest abscissa and ergodic iterates afterwards; others report
    raw iterates throughout.

    Returns
    -------
    dict
        ``solver -> list of (abscissa, opt_err)``.
    """
    if axis not in ("grad", "wall"):
        raise ValueError("axis must be 'grad' or 'wall'")
    key = "grad_mean" if axis == "grad" else "wall_mean"
    out = {}
    for solver in sorted({r.solver for r in rows}):
        raw = [r for r in rows if r.solver == solver and r.series == "raw"]
        erg = [r for r in rows if r.solver == solver and r.series == "ergodic"]
        if erg:
            total = max(getattr(r, key) for r in raw + erg)
            cut = raw_fraction * total
            chosen = [r for r in raw if getattr(r, key) <= cut] + \
                     [r for r in erg if getattr(r, key) > cut]
        else:
            chosen = raw
        out[solver] = [(getattr(r, key), r.opt_mean) for r in chosen]
    return out


def emit_plotdata(aggregate, path, axis="grad", raw_fraction=1.0 / 3.0):
    """Write two-column ``abscissa opt_err`` blocks, one per solver.

    Blocks are separated by two blank lines (gnuplot ``index``). Rows with a
    NaN error are dropped and errors are floored at 1e-16 for log axes.
    """
    series = plot_series(aggregate, axis, raw_fraction)
    label = "grad_components" if axis == "grad" else "wall_seconds"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# abscissa={label} ordinate=opt_err\n")
        first = True
        for solver, pts in series.items():
            if not first:
                fh.write("\n\n")
            first = False
            fh.write(f"# solver {solver}\n")
            for x, y in pts:
                if math.isnan(y):
                    continue
                fh.write(f"{x:.16e} {max(y, PLOT_FLOOR):.16e}\n")


# --------------------------------------------------------------------------
# driver


@dataclass
class BenchmarkResult:
    reference: SaddleReference
    trace_paths: dict = field(default_factory=dict)  # (solver, seed) -> path
    aggregate_path: str = ""
    plot_paths: tuple = ()
    failures: list = field(default_factory=list)  # (solver, seed, message)

    @property
    def ok(self):
        return not self.failures


def run_benchmark(cfg, problem=None, reference=None):
    """Run every (solver, seed) pair of `cfg` and write the artifact files.

    A failing run is logged and recorded in ``failures``; the others continue.
    """
    out = cfg.output_dir
    os.makedirs(os.path.join(out, "traces"), exist_ok=True)
    p = problem if problem is not None else build_problem(cfg)
    if reference is None:
        if cfg.reference_path:
            reference = load_reference(cfg.reference_path)
        else:
            reference = compute_reference(p, cfg.reference_budget, cfg.reference_tol,
                                          cfg.reference_beta, cfg.reference_M)
    jobs = [(solver, seed) for solver in cfg.solvers for seed in cfg.seeds]
    result = BenchmarkResult(reference)
    traces = {}

    if cfg.workers > 1 and problem is None:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(_job, cfg, sv, sd, reference) for sv, sd in jobs]
            outcomes = []
            for fut in futures:
                try:
                    outcomes.append((fut.result(), None))
                except Exception as exc:  # noqa: BLE001 - recorded, run continues
                    outcomes.append((None, exc))
    else:
        outcomes = []
        for sv, sd in jobs:
            try:
                outcomes.append((run_one(cfg, sv, sd, p, reference).trace, None))
            except Exception as exc:  # noqa: BLE001
                outcomes.append((None, exc))

    for (solver, seed), (trace, exc) in zip(jobs, outcomes):
        if exc is not None:
            log.error("run %s seed %d failed: %s", solver, seed, exc)
            result.failures.append((solver, seed, f"{type(exc).__name__}: {exc}"))
            continue
        path = os.path.join(out, "traces", f"{solver}_seed{seed}.csv")
        write_metrics_csv(trace, path)
        result.trace_paths[(solver, seed)] = path
        traces.setdefault(solver, []).append(trace)

    rows = aggregate_traces(traces)
    result.aggregate_path = os.path.join(out, "aggregate.csv")
    write_aggregate_csv(rows, result.aggregate_path)
    plots = []
    for axis in ("grad", "wall"):
        path = os.path.join(out, f"plot_{axis}.dat")
        emit_plotdata(rows, path, axis, cfg.raw_fraction)
        plots.append(path)
    result.plot_paths = tuple(plots)
    if result.failures:
        with open(os.path.join(out, "failures.txt"), "w", encoding="utf-8") as fh:
            for solver, seed, msg in result.failures:
                fh.write(f"{solver}\t{seed}\t{msg}\n")
    return result
