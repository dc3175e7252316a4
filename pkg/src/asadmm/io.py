"""LIBSVM datasets, run configuration files and metrics CSV files.

Config files are JSON objects whose keys are the :class:`RunConfig` field
names; an empty file (or ``{}``) gives the default profile.
"""

import csv
import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .metrics import MetricsRecord
from .models import Dataset
from .sampler import SamplerConfig
from .solver import GOLDEN, AdaptiveProxConfig, ConfigError, ScheduleConfig, SolverConfig

__all__ = [
    "CSV_COLUMNS",
    "LibsvmError",
    "RunConfig",
    "dump_config",
    "load_config",
    "parse_libsvm",
    "read_metrics_csv",
    "write_libsvm",
    "write_metrics_csv",
]

log = logging.getLogger(__name__)

CSV_COLUMNS = ("k", "obj_err", "equ_err", "opt_err", "grad_components", "wall_seconds", "ergodic_flag")


# --------------------------------------------------------------------------
# LIBSVM


class LibsvmError(ValueError):
    """Malformed LIBSVM input; the message names the offending line."""


def parse_libsvm(path, n_features=None):
    """Read a LIBSVM text file.

    Each nonblank line is ``label idx:val idx:val ...`` with 1-based feature
    indices. Labels must be -1/+1 or 0/1; 0/1 files are mapped to -1/+1.

    Parameters
    ----------
    path : str or path-like
    n_features : int, optional
        Column count; defaults to the largest index seen.

    Returns
    -------
    Dataset
    """
    labels, rows, cols, vals = [], [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                lab = float(parts[0])
            except ValueError:
                raise LibsvmError(f"{path}:{lineno}: bad label {parts[0]!r}") from None
            seen = set()
            i = len(labels)
            for tok in parts[1:]:
                idx_s, sep, val_s = tok.partition(":")
                if not sep:
                    raise LibsvmError(f"{path}:{lineno}: expected idx:val, got {tok!r}")
                try:
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError:
                    raise LibsvmError(f"{path}:{lineno}: non-numeric entry {tok!r}") from None
                if idx < 1:
                    raise LibsvmError(f"{path}:{lineno}: feature index {idx} is not 1-based")
                if idx in seen:
                    raise LibsvmError(f"{path}:{lineno}: duplicate feature index {idx}")
                if not math.isfinite(val):
                    raise LibsvmError(f"{path}:{lineno}: non-finite value {tok!r}")
                seen.add(idx)
                rows.append(i)
                cols.append(idx - 1)
                vals.append(val)
            labels.append(lab)

    if not labels:
        raise LibsvmError(f"{path}: no samples")
    y = np.asarray(labels)
    kinds = set(np.unique(y).tolist())
    if kinds <= {-1.0, 1.0}:
        pass
    elif kinds <= {0.0, 1.0}:
        log.info("%s: mapping 0/1 labels to -1/+1", path)
        y = 2.0 * y - 1.0
    else:
        raise LibsvmError(f"{path}: labels must be -1/+1 or 0/1, found {sorted(kinds)}")

    width = (max(cols) + 1) if cols else 0
    if n_features is not None:
        if width > n_features:
            raise LibsvmError(f"{path}: feature index {width} exceeds n_features={n_features}")
        width = n_features
    X = sp.csr_matrix((vals, (rows, cols)), shape=(len(labels), width))
    return Dataset(X, y)


def write_libsvm(ds, path):
    """Write `ds` in LIBSVM format (1-based indices, shortest round-trip floats)."""
    X = ds.features
    with open(path, "w", encoding="utf-8") as fh:
        for j in range(X.shape[0]):
            lo, hi = X.indptr[j], X.indptr[j + 1]
            entries = " ".join(f"{c + 1}:{float(v)!r}" for c, v in zip(X.indices[lo:hi], X.data[lo:hi]))
            lab = "+1" if ds.labels[j] > 0 else "-1"
            fh.write(f"{lab} {entries}\n" if entries else f"{lab}\n")


# --------------------------------------------------------------------------
# metrics CSV


def _fmt(v):
    return f"{v:.16e}" if math.isfinite(v) else repr(float(v))


def write_metrics_csv(trace, path):
    """Write one row per :class:`MetricsRecord` (17 significant digits)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in trace:
            w.writerow([r.k, _fmt(r.obj_err), _fmt(r.equ_err), _fmt(r.opt_err),
                        r.grad_components, _fmt(r.wall_seconds), int(bool(r.ergodic_flag))])


def read_metrics_csv(path):
    """Inverse of :func:`write_metrics_csv`."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if header is None or tuple(header) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        for row in rd:
            out.append(MetricsRecord(int(row[0]), float(row[1]), float(row[2]), float(row[3]),
                                     int(row[4]), float(row[5]), row[6] == "1"))
    return out


# --------------------------------------------------------------------------
# run configuration

PROBLEMS = ("synthetic", "libsvm")
SOLVERS = ("asadmm", "ladmm", "det_inexact")


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce a run, flattened to scalar keys.

    Defaults reproduce the standard parameter profile. ``None`` for ``c1``,
    ``c2``, ``eta_const`` and ``ladmm_nu`` means "derive from nu".
    """

    # problem
    problem: str = "synthetic"
    dataset_path: Optional[str] = None
    graph_path: Optional[str] = None
    synth_seed: int = 0
    synth_N: int = 2000
    synth_l: int = 100
    synth_sparsity: float = 0.2
    synth_density: float = 1.0
    A_kind: str = "stacked_graph"
    corr_threshold: float = 0.5
    mu: float = 1e-5
    # solvers and seeds
    solvers: tuple = ("asadmm", "ladmm")
    seeds: tuple = (0,)
    # SolverConfig
    beta: float = 0.04
    s: float = 1.618
    sigma: float = 2e-5
    nu_metric: str = "euclidean"
    y_mode: str = "exact"
    tau: Optional[float] = None
    max_outer: int = 100
    obj_tol: float = 0.0
    feas_tol: float = 0.0
    ergodic_kappa: int = 0
    grad_budget: Optional[int] = None
    time_budget: Optional[float] = None
    record_wall_time: bool = True
    # ScheduleConfig
    schedule_kind: str = "power"
    c1: Optional[float] = None
    c2: Optional[float] = None
    c3: float = 0.01
    rho_exp: float = 1.1
    M_floor: int = 200
    eta_const: Optional[float] = None
    theta: float = 0.1
    M_cap: int = 10**6
    # AdaptiveProxConfig
    adaptive_rho: bool = True
    rho0: float = 1.0
    rho_min: float = 1e-5
    growth: float = 1.1
    # SamplerConfig
    sampler_mode: str = "svrg_anchor"
    batch_c: float = 1.0
    batch_rho: float = 1.0
    anchor_threshold: Optional[int] = None
    # L-ADMM
    ladmm_s: float = 1.0
    ladmm_nu: Optional[float] = None
    # reference solve
    reference_path: Optional[str] = None
    reference_budget: int = 5000
    reference_tol: float = 1e-6
    reference_beta: float = 0.002
    reference_M: int = 20
    # output
    output_dir: str = "out"
    raw_fraction: float = 1.0 / 3.0
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "solvers", tuple(self.solvers))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        errs = []

        def need(cond, name, msg):
            if not cond:
                errs.append(f"{name}: {msg}")

        need(self.problem in PROBLEMS, "problem", f"must be one of {PROBLEMS}")
        need(self.problem != "libsvm" or self.dataset_path, "dataset_path", "required for problem='libsvm'")
        need(self.synth_N >= 1, "synth_N", "must be >= 1")
        need(self.synth_l >= 1, "synth_l", "must be >= 1")
        need(0 <= self.synth_sparsity <= 1, "synth_sparsity", "must lie in [0, 1]")
        need(0 < self.synth_density <= 1, "synth_density", "must lie in (0, 1]")
        need(self.A_kind in ("identity", "stacked_graph"), "A_kind", "must be 'identity' or 'stacked_graph'")
        need(0 < self.corr_threshold < 1, "corr_threshold", "must lie in (0, 1)")
        need(self.mu > 0, "mu", "must be positive")
        need(len(self.solvers) > 0, "solvers", "must not be empty")
        for sv in self.solvers:
            need(sv in SOLVERS, "solvers", f"unknown solver {sv!r}; choose from {SOLVERS}")
        need(len(self.seeds) > 0, "seeds", "must not be empty")
        need(self.beta > 0, "beta", "must be positive")
        need(0 < self.s <= GOLDEN, "s", f"must lie in (0, {GOLDEN:.6f}]")
        need(0 < self.ladmm_s <= GOLDEN, "ladmm_s", f"must lie in (0, {GOLDEN:.6f}]")
        need(self.ladmm_nu is None or self.ladmm_nu > 0, "ladmm_nu", "must be positive")
        need(self.sigma > 0, "sigma", "must be positive")
        need(self.max_outer >= 1, "max_outer", "must be >= 1")
        need(self.reference_budget >= 1, "reference_budget", "must be >= 1")
        need(self.reference_tol > 0, "reference_tol", "must be positive")
        need(self.reference_beta > 0, "reference_beta", "must be positive")
        need(self.reference_M >= 1, "reference_M", "must be >= 1")
        need(0 <= self.raw_fraction <= 1, "raw_fraction", "must lie in [0, 1]")
        need(self.workers >= 1, "workers", "must be >= 1")
        need(self.grad_budget is None or self.grad_budget > 0, "grad_budget", "must be positive")
        need(self.time_budget is None or self.time_budget > 0, "time_budget", "must be positive")
        if errs:
            raise ConfigError("; ".join(errs))
        # the remaining invariants live on the solver config types
        for build in (self.schedule_config, self.adaptive_config, self.sampler_config, self.solver_config):
            try:
                build()
            except (ConfigError, ValueError) as exc:
                raise ConfigError(f"{build.__name__}: {exc}") from None

    def schedule_config(self):
        return ScheduleConfig(self.schedule_kind, self.c1, self.c2, self.c3, self.rho_exp,
                              self.M_floor, self.eta_const, self.theta, self.M_cap)

    def adaptive_config(self):
        return AdaptiveProxConfig(self.adaptive_rho, self.rho0, self.rho_min, self.growth)

    def sampler_config(self, seed=0):
        return SamplerConfig(self.sampler_mode, int(seed), self.batch_c, self.batch_rho,
                             self.anchor_threshold)

    def solver_config(self):
        return SolverConfig(
            beta=self.beta, s=self.s, sigma=self.sigma, schedule=self.schedule_config(),
            adaptive_prox=self.adaptive_config(), nu_metric=self.nu_metric, y_mode=self.y_mode,
            tau=self.tau, max_outer=self.max_outer, obj_tol=self.obj_tol, feas_tol=self.feas_tol,
            ergodic_kappa=self.ergodic_kappa, grad_budget=self.grad_budget,
            time_budget=self.time_budget, record_wall_time=self.record_wall_time)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["solvers"] = list(self.solvers)
        d["seeds"] = list(self.seeds)
        return d


def _coerce(f, value):
    """Turn JSON scalars into the field's type (ints stay ints, lists become tuples)."""
    if value is None:
        return None
    if f.name in ("solvers", "seeds"):
        if isinstance(value, (str, int)):
            value = [value]
        return tuple(value)
    default = f.default
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{f.name}: expected true/false, got {value!r}")
        return value
    if f.name in _INT_FIELDS:
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"{f.name}: expected an integer, got {value!r}")
        return value
    if isinstance(default, str) or f.name.endswith("_path") or f.name == "output_dir":
        if not isinstance(value, str):
            raise ConfigError(f"{f.name}: expected a string, got {value!r}")
        return value
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"{f.name}: expected a number, got {value!r}")
    if isinstance(default, float) and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    return value


_INT_FIELDS = {f.name for f in dataclasses.fields(RunConfig)
               if isinstance(f.default, int) and not isinstance(f.default, bool)}
_INT_FIELDS |= {"grad_budget", "anchor_threshold"}


def config_from_dict(d):
    """Build a :class:`RunConfig` from a mapping, rejecting unknown keys."""
    fields = {f.name: f for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(d) - set(fields))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return RunConfig(**{k: _coerce(fields[k], v) for k, v in d.items()})


def load_config(path):
    """Read and validate a JSON run configuration."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if not text.strip():
        return RunConfig()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return config_from_dict(d)


def dump_config(cfg, path):
    """Write every field of `cfg`; :func:`load_config` reads it back unchanged."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
