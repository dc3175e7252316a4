"""Command-line entry point: ``asadmm {solve,benchmark,reference,gen-data}``.

Every :class:`RunConfig` key is also a flag (``max_outer`` -> ``--max-outer``);
flags override values from ``--config``. List keys take comma-separated
values. The exit code is 0 iff every requested run succeeded.
"""

import argparse
import dataclasses
import json
import logging
import os
import sys

import numpy as np
import scipy.io

from .benchmark import (ConvergenceError, build_problem, compute_reference, load_reference,
                        run_benchmark, run_one, save_reference)
from .io import RunConfig, config_from_dict, dump_config, load_config, write_libsvm, write_metrics_csv
from .models import build_graph_G, synthetic_instance
from .solver import ConfigError

__all__ = ["build_parser", "main"]

log = logging.getLogger("asadmm")


def _flag(name):
    return "--" + name.replace("_", "-")


def _parse_value(text):
    """JSON literal if possible (numbers, true/false, null), else the raw string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _parse_list(text):
    return [_parse_value(t.strip()) for t in text.split(",") if t.strip()]


def _add_config_flags(ap):
    g = ap.add_argument_group("run configuration (overrides --config)")
    for f in dataclasses.fields(RunConfig):
        conv = _parse_list if f.name in ("solvers", "seeds") else _parse_value
        g.add_argument(_flag(f.name), dest=f"cfg__{f.name}", type=conv, default=None,
                       metavar=f.name.upper())
    ap.add_argument("--config", help="JSON run configuration file")
    ap.add_argument("--dump-config", metavar="PATH", help="write the merged configuration here")


def build_parser():
    ap = argparse.ArgumentParser(prog="asadmm", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run each configured solver and seed, write traces")
    _add_config_flags(p_solve)

    p_bench = sub.add_parser("benchmark", help="full benchmark: reference, runs, aggregate, plot data")
    _add_config_flags(p_bench)

    p_ref = sub.add_parser("reference", help="compute and save a reference saddle point")
    _add_config_flags(p_ref)
    p_ref.add_argument("--out", help="output .npz (default OUTPUT_DIR/reference.npz)")

    p_gen = sub.add_parser("gen-data", help="write a synthetic dataset in LIBSVM format")
    _add_config_flags(p_gen)
    p_gen.add_argument("--out", required=True, help="output LIBSVM file")
    p_gen.add_argument("--graph-out", help="also write the correlation graph G (Matrix Market)")
    p_gen.add_argument("--weights-out", help="also write the planted weights (.npy)")
    return ap


def _merged_config(args):
    base = load_config(args.config).to_dict() if args.config else {}
    for key, value in vars(args).items():
        if key.startswith("cfg__") and value is not None:
            base[key[5:]] = value
    cfg = config_from_dict(base)
    if args.dump_config:
        dump_config(cfg, args.dump_config)
    return cfg


def _cmd_solve(cfg):
    p = build_problem(cfg)
    ref = load_reference(cfg.reference_path) if cfg.reference_path else None
    os.makedirs(cfg.output_dir, exist_ok=True)
    ok = True
    for solver in cfg.solvers:
        for seed in cfg.seeds:
            try:
                res = run_one(cfg, solver, seed, p, ref)
            except Exception as exc:  # noqa: BLE001 - reported via exit code
                log.error("%s seed %d failed: %s", solver, seed, exc)
                ok = False
                continue
            path = os.path.join(cfg.output_dir, f"{solver}_seed{seed}.csv")
            write_metrics_csv(res.trace, path)
            last = res.raw_trace[-1]
            print(f"{solver} seed={seed} k={last.k} grads={last.grad_components} "
                  f"equ_err={last.equ_err:.3e} opt_err={last.opt_err:.3e} "
                  f"stopped={res.stopped} -> {path}")
    return 0 if ok else 1


def _cmd_benchmark(cfg):
    res = run_benchmark(cfg)
    print(f"f*={res.reference.f_star:.12g}  aggregate -> {res.aggregate_path}")
    for path in res.plot_paths:
        print(f"plot data -> {path}")
    for solver, seed, msg in res.failures:
        print(f"FAILED {solver} seed={seed}: {msg}", file=sys.stderr)
    return 0 if res.ok else 1


def _cmd_reference(cfg, out):
    p = build_problem(cfg)
    out = out or os.path.join(cfg.output_dir, "reference.npz")
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    try:
        ref = compute_reference(p, cfg.reference_budget, cfg.reference_tol,
                                cfg.reference_beta, cfg.reference_M)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    save_reference(ref, out)
    print(f"f*={ref.f_star:.12g} kkt<={ref.feas_tol:.1e} -> {out}")
    return 0


def _cmd_gen_data(cfg, out, graph_out, weights_out):
    ds, w = synthetic_instance(cfg.synth_seed, cfg.synth_N, cfg.synth_l,
                               cfg.synth_sparsity, cfg.synth_density)
    write_libsvm(ds, out)
    print(f"wrote {ds.N} samples x {ds.l} features -> {out}")
    if graph_out:
        G = build_graph_G(ds, cfg.corr_threshold)
        scipy.io.mmwrite(graph_out, G)
        print(f"wrote G with {G.shape[0]} edges -> {graph_out}")
    if weights_out:
        np.save(weights_out, w)
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _merged_config(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "solve":
            return _cmd_solve(cfg)
        if args.command == "benchmark":
            return _cmd_benchmark(cfg)
        if args.command == "reference":
            return _cmd_reference(cfg, args.out)
        return _cmd_gen_data(cfg, args.out, args.graph_out, args.weights_out)
    except (ValueError, OSError, ConvergenceError) as exc:
        # bad input data, unwritable output or an unconverged reference
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
