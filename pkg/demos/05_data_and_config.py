"""Data files, run configurations and the command-line interface.

Writes a synthetic dataset in LIBSVM format together with its correlation
graph, reads both back, stores a JSON run configuration and drives the
``asadmm`` command line with it.

Usage: python demos/05_data_and_config.py [output_dir]
"""

import os
import sys

import scipy.io

from asadmm.cli import main
from asadmm.io import RunConfig, dump_config, load_config, parse_libsvm

out = sys.argv[1] if len(sys.argv) > 1 else "demo_out/data"
os.makedirs(out, exist_ok=True)
data, graph = os.path.join(out, "train.libsvm"), os.path.join(out, "graph.mtx")

main(["gen-data", "--synth-N", "400", "--synth-l", "30", "--out", data, "--graph-out", graph])
ds = parse_libsvm(data)
G = scipy.io.mmread(graph)
print(f"parsed {ds.N} x {ds.l} samples, graph with {G.shape[0]} edges")
with open(data) as fh:
    print("first line:", fh.readline().strip()[:70], "...")

cfg = RunConfig(problem="libsvm", dataset_path=data, graph_path=graph, max_outer=30,
                seeds=(0, 1), record_wall_time=False, output_dir=os.path.join(out, "runs"))
cfg_path = os.path.join(out, "run.json")
dump_config(cfg, cfg_path)
assert load_config(cfg_path) == cfg
print(f"config written to {cfg_path}")

rc = main(["solve", "--config", cfg_path, "--beta", "0.05"])
print("exit code", rc)
