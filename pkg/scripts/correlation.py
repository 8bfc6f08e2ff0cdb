"""Pearson r between node attributes and per-node expected accuracy, per beta.

Reads pernode.csv from an earlier run, or runs configs/correlation.cfg first.
"""
import argparse
import csv
from collections import defaultdict
from pathlib import Path

import numpy as np

from contagion_privacy.harness import load_config, run_experiment
from contagion_privacy.metrics import correlate

ATTRS = ("weighted_out_degree", "weighted_in_degree", "pagerank")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pernode", help="existing pernode.csv; skips the run")
    ap.add_argument("--config", default="configs/correlation.cfg")
    ap.add_argument("--pooled", action="store_true", help="one point per (node, cascade) instead of node means")
    args = ap.parse_args()

    path = args.pernode
    if path is None:
        cfg = load_config(args.config)
        path = Path(run_experiment(cfg, out_dir=cfg.out).out_dir) / "pernode.csv"

    groups = defaultdict(list)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            groups[(row["network"], row["variant"], row["beta"])].append(row)
    for (net, variant, beta), rows in sorted(groups.items()):
        if args.pooled:
            acc = np.array([float(r["expected_accuracy"]) for r in rows])
            attrs = {a: np.array([float(r[a]) for r in rows]) for a in ATTRS}
        else:
            per = defaultdict(list)
            attr_of = {}
            for r in rows:
                per[int(r["node"])].append(float(r["expected_accuracy"]))
                attr_of[int(r["node"])] = r
            nodes = sorted(per)
            acc = np.array([np.mean(per[v]) for v in nodes])
            attrs = {a: np.array([float(attr_of[v][a]) for v in nodes]) for a in ATTRS}
        parts = []
        for a in ATTRS:
            r, p = correlate(acc, attrs[a])
            parts.append(f"{a} r={r:+.3f} p={p:.2g}")
        print(f"{net} {variant} beta={beta} n={len(acc)}: " + ", ".join(parts))


if __name__ == "__main__":
    main()
