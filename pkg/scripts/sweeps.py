"""Eta and n_max sweeps; prints anchored relative AUC curves per network and beta."""
import argparse
import csv
from pathlib import Path

from contagion_privacy.harness import load_config, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="configs/sweep.cfg")
    ap.add_argument("--out")
    args = ap.parse_args()

    cfg = load_config(args.config)
    cfg.variants = ["CO-DAG"]
    res = run_experiment(cfg, out_dir=args.out or cfg.out, pernode=False)
    curves = {}
    with open(Path(res.out_dir) / "sweep.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            curves.setdefault((row["network"], row["param"], row["beta"]), []).append((row["value"], row["auc_rel"]))
    for (net, param, beta), pts in curves.items():
        print(f"{net} {param} beta={beta}: " + "  ".join(f"{v}:{rel}" for v, rel in pts))


if __name__ == "__main__":
    main()
