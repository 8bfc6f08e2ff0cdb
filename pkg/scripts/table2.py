"""Run the main grid and print mean AUC per (network, beta) with one column per variant."""
import argparse
import csv
from collections import defaultdict
from pathlib import Path

from contagion_privacy.harness import ALL_VARIANTS, load_config, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="configs/table2.cfg")
    ap.add_argument("--out")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    cfg = load_config(args.config)
    res = run_experiment(cfg, out_dir=args.out or cfg.out, jobs=args.jobs, pernode=False)
    cells = defaultdict(dict)
    bounds = {}
    with open(Path(res.out_dir) / "summary.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            key = (row["network"], float(row["beta"]), float(row["epsilon"]))
            cells[key][row["variant"]] = row["auc_mean"]
            bounds[key] = row["upper_bound"]
    variants = [v for v in ALL_VARIANTS if v in cfg.variants]
    print("\t".join(["network", "beta", "eps", "bound"] + variants))
    for key in sorted(cells, key=lambda k: ([n.name for n in cfg.networks].index(k[0]), k[1])):
        net, beta, eps = key
        print("\t".join([net, f"{beta:g}", f"{eps:.3f}", bounds[key]] + [cells[key].get(v, "-") for v in variants]))
    if res.errors:
        print(f"{len(res.errors)} runs failed, see {res.out_dir}/errors.csv")


if __name__ == "__main__":
    main()
