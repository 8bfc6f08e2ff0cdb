"""Command line entry point: ``run``, ``sweep``, ``gen`` and ``eval``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from ..cascade import read_ground_truth_csv
from ..graph import GraphError, write_edge_list
from ..inference import read_x_hat_csv
from ..metrics import evaluate
from ..privacy import RRMechanism
from .config import ConfigError, ExperimentConfig, load_config, parse_network
from .runner import SWEEP_FIELDS, load_network, run_experiment, summarize, sweep_dag_params

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    cfg.validate()
    return cfg


def cmd_run(args) -> int:
    cfg = _config(args)
    res = run_experiment(cfg, jobs=args.jobs, pernode=not args.no_pernode)
    for row in summarize([r for r in res.records if r.error is None]):
        print(f"{row['network']:>16} beta={row['beta']:<4} {row['variant']:>8}  "
              f"auc={row['auc_mean']} ±{row['auc_std']}  bound={row['upper_bound']}"
              f"{'  *' if row['beats_bound'] else ''}")
    if res.errors:
        print(f"{len(res.errors)} run(s) failed; see {res.out_dir / 'errors.csv'}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args)
    if not cfg.sweep_eta and not cfg.sweep_n_max:
        raise ConfigError("sweep needs sweep_eta and/or sweep_n_max in the config")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = sweep_dag_params(cfg)
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, SWEEP_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    for r in rows:
        print(f"{r['network']:>16} {r['param']:>5}={r['value']:<6} beta={r['beta']:<4} "
              f"auc={r['auc']} rel={r['auc_rel']}")
    return EXIT_OK


def cmd_gen(args) -> int:
    net = parse_network(args.network)
    g = load_network(net, args.seed or 0, 0)
    path = Path(args.out or f"{net.name}.txt")
    write_edge_list(g, path)
    print(f"wrote {g.node_count} nodes, {g.edge_count} edges to {path}")
    return EXIT_OK


def cmd_eval(args) -> int:
    x_hat = read_x_hat_csv(args.x_hat)
    truth = read_ground_truth_csv(args.truth)
    report = evaluate(x_hat, truth, RRMechanism(args.beta))
    d = report.to_dict()
    d.pop("per_node_expected_accuracy")
    text = json.dumps(d, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="contagion-privacy", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", help="key=value experiment file")
        sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
        sp.add_argument("--out", help="output directory or file")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes")

    sp = sub.add_parser("run", help="main experiment: results.csv, summary.csv, pernode.csv")
    common(sp)
    sp.add_argument("--no-pernode", action="store_true", help="skip pernode.csv")
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("sweep", help="eta / N_max study: sweep.csv")
    common(sp)
    sp.set_defaults(fn=cmd_sweep)

    sp = sub.add_parser("gen", help="write a prepared synthetic network as an edge list")
    common(sp, config=False)
    sp.add_argument("network", help="e.g. 'core-periphery, nodes=500'")
    sp.set_defaults(fn=cmd_gen)

    sp = sub.add_parser("eval", help="score an x_hat CSV against a ground-truth CSV")
    common(sp, config=False)
    sp.add_argument("x_hat")
    sp.add_argument("truth")
    sp.add_argument("--beta", type=float, required=True)
    sp.set_defaults(fn=cmd_eval)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.fn(args)
    except (ConfigError, GraphError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
