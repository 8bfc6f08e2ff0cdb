"""Pipeline orchestration: network -> cascade -> perturb -> attack -> evaluate."""

from __future__ import annotations

import csv
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..cascade import generate_ground_truth
from ..graph import (DirectedGraph, assign_random_weights, compute_node_metrics, load_edge_list,
                     normalize_in_weights, prepare_graph)
from ..inference import infer
from ..ldag import build_index
from ..metrics import auc, evaluate
from ..netgen import generate
from ..privacy import RRMechanism, bayesian_scores, epsilon_of_beta, estimate_population, perturb
from .config import BASELINE, ExperimentConfig, NetworkConfig

log = logging.getLogger(__name__)

# stream tags keep the derived seeds of different pipeline stages apart
NETWORK, WEIGHTS, TRUTH, REPORTS, ATTACK = range(5)

RESULT_FIELDS = ["network", "nodes", "cascade", "cascade_fraction", "beta", "epsilon", "variant",
                 "auc", "upper_bound", "beats_bound", "constraint_violation",
                 "dag_mean_size", "dag_max_size"]
PERNODE_FIELDS = ["network", "cascade", "beta", "variant", "node", "x", "z", "x_hat",
                  "expected_accuracy", "weighted_out_degree", "weighted_in_degree", "pagerank"]
SWEEP_FIELDS = ["network", "param", "value", "beta", "cascades", "auc", "auc_rel"]
SUMMARY_FIELDS = ["network", "beta", "epsilon", "variant", "runs", "auc_mean", "auc_std",
                  "upper_bound", "beats_bound"]


def beta_key(beta: float) -> int:
    # keyed by value, not list position, so a beta's streams do not depend on its neighbours
    return int(round(beta * 1_000_000))


def child_seed(master: int, *key: int) -> np.random.SeedSequence:
    """Counter-based split: the same key always yields the same stream."""
    return np.random.SeedSequence(master, spawn_key=tuple(key))


@dataclass
class RunRecord:
    network: str
    nodes: int
    cascade: int
    cascade_fraction: float
    beta: float
    epsilon: float
    variant: str
    auc: float
    upper_bound: float
    constraint_violation: float = float("nan")
    dag_mean_size: float = float("nan")
    dag_max_size: int = 0
    runtime: float = 0.0
    error: str | None = None
    pernode: list = field(default_factory=list, repr=False)

    @property
    def beats_bound(self) -> bool:
        return self.auc > self.upper_bound

    def row(self) -> dict:
        def fmt(v, spec):
            return "" if isinstance(v, float) and math.isnan(v) else format(v, spec)
        return {
            "network": self.network, "nodes": self.nodes, "cascade": self.cascade,
            "cascade_fraction": f"{self.cascade_fraction:.4f}",
            "beta": repr(self.beta), "epsilon": repr(self.epsilon), "variant": self.variant,
            "auc": f"{self.auc:.4f}", "upper_bound": f"{self.upper_bound:.4f}",
            "beats_bound": int(self.beats_bound),
            "constraint_violation": fmt(self.constraint_violation, ".3g"),
            "dag_mean_size": fmt(self.dag_mean_size, ".2f"),
            "dag_max_size": self.dag_max_size or "",
        }


@dataclass
class PreparedNetwork:
    name: str
    graph: DirectedGraph
    metrics: object
    greedy: object  # greedy DagIndex at the configured (eta, n_max)


def load_network(net: NetworkConfig, master: int, index: int) -> DirectedGraph:
    if net.kind == "file":
        raw = load_edge_list(net.path, directed=net.directed)
        g = prepare_graph(raw)
    else:
        spec = net.generator_spec(child_seed(master, NETWORK, index))
        g = prepare_graph(generate(spec), skip_prune=spec.skip_prune)
        raw = g
    if raw.meta.get("weighted"):
        return normalize_in_weights(g)
    return assign_random_weights(g, child_seed(master, WEIGHTS, index))


def prepare_network(config: ExperimentConfig, index: int) -> PreparedNetwork:
    net = config.networks[index]
    g = load_network(net, config.seed, index)
    return PreparedNetwork(net.name, g, compute_node_metrics(g), build_index(g, "greedy", config.eta, config.n_max))


def _pernode_rows(prep, ci, beta, variant, truth, reports, x_hat, acc):
    m = prep.metrics
    return [
        [prep.name, ci, repr(beta), variant, v, int(truth.x[v]), int(reports.z[v]), repr(float(x_hat[v])),
         repr(float(acc[v])), repr(float(m.weighted_out_degree[v])), repr(float(m.weighted_in_degree[v])),
         repr(float(m.pagerank[v]))]
        for v in range(prep.graph.node_count)
    ]


def run_cascade(config: ExperimentConfig, ni: int, prep: PreparedNetwork, ci: int, keep_pernode: bool = True):
    """All (beta, variant) runs that share one ground-truth cascade."""
    master = config.seed
    net = config.networks[ni]
    policy = net.seed_policy(config.size_window, config.max_retries)
    truth = generate_ground_truth(prep.graph, policy, child_seed(master, TRUTH, ni, ci))
    records = []
    for beta in config.betas:
        mech = RRMechanism(beta)
        eps = epsilon_of_beta(beta)
        reports = perturb(truth, beta, child_seed(master, REPORTS, ni, ci, beta_key(beta)))
        for variant in config.variants:
            vi = config.variant_index(variant)
            rec = RunRecord(prep.name, prep.graph.node_count, ci, truth.cascade_fraction, beta, eps,
                            variant, float("nan"), float("nan"))
            t0 = time.perf_counter()
            try:
                if variant == BASELINE:
                    prior = config.bayes_prior
                    if prior is None:
                        prior = (estimate_population(reports, mech).p_tilde_x if beta > 0 else 0.5)
                        prior = min(max(prior, 0.01), 0.99)
                    x_hat = bayesian_scores(reports, mech, prior)
                else:
                    res = infer(prep.graph, reports, mech, variant, config.eta, config.n_max, config.solver,
                                child_seed(master, ATTACK, ni, ci, beta_key(beta), vi), greedy_index=prep.greedy)
                    x_hat = res.x_hat
                    rec.constraint_violation = res.constraint_violation
                    rec.dag_mean_size = res.meta["dag_mean_size"]
                    rec.dag_max_size = res.meta["dag_max_size"]
                ev = evaluate(x_hat, truth, mech)
                rec.auc, rec.upper_bound = ev.auc, ev.upper_bound
                if keep_pernode:
                    rec.pernode = _pernode_rows(prep, ci, beta, variant, truth, reports, x_hat,
                                                ev.per_node_expected_accuracy)
            except Exception as exc:  # one failed run must not sink the batch
                log.error("run %s/%d/beta=%s/%s failed: %s", prep.name, ci, beta, variant, exc)
                rec.error = f"{type(exc).__name__}: {exc}"
            rec.runtime = time.perf_counter() - t0
            records.append(rec)
    return records


def _cascade_job(args):
    config, ni, prep, ci, keep = args
    try:
        return run_cascade(config, ni, prep, ci, keep)
    except Exception as exc:
        log.error("cascade %s/%d failed: %s", prep.name, ci, exc)
        return [RunRecord(prep.name, prep.graph.node_count, ci, float("nan"), b, epsilon_of_beta(b), v,
                          float("nan"), float("nan"), error=f"{type(exc).__name__}: {exc}")
                for b in config.betas for v in config.variants]


def _map(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))  # map preserves submission order


def _prepare_all(config: ExperimentConfig):
    preps, failed = [], []
    for ni, net in enumerate(config.networks):
        try:
            preps.append((ni, prepare_network(config, ni)))
        except Exception as exc:
            log.error("network %s failed: %s", net.name, exc)
            failed.append((net.name, f"{type(exc).__name__}: {exc}"))
    return preps, failed


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


@dataclass
class ExperimentOutput:
    records: list
    errors: list
    out_dir: Path

    @property
    def ok(self) -> bool:
        return not self.errors


def run_experiment(config: ExperimentConfig, out_dir=None, jobs: int = 1, pernode: bool = True) -> ExperimentOutput:
    out = Path(out_dir or config.out)
    out.mkdir(parents=True, exist_ok=True)
    preps, net_errors = _prepare_all(config)
    work = [(config, ni, prep, ci, pernode) for ni, prep in preps for ci in range(config.cascades)]
    batches = _map(_cascade_job, work, jobs)
    records = [r for batch in batches for r in batch]
    good = [r for r in records if r.error is None]
    errors = [(name, "", "", "", msg) for name, msg in net_errors]
    errors += [(r.network, r.cascade, repr(r.beta), r.variant, r.error) for r in records if r.error]

    _write_csv(out / "results.csv", RESULT_FIELDS, ([r.row()[k] for k in RESULT_FIELDS] for r in good))
    _write_csv(out / "timing.csv", ["network", "cascade", "beta", "variant", "runtime_s"],
               ([r.network, r.cascade, repr(r.beta), r.variant, f"{r.runtime:.4f}"] for r in records))
    summary = summarize(good)
    _write_csv(out / "summary.csv", SUMMARY_FIELDS, ([s[k] for k in SUMMARY_FIELDS] for s in summary))
    if pernode:
        _write_csv(out / "pernode.csv", PERNODE_FIELDS, (row for r in good for row in r.pernode))
    _write_csv(out / "errors.csv", ["network", "cascade", "beta", "variant", "error"], errors)
    if config.sweep_eta or config.sweep_n_max:
        sweep_rows = sweep_dag_params(config, preps=preps)
        _write_csv(out / "sweep.csv", SWEEP_FIELDS, ([s[k] for k in SWEEP_FIELDS] for s in sweep_rows))
    return ExperimentOutput(records, errors, out)


def summarize(records) -> list[dict]:
    """Mean and spread of AUC per (network, beta, variant), in first-seen order."""
    groups: dict = {}
    for r in records:
        groups.setdefault((r.network, r.beta, r.variant), []).append(r)
    rows = []
    for (name, beta, variant), rs in groups.items():
        vals = np.array([r.auc for r in rs])
        mean = float(vals.mean())
        std = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
        bound = rs[0].upper_bound
        rows.append({
            "network": name, "beta": repr(beta), "epsilon": f"{epsilon_of_beta(beta):.3f}", "variant": variant,
            "runs": len(rs), "auc_mean": f"{mean:.4f}", "auc_std": f"{std:.4f}",
            "upper_bound": f"{bound:.4f}", "beats_bound": int(mean > bound),
            "_mean": mean, "_std": std,
        })
    return rows


def anchor_relative(values, aucs, param: str) -> list[float]:
    """AUC minus the anchor point: first point for N_max curves, last point for eta curves."""
    anchor = aucs[0] if param == "n_max" else aucs[-1]
    return [a - anchor for a in aucs]


def sweep_order(param: str, values) -> list:
    # curves run in the direction the DAGs grow: N_max up, eta down
    return sorted(set(values), reverse=(param == "eta"))


def sweep_dag_params(config: ExperimentConfig, preps=None) -> list[dict]:
    """CO-DAG AUC across eta and N_max values, averaged over cascades.

    Ground truth and reports reuse the main run's seeds, so each sweep point
    sees exactly the cascades of the main experiment.
    """
    if not config.sweep_eta and not config.sweep_n_max:
        raise ValueError("no sweep values configured")
    if preps is None:
        preps, _ = _prepare_all(config)
    master = config.seed
    solver = config.solver
    rows = []
    for ni, prep in preps:
        policy = config.networks[ni].seed_policy(config.size_window, config.max_retries)
        truths = [generate_ground_truth(prep.graph, policy, child_seed(master, TRUTH, ni, ci))
                  for ci in range(config.cascades)]
        for param, values in (("eta", config.sweep_eta), ("n_max", config.sweep_n_max)):
            if not values:
                continue
            values = sweep_order(param, values)
            for beta in config.betas:
                mech = RRMechanism(beta)
                reports = [perturb(t, beta, child_seed(master, REPORTS, ni, ci, beta_key(beta))) for ci, t in enumerate(truths)]
                means = []
                for val in values:
                    eta = val if param == "eta" else config.eta
                    n_max = val if param == "n_max" else config.n_max
                    index = build_index(prep.graph, "greedy", eta, n_max)
                    scores = []
                    for t, rep in zip(truths, reports):
                        res = infer(prep.graph, rep, mech, "CO-DAG", eta, n_max, solver, greedy_index=index)
                        scores.append(auc(res.x_hat, t.x))
                    means.append(float(np.mean(scores)))
                for val, m, rel in zip(values, means, anchor_relative(values, means, param)):
                    rows.append({"network": prep.name, "param": param, "value": repr(val), "beta": repr(beta),
                                 "cascades": len(truths), "auc": f"{m:.4f}", "auc_rel": f"{rel:.4f}"})
    return rows


def default_jobs() -> int:
    return max(1, (os.cpu_count() or 1))
