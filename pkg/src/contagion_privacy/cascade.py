"""Ground truth under the Linear Threshold model, simulated with live-edge graphs."""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .graph import DirectedGraph


@dataclass
class GroundTruth:
    x: np.ndarray
    seeds: tuple
    meta: dict = field(default_factory=dict)

    @property
    def cascade_fraction(self) -> float:
        return float(self.x.mean())

    @property
    def n(self) -> int:
        return len(self.x)


@dataclass(frozen=True)
class SeedPolicy:
    mode: str = "fixed-count"
    value: float = 5
    size_window: tuple = (0.25, 0.75)
    max_retries: int = 100

    def __post_init__(self):
        lo, hi = self.size_window
        if not 0 < lo < hi <= 1:
            raise ValueError(f"size window must satisfy 0 < lo < hi <= 1, got {self.size_window}")
        if self.mode not in ("fixed-count", "fraction"):
            raise ValueError(f"unknown seed mode {self.mode!r}")
        if self.value <= 0:
            raise ValueError("seed count/fraction must be positive")
        if self.mode == "fraction" and self.value > 1:
            raise ValueError("seed fraction must be <= 1")

    def seed_count(self, n: int) -> int:
        if self.mode == "fixed-count":
            k = int(self.value)
        else:
            k = int(round(self.value * n))
        return min(max(k, 1), n)


LIVE_EDGE_MODES = ("triggering", "independent")


def sample_live_edge_graph(graph: DirectedGraph, seed, mode: str = "triggering") -> np.ndarray:
    """Boolean mask over ``graph`` edges; each edge ``e`` survives with probability ``w_e``.

    In ``"triggering"`` mode every node keeps at most one of its in-edges,
    edge ``(u, v)`` with probability ``w(u, v)``. Reachability in that sample
    has the same law as the threshold process. ``"independent"`` flips one
    coin per edge; marginals agree but joint activation does not once a node
    has two live parents.
    """
    rng = np.random.default_rng(seed)
    if mode == "independent":
        return rng.random(graph.edge_count) < graph.weight
    if mode != "triggering":
        raise ValueError(f"unknown live-edge mode {mode!r}; expected one of {LIVE_EDGE_MODES}")
    r = rng.random(graph.node_count)
    # edges are grouped by head, so a running sum minus the group's start gives per-node cumulative weight
    cum = np.cumsum(graph.weight)
    start = np.concatenate([[0.0], cum])[graph.in_ptr[:-1]]
    upper = cum - start[graph.dst]
    lower = upper - graph.weight
    pick = r[graph.dst]
    return (lower <= pick) & (pick < upper)


def reachable(graph: DirectedGraph, live: np.ndarray, sources) -> np.ndarray:
    n = graph.node_count
    order = graph.out_order[live[graph.out_order]]
    heads = graph.dst[order]
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(graph.src[order], minlength=n), out=ptr[1:])
    heads = heads.tolist()
    ptr = ptr.tolist()
    active = np.zeros(n, dtype=bool)
    queue = deque()
    for s in sources:
        if not active[s]:
            active[s] = True
            queue.append(s)
    while queue:
        u = queue.popleft()
        for v in heads[ptr[u]:ptr[u + 1]]:
            if not active[v]:
                active[v] = True
                queue.append(v)
    return active


def simulate_cascade(graph: DirectedGraph, seeds, seed, mode: str = "triggering") -> GroundTruth:
    """Final active set: nodes reachable from ``seeds`` in one live-edge sample."""
    seeds = tuple(sorted(int(s) for s in seeds))
    if not seeds:
        raise ValueError("at least one seed node is required")
    if seeds[0] < 0 or seeds[-1] >= graph.node_count:
        raise ValueError("seed node outside graph")
    live = sample_live_edge_graph(graph, seed, mode)
    active = reachable(graph, live, seeds)
    return GroundTruth(active.astype(np.int8), seeds)


def generate_ground_truth(graph: DirectedGraph, policy: SeedPolicy, seed, mode: str = "triggering") -> GroundTruth:
    """Random seeds plus cascade, retried until the active fraction lands in the window.

    When every retry misses, the attempt closest to the window is returned with
    ``meta["in_window"] = False``.
    """
    rng = np.random.default_rng(seed)
    n = graph.node_count
    k = policy.seed_count(n)
    lo, hi = policy.size_window
    best, best_gap = None, np.inf
    attempts = 0
    for attempts in range(1, policy.max_retries + 1):
        seeds = rng.choice(n, size=k, replace=False)
        truth = simulate_cascade(graph, seeds, rng, mode)
        frac = truth.cascade_fraction
        gap = max(lo - frac, frac - hi, 0.0)
        if gap < best_gap:
            best, best_gap = truth, gap
        if gap == 0.0:
            break
    best.meta.update(attempts=attempts, in_window=best_gap == 0.0, seed_count=k)
    return best


def write_ground_truth_csv(truth: GroundTruth, path) -> None:
    seeds = set(truth.seeds)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_id", "x", "is_seed"])
        for v, xv in enumerate(truth.x.tolist()):
            w.writerow([v, xv, int(v in seeds)])


def read_ground_truth_csv(path) -> GroundTruth:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    rows.sort(key=lambda r: int(r["node_id"]))
    if [int(r["node_id"]) for r in rows] != list(range(len(rows))):
        raise ValueError(f"{path}: node ids must be 0..n-1")
    x = np.array([int(r["x"]) for r in rows], dtype=np.int8)
    seeds = tuple(int(r["node_id"]) for r in rows if int(r["is_seed"]))
    return GroundTruth(x, seeds)
