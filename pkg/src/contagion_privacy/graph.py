"""Weighted directed graphs: ingestion, weighting, pruning and centrality."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)


class GraphError(ValueError):
    pass


class EdgeListParseError(GraphError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True, eq=False)
class DirectedGraph:
    """Immutable directed graph with per-edge influence weights.

    Edges are stored sorted by (target, source), so the in-edges of a node form
    a contiguous slice ``in_ptr[v]:in_ptr[v + 1]``. Out-edges are reached
    through the ``out_order`` permutation.
    """

    node_count: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    labels: tuple | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.node_count
        src = np.asarray(self.src, dtype=np.int64)
        dst = np.asarray(self.dst, dtype=np.int64)
        weight = np.asarray(self.weight, dtype=np.float64)
        if not (src.shape == dst.shape == weight.shape):
            raise GraphError("edge arrays differ in length")
        if len(src) and (src.min() < 0 or dst.min() < 0 or src.max() >= n or dst.max() >= n):
            raise GraphError("edge endpoint outside [0, node_count)")
        order = np.lexsort((src, dst))
        src, dst, weight = src[order], dst[order], weight[order]
        if len(src) > 1:
            same = (src[1:] == src[:-1]) & (dst[1:] == dst[:-1])
            if same.any():
                raise GraphError("duplicate edges")
        for a in (src, dst, weight):
            a.setflags(write=False)
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "dst", dst)
        object.__setattr__(self, "weight", weight)
        in_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(dst, minlength=n), out=in_ptr[1:])
        out_order = np.lexsort((dst, src))
        out_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=out_ptr[1:])
        object.__setattr__(self, "in_ptr", in_ptr)
        object.__setattr__(self, "out_order", out_order)
        object.__setattr__(self, "out_ptr", out_ptr)

    @property
    def edge_count(self) -> int:
        return len(self.src)

    def in_neighbors(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        """Sources and weights of the edges pointing into ``v``."""
        lo, hi = self.in_ptr[v], self.in_ptr[v + 1]
        return self.src[lo:hi], self.weight[lo:hi]

    def out_neighbors(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        idx = self.out_order[self.out_ptr[v]:self.out_ptr[v + 1]]
        return self.dst[idx], self.weight[idx]

    def in_degree(self) -> np.ndarray:
        return np.diff(self.in_ptr)

    def out_degree(self) -> np.ndarray:
        return np.diff(self.out_ptr)

    def in_weight_sums(self) -> np.ndarray:
        return np.bincount(self.dst, weights=self.weight, minlength=self.node_count)

    def edge_set(self) -> set[tuple[int, int]]:
        return set(zip(self.src.tolist(), self.dst.tolist()))

    def adjacency_lists(self) -> tuple[list, list]:
        """Per-node python lists ``[(neighbor, weight), ...]`` for (in, out).

        Tight per-node loops (DAG growth, BFS) run much faster over plain lists
        than over numpy slices.
        """
        ins = [[] for _ in range(self.node_count)]
        outs = [[] for _ in range(self.node_count)]
        for u, v, w in zip(self.src.tolist(), self.dst.tolist(), self.weight.tolist()):
            ins[v].append((u, w))
            outs[u].append((v, w))
        return ins, outs

    def with_weights(self, weight: np.ndarray) -> DirectedGraph:
        """Copy with a new weight vector aligned to ``self.src``/``self.dst``."""
        return DirectedGraph(self.node_count, self.src, self.dst, weight, self.labels, dict(self.meta))


def from_edges(node_count: int, edges, weights=None, **kwargs) -> DirectedGraph:
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if weights is None:
        weights = np.ones(len(edges))
    return DirectedGraph(node_count, edges[:, 0], edges[:, 1], weights, **kwargs)


def load_edge_list(path, directed: bool = True, string_ids: bool = False) -> DirectedGraph:
    """Read a whitespace separated ``src dst [weight]`` file.

    Integer ids are remapped densely in increasing order; with ``string_ids``
    arbitrary tokens are accepted and numbered by first appearance. Duplicate
    pairs keep the first occurrence; the number dropped is stored in
    ``graph.meta["duplicates"]``. Files without a weight column get
    placeholder unit weights and ``meta["weighted"] = False``.
    """
    pairs: list[tuple] = []
    weights: list[float] = []
    seen: set = set()
    duplicates = 0
    has_weight = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise EdgeListParseError(lineno, f"expected 2 or 3 fields, got {len(parts)}")
            if has_weight is None:
                has_weight = len(parts) == 3
            elif has_weight != (len(parts) == 3):
                raise EdgeListParseError(lineno, "weight column present on some lines only")
            a, b = parts[0], parts[1]
            if not string_ids:
                try:
                    a, b = int(a), int(b)
                except ValueError:
                    raise EdgeListParseError(lineno, f"non-integer node id in {line!r}") from None
                if a < 0 or b < 0:
                    raise EdgeListParseError(lineno, "negative node id")
            if has_weight:
                try:
                    w = float(parts[2])
                except ValueError:
                    raise EdgeListParseError(lineno, f"bad weight {parts[2]!r}") from None
                if not 0.0 < w <= 1.0:
                    raise EdgeListParseError(lineno, f"weight {w} outside (0, 1]")
            else:
                w = 1.0
            key = (a, b) if directed else tuple(sorted((a, b)))
            if key in seen:
                duplicates += 1
                continue
            seen.add(key)
            pairs.append((a, b))
            weights.append(w)
            if not directed and a != b:
                pairs.append((b, a))
                weights.append(w)
    if not pairs:
        raise GraphError(f"{path}: no edges")

    if string_ids:
        ids: dict = {}
        for a, b in pairs:
            ids.setdefault(a, len(ids))
            ids.setdefault(b, len(ids))
        labels = tuple(ids)
    else:
        labels = tuple(sorted({x for p in pairs for x in p}))
        ids = {lab: i for i, lab in enumerate(labels)}
    src = [ids[a] for a, _ in pairs]
    dst = [ids[b] for _, b in pairs]
    if duplicates:
        log.info("%s: dropped %d duplicate edges", path, duplicates)
    meta = {"duplicates": duplicates, "weighted": bool(has_weight), "source": str(path)}
    return DirectedGraph(len(labels), np.array(src), np.array(dst), np.array(weights), labels, meta)


def write_edge_list(graph: DirectedGraph, path) -> None:
    """Write ``src dst weight`` lines using dense ids, weights to 9 significant digits."""
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(f"# nodes {graph.node_count} edges {graph.edge_count}\n")
        for u, v, w in zip(graph.src.tolist(), graph.dst.tolist(), graph.weight.tolist()):
            fh.write(f"{u} {v} {w:.9g}\n")


def normalize_in_weights(graph: DirectedGraph) -> DirectedGraph:
    """Scale in-edge weights so every node with in-edges sums to one.

    Nodes already summing to one within 1e-12 are left untouched, which keeps
    repeated normalization bit-stable.
    """
    if graph.edge_count == 0:
        return graph
    sums = graph.in_weight_sums()
    per_edge = sums[graph.dst]
    scale = np.where(np.abs(per_edge - 1.0) <= 1e-12, 1.0, per_edge)
    return graph.with_weights(graph.weight / scale)


def assign_random_weights(graph: DirectedGraph, seed) -> DirectedGraph:
    """Draw each edge weight from (0, 1] and normalize incoming weights to one."""
    rng = np.random.default_rng(seed)
    raw = 1.0 - rng.random(graph.edge_count)
    out = normalize_in_weights(graph.with_weights(raw))
    out.meta["weighted"] = True
    return out


def _induced(graph: DirectedGraph, keep_nodes: np.ndarray, keep_edges: np.ndarray) -> DirectedGraph:
    new_id = np.full(graph.node_count, -1, dtype=np.int64)
    new_id[keep_nodes] = np.arange(len(keep_nodes))
    labels = None
    if graph.labels is not None:
        labels = tuple(graph.labels[i] for i in keep_nodes.tolist())
    return DirectedGraph(
        len(keep_nodes),
        new_id[graph.src[keep_edges]],
        new_id[graph.dst[keep_edges]],
        graph.weight[keep_edges],
        labels,
        dict(graph.meta),
    )


def prepare_graph(graph: DirectedGraph, min_degree: int = 3, skip_prune: bool = False) -> DirectedGraph:
    """Drop self-loops, prune low-degree nodes to a fixpoint, renormalize.

    A node is pruned when both its in-degree and its out-degree fall below
    ``min_degree``. Surviving nodes keep their relative order.
    """
    edge_mask = graph.src != graph.dst
    alive = np.ones(graph.node_count, dtype=bool)
    if not skip_prune:
        while True:
            s, d = graph.src[edge_mask], graph.dst[edge_mask]
            indeg = np.bincount(d, minlength=graph.node_count)
            outdeg = np.bincount(s, minlength=graph.node_count)
            drop = alive & (indeg < min_degree) & (outdeg < min_degree)
            if not drop.any():
                break
            alive &= ~drop
            edge_mask &= alive[graph.src] & alive[graph.dst]
    out = _induced(graph, np.flatnonzero(alive), edge_mask)
    if out.edge_count == 0:
        raise GraphError("graph is empty after preparation")
    return normalize_in_weights(out)


@dataclass
class NodeMetrics:
    weighted_in_degree: np.ndarray
    weighted_out_degree: np.ndarray
    pagerank: np.ndarray


def pagerank(graph: DirectedGraph, damping: float = 0.85, iterations: int = 100, tol: float = 1e-10) -> np.ndarray:
    """Weighted PageRank by power iteration.

    A walker at ``u`` follows ``u -> v`` with probability proportional to
    ``w(u, v)``; mass at nodes without out-edges is spread uniformly.
    """
    n = graph.node_count
    out_w = np.bincount(graph.src, weights=graph.weight, minlength=n)
    dangling = out_w == 0
    trans = graph.weight / np.where(dangling, 1.0, out_w)[graph.src]
    pr = np.full(n, 1.0 / n)
    for _ in range(iterations):
        flow = np.bincount(graph.dst, weights=pr[graph.src] * trans, minlength=n)
        new = damping * (flow + pr[dangling].sum() / n) + (1.0 - damping) / n
        new /= new.sum()
        change = np.abs(new - pr).sum()
        pr = new
        if change < tol:
            break
    return pr


def compute_node_metrics(graph: DirectedGraph, damping: float = 0.85, iterations: int = 100) -> NodeMetrics:
    n = graph.node_count
    return NodeMetrics(
        weighted_in_degree=np.bincount(graph.dst, weights=graph.weight, minlength=n),
        weighted_out_degree=np.bincount(graph.src, weights=graph.weight, minlength=n),
        pagerank=pagerank(graph, damping, iterations),
    )
