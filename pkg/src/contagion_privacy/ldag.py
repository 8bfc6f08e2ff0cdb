"""Local DAGs around each target node.

A DAG is grown from its target by admitting one node at a time, together with
the node's edges into the current members. Because a newcomer only ever gets
edges pointing at older members, reverse admission order is a topological
order and the result is acyclic by construction.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .graph import DirectedGraph


@dataclass
class LocalDag:
    target: int
    members: tuple
    edge_src: np.ndarray
    edge_dst: np.ndarray
    edge_w: np.ndarray
    influence: np.ndarray  # In(v, t) at admission time, aligned with ``members``

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def topo_order(self) -> tuple:
        return self.members[::-1]

    @property
    def position(self) -> dict:
        return {v: i for i, v in enumerate(self.members)}

    def influence_of(self, v: int) -> float:
        return float(self.influence[self.position[v]])


def _admit(u, outs, pos, members, in_vals, es, ed, ew, influence_map=None):
    inf_u = 0.0
    for v, w in outs[u]:
        if v in pos:
            es.append(u)
            ed.append(v)
            ew.append(w)
            inf_u += w * in_vals[pos[v]]
    if influence_map is not None:
        inf_u = influence_map[u]
    pos[u] = len(members)
    members.append(u)
    in_vals.append(inf_u)
    return inf_u


def _finish(target, members, in_vals, es, ed, ew) -> LocalDag:
    return LocalDag(
        target,
        tuple(members),
        np.asarray(es, dtype=np.int64),
        np.asarray(ed, dtype=np.int64),
        np.asarray(ew, dtype=float),
        np.asarray(in_vals, dtype=float),
    )


def build_greedy_dag(graph: DirectedGraph, target: int, eta: float = 0.01, n_max: int = 100,
                     adjacency=None) -> LocalDag:
    """Grow the DAG of ``target`` by repeatedly admitting the most influential outsider.

    Stops once the best outsider's influence is below ``eta`` or admitting it
    would exceed ``n_max`` members. The target itself is always admitted.
    Equal influence values go to the lowest node id.
    """
    if not 0 < eta or n_max < 1:
        raise ValueError("need eta > 0 and n_max >= 1")
    ins, outs = adjacency if adjacency is not None else graph.adjacency_lists()
    influence = {target: 1.0}
    heap = [(-1.0, target)]
    pos: dict = {}
    members, in_vals, es, ed, ew = [], [], [], [], []
    while heap:
        neg, u = heapq.heappop(heap)
        if u in pos or -neg != influence[u]:
            continue  # admitted already, or a stale entry superseded by a larger value
        if u != target and (-neg < eta or len(members) >= n_max):
            break
        inf_u = _admit(u, outs, pos, members, in_vals, es, ed, ew, influence)
        for v, w in ins[u]:
            if v in pos:
                continue
            influence[v] = influence.get(v, 0.0) + w * inf_u
            heapq.heappush(heap, (-influence[v], v))
    return _finish(target, members, in_vals, es, ed, ew)


def build_random_dag(graph: DirectedGraph, target: int, n_max: int, seed, adjacency=None) -> LocalDag:
    """Grow the DAG of ``target`` by admitting uniformly random in-neighbors of members."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    rng = np.random.default_rng(seed)
    ins, outs = adjacency if adjacency is not None else graph.adjacency_lists()
    pos = {target: 0}
    members, in_vals, es, ed, ew = [target], [1.0], [], [], []
    frontier, in_frontier = [], set()

    def extend(u):
        for v, _ in ins[u]:
            if v not in pos and v not in in_frontier:
                in_frontier.add(v)
                frontier.append(v)

    extend(target)
    while frontier and len(members) < n_max:
        i = int(rng.integers(len(frontier)))
        frontier[i], frontier[-1] = frontier[-1], frontier[i]
        u = frontier.pop()
        in_frontier.discard(u)
        _admit(u, outs, pos, members, in_vals, es, ed, ew)
        extend(u)
    return _finish(target, members, in_vals, es, ed, ew)


@dataclass
class DagIndex:
    dags: list
    mode: str = "greedy"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.membership = [[] for _ in self.dags]
        for d in self.dags:
            for v in d.members:
                self.membership[v].append(d.target)

    @property
    def n(self) -> int:
        return len(self.dags)

    def sizes(self) -> np.ndarray:
        return np.array([d.size for d in self.dags])

    def mean_size(self) -> float:
        return float(self.sizes().mean())


def build_index(graph: DirectedGraph, mode: str = "greedy", eta: float = 0.01, n_max: int = 100,
                seed=None, capacity: int | None = None) -> DagIndex:
    """One local DAG per node.

    In random mode the DAG capacity is ``capacity`` when given; otherwise a
    greedy index is built first and its rounded mean DAG size is used.
    """
    adjacency = graph.adjacency_lists()
    if mode == "greedy":
        dags = [build_greedy_dag(graph, t, eta, n_max, adjacency) for t in range(graph.node_count)]
        return DagIndex(dags, mode, {"eta": eta, "n_max": n_max})
    if mode != "random":
        raise ValueError(f"unknown DAG mode {mode!r}")
    if capacity is None:
        capacity = greedy_capacity(build_index(graph, "greedy", eta, n_max))
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    seeds = root.spawn(graph.node_count)
    dags = [build_random_dag(graph, t, capacity, seeds[t], adjacency) for t in range(graph.node_count)]
    return DagIndex(dags, mode, {"capacity": capacity})


def greedy_capacity(index: DagIndex) -> int:
    return max(1, int(round(index.mean_size())))


def rebuild_dag(graph: DirectedGraph, target: int, members, adjacency=None) -> LocalDag:
    """Reconstruct edges and influence from a member list in admission order."""
    _, outs = adjacency if adjacency is not None else graph.adjacency_lists()
    members = list(members)
    if not members or members[0] != target:
        raise ValueError("member list must start with the target")
    pos = {target: 0}
    mem, in_vals, es, ed, ew = [target], [1.0], [], [], []
    for u in members[1:]:
        _admit(u, outs, pos, mem, in_vals, es, ed, ew)
    return _finish(target, mem, in_vals, es, ed, ew)


def write_index(index: DagIndex, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"# mode {index.mode}\n")
        for d in index.dags:
            fh.write(" ".join(str(v) for v in d.members) + "\n")


def read_index(graph: DirectedGraph, path) -> DagIndex:
    adjacency = graph.adjacency_lists()
    mode = "greedy"
    dags = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("# mode"):
                mode = line.split()[2]
                continue
            members = [int(tok) for tok in line.split()]
            dags.append(rebuild_dag(graph, members[0], members, adjacency))
    if [d.target for d in dags] != list(range(graph.node_count)):
        raise ValueError(f"{path}: expected one DAG per node in node order")
    return DagIndex(dags, mode)
