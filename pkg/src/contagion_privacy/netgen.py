"""Synthetic networks: stochastic Kronecker, Erdos-Renyi and power-law configuration model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import DirectedGraph, GraphError

KINDS = ("core-periphery", "erdos-renyi", "power-law", "hierarchical")

CORE_PERIPHERY = ((0.9, 0.5), (0.5, 0.3))
HIERARCHICAL = ((0.9, 0.1), (0.1, 0.9))


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    target_nodes: int = 500
    seed: int = 0
    kronecker: tuple | None = None
    er_out_degree: float = 5.0
    gamma: float = 1.0
    d_min: int = 1
    d_max: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown network kind {self.kind!r}; expected one of {KINDS}")
        if self.target_nodes < 2:
            raise ValueError("target_nodes must be at least 2")
        if self.er_out_degree <= 0:
            raise ValueError("er_out_degree must be positive")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        m = np.asarray(self.seed_matrix, dtype=float)
        if m.shape != (2, 2) or (m < 0).any() or (m > 1).any():
            raise ValueError("kronecker seed matrix must be 2x2 with entries in [0, 1]")

    @property
    def seed_matrix(self):
        if self.kronecker is not None:
            return self.kronecker
        return HIERARCHICAL if self.kind == "hierarchical" else CORE_PERIPHERY

    @property
    def kronecker_iterations(self) -> int:
        return max(1, math.ceil(math.log2(self.target_nodes)))

    @property
    def powerlaw_support(self) -> tuple[int, int]:
        n = self.target_nodes
        d_max = self.d_max if self.d_max is not None else int(math.floor(math.sqrt(n) * 5))
        return self.d_min, min(d_max, n - 1)

    @property
    def skip_prune(self) -> bool:
        return self.kind == "hierarchical"


def kronecker_sample(seed_matrix, iterations: int, seed, chunk_rows: int = 256) -> np.ndarray:
    """Stochastic Kronecker graph on ``2**iterations`` nodes.

    Each ordered pair ``(u, v)``, self-pairs included, is an independent
    Bernoulli draw with probability ``prod_k seed[bit_k(u)][bit_k(v)]``.
    Returns an ``(m, 2)`` array of edges in row-major order.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    theta = np.asarray(seed_matrix, dtype=float)
    rng = np.random.default_rng(seed)
    n = 2 ** iterations
    bits = (np.arange(n)[:, None] >> np.arange(iterations)[None, :]) & 1
    found = []
    for lo in range(0, n, chunk_rows):
        rows = bits[lo:lo + chunk_rows]
        prob = np.ones((len(rows), n))
        for k in range(iterations):
            prob *= theta[rows[:, k][:, None], bits[:, k][None, :]]
        hit = rng.random(prob.shape) < prob
        u, v = np.nonzero(hit)
        found.append(np.column_stack([u + lo, v]))
    return np.concatenate(found).astype(np.int64)


def erdos_renyi(n: int, expected_out_degree: float, seed) -> np.ndarray:
    p = expected_out_degree / (n - 1)
    rng = np.random.default_rng(seed)
    hit = rng.random((n, n)) < p
    np.fill_diagonal(hit, False)
    return np.column_stack(np.nonzero(hit)).astype(np.int64)


def powerlaw_degree_sequence(n: int, gamma: float, d_min: int, d_max: int, seed) -> np.ndarray:
    """``n`` i.i.d. degrees with ``p(d) ~ d**-gamma`` on ``[d_min, d_max]``.

    One entry is bumped by one when the total is odd.
    """
    if not 1 <= d_min <= d_max <= n - 1:
        raise ValueError(f"need 1 <= d_min <= d_max <= n-1, got {d_min}, {d_max}, n={n}")
    rng = np.random.default_rng(seed)
    support = np.arange(d_min, d_max + 1)
    # log-space keeps large gamma from underflowing before normalization
    logp = -gamma * np.log(support)
    pmf = np.exp(logp - logp.max())
    pmf /= pmf.sum()
    degrees = rng.choice(support, size=n, p=pmf)
    if degrees.sum() % 2:
        room = np.flatnonzero(degrees < d_max)
        if len(room):
            degrees[room[rng.integers(len(room))]] += 1
        else:
            degrees[rng.integers(n)] -= 1
    return degrees


def configuration_model(in_degrees, out_degrees, seed) -> np.ndarray:
    """Directed configuration model: random matching of out-stubs to in-stubs.

    Self-loops and repeated pairs are discarded after matching.
    """
    in_degrees = np.asarray(in_degrees, dtype=np.int64)
    out_degrees = np.asarray(out_degrees, dtype=np.int64)
    if in_degrees.sum() != out_degrees.sum():
        raise ValueError(f"stub mismatch: {in_degrees.sum()} in vs {out_degrees.sum()} out")
    rng = np.random.default_rng(seed)
    out_stubs = np.repeat(np.arange(len(out_degrees)), out_degrees)
    in_stubs = rng.permutation(np.repeat(np.arange(len(in_degrees)), in_degrees))
    if len(out_stubs) == 0:
        return np.empty((0, 2), dtype=np.int64)
    edges = np.column_stack([out_stubs, in_stubs])
    edges = edges[edges[:, 0] != edges[:, 1]]
    _, first = np.unique(edges, axis=0, return_index=True)
    return edges[np.sort(first)]


def generate(spec: GeneratorSpec) -> DirectedGraph:
    """Unweighted graph for ``spec``; weights and pruning happen downstream."""
    seq = spec.seed if isinstance(spec.seed, np.random.SeedSequence) else np.random.SeedSequence(spec.seed)
    if spec.kind in ("core-periphery", "hierarchical"):
        k = spec.kronecker_iterations
        n = 2 ** k
        edges = kronecker_sample(spec.seed_matrix, k, seq)
    elif spec.kind == "erdos-renyi":
        n = spec.target_nodes
        edges = erdos_renyi(n, spec.er_out_degree, seq)
    else:
        n = spec.target_nodes
        deg_seed, perm_seed, match_seed = seq.spawn(3)
        d_min, d_max = spec.powerlaw_support
        out_deg = powerlaw_degree_sequence(n, spec.gamma, d_min, d_max, deg_seed)
        in_deg = np.random.default_rng(perm_seed).permutation(out_deg)
        edges = configuration_model(in_deg, out_deg, match_seed)
    if len(edges) == 0:
        raise GraphError(f"{spec.kind} generator produced no edges")
    return DirectedGraph(
        n, edges[:, 0], edges[:, 1], np.ones(len(edges)),
        meta={"kind": spec.kind, "weighted": False},
    )
