"""The network-aware attack.

Seed probabilities ``alpha`` are fitted so that the activation probabilities
they imply (computed inside each node's local DAG) minimize the expected
symmetric difference between re-perturbed reports and the observed ones,
``f = sum_t c_t * lp_t(t)``. An optional slab constraint keeps the mean
activation near the debiased population share.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .graph import DirectedGraph
from .ldag import DagIndex, LocalDag, build_index, greedy_capacity
from .privacy import PerturbedReports, PopulationEstimate, RRMechanism, estimate_population

log = logging.getLogger(__name__)

VARIANTS = ("CO-DAG", "O-DAG", "CO-RND", "O-RND")


@dataclass
class ObjectiveCoefficients:
    c: np.ndarray


def compute_coefficients(reports: PerturbedReports, mechanism: RRMechanism) -> ObjectiveCoefficients:
    """``c_v = Pr(z = ~z_v | x = 1) - Pr(z = ~z_v | x = 0)``; equals -beta where z_v = 1, +beta where z_v = 0."""
    flipped = 1 - reports.z.astype(np.int64)
    c1 = np.where(flipped == 1, mechanism.p_z_given_x(1, 1), mechanism.p_z_given_x(0, 1))
    c0 = np.where(flipped == 1, mechanism.p_z_given_x(1, 0), mechanism.p_z_given_x(0, 0))
    return ObjectiveCoefficients(c1 - c0)


def _dag_in_edges(dag: LocalDag):
    pos = dag.position
    incoming = [[] for _ in dag.members]
    outgoing = [[] for _ in dag.members]
    for u, v, w in zip(dag.edge_src.tolist(), dag.edge_dst.tolist(), dag.edge_w.tolist()):
        incoming[pos[v]].append((pos[u], w))
        outgoing[pos[u]].append((pos[v], w))
    return incoming, outgoing


def dag_activation(dag: LocalDag, alpha) -> np.ndarray:
    """Local activation probabilities, aligned with ``dag.members``.

    ``lp(v) = alpha_v + (1 - alpha_v) * sum_{u -> v in DAG} w(u, v) lp(u)``,
    evaluated in topological order.
    """
    alpha = np.asarray(alpha, dtype=float)
    a = alpha[list(dag.members)]
    incoming, _ = _dag_in_edges(dag)
    lp = np.zeros(dag.size)
    for i in range(dag.size - 1, -1, -1):
        s = sum(w * lp[j] for j, w in incoming[i])
        lp[i] = a[i] + (1.0 - a[i]) * s
    return lp


def dag_gradient(dag: LocalDag, alpha, lp) -> tuple[np.ndarray, np.ndarray]:
    """Sensitivities of the target's activation, aligned with ``dag.members``.

    Returns ``(d lp(t) / d lp(v), d lp(t) / d alpha_v)``.
    """
    alpha = np.asarray(alpha, dtype=float)
    a = alpha[list(dag.members)]
    incoming, outgoing = _dag_in_edges(dag)
    dlp = np.zeros(dag.size)
    dalpha = np.zeros(dag.size)
    for i in range(dag.size):
        if i == 0:
            dlp[i] = 1.0
        else:
            dlp[i] = sum(w * (1.0 - a[j]) * dlp[j] for j, w in outgoing[i])
        s = sum(w * lp[j] for j, w in incoming[i])
        dalpha[i] = dlp[i] * (1.0 - s)
    return dlp, dalpha


class StackedDags:
    """All local DAGs of an index flattened into one array program.

    Every (DAG, member) pair gets a slot. Slots are grouped into levels by
    longest distance from a source (forward sweep) and from the target
    (backward sweep), so one objective evaluation costs a few numpy calls
    per level instead of a python loop per DAG.
    """

    def __init__(self, index: DagIndex):
        self.n = index.n
        sizes = index.sizes()
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        self.target_slot = offsets[:-1].copy()
        self.slot_node = np.concatenate([np.asarray(d.members, dtype=np.int64) for d in index.dags])
        e_src, e_dst, e_w = [], [], []
        depth = np.zeros(len(self.slot_node), dtype=np.int64)
        height = np.zeros(len(self.slot_node), dtype=np.int64)
        for d, off in zip(index.dags, offsets[:-1].tolist()):
            if not len(d.edge_src):
                continue
            pos = d.position
            s = np.array([pos[u] for u in d.edge_src.tolist()]) + off
            t = np.array([pos[v] for v in d.edge_dst.tolist()]) + off
            e_src.append(s)
            e_dst.append(t)
            e_w.append(d.edge_w)
            # edges always point from later-admitted to earlier-admitted slots
            by_src = sorted(zip(s.tolist(), t.tolist()), key=lambda p: p[0])
            for a_, b_ in by_src:
                if height[b_] + 1 > height[a_]:
                    height[a_] = height[b_] + 1
            for a_, b_ in sorted(zip(s.tolist(), t.tolist()), key=lambda p: -p[1]):
                if depth[a_] + 1 > depth[b_]:
                    depth[b_] = depth[a_] + 1
        if e_src:
            self.e_src = np.concatenate(e_src)
            self.e_dst = np.concatenate(e_dst)
            self.e_w = np.concatenate(e_w)
        else:
            self.e_src = self.e_dst = np.zeros(0, dtype=np.int64)
            self.e_w = np.zeros(0)
        self.forward_levels = self._levels(depth, self.e_dst, self.e_src)
        self.backward_levels = self._levels(height, self.e_src, self.e_dst)

    def _levels(self, level, head, tail):
        """Per level: (slots, edge tails, local head index, weights)."""
        out = []
        edge_level = level[head]
        for lv in range(1, int(level.max(initial=0)) + 1):
            slots = np.flatnonzero(level == lv)
            sel = np.flatnonzero(edge_level == lv)
            local = np.searchsorted(slots, head[sel])
            out.append((slots, tail[sel], local, self.e_w[sel]))
        return out

    def forward(self, alpha: np.ndarray):
        """Local activation ``lp`` and in-flow ``s`` for every slot."""
        a = alpha[self.slot_node]
        lp = a.copy()
        s = np.zeros_like(a)
        for slots, tails, local, w in self.forward_levels:
            flow = np.bincount(local, weights=w * lp[tails], minlength=len(slots))
            s[slots] = flow
            lp[slots] = a[slots] + (1.0 - a[slots]) * flow
        return lp, s

    def backward(self, alpha: np.ndarray, s: np.ndarray, target_weight: np.ndarray) -> np.ndarray:
        """Gradient of ``sum_t target_weight[t] * lp_t(t)`` with respect to ``alpha``."""
        a = alpha[self.slot_node]
        adj = np.zeros_like(a)
        adj[self.target_slot] = target_weight
        for slots, tails, local, w in self.backward_levels:
            adj[slots] = np.bincount(local, weights=w * (1.0 - a[tails]) * adj[tails], minlength=len(slots))
        return np.bincount(self.slot_node, weights=adj * (1.0 - s), minlength=self.n)

    def target_activation(self, alpha: np.ndarray) -> np.ndarray:
        lp, _ = self.forward(alpha)
        return lp[self.target_slot]


def stacked(index: DagIndex) -> StackedDags:
    cached = getattr(index, "_stacked", None)
    if cached is None:
        cached = StackedDags(index)
        index._stacked = cached
    return cached


def slab_violation(mean_activation: float, estimate: PopulationEstimate | None) -> float:
    """How far the mean activation sits outside ``p_tilde_x +- radius``."""
    if estimate is None:
        return 0.0
    return max(0.0, abs(mean_activation - estimate.p_tilde_x) - estimate.radius)


def objective_and_gradient(index, coefficients: ObjectiveCoefficients, alpha,
                           estimate: PopulationEstimate | None, penalty_weight: float):
    """Penalized objective ``f + penalty_weight * violation**2`` and its gradient in ``alpha``."""
    engine = index if isinstance(index, StackedDags) else stacked(index)
    alpha = np.asarray(alpha, dtype=float)
    lp, s = engine.forward(alpha)
    x_hat = lp[engine.target_slot]
    c = coefficients.c
    value = float(c @ x_hat)
    target_weight = c.astype(float)
    if penalty_weight and estimate is not None:
        dev = x_hat.mean() - estimate.p_tilde_x
        h = slab_violation(x_hat.mean(), estimate)
        value += penalty_weight * h * h
        if h > 0:
            target_weight = target_weight + penalty_weight * 2.0 * h * math.copysign(1.0, dev) / engine.n
    return value, engine.backward(alpha, s, target_weight)


@dataclass
class SolverConfig:
    """Projected gradient descent settings.

    ``max_iterations`` doubles as the early-stopping budget: the relaxed
    objective is multilinear in ``alpha``, so running descent to convergence
    ends on a 0/1 vertex that reproduces the noisy reports instead of
    smoothing them. ``constraint_mode`` is ``"restore"`` (every trial point is
    shifted back into the slab) or ``"penalty"`` (growing quadratic penalty).
    """

    max_iterations: int = 1
    initial_step: float = 1.0
    armijo: float = 1e-4
    max_backtracks: int = 40
    tolerance: float = 1e-7
    constrained: bool = True
    constraint_mode: str = "restore"
    penalty_start: float = 1.0
    penalty_growth: float = 10.0
    penalty_max: float = 1e10
    violation_tol: float = 1e-4
    init: str = "estimate"  # "estimate" or a number in [0, 1]

    def __post_init__(self):
        if self.max_iterations < 1 or self.tolerance <= 0 or self.initial_step <= 0:
            raise ValueError("iteration count, tolerance and step must be positive")
        if self.penalty_growth <= 1:
            raise ValueError("penalty_growth must exceed 1")
        if self.constraint_mode not in ("restore", "penalty"):
            raise ValueError(f"unknown constraint_mode {self.constraint_mode!r}")
        if self.init != "estimate":
            v = float(self.init)
            if not 0.0 <= v <= 1.0:
                raise ValueError("numeric init must lie in [0, 1]")


@dataclass
class InferenceResult:
    alpha: np.ndarray
    x_hat: np.ndarray
    objective_trace: list
    constraint_violation: float
    converged: bool
    trace: list = field(default_factory=list)  # (iteration, objective, violation, step)
    meta: dict = field(default_factory=dict)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["node_id", "alpha", "x_hat"])
            for v, (a, x) in enumerate(zip(self.alpha.tolist(), self.x_hat.tolist())):
                w.writerow([v, repr(a), repr(x)])

    def write_trace_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "objective", "violation", "step"])
            w.writerows(self.trace)


def read_x_hat_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = sorted(csv.DictReader(fh), key=lambda r: int(r["node_id"]))
    return np.array([float(r["x_hat"]) for r in rows])


def _initial_alpha(n: int, config: SolverConfig, estimate: PopulationEstimate | None) -> np.ndarray:
    if config.init == "estimate":
        start = estimate.p_tilde_x if estimate is not None else 0.5
    else:
        start = float(config.init)
    return np.full(n, min(max(start, 0.01), 0.99))


def restore_slab(engine: StackedDags, alpha: np.ndarray, estimate: PopulationEstimate,
                 iterations: int = 60) -> np.ndarray:
    """Shift ``alpha`` uniformly (then clip) until the mean activation re-enters the slab.

    Mean activation is non-decreasing in the shift, so bisection finds the
    smallest move that lands on the violated boundary. The returned point is
    always feasible.
    """
    def mean_at(shift):
        return engine.target_activation(np.clip(alpha + shift, 0.0, 1.0)).mean()

    p, r = estimate.p_tilde_x, estimate.radius
    # compare in the same arithmetic form as slab_violation so "inside" agrees bit for bit
    m = mean_at(0.0)
    if abs(m - p) <= r:
        return alpha
    if m > p:
        good, bad = -1.0, 0.0  # mean_at(-1) == 0 sits below the upper edge
        for _ in range(iterations):
            mid = 0.5 * (good + bad)
            if mean_at(mid) - p <= r:
                good = mid
            else:
                bad = mid
    else:
        good, bad = 1.0, 0.0  # mean_at(1) == 1 sits above the lower edge
        for _ in range(iterations):
            mid = 0.5 * (good + bad)
            if p - mean_at(mid) <= r:
                good = mid
            else:
                bad = mid
    return np.clip(alpha + good, 0.0, 1.0)


def solve(index, coefficients: ObjectiveCoefficients, estimate: PopulationEstimate | None,
          config: SolverConfig | None = None, seed=None) -> InferenceResult:
    """Projected gradient descent on the box, with the slab constraint when configured.

    Each iteration backtracks from ``initial_step`` until the Armijo condition
    holds at the projected (and, in restore mode, slab-restored) trial point.
    In penalty mode a stall with the slab still violated multiplies the
    penalty weight by ``penalty_growth``. ``seed`` is accepted for interface
    symmetry; the solver is deterministic.
    """
    config = config or SolverConfig()
    engine = index if isinstance(index, StackedDags) else stacked(index)
    constrained = config.constrained and estimate is not None
    restore = constrained and config.constraint_mode == "restore"
    weight = config.penalty_start if constrained and not restore else 0.0
    alpha = _initial_alpha(engine.n, config, estimate)
    if restore:
        alpha = restore_slab(engine, alpha, estimate)

    def project(a):
        a = np.clip(a, 0.0, 1.0)
        return restore_slab(engine, a, estimate) if restore else a

    def fval(a):
        x = engine.target_activation(a)
        h = slab_violation(x.mean(), estimate) if weight else 0.0
        return float(coefficients.c @ x) + weight * h * h

    value, grad = objective_and_gradient(engine, coefficients, alpha, estimate, weight)
    if not math.isfinite(value):
        raise FloatingPointError("objective is not finite; check weights and coefficients")
    objective_trace = [value]
    trace = []
    converged = False
    it = 0
    for it in range(1, config.max_iterations + 1):
        step = config.initial_step
        accepted = False
        for _ in range(config.max_backtracks):
            cand = project(alpha - step * grad)
            moved = cand - alpha
            if not moved.any():
                break
            new_value = fval(cand)
            if new_value <= value + config.armijo * float(grad @ moved):
                accepted = True
                break
            step *= 0.5
        change = abs(value - new_value) / max(1.0, abs(value)) if accepted else 0.0
        if accepted:
            alpha = cand
        violation = slab_violation(engine.target_activation(alpha).mean(), estimate) if constrained else 0.0
        if change < config.tolerance:
            if weight and violation > config.violation_tol and weight < config.penalty_max:
                weight = min(weight * config.penalty_growth, config.penalty_max)
            else:
                converged = True
        value, grad = objective_and_gradient(engine, coefficients, alpha, estimate, weight)
        if not math.isfinite(value):
            raise FloatingPointError("objective became non-finite during descent")
        objective_trace.append(value)
        trace.append((it, value, violation, step if accepted else 0.0))
        if converged:
            break

    x_hat = engine.target_activation(alpha)
    violation = slab_violation(x_hat.mean(), estimate) if estimate is not None else 0.0
    return InferenceResult(
        alpha=alpha,
        x_hat=x_hat,
        objective_trace=objective_trace,
        constraint_violation=violation,
        converged=converged,
        trace=trace,
        meta={"iterations": it, "penalty_weight": weight, "f": float(coefficients.c @ x_hat)},
    )


def infer(graph: DirectedGraph, reports: PerturbedReports, mechanism: RRMechanism,
          variant: str = "CO-DAG", eta: float = 0.01, n_max: int = 100,
          config: SolverConfig | None = None, seed=None,
          greedy_index: DagIndex | None = None) -> InferenceResult:
    """Run one attack variant end to end and return activation scores.

    ``*-DAG`` variants use greedy local DAGs, ``*-RND`` variants random DAGs
    whose capacity is the rounded mean greedy DAG size. ``CO-*`` variants
    enforce the population constraint, ``O-*`` variants do not. A prebuilt
    greedy index may be passed to avoid rebuilding it.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    config = config or SolverConfig()
    constrained = variant.startswith("CO-")
    if constrained != config.constrained:
        config = SolverConfig(**{**config.__dict__, "constrained": constrained})
    if greedy_index is None:
        greedy_index = build_index(graph, "greedy", eta, n_max)
    if variant.endswith("DAG"):
        index = greedy_index
    else:
        index = build_index(graph, "random", seed=seed, capacity=greedy_capacity(greedy_index))
    try:
        estimate = estimate_population(reports, mechanism)
    except ValueError:
        log.info("beta = %s gives no population estimate; running unconstrained", mechanism.beta)
        estimate = None
    coefficients = compute_coefficients(reports, mechanism)
    result = solve(index, coefficients, estimate, config, seed)
    sizes = index.sizes()
    result.meta.update(variant=variant, dag_mean_size=float(sizes.mean()), dag_max_size=int(sizes.max()))
    return result
