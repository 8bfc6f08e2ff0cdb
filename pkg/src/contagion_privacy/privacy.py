"""Randomized response, its privacy accounting and the report-only baselines."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np


def _check_beta(beta: float) -> None:
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")


def epsilon_of_beta(beta: float) -> float:
    _check_beta(beta)
    return math.log((1.0 + beta) / (1.0 - beta))


def auc_upper_bound(epsilon: float, delta: float = 0.0) -> float:
    """Best AUC reachable from (epsilon, delta)-DP reports alone: 1 - (1 - delta) / (e^eps + 1)."""
    if epsilon < 0 or not 0.0 <= delta <= 1.0:
        raise ValueError("need epsilon >= 0 and delta in [0, 1]")
    return 1.0 - (1.0 - delta) / (math.exp(epsilon) + 1.0)


@dataclass(frozen=True)
class RRMechanism:
    """Report the truth with probability ``beta``, otherwise a fair coin."""

    beta: float

    def __post_init__(self):
        _check_beta(self.beta)

    @property
    def delta(self) -> float:
        return 0.0

    @property
    def epsilon(self) -> float:
        return epsilon_of_beta(self.beta)

    def p_z_given_x(self, z: int, x: int) -> float:
        p1 = (1.0 + self.beta) / 2.0 if x == 1 else (1.0 - self.beta) / 2.0
        return p1 if z == 1 else 1.0 - p1

    @property
    def table(self) -> np.ndarray:
        """``table[x, z] = Pr(z | x)``."""
        return np.array([[self.p_z_given_x(z, x) for z in (0, 1)] for x in (0, 1)])

    @property
    def c(self) -> float:
        return self.p_z_given_x(1, 1) - self.p_z_given_x(1, 0)


@dataclass
class PerturbedReports:
    z: np.ndarray
    mechanism: RRMechanism

    @property
    def n(self) -> int:
        return len(self.z)


def perturb(truth, beta: float, seed) -> PerturbedReports:
    """Apply randomized response independently to every node's attribute.

    ``truth`` may be a ``GroundTruth`` or a plain 0/1 vector.
    """
    mech = RRMechanism(beta)
    x = np.asarray(getattr(truth, "x", truth), dtype=np.int8)
    rng = np.random.default_rng(seed)
    keep = rng.random(len(x)) < beta
    coin = (rng.random(len(x)) < 0.5).astype(np.int8)
    return PerturbedReports(np.where(keep, x, coin).astype(np.int8), mech)


def bayesian_scores(reports: PerturbedReports, mechanism: RRMechanism, prior_p1: float) -> np.ndarray:
    """Posterior ``Pr(x_v = 1 | z_v)`` under the RR likelihood."""
    if not 0.0 < prior_p1 < 1.0:
        raise ValueError("prior must lie in (0, 1)")
    post = {}
    for z in (0, 1):
        num = mechanism.p_z_given_x(z, 1) * prior_p1
        post[z] = num / (num + mechanism.p_z_given_x(z, 0) * (1.0 - prior_p1))
    return np.where(reports.z == 1, post[1], post[0])


@dataclass(frozen=True)
class PopulationEstimate:
    p_tilde_z: float
    p_tilde_x: float
    p_tilde_x_raw: float
    radius: float
    n: int


def estimate_population(reports: PerturbedReports, mechanism: RRMechanism) -> PopulationEstimate:
    """Debiased share of ones, with a Hoeffding radius that holds with high probability."""
    n = reports.n
    if n < 2:
        raise ValueError("need at least two reports")
    c = mechanism.c
    if c <= 0:
        raise ValueError("beta = 0 carries no signal; the population estimate is undefined")
    pz = float(np.mean(reports.z))
    raw = (pz - mechanism.p_z_given_x(1, 0)) / c
    radius = math.sqrt(math.log(n) / (2.0 * n * c * c))
    return PopulationEstimate(pz, min(max(raw, 0.0), 1.0), raw, radius, n)


def write_reports_csv(reports: PerturbedReports, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_id", "z"])
        w.writerows(enumerate(reports.z.tolist()))


def read_reports_csv(path, beta: float) -> PerturbedReports:
    with open(path, newline="") as fh:
        rows = sorted(csv.DictReader(fh), key=lambda r: int(r["node_id"]))
    return PerturbedReports(np.array([int(r["z"]) for r in rows], dtype=np.int8), RRMechanism(beta))
