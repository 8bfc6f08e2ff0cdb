"""Scoring inferred attributes: AUC, per-node expected accuracy, correlations."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .privacy import RRMechanism, auc_upper_bound


def auc(scores, labels) -> float:
    """Mann-Whitney AUC: share of (positive, negative) pairs ranked correctly, ties counted as 1/2."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one positive and one negative label")
    ranks = stats.rankdata(scores)  # average ranks resolve ties to 1/2 per pair
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def expected_accuracy(x_hat, truth) -> np.ndarray:
    """Accuracy of thresholding ``x_hat`` at a uniform random cut: ``x_hat`` if truly 1, else ``1 - x_hat``."""
    x_hat = np.asarray(x_hat, dtype=float)
    x = np.asarray(getattr(truth, "x", truth))
    if x.shape != x_hat.shape:
        raise ValueError("x_hat and ground truth differ in length")
    return np.where(x == 1, x_hat, 1.0 - x_hat)


def correlate(values, attribute) -> tuple[float, float]:
    """Pearson r with a two-sided p-value from the t distribution with n - 2 dof."""
    a = np.asarray(values, dtype=float)
    b = np.asarray(attribute, dtype=float)
    if a.shape != b.shape or len(a) < 3:
        raise ValueError("need two equal-length vectors with at least 3 entries")
    da, db = a - a.mean(), b - b.mean()
    sa, sb = math.sqrt(da @ da), math.sqrt(db @ db)
    if sa == 0 or sb == 0:
        raise ValueError("correlation undefined for a constant vector")
    r = float(np.clip((da @ db) / (sa * sb), -1.0, 1.0))
    dof = len(a) - 2
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt(dof / (1.0 - r * r))
    return r, float(2.0 * stats.t.sf(abs(t), dof))


@dataclass
class EvaluationReport:
    auc: float
    upper_bound: float
    per_node_expected_accuracy: np.ndarray
    correlations: dict = field(default_factory=dict)

    @property
    def beats_bound(self) -> bool:
        return self.auc > self.upper_bound

    def to_dict(self) -> dict:
        d = asdict(self)
        d["beats_bound"] = self.beats_bound
        d["per_node_expected_accuracy"] = self.per_node_expected_accuracy.tolist()
        d["mean_expected_accuracy"] = float(self.per_node_expected_accuracy.mean())
        d["correlations"] = {k: {"r": r, "p": p} for k, (r, p) in self.correlations.items()}
        return d

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def to_row(self) -> dict:
        row = {
            "auc": f"{self.auc:.4f}",
            "upper_bound": f"{self.upper_bound:.4f}",
            "beats_bound": int(self.beats_bound),
            "mean_expected_accuracy": f"{self.per_node_expected_accuracy.mean():.4f}",
        }
        for k, (r, p) in self.correlations.items():
            row[f"r_{k}"] = f"{r:.4f}"
            row[f"p_{k}"] = f"{p:.3g}"
        return row


def evaluate(x_hat, truth, mechanism: RRMechanism | None, node_metrics=None) -> EvaluationReport:
    x = np.asarray(getattr(truth, "x", truth))
    acc = expected_accuracy(x_hat, x)
    bound = auc_upper_bound(mechanism.epsilon, mechanism.delta) if mechanism is not None else float("nan")
    correlations = {}
    if node_metrics is not None:
        for name in ("weighted_out_degree", "weighted_in_degree", "pagerank"):
            try:
                correlations[name] = correlate(getattr(node_metrics, name), acc)
            except ValueError:
                correlations[name] = (float("nan"), float("nan"))
    return EvaluationReport(auc(x_hat, x), bound, acc, correlations)
