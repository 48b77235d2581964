"""Stratified k-fold cross-validation, confusion metrics, ROC curves and AUC."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .core import ContractError, DegenerateDataError
from .features import FeatureMatrix
from .learners import LearnerSpec, Model, train


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    assignment: np.ndarray
    seed: int

    def test_index(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)

    def train_index(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != fold)


def stratified_folds(labels: Sequence[int], k: int, seed: int = 0) -> FoldAssignment:
    """Deal shuffled positives, then shuffled negatives, round-robin over the folds.

    Dealing continues across the two classes, so fold sizes differ by at most
    one and so do per-fold positive counts.
    """
    y = np.asarray(labels, dtype=int)
    n = y.size
    if k < 2:
        raise ContractError(f"need at least 2 folds, got {k}")
    if k > n:
        raise ContractError(f"cannot make {k} folds from {n} instances")
    rng = np.random.default_rng(seed)
    order = np.concatenate([rng.permutation(np.flatnonzero(y == 1)), rng.permutation(np.flatnonzero(y != 1))])
    assignment = np.empty(n, dtype=int)
    assignment[order] = np.arange(n) % k
    return FoldAssignment(k, assignment, seed)


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f_measure: float
    tp: int
    fp: int
    fn: int
    tn: int
    precision_undefined: bool = False

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def metrics_from_counts(tp: int, fp: int, fn: int, tn: int) -> Metrics:
    n = tp + fp + fn + tn
    if n == 0:
        raise ContractError("no instances")
    precision_undefined = tp + fp == 0
    precision = 0.0 if precision_undefined else tp / (tp + fp)
    recall = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return Metrics((tp + tn) / n, precision, recall, f, tp, fp, fn, tn, precision_undefined)


def confusion_metrics(y_true: Sequence[int], y_pred: Sequence[int]) -> Metrics:
    t = np.asarray(y_true, dtype=int)
    p = np.asarray(y_pred, dtype=int)
    if t.shape != p.shape:
        raise ContractError(f"length mismatch: {t.size} labels vs {p.size} predictions")
    if t.size == 0:
        raise ContractError("no instances")
    tp = int(np.sum((t == 1) & (p == 1)))
    fp = int(np.sum((t != 1) & (p == 1)))
    fn = int(np.sum((t == 1) & (p != 1)))
    tn = int(np.sum((t != 1) & (p != 1)))
    return metrics_from_counts(tp, fp, fn, tn)


@dataclass(frozen=True)
class ROCPoint:
    fpr: float
    tpr: float
    threshold: float


def _check_both_classes(y):
    if not (np.any(y == 1) and np.any(y != 1)):
        raise DegenerateDataError("ROC/AUC need both classes in the true labels")


def roc_curve(y_true: Sequence[int], scores: Sequence[float]) -> list[ROCPoint]:
    """Points for "score >= threshold", thresholds descending, starting at (0, 0).

    Tied scores share one threshold, so the curve moves diagonally across ties.
    The last threshold is the minimum score, which yields (1, 1).
    """
    y = np.asarray(y_true, dtype=int)
    s = np.asarray(scores, dtype=float)
    _check_both_classes(y)
    order = np.argsort(-s, kind="stable")
    s_sorted, y_sorted = s[order], (y[order] == 1)
    last_of_tie = np.r_[np.flatnonzero(np.diff(s_sorted) != 0), s.size - 1]
    tps = np.cumsum(y_sorted)[last_of_tie]
    fps = (last_of_tie + 1) - tps
    P, N = y_sorted.sum(), (~y_sorted).sum()
    points = [ROCPoint(0.0, 0.0, float("inf"))]
    points += [ROCPoint(fp / N, tp / P, float(t)) for fp, tp, t in zip(fps, tps, s_sorted[last_of_tie])]
    return points


def trapezoid_area(points: Sequence[ROCPoint]) -> float:
    x = np.array([p.fpr for p in points])
    y = np.array([p.tpr for p in points])
    return float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1]) / 2.0))


def auc(y_true: Sequence[int], scores: Sequence[float]) -> float:
    """Area under :func:`roc_curve`; ties earn half credit."""
    return trapezoid_area(roc_curve(y_true, scores))


@dataclass
class EvalReport:
    learner: str
    dataset: str
    k: int
    seed: int
    metrics: Metrics
    auc: float
    roc: list
    fold_metrics: list
    fold_auc: list
    scores: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    folds: FoldAssignment = field(repr=False)
    models: list = field(default_factory=list, repr=False)

    def fold_summary(self) -> dict:
        out = {}
        for name in ("accuracy", "precision", "recall", "f_measure"):
            vals = np.array([getattr(m, name) for m in self.fold_metrics])
            out[name] = {"mean": float(vals.mean()), "sd": float(vals.std())}
        aucs = np.array([a for a in self.fold_auc if a is not None], dtype=float)
        out["auc"] = {"mean": float(aucs.mean()) if aucs.size else None,
                      "sd": float(aucs.std()) if aucs.size else None}
        return out

    def to_dict(self) -> dict:
        return {
            "learner": self.learner,
            "dataset": self.dataset,
            "k": self.k,
            "seed": self.seed,
            "n": int(self.labels.size),
            "pooled": {**asdict(self.metrics), "auc": self.auc},
            "per_fold": [{**asdict(m), "auc": a} for m, a in zip(self.fold_metrics, self.fold_auc)],
            "fold_mean_sd": self.fold_summary(),
            "roc_points": len(self.roc),
        }


def write_report_json(report: EvalReport, path, extra: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({**(extra or {}), **report.to_dict()}, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_roc_csv(points: Sequence[ROCPoint], path, header_lines: Sequence[str] = ()) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["fpr", "tpr", "threshold"])
        for p in points:
            writer.writerow([repr(p.fpr), repr(p.tpr), repr(p.threshold)])


def cross_validate(spec: LearnerSpec, data: FeatureMatrix, k: int = 10, seed: int = 0,
                   keep_models: bool = False, folds: FoldAssignment | None = None) -> EvalReport:
    """Fit on k-1 folds, score the held-out fold, pool the held-out scores.

    Imputation and scaling statistics are refit inside each training split.
    ``folds`` overrides the stratified assignment (it must cover every row).
    """
    if folds is None:
        if k < 2:
            raise ContractError("k must be at least 2")
        folds = stratified_folds(data.labels, k, seed)
    elif folds.assignment.shape != (len(data),):
        raise ContractError(f"fold assignment covers {folds.assignment.size} rows, data has {len(data)}")
    k = folds.k
    scores = np.empty(len(data))
    fold_metrics, fold_auc, models = [], [], []
    for fold in range(k):
        tr, te = folds.train_index(fold), folds.test_index(fold)
        model: Model = train(spec, data.subset(tr))
        proba = model.predict_proba(data.rows[te])[:, 1]
        scores[te] = proba
        yt = data.labels[te]
        fold_metrics.append(confusion_metrics(yt, (proba >= 0.5).astype(int)))
        fold_auc.append(auc(yt, proba) if 0 < yt.sum() < yt.size else None)
        if keep_models:
            models.append(model)
    pooled = confusion_metrics(data.labels, (scores >= 0.5).astype(int))
    roc = roc_curve(data.labels, scores)
    return EvalReport(spec.family, data.kind, k, seed, pooled, trapezoid_area(roc), roc,
                      fold_metrics, fold_auc, scores, data.labels.copy(), folds, models)
