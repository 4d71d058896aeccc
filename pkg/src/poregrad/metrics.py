"""Confusion metrics, ROC/AUC, pore-size summaries, and batch timing."""
from __future__ import annotations

import time
from dataclasses import dataclass, asdict

import numpy as np

from .errors import DataError, ParameterError


@dataclass
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int
    scope: str = "per-cutout"

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(pred: np.ndarray, truth: np.ndarray,
              eval_region: np.ndarray | None = None) -> ConfusionCounts:
    """Exact pixel counts over eval_region (defaults to the full grid)."""
    pred = np.asarray(pred, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if pred.shape != truth.shape:
        raise DataError(f"shape mismatch: pred {pred.shape} vs truth {truth.shape}")
    if eval_region is not None:
        if np.asarray(eval_region).shape != pred.shape:
            raise DataError("eval_region shape mismatch")
        pred = pred[eval_region]
        truth = truth[eval_region]
    tp = int(np.sum(pred & truth))
    fp = int(np.sum(pred & ~truth))
    fn = int(np.sum(~pred & truth))
    tn = int(np.sum(~pred & ~truth))
    return ConfusionCounts(tp, fp, tn, fn)


def f1_score(c: ConfusionCounts) -> float:
    """2TP / (2TP + FP + FN); degenerate all-zero case reports 1.0."""
    denom = 2 * c.tp + c.fp + c.fn
    if denom == 0:
        return 1.0
    return 2 * c.tp / denom


def tpr(c: ConfusionCounts) -> float:
    return c.tp / (c.tp + c.fn) if c.tp + c.fn else float("nan")


def fnr(c: ConfusionCounts) -> float:
    return c.fn / (c.tp + c.fn) if c.tp + c.fn else float("nan")


def tnr(c: ConfusionCounts) -> float:
    return c.tn / (c.tn + c.fp) if c.tn + c.fp else float("nan")


def fpr(c: ConfusionCounts) -> float:
    return c.fp / (c.tn + c.fp) if c.tn + c.fp else float("nan")


@dataclass
class MetricsReport:
    f1: float
    tpr: float
    fnr: float
    tnr: float
    fpr: float
    counts: ConfusionCounts
    mean_time_per_particle: float | None = None
    smallest_detected_pore: float | None = None  # micrometers, equivalent radius

    def to_dict(self) -> dict:
        d = asdict(self)
        d["counts"] = asdict(self.counts)
        return d


def report(counts: ConfusionCounts, mean_time_per_particle: float | None = None,
           smallest_detected_pore: float | None = None) -> MetricsReport:
    return MetricsReport(f1=f1_score(counts), tpr=tpr(counts), fnr=fnr(counts),
                         tnr=tnr(counts), fpr=fpr(counts), counts=counts,
                         mean_time_per_particle=mean_time_per_particle,
                         smallest_detected_pore=smallest_detected_pore)


@dataclass
class RocCurve:
    thresholds: np.ndarray
    fpr_points: np.ndarray
    tpr_points: np.ndarray
    auc: float
    degenerate: bool = False


def roc(prob_map: np.ndarray, truth: np.ndarray,
        eval_region: np.ndarray | None = None,
        n_thresholds: int | None = 10_000) -> RocCurve:
    """ROC curve over a threshold sweep of the unique probability values.

    AUC by trapezoid with (0,0)/(1,1) endpoints; single-class truth yields a
    degenerate curve with NaN AUC.  Unique values above n_thresholds are
    quantile-subsampled.
    """
    prob = np.asarray(prob_map, dtype=np.float64)
    truth = np.asarray(truth, dtype=bool)
    if prob.shape != truth.shape:
        raise DataError("probability map and truth shapes differ")
    if prob.min() < 0 or prob.max() > 1:
        raise ParameterError("probabilities must lie in [0, 1]")
    if eval_region is not None:
        prob = prob[np.asarray(eval_region, dtype=bool)]
        truth = truth[np.asarray(eval_region, dtype=bool)]
    prob = prob.ravel()
    truth = truth.ravel()
    n_pos = int(truth.sum())
    n_neg = truth.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return RocCurve(np.array([]), np.array([0.0, 1.0]), np.array([0.0, 1.0]),
                        float("nan"), degenerate=True)

    order = np.argsort(-prob, kind="stable")
    p = prob[order]
    t = truth[order]
    # Cut only where the threshold value changes so ties stay grouped.
    distinct = np.nonzero(np.diff(p))[0]
    cuts = np.r_[distinct, t.size - 1]
    tps = np.cumsum(t)[cuts]
    fps = 1 + cuts - tps
    thresholds = p[cuts]
    if n_thresholds is not None and len(cuts) > n_thresholds:
        pick = np.unique(np.linspace(0, len(cuts) - 1, n_thresholds).astype(int))
        tps, fps, thresholds = tps[pick], fps[pick], thresholds[pick]
    tpr_pts = np.r_[0.0, tps / n_pos, 1.0]
    fpr_pts = np.r_[0.0, fps / n_neg, 1.0]
    auc = float(np.trapezoid(tpr_pts, fpr_pts))
    return RocCurve(thresholds, fpr_pts, tpr_pts, auc)


def pore_size_distribution(results) -> list[float]:
    """Equivalent radii (um) of every detected region across a result list."""
    return [r.equivalent_radius for res in results for r in res.pore_regions]


@dataclass
class BenchRow:
    n: int
    wall_seconds: float
    per_particle: float


def bench(run_batch, cutouts, batch_sizes, repeats: int = 5) -> list[BenchRow]:
    """Median-of-repeats batch timing; one warm-up call is excluded.

    run_batch takes a list of cutouts and must do all per-batch setup itself,
    so fixed costs are included in the measurement and amortize with n.
    """
    if not cutouts:
        raise ParameterError("bench needs at least one cutout")
    run_batch(cutouts[:1])  # warm-up, excluded
    rows = []
    for n in batch_sizes:
        batch = [cutouts[i % len(cutouts)] for i in range(n)]
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            run_batch(batch)
            times.append(time.perf_counter() - t0)
        wall = float(np.median(times))
        rows.append(BenchRow(n=n, wall_seconds=wall, per_particle=wall / n))
    return rows
