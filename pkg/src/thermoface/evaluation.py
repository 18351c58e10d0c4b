"""Verification decisions, confusion counting, metrics, ROC/EER and threshold choice.

The positive class is "same person". A pair is accepted as same when its
distance is at or below the threshold, so acceptance regions are closed and
lower thresholds are stricter.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import DatasetManifest, preprocess
from .encoder import ModelParams, embed, euclidean_distance
from .errors import ConfigError, ContractError, DataError
from .training import PairSample

DEFAULT_THRESHOLD_COUNT = 101


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    tpr: float
    fpr: float


@dataclass(frozen=True)
class EvalReport:
    confusion: ConfusionCounts
    accuracy: float
    precision: float
    recall: float
    f1: float
    roc: list[RocPoint]
    eer: float
    threshold: float


def decide(d: float, tau: float) -> bool:
    """True (same person) iff the distance is at or below the threshold."""
    return d <= tau


def confusion(decisions: list[bool], truths: list[bool]) -> ConfusionCounts:
    """Count tp/fp/tn/fn with "same" as the positive class."""
    if len(decisions) != len(truths):
        raise ContractError(f"{len(decisions)} decisions for {len(truths)} truths")
    tp = fp = tn = fn = 0
    for got, want in zip(decisions, truths):
        if got and want:
            tp += 1
        elif got and not want:
            fp += 1
        elif not got and not want:
            tn += 1
        else:
            fn += 1
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def compute_metrics(c: ConfusionCounts) -> tuple[float, float, float, float]:
    """accuracy, precision, recall, f1; zero denominators map to 0."""
    if c.total == 0:
        raise ContractError("cannot compute metrics over zero pairs")
    accuracy = (c.tp + c.tn) / c.total
    precision = c.tp / (c.tp + c.fp) if (c.tp + c.fp) else 0.0
    recall = c.tp / (c.tp + c.fn) if (c.tp + c.fn) else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    return accuracy, precision, recall, f1


def _threshold_grid(distances: np.ndarray, n_thresholds: int) -> np.ndarray:
    if n_thresholds < 1:
        raise ContractError(f"n_thresholds must be positive, got {n_thresholds}")
    lo = float(distances.min())
    hi = float(distances.max())
    grid = np.linspace(lo, hi, n_thresholds)
    # one threshold strictly below every distance so the (0, 0) corner exists;
    # the (1, 1) corner already occurs at hi because ties are accepted
    below = np.nextafter(lo, -np.inf)
    return np.unique(np.concatenate(([below], grid)))


def roc_curve(distances: list[float], truths: list[bool],
              n_thresholds: int = DEFAULT_THRESHOLD_COUNT) -> list[RocPoint]:
    """Sweep thresholds over the distance range and record (tpr, fpr) per point."""
    d = np.asarray(distances, dtype=np.float64)
    y = np.asarray(truths, dtype=bool)
    if d.shape != y.shape or d.ndim != 1 or d.size == 0:
        raise ContractError("distances and truths must be equal-length non-empty vectors")
    n_pos = int(y.sum())
    n_neg = int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        raise DataError("ROC needs both same and different pairs")
    points = []
    for tau in _threshold_grid(d, n_thresholds):
        accept = d <= tau
        tpr = float((accept & y).sum()) / n_pos
        fpr = float((accept & ~y).sum()) / n_neg
        points.append(RocPoint(threshold=float(tau), tpr=tpr, fpr=fpr))
    return points


def equal_error_rate(roc: list[RocPoint]) -> tuple[float, float]:
    """Operating point where false accepts balance false rejects.

    Returns (eer, threshold) at the ROC point minimizing |fpr - (1 - tpr)|,
    ties broken toward the lower threshold.
    """
    if not roc:
        raise ContractError("ROC curve is empty")
    best = None
    best_gap = None
    for p in roc:
        gap = abs(p.fpr - (1.0 - p.tpr))
        if best_gap is None or gap < best_gap:
            best_gap = gap
            best = p
    return (best.fpr + (1.0 - best.tpr)) / 2.0, best.threshold


def select_threshold(distances: list[float], truths: list[bool], criterion: str = "max_f1",
                     n_thresholds: int = DEFAULT_THRESHOLD_COUNT) -> float:
    """Pick a threshold on the ROC grid; ties go to the lower threshold."""
    if criterion == "eer":
        _eer, tau = equal_error_rate(roc_curve(distances, truths, n_thresholds))
        return tau
    if criterion != "max_f1":
        raise ConfigError(f"unknown threshold criterion {criterion!r}")
    d = np.asarray(distances, dtype=np.float64)
    y = np.asarray(truths, dtype=bool)
    if not y.any() or y.all():
        raise DataError("threshold selection needs both same and different pairs")
    best_tau = None
    best_f1 = None
    for tau in _threshold_grid(d, n_thresholds):
        accept = d <= tau
        c = ConfusionCounts(tp=int((accept & y).sum()), fp=int((accept & ~y).sum()),
                            tn=int((~accept & ~y).sum()), fn=int((~accept & y).sum()))
        f1 = compute_metrics(c)[3]
        if best_f1 is None or f1 > best_f1:
            best_f1 = f1
            best_tau = float(tau)
    return best_tau


def pair_distances(params: ModelParams, testset: DatasetManifest,
                   pairs: list[PairSample]) -> tuple[list[float], list[bool]]:
    """Embed every referenced image once and return per-pair distances and truths."""
    needed = sorted({i for p in pairs for i in (p.index_a, p.index_b)})
    for i in needed:
        if not (0 <= i < len(testset)):
            raise ContractError(f"pair references index {i} outside the test set of {len(testset)}")
    size = params.config.input_size
    cache = {i: embed(params, preprocess(testset.load(i), size)) for i in needed}
    distances = [euclidean_distance(cache[p.index_a], cache[p.index_b]) for p in pairs]
    truths = [p.is_same for p in pairs]
    return distances, truths


def evaluate(params: ModelParams, testset: DatasetManifest, pairs: list[PairSample],
             tau: float, n_thresholds: int = DEFAULT_THRESHOLD_COUNT) -> EvalReport:
    """Full verification report for a pair list at a fixed threshold."""
    distances, truths = pair_distances(params, testset, pairs)
    decisions = [decide(d, tau) for d in distances]
    c = confusion(decisions, truths)
    accuracy, precision, recall, f1 = compute_metrics(c)
    roc = roc_curve(distances, truths, n_thresholds)
    eer, _eer_tau = equal_error_rate(roc)
    return EvalReport(confusion=c, accuracy=accuracy, precision=precision, recall=recall,
                      f1=f1, roc=roc, eer=eer, threshold=tau)


def format_report(report: EvalReport) -> str:
    c = report.confusion
    lines = [
        f"pairs evaluated : {c.total} (tp={c.tp} fp={c.fp} tn={c.tn} fn={c.fn})",
        f"threshold       : {report.threshold:.6f}",
        f"accuracy        : {report.accuracy:.4f}",
        f"precision       : {report.precision:.4f}",
        f"recall          : {report.recall:.4f}",
        f"f1              : {report.f1:.4f}",
        f"eer             : {report.eer:.4f}",
    ]
    return "\n".join(lines)


def write_report_csv(report: EvalReport, path) -> None:
    """One `roc` row per ROC point plus a final `summary` row."""
    lines = ["row_type,threshold,tpr,fpr,accuracy,precision,recall,f1,eer"]
    for p in report.roc:
        lines.append(f"roc,{p.threshold!r},{p.tpr!r},{p.fpr!r},,,,,")
    lines.append(f"summary,{report.threshold!r},,,{report.accuracy!r},{report.precision!r},"
                 f"{report.recall!r},{report.f1!r},{report.eer!r}")
    Path(path).write_text("\n".join(lines) + "\n")
