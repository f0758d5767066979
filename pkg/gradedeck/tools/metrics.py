# gradedeck/tools/metrics.py
"""
Rank statistics for Weak-probability scores.

Weak is the positive class throughout: a good ranking puts Weak students
on top, giving AUC near 1 and Gini near 1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from decimal import Decimal
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from pydantic import BaseModel
from scipy.integrate import trapezoid
from scipy.stats import rankdata

from ..core.errors import InvalidConfig, LengthMismatch
from ..core.seeding import derive_seed
from ..data.dataset import require_both_labels, weak_mask
from ..learners.base import ScoreVector

log = logging.getLogger(__name__)

Scores = Union[ScoreVector, Sequence[float], np.ndarray]


def _values_and_index(scores: Scores) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(scores, ScoreVector):
        return scores.values, scores.index
    values = np.asarray(scores, dtype=float)
    return values, np.arange(values.size)


def _aligned(scores: Scores, labels: Any) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    values, index = _values_and_index(scores)
    weak = weak_mask(labels)
    if weak.shape != values.shape:
        raise LengthMismatch(f"{values.size} scores but {weak.size} labels")
    return values, weak, index


# ---------------------------------------------------------------------------
# AUC / GINI
# ---------------------------------------------------------------------------

def auc(scores: Scores, labels: Any) -> float:
    """Mann-Whitney AUC with half credit for ties, from average ranks."""
    values, weak, _ = _aligned(scores, labels)
    require_both_labels(weak, "AUC")
    n_weak = int(weak.sum())
    n_good = weak.size - n_weak
    ranks = rankdata(values)
    u = float(ranks[weak].sum()) - n_weak * (n_weak + 1) / 2.0
    return u / (n_weak * n_good)


def gini(scores: Scores, labels: Any) -> float:
    return 2.0 * auc(scores, labels) - 1.0


def gini_matrix(score_rows: np.ndarray, labels: Any) -> np.ndarray:
    """Gini of every row of a (R, n) score matrix against one label vector."""
    weak = require_both_labels(labels, "AUC")
    rows = np.atleast_2d(np.asarray(score_rows, dtype=float))
    if rows.shape[1] != weak.size:
        raise LengthMismatch(f"{rows.shape[1]} scores per row but {weak.size} labels")
    n_weak = int(weak.sum())
    n_good = weak.size - n_weak
    ranks = rankdata(rows, axis=1)
    u = ranks[:, weak].sum(axis=1) - n_weak * (n_weak + 1) / 2.0
    return 2.0 * (u / (n_weak * n_good)) - 1.0


# ---------------------------------------------------------------------------
# CAP
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CapCurve:
    """Cumulative accuracy profile: x = share of students examined, y = share of Weak found."""

    x: np.ndarray
    y: np.ndarray

    @property
    def points(self) -> List[Tuple[float, float]]:
        return list(zip(self.x.tolist(), self.y.tolist()))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"fraction_of_students": self.x, "fraction_of_weak_captured": self.y})

    def to_dict(self) -> Dict[str, List[float]]:
        return {"x": self.x.tolist(), "y": self.y.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Sequence[float]]) -> "CapCurve":
        return cls(x=np.asarray(data["x"], dtype=float), y=np.asarray(data["y"], dtype=float))


def _descending_order(values: np.ndarray, index: np.ndarray) -> np.ndarray:
    # highest score first, equal scores by ascending student index
    return np.lexsort((index, -values))


def cap_curve(scores: Scores, labels: Any) -> CapCurve:
    values, weak, index = _aligned(scores, labels)
    require_both_labels(weak, "CAP curve")
    order = _descending_order(values, index)
    captured = np.concatenate([[0], np.cumsum(weak[order])])
    n = values.size
    return CapCurve(x=np.arange(n + 1) / n, y=captured / int(weak.sum()))


def cap_area(curve: CapCurve) -> float:
    return float(trapezoid(curve.y, curve.x))


def accuracy_ratio(curve: CapCurve) -> float:
    """(area - 1/2) / (perfect area - 1/2); equals Gini when no scores tie."""
    n = curve.x.size - 1
    steps = np.diff(curve.y)
    n_weak = int(np.count_nonzero(steps > 0))
    weak_share = n_weak / n
    perfect = 1.0 - weak_share / 2.0
    return (cap_area(curve) - 0.5) / (perfect - 0.5)


def capture_at(curve: CapCurve, fraction_of_students: float) -> float:
    if not 0.0 <= fraction_of_students <= 1.0:
        raise InvalidConfig(f"fraction of students must lie in [0, 1], got {fraction_of_students}")
    return float(np.interp(fraction_of_students, curve.x, curve.y))


def students_needed(curve: CapCurve, weak_fraction: float) -> float:
    """Smallest examined share whose capture reaches `weak_fraction`."""
    if not 0.0 <= weak_fraction <= 1.0:
        raise InvalidConfig(f"weak fraction must lie in [0, 1], got {weak_fraction}")
    return float(curve.x[int(np.argmax(curve.y >= weak_fraction))])


# ---------------------------------------------------------------------------
# MONTE-CARLO P-VALUE
# ---------------------------------------------------------------------------

class PValue(BaseModel):
    value: float
    null_samples: int
    null_seed: int


def _null_chunk(masks: Sequence[np.ndarray], size: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    total = np.zeros(size)
    for weak in masks:
        total += gini_matrix(rng.standard_normal((size, weak.size)), weak)
    return total / len(masks)


def null_distribution(
    test_label_sets: Sequence[Any],
    R: int,
    seed: int,
    *,
    chunk_size: int = 10_000,
    n_jobs: int = 1,
) -> np.ndarray:
    """
    R draws of the average Gini of i.i.d. standard-normal scores over the label sets.

    Draws are cut into fixed-size chunks seeded from (seed, chunk number), so the
    sample does not depend on n_jobs.
    """
    if R < 1:
        raise InvalidConfig(f"null sample count must be >= 1, got {R}")
    if chunk_size < 1:
        raise InvalidConfig(f"null chunk size must be >= 1, got {chunk_size}")
    masks = [require_both_labels(labels, f"null label set {i}") for i, labels in enumerate(test_label_sets)]
    if not masks:
        raise InvalidConfig("null distribution needs at least one label set")
    sizes = [min(chunk_size, R - start) for start in range(0, R, chunk_size)]
    parts = Parallel(n_jobs=n_jobs)(
        delayed(_null_chunk)(masks, size, derive_seed(seed, c)) for c, size in enumerate(sizes)
    )
    return np.concatenate(parts)


def pvalue_from_null(observed: float, null: np.ndarray, *, presorted: bool = False) -> float:
    """Add-one estimate (1 + #{null >= observed}) / (R + 1)."""
    ordered = null if presorted else np.sort(null)
    at_least = ordered.size - int(np.searchsorted(ordered, observed, side="left"))
    return (1 + at_least) / (ordered.size + 1)


def mc_pvalue(
    observed_avg: float,
    test_label_sets: Sequence[Any],
    R: int,
    seed: int,
    *,
    chunk_size: int = 10_000,
    n_jobs: int = 1,
) -> PValue:
    null = null_distribution(test_label_sets, R, seed, chunk_size=chunk_size, n_jobs=n_jobs)
    return PValue(value=pvalue_from_null(observed_avg, null), null_samples=R, null_seed=int(seed))


# ---------------------------------------------------------------------------
# THRESHOLDED METRICS
# ---------------------------------------------------------------------------

class ConfusionMetrics(BaseModel):
    tau: float
    tp: int
    fp: int
    tn: int
    fn: int
    accuracy: float
    precision: Optional[float] = None
    sensitivity: Optional[float] = None
    f_measure: Optional[float] = None
    specificity: Optional[float] = None

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den else None


def confusion_metrics(scores: Scores, labels: Any, tau: float) -> ConfusionMetrics:
    """Predicted Weak iff score >= tau. Ratios with a zero denominator are None."""
    if not 0.0 <= tau <= 1.0:
        raise InvalidConfig(f"tau must lie in [0, 1], got {tau}")
    values, weak, _ = _aligned(scores, labels)
    predicted = values >= tau
    tp = int(np.sum(predicted & weak))
    fp = int(np.sum(predicted & ~weak))
    tn = int(np.sum(~predicted & ~weak))
    fn = int(np.sum(~predicted & weak))
    precision = _ratio(tp, tp + fp)
    sensitivity = _ratio(tp, tp + fn)
    f_measure = None
    if precision is not None and sensitivity is not None and precision + sensitivity > 0:
        f_measure = 2.0 * precision * sensitivity / (precision + sensitivity)
    return ConfusionMetrics(
        tau=float(tau),
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        accuracy=(tp + tn) / values.size if values.size else 0.0,
        precision=precision,
        sensitivity=sensitivity,
        f_measure=f_measure,
        specificity=_ratio(tn, tn + fp),
    )


def tau_grid(start: float, stop: float, step: float) -> List[float]:
    """Inclusive decimal grid, e.g. 0.05, 0.10, ..., 0.95 without float drift."""
    lo, hi, inc = Decimal(str(start)), Decimal(str(stop)), Decimal(str(step))
    if inc <= 0 or lo > hi:
        raise InvalidConfig(f"bad tau grid start={start} stop={stop} step={step}")
    taus = []
    current = lo
    while current <= hi:
        taus.append(float(current))
        current += inc
    return taus


def tau_sweep(scores: Scores, labels: Any, taus: Sequence[float]) -> List[ConfusionMetrics]:
    return [confusion_metrics(scores, labels, t) for t in taus]


# ---------------------------------------------------------------------------
# SCORE BANDS
# ---------------------------------------------------------------------------

class ScoreBand(BaseModel):
    band: int
    n: int
    n_weak: int
    weak_rate: float
    min_score: float
    max_score: float


def score_bands(scores: Scores, labels: Any, n_bands: int = 10) -> List[ScoreBand]:
    """Students by descending score cut into contiguous bands of near-equal size."""
    values, weak, index = _aligned(scores, labels)
    if n_bands < 1 or n_bands > values.size:
        raise InvalidConfig(f"n_bands must lie in [1, {values.size}], got {n_bands}")
    order = _descending_order(values, index)
    bands = []
    for b, rows in enumerate(np.array_split(order, n_bands), start=1):
        hits = int(weak[rows].sum())
        bands.append(
            ScoreBand(
                band=b,
                n=int(rows.size),
                n_weak=hits,
                weak_rate=hits / rows.size,
                min_score=float(values[rows].min()),
                max_score=float(values[rows].max()),
            )
        )
    return bands
