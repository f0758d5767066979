# gradedeck/data/dataset.py

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Type

import numpy as np
import pandas as pd
from pydantic import BaseModel

from ..core.errors import GradeDeckError, InvalidRawDataset, SingleClassSample

log = logging.getLogger(__name__)

WEAK_MAX_GRADE = 59.0


class Label(str, Enum):
    GOOD = "G"
    WEAK = "W"

    @classmethod
    def from_grade(cls, grade: float) -> "Label":
        # Weak is the positive class everywhere.
        return cls.WEAK if float(grade) <= WEAK_MAX_GRADE else cls.GOOD


class Stage(str, Enum):
    STAGE20 = "stage20"
    STAGE50 = "stage50"


def round_half_up(value: Any) -> int:
    """Nearest integer, halves away from zero for positives (2.5 -> 3)."""
    return int(Decimal(str(value)).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def to_percent(mark: float, maximum: float) -> int:
    """Scale a raw mark onto 0..100 and round half up, in exact decimal arithmetic."""
    scaled = Decimal(str(mark)) / Decimal(str(maximum)) * 100
    return int(scaled.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def weak_mask(labels: Iterable[Any]) -> np.ndarray:
    """
    Boolean mask with True for Weak students.

    Accepts Label values, "W"/"G" strings, or 0/1 / bool arrays (1 = Weak).
    """
    if isinstance(labels, np.ndarray) and labels.dtype.kind in "biu":
        return labels.astype(bool)
    out = []
    for lab in labels:
        if isinstance(lab, Label):
            out.append(lab is Label.WEAK)
        elif isinstance(lab, str):
            out.append(lab.upper() in {"W", "WEAK"})
        else:
            out.append(bool(lab))
    return np.asarray(out, dtype=bool)


def require_both_labels(
    labels: Iterable[Any],
    what: str = "sample",
    error: Type[GradeDeckError] = SingleClassSample,
) -> np.ndarray:
    mask = weak_mask(labels)
    n_weak = int(mask.sum())
    if n_weak == 0 or n_weak == mask.size:
        raise error(f"{what} needs both Weak and Good students (weak={n_weak}, n={mask.size})")
    return mask


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class RawDataset:
    """Marks as exported from the gradebook: absent cells are NaN, not yet zero-filled."""

    student_ids: Tuple[str, ...]
    feature_names: Tuple[str, ...]
    raw_marks: np.ndarray
    feature_max: np.ndarray
    final_grade: np.ndarray
    stage_features: Mapping[Stage, Tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        ids = tuple(str(s) for s in self.student_ids)
        names = tuple(str(f) for f in self.feature_names)
        marks = np.asarray(self.raw_marks, dtype=float)
        maxes = np.asarray(self.feature_max, dtype=float)
        grades = np.asarray(self.final_grade, dtype=float)

        if marks.ndim != 2:
            marks = marks.reshape(len(ids), len(names))
        if marks.shape != (len(ids), len(names)):
            raise InvalidRawDataset(
                f"marks shape {marks.shape} != ({len(ids)} students, {len(names)} features)"
            )
        if maxes.shape != (len(names),):
            raise InvalidRawDataset("feature_max must have one entry per feature")
        if not np.all(np.isfinite(maxes)) or np.any(maxes <= 0):
            raise InvalidRawDataset(f"feature_max must be strictly positive: {maxes.tolist()}")
        if grades.shape != (len(ids),):
            raise InvalidRawDataset("final_grade must have one entry per student")
        if not np.all(np.isfinite(grades)) or np.any((grades < 0) | (grades > 100)):
            raise InvalidRawDataset("final_grade must lie within [0, 100]")
        present = ~np.isnan(marks)
        if np.any(marks[present] < 0):
            raise InvalidRawDataset("raw marks must be non-negative")
        over = present & (marks > maxes[None, :])
        if np.any(over):
            row, col = (int(v[0]) for v in np.nonzero(over))
            raise InvalidRawDataset(
                f"{ids[row]}: mark {marks[row, col]} exceeds maximum {maxes[col]} for {names[col]}"
            )

        stages: Dict[Stage, Tuple[str, ...]] = {}
        for stage, feats in dict(self.stage_features or {}).items():
            unknown = [f for f in feats if f not in names]
            if unknown:
                raise InvalidRawDataset(f"{Stage(stage).value} lists undeclared features {unknown}")
            stages[Stage(stage)] = tuple(feats)

        object.__setattr__(self, "student_ids", ids)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "raw_marks", _frozen(marks))
        object.__setattr__(self, "feature_max", _frozen(maxes))
        object.__setattr__(self, "final_grade", _frozen(grades))
        object.__setattr__(self, "stage_features", stages)

    @property
    def n_students(self) -> int:
        return len(self.student_ids)

    def features_for(self, stage: Stage) -> Tuple[str, ...]:
        feats = self.stage_features.get(Stage(stage))
        if feats is None:
            log.info("no feature list declared for %s; using all %d features", Stage(stage).value, len(self.feature_names))
            return self.feature_names
        return feats


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Preprocessed marks for one course stage.

    Marks are integer percents; labels are always derived from final_grade.
    `row_index` maps each row back to the dataset it was taken from, so a
    restricted view still knows which students it holds.
    """

    student_ids: Tuple[str, ...]
    feature_names: Tuple[str, ...]
    marks: np.ndarray
    final_grade: np.ndarray
    stage: Stage
    row_index: Optional[np.ndarray] = None
    labels: Tuple[Label, ...] = field(init=False)

    def __post_init__(self) -> None:
        ids = tuple(str(s) for s in self.student_ids)
        names = tuple(str(f) for f in self.feature_names)
        raw = np.asarray(self.marks)
        if raw.ndim != 2 or raw.shape != (len(ids), len(names)):
            raise InvalidRawDataset(
                f"marks shape {raw.shape} != ({len(ids)} students, {len(names)} features)"
            )
        if raw.size and (not np.all(np.isfinite(raw)) or np.any(raw != np.round(raw))):
            raise InvalidRawDataset("marks must be integral percents")
        marks = raw.astype(np.int64)
        if np.any((marks < 0) | (marks > 100)):
            raise InvalidRawDataset("marks must lie within [0, 100]")
        grades = np.asarray(self.final_grade, dtype=float)
        if grades.shape != (len(ids),):
            raise InvalidRawDataset("final_grade must have one entry per student")
        index = np.arange(len(ids)) if self.row_index is None else np.asarray(self.row_index, dtype=np.int64)
        if index.shape != (len(ids),):
            raise InvalidRawDataset("row_index must have one entry per student")

        object.__setattr__(self, "student_ids", ids)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "marks", _frozen(marks))
        object.__setattr__(self, "final_grade", _frozen(grades))
        object.__setattr__(self, "stage", Stage(self.stage))
        object.__setattr__(self, "row_index", _frozen(index))
        object.__setattr__(self, "labels", tuple(Label.from_grade(g) for g in grades))

    # ---- shape helpers ----

    @property
    def n_students(self) -> int:
        return len(self.student_ids)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def y(self) -> np.ndarray:
        """1 for Weak, 0 for Good."""
        return np.fromiter((lab is Label.WEAK for lab in self.labels), dtype=np.int64, count=self.n_students)

    @property
    def X(self) -> np.ndarray:
        return self.marks.astype(float)

    @property
    def n_weak(self) -> int:
        return int(self.y.sum())

    # ---- views ----

    def take(self, indices: Sequence[int]) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            student_ids=tuple(self.student_ids[i] for i in idx),
            feature_names=self.feature_names,
            marks=self.marks[idx],
            final_grade=self.final_grade[idx],
            stage=self.stage,
            row_index=self.row_index[idx],
        )

    def with_marks(self, marks: np.ndarray) -> "Dataset":
        return Dataset(
            student_ids=self.student_ids,
            feature_names=self.feature_names,
            marks=marks,
            final_grade=self.final_grade,
            stage=self.stage,
            row_index=self.row_index,
        )

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.marks, columns=list(self.feature_names))
        frame.insert(0, "id", list(self.student_ids))
        frame["final_grade"] = self.final_grade
        frame["label"] = [lab.value for lab in self.labels]
        return frame


def preprocess(raw: RawDataset, stage: Stage) -> Dataset:
    """Zero-fill absent marks, scale each to a percent of its maximum, round half up, label."""
    stage = Stage(stage)
    feats = raw.features_for(stage)
    cols = [raw.feature_names.index(f) for f in feats]
    marks = np.zeros((raw.n_students, len(cols)), dtype=np.int64)
    for j, col in enumerate(cols):
        maximum = float(raw.feature_max[col])
        for i in range(raw.n_students):
            value = raw.raw_marks[i, col]
            if np.isnan(value):
                continue
            marks[i, j] = to_percent(float(value), maximum)
    return Dataset(
        student_ids=raw.student_ids,
        feature_names=feats,
        marks=marks,
        final_grade=raw.final_grade,
        stage=stage,
    )


# ---------------------------------------------------------------------------
# SUMMARY
# ---------------------------------------------------------------------------

class FeatureSummary(BaseModel):
    name: str
    mean: float
    std: float
    min: int
    max: int
    zeros: int


class DatasetSummary(BaseModel):
    stage: Stage
    n_students: int
    n_features: int
    n_weak: int
    weak_fraction: float
    features: List[FeatureSummary]


def summarize(ds: Dataset) -> DatasetSummary:
    frame = pd.DataFrame(ds.marks, columns=list(ds.feature_names))
    features = [
        FeatureSummary(
            name=name,
            mean=float(frame[name].mean()),
            std=float(frame[name].std()) if ds.n_students > 1 else 0.0,
            min=int(frame[name].min()),
            max=int(frame[name].max()),
            zeros=int((frame[name] == 0).sum()),
        )
        for name in ds.feature_names
    ]
    n_weak = ds.n_weak
    return DatasetSummary(
        stage=ds.stage,
        n_students=ds.n_students,
        n_features=ds.n_features,
        n_weak=n_weak,
        weak_fraction=n_weak / ds.n_students if ds.n_students else 0.0,
        features=features,
    )
