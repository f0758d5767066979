# gradedeck/data/synth.py

from __future__ import annotations

from decimal import Decimal
from typing import List, Optional

import numpy as np
from pydantic import BaseModel
from scipy import stats

from ..core.errors import InvalidSpec
from .dataset import Dataset, RawDataset, Stage, round_half_up

# class-conditional mark distribution
MARK_CENTER = 70.0
MARK_SPREAD = 12.0
NOISE_CENTER = 60.0


class SynthSpec(BaseModel):
    """
    Parameters of a synthetic grade table.

    separation is the gap between class means on signal features, in units
    of the within-class spread. skew shapes the final-grade distribution.
    """

    n_students: int = 200
    n_features: int = 6
    weak_fraction: float = 0.3
    separation: float = 2.0
    n_signal_features: Optional[int] = None
    skew: float = -4.0
    seed: int = 7
    stage: Stage = Stage.STAGE20

    @property
    def signal_features(self) -> int:
        return self.n_features if self.n_signal_features is None else self.n_signal_features

    def n_weak(self) -> int:
        return round_half_up(Decimal(str(self.weak_fraction)) * self.n_students)

    def check(self) -> None:
        if self.n_students < 4:
            raise InvalidSpec(f"need at least 4 students, got {self.n_students}")
        if self.n_features < 1:
            raise InvalidSpec(f"need at least 1 feature, got {self.n_features}")
        if not 0.0 < self.weak_fraction < 1.0:
            raise InvalidSpec(f"weak_fraction must lie in (0, 1), got {self.weak_fraction}")
        if self.separation < 0:
            raise InvalidSpec(f"separation must be >= 0, got {self.separation}")
        if not 0 <= self.signal_features <= self.n_features:
            raise InvalidSpec(
                f"n_signal_features must lie in [0, {self.n_features}], got {self.signal_features}"
            )
        n_weak = self.n_weak()
        if n_weak < 2 or self.n_students - n_weak < 2:
            raise InvalidSpec(
                f"weak_fraction {self.weak_fraction} of {self.n_students} gives "
                f"{n_weak} Weak / {self.n_students - n_weak} Good; need >= 2 of each"
            )

    def feature_names(self) -> List[str]:
        return [f"F{j + 1:02d}" for j in range(self.n_features)]

    def student_ids(self) -> List[str]:
        width = max(3, len(str(self.n_students - 1)))
        return [f"std{i:0{width}d}" for i in range(self.n_students)]


def _final_grades(weak: np.ndarray, skew: float, rng: np.random.Generator) -> np.ndarray:
    good_draw = stats.skewnorm.rvs(skew, loc=82.0, scale=12.0, size=weak.size, random_state=rng)
    weak_draw = stats.skewnorm.rvs(skew, loc=50.0, scale=12.0, size=weak.size, random_state=rng)
    grades = np.where(weak, np.clip(weak_draw, 0.0, 59.0), np.clip(good_draw, 60.0, 100.0))
    return np.floor(grades + 0.5)


def _draw(spec: SynthSpec):
    spec.check()
    rng = np.random.default_rng(spec.seed)
    n = spec.n_students
    n_weak = spec.n_weak()
    weak = rng.permutation(np.arange(n) < n_weak)

    marks = np.empty((n, spec.n_features), dtype=float)
    for j in range(spec.n_features):
        if j < spec.signal_features:
            center = np.where(weak, MARK_CENTER - spec.separation * MARK_SPREAD, MARK_CENTER)
        else:
            center = np.full(n, NOISE_CENTER)
        marks[:, j] = rng.normal(center, MARK_SPREAD)
    marks = np.floor(np.clip(marks, 0.0, 100.0) + 0.5)
    return marks, _final_grades(weak, spec.skew, rng)


def generate(spec: SynthSpec) -> Dataset:
    """Seeded synthetic Dataset; the Weak count is exactly round_half_up(weak_fraction * n)."""
    marks, grades = _draw(spec)
    return Dataset(
        student_ids=tuple(spec.student_ids()),
        feature_names=tuple(spec.feature_names()),
        marks=marks.astype(np.int64),
        final_grade=grades,
        stage=spec.stage,
    )


def generate_raw(spec: SynthSpec) -> RawDataset:
    """Same draw as `generate`, as a gradebook export with every feature out of 100."""
    marks, grades = _draw(spec)
    names = tuple(spec.feature_names())
    return RawDataset(
        student_ids=tuple(spec.student_ids()),
        feature_names=names,
        raw_marks=marks,
        feature_max=np.full(len(names), 100.0),
        final_grade=grades,
        stage_features={Stage.STAGE20: names, Stage.STAGE50: names},
    )
