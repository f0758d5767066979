# gradedeck/tools/tuning.py

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel

from ..core.errors import DegenerateFold, InvalidConfig
from ..core.seeding import derive_seed
from ..data.dataset import Dataset
from ..data.splits import FoldPlan
from ..learners.base import PARAM_KEYS, AlgorithmId, LearnerSettings, ParamPoint, ParamValue
from ..learners.training import fit_learner
from ..schemas import GridConfig, GridProfile, load_grid_config
from .metrics import gini_matrix

log = logging.getLogger(__name__)

# mean CV Gini of a point whose every fold was single-label
NO_SCORE = -1.0


@dataclass(frozen=True)
class ParamGrid:
    algorithm: AlgorithmId
    axes: Dict[str, Tuple[ParamValue, ...]]
    profile: GridProfile

    def points(self) -> List[ParamPoint]:
        names = PARAM_KEYS[self.algorithm]
        combos = itertools.product(*(self.axes[name] for name in names))
        return [ParamPoint.build(self.algorithm, **dict(zip(names, combo))) for combo in combos]

    def __len__(self) -> int:
        size = 1
        for values in self.axes.values():
            size *= len(values)
        return size


class PointScore(BaseModel):
    params: ParamPoint
    cv_gini: float
    fold_ginis: List[Optional[float]]


class TuneResult(BaseModel):
    algorithm: AlgorithmId
    best: ParamPoint
    cv_gini: float
    all_points: List[PointScore]

    def curve_rows(self, split: int) -> List[Dict[str, Any]]:
        return [
            {"split": split, "algorithm": self.algorithm.value, "params": p.params.label(), "cv_gini": p.cv_gini}
            for p in self.all_points
        ]


def grid_for(
    algorithm: AlgorithmId,
    profile: GridProfile,
    *,
    n_features: Optional[int] = None,
    override: Optional[GridConfig] = None,
) -> ParamGrid:
    """
    Candidate values for one algorithm.

    An override table wins per algorithm; anything it leaves out comes from
    the packaged grids. RF mtry is capped at `n_features`.
    """
    algorithm = AlgorithmId(algorithm)
    profile = GridProfile(profile)
    axes = override.axes_for(algorithm, profile) if override is not None else None
    if axes is None:
        axes = load_grid_config().axes_for(algorithm, profile)
    if axes is None:
        raise InvalidConfig(f"no grid for {algorithm.value} under profile {profile.value}")
    axes = {name: tuple(values) for name, values in axes.items()}
    if algorithm is AlgorithmId.RF and n_features is not None:
        capped = tuple(v for v in axes["mtry"] if v <= n_features)
        axes["mtry"] = capped or (n_features,)
    return ParamGrid(algorithm=algorithm, axes=axes, profile=profile)


def _fold_ginis(
    algorithm: AlgorithmId,
    params: ParamPoint,
    X: np.ndarray,
    y: np.ndarray,
    folds: Sequence[Tuple[np.ndarray, np.ndarray]],
    seed: int,
    point_number: int,
    settings: LearnerSettings,
) -> List[Optional[float]]:
    out: List[Optional[float]] = []
    for f, (fit_rows, held_rows) in enumerate(folds):
        held_y = y[held_rows]
        if held_y.min() == held_y.max():
            out.append(None)
            continue
        learner = fit_learner(
            algorithm, params, X[fit_rows], y[fit_rows], derive_seed(seed, point_number, f), settings
        )
        scores = np.clip(learner.predict_weak(X[held_rows]), 0.0, 1.0)
        out.append(float(gini_matrix(scores, held_y)[0]))
    return out


def search_points(
    algorithm: AlgorithmId,
    points: Sequence[ParamPoint],
    X: np.ndarray,
    y: np.ndarray,
    folds: Sequence[Tuple[np.ndarray, np.ndarray]],
    seed: int,
    *,
    settings: Optional[LearnerSettings] = None,
    n_jobs: int = 1,
) -> TuneResult:
    """
    Grid search on matrices. `folds` holds (fit rows, held-out rows) position pairs.

    The best point is the first one, in grid order, attaining the highest mean fold Gini.
    """
    if not points:
        raise InvalidConfig(f"empty grid for {AlgorithmId(algorithm).value}")
    settings = settings or LearnerSettings.from_config()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    per_point = Parallel(n_jobs=n_jobs)(
        delayed(_fold_ginis)(algorithm, p, X, y, folds, seed, i, settings) for i, p in enumerate(points)
    )
    scored = []
    for params, ginis in zip(points, per_point):
        used = [g for g in ginis if g is not None]
        cv = float(np.mean(used)) if used else NO_SCORE
        log.debug("tune %s %s folds=%s cv=%.4f", algorithm.value, params.label(), ginis, cv)
        scored.append(PointScore(params=params, cv_gini=cv, fold_ginis=ginis))
    best = int(np.argmax([s.cv_gini for s in scored]))
    return TuneResult(
        algorithm=AlgorithmId(algorithm),
        best=scored[best].params,
        cv_gini=scored[best].cv_gini,
        all_points=scored,
    )


def grid_search(
    algorithm: AlgorithmId,
    train: Dataset,
    fold_plan: FoldPlan,
    seed: int,
    *,
    grid: Optional[ParamGrid] = None,
    profile: GridProfile = GridProfile.DATASET1,
    settings: Optional[LearnerSettings] = None,
    n_jobs: int = 1,
) -> TuneResult:
    """
    k-fold grid search over a training view.

    `fold_plan` indexes students by `train.row_index`, the same index space a
    SplitPlan uses, so folds never reach outside the training view.
    """
    algorithm = AlgorithmId(algorithm)
    grid = grid or grid_for(algorithm, profile, n_features=train.n_features)
    position = {int(r): i for i, r in enumerate(train.row_index.tolist())}
    try:
        folds = []
        for i in range(fold_plan.k):
            held = np.array([position[int(r)] for r in fold_plan.folds[i]], dtype=np.int64)
            fit = np.array([position[int(r)] for r in fold_plan.complement(i)], dtype=np.int64)
            folds.append((fit, held))
    except KeyError as exc:
        raise DegenerateFold(f"fold plan refers to student index {exc.args[0]} outside the training set") from None
    return search_points(
        algorithm, grid.points(), train.X, train.y, folds, seed, settings=settings, n_jobs=n_jobs
    )
