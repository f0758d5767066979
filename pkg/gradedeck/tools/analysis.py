# gradedeck/tools/analysis.py

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel

from ..core.errors import DegenerateData, InvalidConfig, InvalidRepeats
from ..core.seeding import derive_seed
from ..data.dataset import Dataset, require_both_labels
from ..data.splits import kfold
from ..learners.base import AlgorithmId, LearnerSettings, ParamPoint, TrainedModel
from ..learners.training import fit_learner, score
from ..schemas import GridConfig, GridProfile
from .metrics import gini
from .tuning import grid_for, search_points

log = logging.getLogger(__name__)

BOUNDARY_PAD = 0.10


# ---------------------------------------------------------------------------
# PCA
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PcaResult:
    """
    Correlation-matrix PCA.

    loadings[c] is component c over `feature_names`; scores are the
    standardized marks projected onto every component.
    """

    feature_names: Tuple[str, ...]
    dropped: Tuple[str, ...]
    explained_variance_pct: np.ndarray
    eigenvalues: np.ndarray
    loadings: np.ndarray
    scores: np.ndarray
    mean: np.ndarray
    scale: np.ndarray
    student_ids: Tuple[str, ...] = ()

    @property
    def components(self) -> List[str]:
        return [f"PC{i + 1}" for i in range(self.loadings.shape[0])]

    def cumulative_pct(self) -> np.ndarray:
        return np.cumsum(self.explained_variance_pct)

    def variance_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "component": self.components,
                "eigenvalue": self.eigenvalues,
                "explained_pct": self.explained_variance_pct,
                "cumulative_pct": self.cumulative_pct(),
            }
        )

    def loadings_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.loadings, columns=list(self.feature_names))
        frame.insert(0, "component", self.components)
        return frame

    def scores_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.scores, columns=self.components)
        frame.insert(0, "id", list(self.student_ids) or range(self.scores.shape[0]))
        return frame

    def to_dict(self) -> Dict[str, Any]:
        return {
            "feature_names": list(self.feature_names),
            "dropped": list(self.dropped),
            "explained_variance_pct": self.explained_variance_pct.tolist(),
            "cumulative_pct": self.cumulative_pct().tolist(),
        }


def pca(ds: Dataset) -> PcaResult:
    if ds.n_students < 2:
        raise DegenerateData(f"PCA needs at least 2 students, got {ds.n_students}")
    X = ds.X
    mean = X.mean(axis=0)
    scale = X.std(axis=0, ddof=1)
    keep = scale > 0
    dropped = tuple(f for f, k in zip(ds.feature_names, keep) if not k)
    if dropped:
        log.warning("pca: dropping zero-variance features %s", list(dropped))
    if int(keep.sum()) < 2:
        raise DegenerateData(f"PCA needs at least 2 varying features, got {int(keep.sum())}")

    Z = (X[:, keep] - mean[keep]) / scale[keep]
    corr = Z.T @ Z / (ds.n_students - 1)
    eigvals, eigvecs = np.linalg.eigh(corr)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.clip(eigvals[order], 0.0, None)
    loadings = eigvecs[:, order].T
    # largest-magnitude loading of every component is positive
    pivot = np.argmax(np.abs(loadings), axis=1)
    signs = np.sign(loadings[np.arange(loadings.shape[0]), pivot])
    loadings = loadings * signs[:, None]

    return PcaResult(
        feature_names=tuple(f for f, k in zip(ds.feature_names, keep) if k),
        dropped=dropped,
        explained_variance_pct=eigvals / eigvals.sum() * 100.0,
        eigenvalues=eigvals,
        loadings=loadings,
        scores=Z @ loadings.T,
        mean=mean[keep],
        scale=scale[keep],
        student_ids=ds.student_ids,
    )


# ---------------------------------------------------------------------------
# PERMUTATION IMPORTANCE
# ---------------------------------------------------------------------------

class FeatureImportance(BaseModel):
    feature: str
    importance: float
    spread: float


class ImportanceRanking(BaseModel):
    algorithm: Optional[AlgorithmId] = None
    baseline_gini: float
    n_repeats: int
    entries: List[FeatureImportance]

    def features(self) -> List[str]:
        return [e.feature for e in self.entries]

    def rows(self) -> List[Dict[str, Any]]:
        algo = self.algorithm.value if self.algorithm else ""
        return [
            {"algorithm": algo, "rank": r, "feature": e.feature, "importance": e.importance}
            for r, e in enumerate(self.entries, start=1)
        ]


def permutation_importance(model: TrainedModel, test: Dataset, n_repeats: int, seed: int) -> ImportanceRanking:
    """
    Drop in test Gini when one feature column is shuffled, averaged over repeats
    and floored at zero. Ties keep feature order.
    """
    if n_repeats < 1:
        raise InvalidRepeats(f"n_repeats must be >= 1, got {n_repeats}")
    require_both_labels(test.labels, "permutation importance test set")
    baseline = gini(score(model, test), test.labels)

    means, spreads = [], []
    for j in range(test.n_features):
        drops = np.empty(n_repeats)
        for r in range(n_repeats):
            rng = np.random.default_rng(derive_seed(seed, j, r))
            shuffled = test.marks.copy()
            shuffled[:, j] = rng.permutation(shuffled[:, j])
            drops[r] = baseline - gini(score(model, test.with_marks(shuffled)), test.labels)
        means.append(max(0.0, float(drops.mean())))
        spreads.append(float(drops.std(ddof=1)) if n_repeats > 1 else 0.0)

    order = sorted(range(test.n_features), key=lambda j: (-means[j], j))
    return ImportanceRanking(
        algorithm=model.algorithm,
        baseline_gini=baseline,
        n_repeats=n_repeats,
        entries=[
            FeatureImportance(feature=test.feature_names[j], importance=means[j], spread=spreads[j])
            for j in order
        ],
    )


# ---------------------------------------------------------------------------
# DECISION BOUNDARY
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BoundaryGrid:
    """SVM Weak-probabilities over a PC1 x PC2 lattice; scores[i, j] sits at (x[j], y[i])."""

    x: np.ndarray
    y: np.ndarray
    scores: np.ndarray
    params: ParamPoint
    cv_gini: float

    @property
    def resolution(self) -> int:
        return int(self.x.size)

    def to_frame(self) -> pd.DataFrame:
        xx, yy = np.meshgrid(self.x, self.y)
        return pd.DataFrame({"pc1": xx.ravel(), "pc2": yy.ravel(), "score": self.scores.ravel()})

    def to_dict(self) -> Dict[str, Any]:
        return {
            "resolution": self.resolution,
            "x_range": [float(self.x[0]), float(self.x[-1])],
            "y_range": [float(self.y[0]), float(self.y[-1])],
            "params": self.params.label(),
            "cv_gini": self.cv_gini,
        }


def _padded_axis(values: np.ndarray, resolution: int) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    pad = (hi - lo) * BOUNDARY_PAD or 1.0
    return np.linspace(lo - pad, hi + pad, resolution)


def decision_grid(
    train: Dataset,
    resolution: int,
    seed: int,
    *,
    profile: GridProfile = GridProfile.DATASET1,
    k_folds: int = 3,
    settings: Optional[LearnerSettings] = None,
    override: Optional[GridConfig] = None,
) -> BoundaryGrid:
    """
    Project onto PC1/PC2, tune and fit an RBF SVM there, and score a padded lattice.

    PC scores are already standardized, so the SVM sees them unscaled.
    """
    if resolution < 2:
        raise InvalidConfig(f"resolution must be >= 2, got {resolution}")
    coords = pca(train).scores[:, :2]
    y = train.y
    settings = (settings or LearnerSettings.from_config()).model_copy(update={"svm_input_scale": 1.0})

    positions = np.arange(train.n_students)
    plan = kfold(positions, k_folds, derive_seed(seed, 0), y)
    folds = [(plan.complement(i), plan.folds[i]) for i in range(plan.k)]
    grid = grid_for(AlgorithmId.SVM, profile, override=override)
    tuned = search_points(AlgorithmId.SVM, grid.points(), coords, y, folds, derive_seed(seed, 1), settings=settings)
    learner = fit_learner(AlgorithmId.SVM, tuned.best, coords, y, derive_seed(seed, 2), settings)

    xs = _padded_axis(coords[:, 0], resolution)
    ys = _padded_axis(coords[:, 1], resolution)
    xx, yy = np.meshgrid(xs, ys)
    lattice = np.column_stack([xx.ravel(), yy.ravel()])
    scores = np.clip(learner.predict_weak(lattice), 0.0, 1.0).reshape(resolution, resolution)
    return BoundaryGrid(x=xs, y=ys, scores=scores, params=tuned.best, cv_gini=tuned.cv_gini)
