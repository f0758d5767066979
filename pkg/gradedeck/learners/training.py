# gradedeck/learners/training.py

from __future__ import annotations

import logging
from typing import Dict, Optional, Type

import numpy as np

from ..core.errors import InvalidParams, SchemaMismatch, SingleClassTrainingSet
from ..data.dataset import Dataset, require_both_labels
from .base import AlgorithmId, Learner, LearnerSettings, ParamPoint, ScoreVector, TrainedModel
from .forest import ForestLearner
from .knn import KNNLearner
from .logistic import LogisticLearner
from .mlp import MLPLearner
from .naive_bayes import NaiveBayesLearner
from .svm import SVMLearner

log = logging.getLogger(__name__)

LEARNERS: Dict[AlgorithmId, Type[Learner]] = {
    AlgorithmId.RF: ForestLearner,
    AlgorithmId.MLP: MLPLearner,
    AlgorithmId.NB: NaiveBayesLearner,
    AlgorithmId.KNN: KNNLearner,
    AlgorithmId.LREG: LogisticLearner,
    AlgorithmId.SVM: SVMLearner,
}


def make_learner(algorithm: AlgorithmId, params: ParamPoint, settings: Optional[LearnerSettings] = None) -> Learner:
    algorithm = AlgorithmId(algorithm)
    if params.algorithm is not algorithm:
        raise InvalidParams(f"{algorithm.value} cannot take {params.algorithm.value} parameters")
    return LEARNERS[algorithm](params, settings or LearnerSettings.from_config())


def fit_learner(
    algorithm: AlgorithmId,
    params: ParamPoint,
    X: np.ndarray,
    y: np.ndarray,
    seed: int,
    settings: Optional[LearnerSettings] = None,
) -> Learner:
    """Fit on raw matrices; X holds percent marks, y is 1 for Weak."""
    require_both_labels(np.asarray(y, dtype=np.int64), "training set", SingleClassTrainingSet)
    learner = make_learner(algorithm, params, settings)
    learner.fit(np.asarray(X, dtype=float), np.asarray(y, dtype=np.int64), np.random.default_rng(seed))
    return learner


def train(
    algorithm: AlgorithmId,
    params: ParamPoint,
    ds: Dataset,
    seed: int,
    settings: Optional[LearnerSettings] = None,
) -> TrainedModel:
    learner = fit_learner(algorithm, params, ds.X, ds.y, seed, settings)
    if not learner.converged:
        log.warning(
            "%s (%s) did not converge: %s", algorithm.value, params.label(), "; ".join(learner.notes)
        )
    return TrainedModel(
        algorithm=AlgorithmId(algorithm),
        params=params,
        feature_names=ds.feature_names,
        train_seed=int(seed),
        learner=learner,
        converged=learner.converged,
        notes=tuple(learner.notes),
    )


def score(model: TrainedModel, ds: Dataset) -> ScoreVector:
    if tuple(ds.feature_names) != tuple(model.feature_names):
        raise SchemaMismatch(
            f"model trained on {list(model.feature_names)}, data has {list(ds.feature_names)}"
        )
    values = np.clip(model.learner.predict_weak(ds.X), 0.0, 1.0)
    return ScoreVector(index=ds.row_index, values=values)
