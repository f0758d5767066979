"""The six base classifiers behind one train/score interface."""

from .base import (
    ALGORITHMS,
    PARAM_KEYS,
    AlgorithmId,
    LearnerSettings,
    ParamPoint,
    ScoreVector,
    TrainedModel,
)
from .svm import PlattFit, platt_calibrate
from .training import LEARNERS, fit_learner, score, train

__all__ = [
    "ALGORITHMS",
    "LEARNERS",
    "PARAM_KEYS",
    "AlgorithmId",
    "LearnerSettings",
    "ParamPoint",
    "PlattFit",
    "ScoreVector",
    "TrainedModel",
    "fit_learner",
    "platt_calibrate",
    "score",
    "train",
]
