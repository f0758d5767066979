# gradedeck/learners/knn.py

from __future__ import annotations

import logging
from typing import Any, Dict, Mapping

import numpy as np
from scipy.spatial.distance import cdist

from .base import AlgorithmId, Learner

log = logging.getLogger(__name__)


class KNNLearner(Learner):
    """Share of Weak students among the k nearest training rows (Euclidean, percent marks)."""

    algorithm = AlgorithmId.KNN

    def fit(self, X: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> None:
        self.X_ = np.asarray(X, dtype=float).copy()
        self.y_ = np.asarray(y, dtype=float).copy()
        k = int(self.params.get("k"))
        self.k_ = min(k, self.X_.shape[0])
        if self.k_ < k:
            note = f"k={k} clamped to training size {self.k_}"
            self.notes.append(note)
            log.warning("knn: %s", note)

    def predict_weak(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        dist2 = cdist(X, self.X_, "sqeuclidean")
        # stable sort: equal distances keep ascending training-row order
        nearest = np.argsort(dist2, axis=1, kind="stable")[:, : self.k_]
        return self.y_[nearest].mean(axis=1)

    def state_dict(self) -> Dict[str, Any]:
        return {"X": self.X_.tolist(), "y": self.y_.tolist(), "k": self.k_}

    def load_state(self, state: Mapping[str, Any]) -> None:
        self.X_ = np.asarray(state["X"], dtype=float)
        self.y_ = np.asarray(state["y"], dtype=float)
        self.k_ = int(state["k"])
