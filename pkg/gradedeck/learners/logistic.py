# gradedeck/learners/logistic.py

from __future__ import annotations

from typing import Any, Dict, Mapping

import numpy as np
from scipy.special import expit

from .base import AlgorithmId, Learner

# percent marks -> [0, 1]
INPUT_SCALE = 0.01


class LogisticLearner(Learner):
    """Logistic regression fit by full-batch gradient ascent on the mean log-likelihood."""

    algorithm = AlgorithmId.LREG

    def fit(self, X: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> None:
        Z = np.asarray(X, dtype=float) * INPUT_SCALE
        y = np.asarray(y, dtype=float)
        n, d = Z.shape
        w = np.zeros(d)
        b = 0.0
        lr = self.settings.lreg_learning_rate
        self.converged = False
        epochs = 0
        for epochs in range(1, self.settings.lreg_max_epochs + 1):
            resid = y - expit(Z @ w + b)
            grad_w = Z.T @ resid / n
            grad_b = float(resid.mean())
            if max(float(np.abs(grad_w).max(initial=0.0)), abs(grad_b)) < self.settings.lreg_tolerance:
                self.converged = True
                break
            w += lr * grad_w
            b += lr * grad_b
        self.coef_ = w
        self.intercept_ = b
        self.epochs_ = epochs
        if not self.converged:
            self.notes.append(f"gradient ascent stopped at the {self.settings.lreg_max_epochs}-epoch cap")

    def predict_weak(self, X: np.ndarray) -> np.ndarray:
        Z = np.asarray(X, dtype=float) * INPUT_SCALE
        return expit(Z @ self.coef_ + self.intercept_)

    def state_dict(self) -> Dict[str, Any]:
        return {"coef": self.coef_.tolist(), "intercept": self.intercept_, "epochs": self.epochs_}

    def load_state(self, state: Mapping[str, Any]) -> None:
        self.coef_ = np.asarray(state["coef"], dtype=float)
        self.intercept_ = float(state["intercept"])
        self.epochs_ = int(state["epochs"])
