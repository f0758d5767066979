# gradedeck/learners/mlp.py

from __future__ import annotations

from typing import Any, Dict, Mapping

import numpy as np
from scipy.special import expit

from ..core.errors import InvalidParams
from .base import AlgorithmId, Learner, LearnerSettings, ParamPoint

INPUT_SCALE = 0.01


class MLPLearner(Learner):
    """
    One hidden layer of logistic units, logistic output, cross-entropy loss.

    Full-batch gradient descent on the mean loss; every weight and bias starts
    uniform in (-init_range, init_range).
    """

    algorithm = AlgorithmId.MLP

    def __init__(self, params: ParamPoint, settings: LearnerSettings):
        super().__init__(params, settings)
        if int(params.get("hidden_layers")) != 1:
            raise InvalidParams(f"MLP supports exactly one hidden layer, got {params.get('hidden_layers')}")

    def _forward(self, Z: np.ndarray):
        H = expit(Z @ self.W1_ + self.b1_)
        return H, expit(H @ self.W2_ + self.b2_)

    def fit(self, X: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> None:
        Z = np.asarray(X, dtype=float) * INPUT_SCALE
        y = np.asarray(y, dtype=float)
        n, d = Z.shape
        h = int(self.params.get("neurons"))
        r = self.settings.mlp_init_range
        self.W1_ = rng.uniform(-r, r, size=(d, h))
        self.b1_ = rng.uniform(-r, r, size=h)
        self.W2_ = rng.uniform(-r, r, size=h)
        self.b2_ = float(rng.uniform(-r, r))

        lr = self.settings.mlp_learning_rate
        self.converged = False
        epochs = 0
        for epochs in range(1, self.settings.mlp_max_epochs + 1):
            H, p = self._forward(Z)
            delta = p - y
            g_W2 = H.T @ delta / n
            g_b2 = float(delta.mean())
            delta_h = delta[:, None] * self.W2_[None, :] * H * (1.0 - H)
            g_W1 = Z.T @ delta_h / n
            g_b1 = delta_h.mean(axis=0)
            largest = max(
                float(np.abs(g_W1).max(initial=0.0)),
                float(np.abs(g_b1).max(initial=0.0)),
                float(np.abs(g_W2).max(initial=0.0)),
                abs(g_b2),
            )
            if largest < self.settings.mlp_tolerance:
                self.converged = True
                break
            self.W1_ -= lr * g_W1
            self.b1_ -= lr * g_b1
            self.W2_ -= lr * g_W2
            self.b2_ -= lr * g_b2
        self.epochs_ = epochs
        if not self.converged:
            self.notes.append(f"gradient descent stopped at the {self.settings.mlp_max_epochs}-epoch cap")

    def predict_weak(self, X: np.ndarray) -> np.ndarray:
        _, p = self._forward(np.asarray(X, dtype=float) * INPUT_SCALE)
        return p

    def state_dict(self) -> Dict[str, Any]:
        return {
            "W1": self.W1_.tolist(),
            "b1": self.b1_.tolist(),
            "W2": self.W2_.tolist(),
            "b2": self.b2_,
            "epochs": self.epochs_,
        }

    def load_state(self, state: Mapping[str, Any]) -> None:
        self.W1_ = np.asarray(state["W1"], dtype=float)
        self.b1_ = np.asarray(state["b1"], dtype=float)
        self.W2_ = np.asarray(state["W2"], dtype=float)
        self.b2_ = float(state["b2"])
        self.epochs_ = int(state["epochs"])
