# gradedeck/learners/naive_bayes.py

from __future__ import annotations

from typing import Any, Dict, List, Mapping

import numpy as np
from scipy.special import expit, logsumexp

from .base import AlgorithmId, Learner

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


def silverman_bandwidth(x: np.ndarray) -> float:
    """Rule-of-thumb bandwidth 0.9 * min(sd, IQR/1.34) * n^(-1/5), never zero."""
    x = np.asarray(x, dtype=float)
    n = x.size
    sd = float(np.std(x, ddof=1)) if n > 1 else 0.0
    q75, q25 = np.percentile(x, [75, 25])
    lo = min(sd, float(q75 - q25) / 1.34)
    if lo <= 0:
        lo = sd or abs(float(x[0])) or 1.0
    return 0.9 * lo * n ** (-0.2)


class NaiveBayesLearner(Learner):
    """
    Independent per-feature likelihoods with empirical class priors.

    usekernel=false: Gaussian with a variance floor.
    usekernel=true:  Gaussian-kernel density with Silverman bandwidth.
    Row order for per-class arrays is (Good, Weak).
    """

    algorithm = AlgorithmId.NB

    def fit(self, X: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> None:
        X = np.asarray(X, dtype=float)
        y = np.asarray(y).astype(bool)
        self.kernel_ = bool(self.params.get("usekernel"))
        groups = [X[~y], X[y]]
        self.log_prior_ = np.log(np.array([g.shape[0] for g in groups], dtype=float) / X.shape[0])
        if self.kernel_:
            self.samples_: List[np.ndarray] = [g.copy() for g in groups]
            self.bandwidth_ = np.array(
                [[silverman_bandwidth(g[:, j]) for j in range(X.shape[1])] for g in groups]
            )
        else:
            floor = self.settings.nb_variance_floor * (float(np.var(X, axis=0).max()) + 1.0)
            self.mean_ = np.array([g.mean(axis=0) for g in groups])
            self.var_ = np.array([g.var(axis=0) for g in groups]) + floor

    def _log_likelihood(self, X: np.ndarray, c: int) -> np.ndarray:
        if not self.kernel_:
            mean, var = self.mean_[c], self.var_[c]
            ll = -0.5 * np.log(var) - _LOG_SQRT_2PI - (X - mean) ** 2 / (2.0 * var)
            return ll.sum(axis=1)
        sample, bw = self.samples_[c], self.bandwidth_[c]
        total = np.zeros(X.shape[0])
        for j in range(X.shape[1]):
            z = (X[:, j, None] - sample[None, :, j]) / bw[j]
            total += logsumexp(-0.5 * z**2, axis=1) - np.log(sample.shape[0] * bw[j]) - _LOG_SQRT_2PI
        return total

    def predict_weak(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        log_good = self.log_prior_[0] + self._log_likelihood(X, 0)
        log_weak = self.log_prior_[1] + self._log_likelihood(X, 1)
        return expit(log_weak - log_good)

    def state_dict(self) -> Dict[str, Any]:
        state: Dict[str, Any] = {"kernel": self.kernel_, "log_prior": self.log_prior_.tolist()}
        if self.kernel_:
            state["samples"] = [s.tolist() for s in self.samples_]
            state["bandwidth"] = self.bandwidth_.tolist()
        else:
            state["mean"] = self.mean_.tolist()
            state["var"] = self.var_.tolist()
        return state

    def load_state(self, state: Mapping[str, Any]) -> None:
        self.kernel_ = bool(state["kernel"])
        self.log_prior_ = np.asarray(state["log_prior"], dtype=float)
        if self.kernel_:
            self.samples_ = [np.asarray(s, dtype=float) for s in state["samples"]]
            self.bandwidth_ = np.asarray(state["bandwidth"], dtype=float)
        else:
            self.mean_ = np.asarray(state["mean"], dtype=float)
            self.var_ = np.asarray(state["var"], dtype=float)
