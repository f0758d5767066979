# gradedeck/learners/svm.py

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, Mapping, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import expit

from ..data.dataset import require_both_labels
from .base import AlgorithmId, Learner

log = logging.getLogger(__name__)

ALPHA_EPS = 1e-8
PLATT_MAX_ITER = 100
PLATT_MIN_STEP = 1e-10
PLATT_SIGMA = 1e-12
PLATT_EPS = 1e-5


def rbf_kernel(A: np.ndarray, B: np.ndarray, sigma: float) -> np.ndarray:
    return np.exp(-sigma * cdist(A, B, "sqeuclidean"))


# ---------------------------------------------------------------------------
# PLATT SCALING
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlattFit:
    """
    P(Weak | margin) = 1 / (1 + exp(a * margin + b)).

    When `fallback` is set the sigmoid is unused and margins are min-max
    scaled over the training range [lo, hi] instead.
    """

    a: float
    b: float
    fallback: bool = False
    lo: float = 0.0
    hi: float = 0.0

    def transform(self, margins: Sequence[float]) -> np.ndarray:
        m = np.asarray(margins, dtype=float)
        if not self.fallback:
            return expit(-(self.a * m + self.b))
        if self.hi <= self.lo:
            return np.full(m.shape, 0.5)
        return np.clip((m - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _platt_objective(m: np.ndarray, t: np.ndarray, a: float, b: float) -> float:
    f = a * m + b
    return float(np.sum(t * f + np.logaddexp(0.0, -f)))


def _platt_newton(m: np.ndarray, positive: np.ndarray) -> Tuple[float, float, bool]:
    """Newton iterations with backtracking on regularized targets; returns (a, b, converged)."""
    n_pos = float(positive.sum())
    n_neg = float(positive.size - n_pos)
    t = np.where(positive, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))
    a, b = 0.0, float(np.log((n_neg + 1.0) / (n_pos + 1.0)))
    fval = _platt_objective(m, t, a, b)
    for _ in range(PLATT_MAX_ITER):
        f = a * m + b
        p = expit(-f)
        d2 = p * (1.0 - p)
        h11 = PLATT_SIGMA + float(np.sum(m * m * d2))
        h22 = PLATT_SIGMA + float(np.sum(d2))
        h21 = float(np.sum(m * d2))
        d1 = t - p
        g1 = float(np.sum(m * d1))
        g2 = float(np.sum(d1))
        if abs(g1) < PLATT_EPS and abs(g2) < PLATT_EPS:
            return a, b, True
        det = h11 * h22 - h21 * h21
        da = -(h22 * g1 - h21 * g2) / det
        db = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * da + g2 * db
        step = 1.0
        while step >= PLATT_MIN_STEP:
            new_a, new_b = a + step * da, b + step * db
            new_f = _platt_objective(m, t, new_a, new_b)
            if new_f < fval + 1e-4 * step * gd:
                a, b, fval = new_a, new_b, new_f
                break
            step /= 2.0
        else:
            return a, b, False
    return a, b, False


def platt_calibrate(margins: Sequence[float], labels: Sequence[Any]) -> PlattFit:
    """
    Fit the Platt sigmoid to training margins (Weak on the positive side).

    Falls back to min-max scaling, flagged, when margins are all equal, Newton
    fails, the slope comes out non-negative, or values are non-finite.
    """
    positive = require_both_labels(labels, "platt calibration")
    m = np.asarray(margins, dtype=float)
    lo, hi = float(m.min()), float(m.max())
    fallback = PlattFit(a=0.0, b=0.0, fallback=True, lo=lo, hi=hi)
    if not np.all(np.isfinite(m)) or hi <= lo:
        return fallback
    a, b, ok = _platt_newton(m, positive)
    if not ok or not (np.isfinite(a) and np.isfinite(b)) or a >= 0:
        return fallback
    return PlattFit(a=a, b=b, lo=lo, hi=hi)


# ---------------------------------------------------------------------------
# SMO
# ---------------------------------------------------------------------------

def smo_fit(
    K: np.ndarray,
    y: np.ndarray,
    C: float,
    tol: float,
    max_passes: int,
    max_iterations: int,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, float, bool]:
    """
    Simplified SMO with an error cache. y is +1/-1.

    Stops after `max_passes` consecutive sweeps without an alpha update;
    hitting `max_iterations` sweeps returns converged=False.
    """
    n = y.size
    alpha = np.zeros(n)
    b = 0.0
    E = -y.astype(float)
    passes = 0
    sweeps = 0
    while passes < max_passes and sweeps < max_iterations:
        sweeps += 1
        changed = 0
        yE = y * E
        candidates = np.flatnonzero(((yE < -tol) & (alpha < C)) | ((yE > tol) & (alpha > 0)))
        for i in candidates:
            Ei = E[i]
            r = y[i] * Ei
            if not ((r < -tol and alpha[i] < C) or (r > tol and alpha[i] > 0)):
                continue
            j = int(rng.integers(0, n - 1))
            if j >= i:
                j += 1
            Ej = E[j]
            ai_old, aj_old = alpha[i], alpha[j]
            if y[i] != y[j]:
                L, H = max(0.0, aj_old - ai_old), min(C, C + aj_old - ai_old)
            else:
                L, H = max(0.0, ai_old + aj_old - C), min(C, ai_old + aj_old)
            if L >= H:
                continue
            eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
            if eta >= 0:
                continue
            aj = float(np.clip(aj_old - y[j] * (Ei - Ej) / eta, L, H))
            if abs(aj - aj_old) < 1e-5:
                continue
            ai = ai_old + y[i] * y[j] * (aj_old - aj)
            b1 = b - Ei - y[i] * (ai - ai_old) * K[i, i] - y[j] * (aj - aj_old) * K[i, j]
            b2 = b - Ej - y[i] * (ai - ai_old) * K[i, j] - y[j] * (aj - aj_old) * K[j, j]
            if 0 < ai < C:
                b_new = b1
            elif 0 < aj < C:
                b_new = b2
            else:
                b_new = 0.5 * (b1 + b2)
            E += (ai - ai_old) * y[i] * K[i] + (aj - aj_old) * y[j] * K[j] + (b_new - b)
            alpha[i], alpha[j], b = ai, aj, b_new
            changed += 1
        passes = passes + 1 if changed == 0 else 0
    return alpha, b, passes >= max_passes


class SVMLearner(Learner):
    """RBF-kernel SVM trained by simplified SMO, margins mapped to [0, 1] by Platt scaling."""

    algorithm = AlgorithmId.SVM

    def fit(self, X: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> None:
        self.input_scale_ = float(self.settings.svm_input_scale)
        self.sigma_ = float(self.params.get("sigma"))
        Z = np.asarray(X, dtype=float) * self.input_scale_
        signs = np.where(np.asarray(y) == 1, 1.0, -1.0)
        K = rbf_kernel(Z, Z, self.sigma_)
        alpha, b, converged = smo_fit(
            K,
            signs,
            C=float(self.params.get("C")),
            tol=self.settings.svm_tolerance,
            max_passes=self.settings.svm_max_passes,
            max_iterations=self.settings.svm_max_iterations,
            rng=rng,
        )
        support = alpha > ALPHA_EPS
        self.support_ = Z[support]
        self.dual_coef_ = alpha[support] * signs[support]
        self.intercept_ = float(b)
        if not converged:
            self.converged = False
            self.notes.append(f"SMO stopped at the {self.settings.svm_max_iterations}-sweep cap")

        train_margins = K[:, support] @ self.dual_coef_ + self.intercept_
        self.platt_ = platt_calibrate(train_margins, signs > 0)
        if self.platt_.fallback:
            self.notes.append("Platt fit failed; scores are min-max scaled training margins")
            log.warning("svm: Platt calibration fell back to min-max scaling")

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        Z = np.asarray(X, dtype=float) * self.input_scale_
        if self.dual_coef_.size == 0:
            return np.full(Z.shape[0], self.intercept_)
        return rbf_kernel(Z, self.support_, self.sigma_) @ self.dual_coef_ + self.intercept_

    def predict_weak(self, X: np.ndarray) -> np.ndarray:
        return self.platt_.transform(self.decision_function(X))

    def state_dict(self) -> Dict[str, Any]:
        return {
            "input_scale": self.input_scale_,
            "sigma": self.sigma_,
            "support": self.support_.tolist(),
            "dual_coef": self.dual_coef_.tolist(),
            "intercept": self.intercept_,
            "platt": self.platt_.to_dict(),
        }

    def load_state(self, state: Mapping[str, Any]) -> None:
        self.input_scale_ = float(state["input_scale"])
        self.sigma_ = float(state["sigma"])
        self.dual_coef_ = np.asarray(state["dual_coef"], dtype=float)
        self.support_ = np.asarray(state["support"], dtype=float)
        self.intercept_ = float(state["intercept"])
        self.platt_ = PlattFit(**state["platt"])
