import numpy as np
import pytest

from gradedeck.core.errors import SingleClassSample
from gradedeck.learners.svm import PlattFit, platt_calibrate, rbf_kernel, smo_fit
from gradedeck.tools.metrics import gini


def test_calibration_never_reorders_margins():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        n = int(rng.integers(6, 60))
        labels = rng.random(n) < 0.4
        labels[:2] = [True, False]
        margins = rng.normal(0.0, 2.0, n) + 1.5 * labels
        fit = platt_calibrate(margins, labels)
        probs = fit.transform(margins)
        order = np.argsort(margins, kind="stable")
        assert np.all(np.diff(probs[order]) >= 0)
        assert probs.min() >= 0.0 and probs.max() <= 1.0


def test_calibration_keeps_gini_unchanged():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(6, 60))
        labels = rng.random(n) < 0.4
        labels[:2] = [True, False]
        margins = rng.normal(0.0, 2.0, n) + 1.5 * labels
        raw = gini(margins, labels)
        fit = platt_calibrate(margins, labels)
        assert gini(fit.transform(margins), labels) == pytest.approx(raw, abs=1e-12)
        scaled = PlattFit(a=0.0, b=0.0, fallback=True, lo=float(margins.min()), hi=float(margins.max()))
        assert gini(scaled.transform(margins), labels) == pytest.approx(raw, abs=1e-12)


def test_inverted_margins_fall_back_without_changing_gini():
    rng = np.random.default_rng(3)
    labels = np.array([1, 0] * 15, dtype=bool)
    # Weak students sit on the negative side, so the sigmoid slope would be positive
    margins = rng.normal(0.0, 1.0, labels.size) - 2.0 * labels
    fit = platt_calibrate(margins, labels)
    assert fit.fallback
    assert gini(fit.transform(margins), labels) == pytest.approx(gini(margins, labels), abs=1e-12)


def test_separable_margins_get_a_negative_slope():
    margins = np.array([-2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0])
    labels = np.array([0, 0, 0, 0, 1, 1, 1, 1])
    fit = platt_calibrate(margins, labels)
    assert not fit.fallback
    assert fit.a < 0
    p = fit.transform([-2.0, 0.0, 2.0])
    assert p[0] < 0.5 < p[2]


def test_constant_margins_fall_back_to_flat_scores():
    fit = platt_calibrate([0.3, 0.3, 0.3, 0.3], [1, 0, 1, 0])
    assert fit.fallback
    assert fit.transform([0.3, 5.0]).tolist() == [0.5, 0.5]


def test_fallback_is_min_max_scaling():
    fit = PlattFit(a=0.0, b=0.0, fallback=True, lo=-1.0, hi=3.0)
    assert fit.transform([-1.0, 1.0, 3.0, 9.0]).tolist() == [0.0, 0.5, 1.0, 1.0]


def test_calibration_needs_both_labels():
    with pytest.raises(SingleClassSample):
        platt_calibrate([0.1, 0.2], [1, 1])


def test_smo_separates_two_clusters():
    X = np.array([[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [1.0, 1.0], [0.9, 1.0], [1.0, 0.9]])
    y = np.array([-1.0, -1.0, -1.0, 1.0, 1.0, 1.0])
    K = rbf_kernel(X, X, 1.0)
    alpha, b, converged = smo_fit(K, y, C=10.0, tol=1e-3, max_passes=10, max_iterations=1000, rng=np.random.default_rng(0))
    assert converged
    assert np.all(alpha >= 0) and np.all(alpha <= 10.0)
    assert alpha @ y == pytest.approx(0.0, abs=1e-8)
    margins = K @ (alpha * y) + b
    assert np.all(np.sign(margins) == y)
