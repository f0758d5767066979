import numpy as np
import pytest

from gradedeck.core.errors import DegenerateData, InvalidConfig, InvalidRepeats
from gradedeck.data.dataset import Dataset, Stage
from gradedeck.data.synth import SynthSpec, generate
from gradedeck.learners.base import AlgorithmId, LearnerSettings, ParamPoint
from gradedeck.learners.training import train
from gradedeck.schemas import GridConfig, GridProfile
from gradedeck.tools.analysis import decision_grid, pca, permutation_importance

SETTINGS = LearnerSettings(rf_trees=20, svm_max_iterations=300, svm_max_passes=5)

# one cheap SVM point for lattice tests
SVM_ONLY = GridConfig.model_validate({"grids": {"SVM": {"C": [1.0], "sigma": [0.5]}}})


def _dataset(marks, grades) -> Dataset:
    marks = np.asarray(marks)
    return Dataset(
        student_ids=[f"s{i}" for i in range(marks.shape[0])],
        feature_names=[f"f{j}" for j in range(marks.shape[1])],
        marks=marks,
        final_grade=np.asarray(grades, dtype=float),
        stage=Stage.STAGE20,
    )


def test_pca_shares_sum_to_100_and_decrease():
    ds = generate(SynthSpec(n_students=120, n_features=5, seed=3))
    result = pca(ds)
    shares = result.explained_variance_pct
    assert shares.sum() == pytest.approx(100.0)
    assert np.all(np.diff(shares) <= 1e-9)
    assert result.cumulative_pct()[-1] == pytest.approx(100.0)
    assert result.components == ["PC1", "PC2", "PC3", "PC4", "PC5"]
    assert list(result.variance_frame().columns) == ["component", "eigenvalue", "explained_pct", "cumulative_pct"]


def test_perfectly_correlated_features_load_on_one_component():
    base = np.arange(0, 50, 2)
    ds = _dataset(np.column_stack([base, 2 * base]), [40.0 if i % 3 == 0 else 80.0 for i in range(base.size)])
    shares = pca(ds).explained_variance_pct
    assert shares[0] == pytest.approx(100.0)
    assert shares[1] == pytest.approx(0.0, abs=1e-9)


def test_isotropic_features_split_variance_evenly():
    rng = np.random.default_rng(0)
    marks = rng.integers(0, 101, size=(4000, 2))
    ds = _dataset(marks, rng.integers(0, 101, size=4000))
    shares = pca(ds).explained_variance_pct
    assert shares[0] == pytest.approx(50.0, abs=3.0)


def test_pca_drops_constant_features():
    ds = _dataset([[10, 50, 7], [20, 50, 3], [35, 50, 9], [40, 50, 1]], [30, 80, 70, 90])
    result = pca(ds)
    assert result.dropped == ("f1",)
    assert result.feature_names == ("f0", "f2")
    with pytest.raises(DegenerateData):
        pca(_dataset([[10, 50], [20, 50]], [30, 80]))


def test_loadings_have_positive_pivot():
    ds = generate(SynthSpec(n_students=80, n_features=4, seed=9))
    loadings = pca(ds).loadings
    for row in loadings:
        assert row[np.argmax(np.abs(row))] > 0


def test_signal_feature_ranks_first():
    spec = SynthSpec(n_students=200, n_features=3, n_signal_features=1, separation=4.0, seed=12)
    ds = generate(spec)
    train_view, test_view = ds.take(np.arange(0, 140)), ds.take(np.arange(140, 200))
    model = train(AlgorithmId.RF, ParamPoint.build("RF", mtry=2), train_view, seed=1, settings=SETTINGS)
    ranking = permutation_importance(model, test_view, n_repeats=5, seed=4)
    assert ranking.features()[0] == "F01"
    assert ranking.entries[0].importance > 0.2
    assert all(e.importance >= 0.0 for e in ranking.entries)
    rows = ranking.rows()
    assert rows[0] == {"algorithm": "RF", "rank": 1, "feature": "F01", "importance": ranking.entries[0].importance}


def test_permutation_importance_is_deterministic():
    ds = generate(SynthSpec(n_students=90, n_features=3, seed=1))
    model = train(AlgorithmId.KNN, ParamPoint.build("KNN", k=5), ds, seed=1, settings=SETTINGS)
    a = permutation_importance(model, ds, n_repeats=3, seed=8)
    b = permutation_importance(model, ds, n_repeats=3, seed=8)
    assert a == b


def test_permutation_importance_needs_a_repeat():
    ds = generate(SynthSpec(n_students=40, n_features=2, seed=1))
    model = train(AlgorithmId.LREG, ParamPoint.build("LREG"), ds, seed=1, settings=SETTINGS)
    with pytest.raises(InvalidRepeats):
        permutation_importance(model, ds, n_repeats=0, seed=1)


def test_decision_grid_shape():
    ds = generate(SynthSpec(n_students=60, n_features=3, separation=3.0, seed=2))
    grid = decision_grid(ds, resolution=2, seed=5, k_folds=3, settings=SETTINGS, override=SVM_ONLY)
    assert grid.scores.shape == (2, 2)
    assert len(grid.to_frame()) == 4
    assert np.all((grid.scores >= 0) & (grid.scores <= 1))
    assert grid.params == ParamPoint.build("SVM", C=1.0, sigma=0.5)
    assert grid.to_dict()["resolution"] == 2


def test_decision_grid_rejects_tiny_resolution():
    ds = generate(SynthSpec(n_students=60, n_features=3, seed=2))
    with pytest.raises(InvalidConfig):
        decision_grid(ds, resolution=1, seed=5, override=SVM_ONLY)


def test_decision_grid_bends_around_xor_classes():
    # Weak in two opposite quadrants: no straight line separates the classes
    rng = np.random.default_rng(3)
    centers = [(20, 20, True), (80, 80, True), (20, 80, False), (80, 20, False)]
    marks, grades, cluster = [], [], []
    for c, (cx, cy, weak) in enumerate(centers):
        for _ in range(20):
            marks.append([int(np.clip(rng.normal(cx, 5), 0, 100)), int(np.clip(rng.normal(cy, 5), 0, 100))])
            grades.append(40.0 if weak else 80.0)
            cluster.append(c)
    ds = _dataset(marks, grades)
    grid = decision_grid(ds, resolution=25, seed=1, profile=GridProfile.DATASET2, settings=SETTINGS)
    assert grid.cv_gini > 0.5

    coords = pca(ds).scores[:, :2]
    cluster = np.asarray(cluster)
    at_center = []
    for c in range(4):
        px, py = coords[cluster == c].mean(axis=0)
        at_center.append(grid.scores[np.argmin(np.abs(grid.y - py)), np.argmin(np.abs(grid.x - px))])
    assert min(at_center[0], at_center[1]) > max(at_center[2], at_center[3])
