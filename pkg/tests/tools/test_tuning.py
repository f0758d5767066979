import numpy as np
import pytest

from gradedeck.core.errors import DegenerateFold, InvalidConfig
from gradedeck.data.splits import kfold
from gradedeck.data.synth import SynthSpec, generate
from gradedeck.learners.base import AlgorithmId, LearnerSettings, ParamPoint
from gradedeck.schemas import GridConfig, GridProfile, load_grid_config
from gradedeck.tools import tuning
from gradedeck.tools.tuning import NO_SCORE, grid_for, grid_search, search_points

SETTINGS = LearnerSettings(rf_trees=10, mlp_max_epochs=200, lreg_max_epochs=500, svm_max_iterations=200, svm_max_passes=5)


def test_packaged_grids_by_profile():
    rf = grid_for(AlgorithmId.RF, GridProfile.DATASET1)
    assert rf.axes["mtry"] == tuple(range(2, 13))
    svm1 = grid_for(AlgorithmId.SVM, GridProfile.DATASET1)
    svm2 = grid_for(AlgorithmId.SVM, GridProfile.DATASET2)
    assert len(svm1) == 3 * 5
    assert len(svm2) == 3 * 6
    assert svm2.axes["sigma"][0] == 0.3
    assert len(grid_for(AlgorithmId.KNN, GridProfile.DATASET2)) == 20
    assert [p.label() for p in grid_for(AlgorithmId.LREG, GridProfile.DATASET1).points()] == ["-"]


def test_mtry_is_capped_at_feature_count():
    assert grid_for(AlgorithmId.RF, GridProfile.DATASET1, n_features=4).axes["mtry"] == (2, 3, 4)
    assert grid_for(AlgorithmId.RF, GridProfile.DATASET1, n_features=1).axes["mtry"] == (1,)


def test_override_table_wins_per_algorithm():
    override = GridConfig.model_validate({"grids": {"KNN": {"k": [3]}}})
    assert grid_for(AlgorithmId.KNN, GridProfile.DATASET1, override=override).axes["k"] == (3,)
    assert len(grid_for(AlgorithmId.NB, GridProfile.DATASET1, override=override)) == 2


def test_grid_points_follow_declared_axis_order():
    grid = grid_for(AlgorithmId.SVM, GridProfile.DATASET1)
    points = grid.points()
    assert points[0] == ParamPoint.build("SVM", C=0.25, sigma=0.05)
    assert points[1] == ParamPoint.build("SVM", C=0.25, sigma=0.1)
    assert points[-1] == ParamPoint.build("SVM", C=1.0, sigma=0.25)


def test_grid_file_rejects_wrong_axes(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("grids:\n  KNN:\n    neighbours: [3]\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_grid_config(path)


def test_best_point_is_first_with_highest_mean(monkeypatch):
    fake = {
        0: [0.5, 0.5, 0.5],
        1: [0.75, None, 0.75],
        2: [0.75, 0.75, 0.75],
        3: [None, None, None],
    }
    monkeypatch.setattr(tuning, "_fold_ginis", lambda *args: fake[args[6]])
    points = [ParamPoint.build("KNN", k=k) for k in (3, 5, 7, 9)]
    result = search_points(AlgorithmId.KNN, points, np.zeros((6, 1)), np.zeros(6), [], seed=1)
    assert result.best == points[1]
    assert result.cv_gini == 0.75
    assert [p.cv_gini for p in result.all_points] == [0.5, 0.75, 0.75, NO_SCORE]
    rows = result.curve_rows(split=2)
    assert rows[1] == {"split": 2, "algorithm": "KNN", "params": "k=5", "cv_gini": 0.75}


def test_empty_grid_is_rejected():
    with pytest.raises(InvalidConfig):
        search_points(AlgorithmId.KNN, [], np.zeros((4, 1)), np.zeros(4), [], seed=1)


def test_grid_search_on_training_view():
    ds = generate(SynthSpec(n_students=90, n_features=3, separation=3.0, seed=4))
    view = ds.take(np.arange(10, 70))
    plan = kfold(view.row_index, 3, seed=6, labels=view.labels)
    result = grid_search(AlgorithmId.KNN, view, plan, seed=8, profile=GridProfile.DATASET1, settings=SETTINGS)
    assert len(result.all_points) == 20
    assert all(len(p.fold_ginis) == 3 for p in result.all_points)
    assert result.cv_gini > 0.5
    assert result.best in [p.params for p in result.all_points]


def test_grid_search_is_deterministic():
    ds = generate(SynthSpec(n_students=60, n_features=2, seed=2))
    plan = kfold(ds.row_index, 3, seed=1, labels=ds.labels)
    grid = grid_for(AlgorithmId.MLP, GridProfile.DATASET1)
    a = grid_search(AlgorithmId.MLP, ds, plan, seed=3, grid=grid, settings=SETTINGS)
    b = grid_search(AlgorithmId.MLP, ds, plan, seed=3, grid=grid, settings=SETTINGS)
    assert [p.fold_ginis for p in a.all_points] == [p.fold_ginis for p in b.all_points]


def test_fold_plan_outside_training_view():
    ds = generate(SynthSpec(n_students=60, n_features=2, seed=2))
    view = ds.take(np.arange(0, 30))
    plan = kfold(np.arange(30, 60), 3, seed=1, labels=ds.take(np.arange(30, 60)).labels)
    with pytest.raises(DegenerateFold):
        grid_search(AlgorithmId.LREG, view, plan, seed=1, settings=SETTINGS)
