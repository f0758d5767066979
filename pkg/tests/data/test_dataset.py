import math

import numpy as np
import pytest

from gradedeck.core.errors import InvalidRawDataset, SingleClassSample
from gradedeck.data.dataset import (
    Dataset,
    Label,
    RawDataset,
    Stage,
    preprocess,
    require_both_labels,
    round_half_up,
    summarize,
    to_percent,
    weak_mask,
)


def _raw(marks, grades, maxes=(2.0, 3.0, 100.0), stages=None) -> RawDataset:
    ids = [f"std{i:03d}" for i in range(len(grades))]
    return RawDataset(
        student_ids=ids,
        feature_names=("a", "b", "c"),
        raw_marks=np.asarray(marks, dtype=float),
        feature_max=np.asarray(maxes, dtype=float),
        final_grade=np.asarray(grades, dtype=float),
        stage_features=stages or {},
    )


def test_label_boundary_at_pass_mark():
    assert Label.from_grade(59) is Label.WEAK
    assert Label.from_grade(60) is Label.GOOD
    assert Label.from_grade(0) is Label.WEAK
    assert Label.from_grade(100) is Label.GOOD


@pytest.mark.parametrize("grade, label", [(59.0, Label.WEAK), (59.5, Label.GOOD), (59.99, Label.GOOD)])
def test_label_rule_is_grade_at_most_59(grade, label):
    assert Label.from_grade(grade) is label


def test_mark_above_maximum_is_invalid_raw_dataset():
    with pytest.raises(InvalidRawDataset, match="exceeds maximum") as info:
        _raw([[1.0, 1.0, 1.0], [2.5, 1.0, 1.0]], [59.0, 60.0])
    assert info.value.code == "INVALID_RAW_DATASET"


def test_round_half_up_and_percent_scaling():
    assert round_half_up(2.5) == 3
    assert round_half_up(325.5) == 326
    assert to_percent(1.5, 2) == 75
    assert to_percent(1, 3) == 33
    assert to_percent(2, 3) == 67
    assert to_percent(0.5, 1.6) == 31  # 31.25


def test_preprocess_scales_zero_fills_and_labels():
    raw = _raw([[1.5, math.nan, 80.0], [2.0, 3.0, 59.5]], [59.0, 60.0])
    ds = preprocess(raw, Stage.STAGE20)
    assert ds.marks.tolist() == [[75, 0, 80], [100, 100, 60]]
    assert ds.labels == (Label.WEAK, Label.GOOD)
    assert ds.y.tolist() == [1, 0]
    assert ds.marks.dtype == np.int64


def test_preprocess_uses_stage_features():
    raw = _raw(
        [[1.0, 1.5, 10.0], [2.0, 3.0, 90.0]],
        [40.0, 80.0],
        stages={Stage.STAGE20: ("a",), Stage.STAGE50: ("a", "b")},
    )
    assert preprocess(raw, Stage.STAGE20).feature_names == ("a",)
    assert preprocess(raw, Stage.STAGE50).feature_names == ("a", "b")


def test_preprocess_is_identity_on_percent_marks():
    raw = _raw([[1.5, 2.0, 33.0], [0.0, 3.0, 100.0]], [10.0, 90.0])
    ds = preprocess(raw, Stage.STAGE20)
    again = preprocess(
        RawDataset(
            student_ids=ds.student_ids,
            feature_names=ds.feature_names,
            raw_marks=ds.marks.astype(float),
            feature_max=np.full(ds.n_features, 100.0),
            final_grade=ds.final_grade,
        ),
        Stage.STAGE20,
    )
    assert np.array_equal(again.marks, ds.marks)


def test_scaling_is_order_preserving():
    values = np.linspace(0.0, 3.0, 301)
    percents = [to_percent(v, 3.0) for v in values]
    assert percents == sorted(percents)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"maxes": (2.0, 0.0, 100.0)},
        {"grades": [59.0, 101.0]},
        {"marks": [[2.5, 1.0, 1.0], [1.0, 1.0, 1.0]]},
        {"marks": [[-1.0, 1.0, 1.0], [1.0, 1.0, 1.0]]},
    ],
)
def test_raw_dataset_rejects_bad_values(kwargs):
    args = {"marks": [[1.0, 1.0, 1.0], [1.0, 1.0, 1.0]], "grades": [59.0, 60.0]}
    args.update(kwargs)
    with pytest.raises(InvalidRawDataset):
        _raw(**args)


def test_raw_dataset_rejects_undeclared_stage_feature():
    with pytest.raises(InvalidRawDataset):
        _raw([[1.0, 1.0, 1.0]], [50.0], stages={Stage.STAGE20: ("zzz",)})


def test_dataset_rejects_out_of_range_marks():
    with pytest.raises(InvalidRawDataset):
        Dataset(
            student_ids=("a",),
            feature_names=("f",),
            marks=np.array([[101]]),
            final_grade=np.array([50.0]),
            stage=Stage.STAGE20,
        )


def test_dataset_take_keeps_row_index_and_is_read_only():
    ds = preprocess(_raw([[1.0, 1.0, 1.0], [2.0, 2.0, 2.0], [0.0, 0.0, 0.0]], [10.0, 70.0, 90.0]), Stage.STAGE20)
    view = ds.take([2, 0])
    assert view.row_index.tolist() == [2, 0]
    assert view.student_ids == ("std002", "std000")
    assert view.take([1]).row_index.tolist() == [0]
    with pytest.raises(ValueError):
        ds.marks[0, 0] = 5


def test_weak_mask_accepts_several_encodings():
    assert weak_mask([Label.WEAK, Label.GOOD]).tolist() == [True, False]
    assert weak_mask(["W", "G"]).tolist() == [True, False]
    assert weak_mask(np.array([1, 0])).tolist() == [True, False]


def test_require_both_labels():
    with pytest.raises(SingleClassSample):
        require_both_labels([Label.GOOD, Label.GOOD])
    assert require_both_labels([Label.GOOD, Label.WEAK]).tolist() == [False, True]


def test_summarize_counts_weak_and_zeros():
    ds = preprocess(_raw([[0.0, 1.0, 50.0], [2.0, math.nan, 100.0], [1.0, 3.0, 0.0]], [30.0, 80.0, 90.0]), Stage.STAGE20)
    summary = summarize(ds)
    assert summary.n_students == 3
    assert summary.n_weak == 1
    assert summary.weak_fraction == pytest.approx(1 / 3)
    by_name = {f.name: f for f in summary.features}
    assert by_name["a"].zeros == 1
    assert by_name["b"].zeros == 1
    assert by_name["c"].max == 100
    assert by_name["a"].mean == pytest.approx(50.0)
