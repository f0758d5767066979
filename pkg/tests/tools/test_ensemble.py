from typing import Dict, List

import numpy as np
import pytest

from gradedeck.core.errors import EmptyEnsemble, LengthMismatch, NoSignificantEnsemble
from gradedeck.learners.base import ALGORITHMS, AlgorithmId, ScoreVector
from gradedeck.tools.ensemble import (
    ALL_SUBSETS,
    NullOn,
    Rationale,
    average,
    build_table,
    combine_scores,
    membership_of,
    select_best,
)
from gradedeck.tools.metrics import gini

# per-algorithm signal strength; NB is pure noise
SIGNAL = {
    AlgorithmId.RF: 1.5,
    AlgorithmId.MLP: 1.0,
    AlgorithmId.NB: 0.0,
    AlgorithmId.KNN: 1.2,
    AlgorithmId.LREG: 2.0,
    AlgorithmId.SVM: 0.8,
}


def _splits(n_splits: int = 6, n: int = 40, seed: int = 0):
    rng = np.random.default_rng(seed)
    per_split_scores: List[Dict[AlgorithmId, ScoreVector]] = []
    per_split_labels = []
    for s in range(n_splits):
        weak = np.zeros(n, dtype=bool)
        weak[rng.choice(n, size=n // 3, replace=False)] = True
        index = np.sort(rng.choice(1000, size=n, replace=False))
        scores = {}
        for alg in ALGORITHMS:
            raw = SIGNAL[alg] * weak + rng.standard_normal(n)
            scores[alg] = ScoreVector(index=index, values=1.0 / (1.0 + np.exp(-raw)))
        per_split_scores.append(scores)
        per_split_labels.append(weak)
    return per_split_scores, per_split_labels


def test_sixty_three_subsets():
    assert len(ALL_SUBSETS) == 63
    assert len(set(ALL_SUBSETS)) == 63
    assert membership_of(["RF", AlgorithmId.SVM]) == (True, False, False, False, False, True)


@pytest.mark.parametrize(
    "ginis, expected, tol",
    [
        ([0.750, 0.899, 0.880, 0.815, 0.857, 0.778], 0.828, 0.005),
        # RF+SVM reference row
        ([0.929, 1.0, 1.0, 1.0, 0.929, 1.0], 0.976, 0.001),
    ],
)
def test_average_of_split_ginis(ginis, expected, tol):
    assert average(ginis) == pytest.approx(expected, abs=tol)


def test_combine_scores_is_elementwise_mean():
    a = ScoreVector(index=[4, 7], values=[0.2, 0.6])
    b = ScoreVector(index=[4, 7], values=[0.4, 1.0])
    combined = combine_scores([a, b])
    assert combined.values.tolist() == pytest.approx([0.3, 0.8])
    assert combined.index.tolist() == [4, 7]
    assert combine_scores([a]) is a


def test_combine_scores_rejects_bad_members():
    with pytest.raises(EmptyEnsemble):
        combine_scores([])
    with pytest.raises(LengthMismatch):
        combine_scores([ScoreVector(index=[1, 2], values=[0.1, 0.2]), ScoreVector(index=[1], values=[0.1])])
    with pytest.raises(LengthMismatch):
        combine_scores([ScoreVector(index=[1, 2], values=[0.1, 0.2]), ScoreVector(index=[1, 3], values=[0.1, 0.2])])


def test_table_rows_and_singletons():
    scores, labels = _splits()
    table = build_table(scores, labels, R=500, seed=11)
    assert len(table.rows) == 63
    assert table.null_samples == 500
    for row in table.singletons():
        (alg,) = row.members
        expected = [gini(s[alg], lab) for s, lab in zip(scores, labels)]
        assert row.g == pytest.approx(expected)
        assert row.avg == pytest.approx(np.mean(expected))


def test_table_order_and_monotone_pvalues():
    scores, labels = _splits()
    table = build_table(scores, labels, R=500, seed=11)
    avgs = [r.avg for r in table.rows]
    pvals = [r.p.value for r in table.rows]
    assert avgs == sorted(avgs, reverse=True)
    assert all(p1 <= p2 for p1, p2 in zip(pvals, pvals[1:]))
    assert table.rows[0].p.value == pytest.approx(1 / 501)


def test_table_csv_layout():
    scores, labels = _splits()
    table = build_table(scores, labels, R=200, seed=1)
    lines = table.to_csv().splitlines()
    assert lines[0] == "rf,mlp,bn,knn,lreg,svm,G,G1,G2,G3,G4,G5,Avg,p"
    assert len(lines) == 64
    first = lines[1].split(",")
    assert set(first[:6]) <= {"0", "1"}


def test_null_on_initial_split_only():
    scores, labels = _splits()
    table = build_table(scores, labels, R=300, seed=5, null_on="initial")
    assert table.null_on is NullOn.INITIAL
    row = table.row_for([AlgorithmId.LREG])
    assert 0.0 < row.p.value <= 1.0


def test_build_table_rejects_mismatched_inputs():
    scores, labels = _splits()
    with pytest.raises(LengthMismatch):
        build_table(scores, labels[:-1], R=10, seed=1)


def test_select_best_takes_first_significant_row():
    scores, labels = _splits()
    table = build_table(scores, labels, R=500, seed=11)
    decision = select_best(table, alpha=0.05)
    assert decision.chosen is table.rows[0]
    assert decision.rationale is Rationale.TOP_AVG
    assert decision.exclusions == []


def test_select_best_honours_exclusions():
    scores, labels = _splits()
    table = build_table(scores, labels, R=500, seed=11)
    decision = select_best(table, alpha=0.05, exclusions=["LREG"])
    assert AlgorithmId.LREG not in decision.chosen.members
    assert decision.rationale is Rationale.TOP_AVG_AFTER_EXCLUSION
    expected = next(r for r in table.rows if AlgorithmId.LREG not in r.members)
    assert decision.chosen is expected


def test_no_significant_ensemble():
    scores, labels = _splits()
    table = build_table(scores, labels, R=200, seed=11)
    # smallest attainable p at R=200 is 1/201
    with pytest.raises(NoSignificantEnsemble):
        select_best(table, alpha=0.001)
