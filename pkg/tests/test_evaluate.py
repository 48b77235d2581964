import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from amimort.core import ContractError, DegenerateDataError
from amimort.evaluate import (auc, confusion_metrics, cross_validate, metrics_from_counts, roc_curve,
                              stratified_folds, write_roc_csv)
from amimort.learners import LearnerSpec

from helpers import (check_fold_invariants, leakage_violations, numeric_matrix, pair_count_auc,
                     random_score_sets)


def test_auc_matches_pair_count():
    for y, s in random_score_sets(50, seed=1):
        assert abs(auc(y, s) - pair_count_auc(y, s)) < 1e-12


def test_auc_examples():
    assert auc([0, 0, 1, 1], [0.1, 0.2, 0.8, 0.9]) == 1.0
    assert auc([0, 1], [0.5, 0.5]) == 0.5
    assert auc([1, 0, 1, 0], [0.9, 0.8, 0.3, 0.2]) == 0.75
    with pytest.raises(DegenerateDataError):
        auc([1, 1], [0.1, 0.2])


def test_roc_shape():
    pts = roc_curve([0, 1, 1, 0, 1], [0.1, 0.4, 0.4, 0.35, 0.8])
    assert (pts[0].fpr, pts[0].tpr) == (0.0, 0.0)
    assert (pts[-1].fpr, pts[-1].tpr) == (1.0, 1.0)
    assert all(a.fpr <= b.fpr and a.tpr <= b.tpr for a, b in zip(pts, pts[1:]))


def test_roc_csv(tmp_path):
    write_roc_csv(roc_curve([0, 1], [0.2, 0.7]), tmp_path / "roc.csv", ["config_hash=abc"])
    lines = (tmp_path / "roc.csv").read_text().splitlines()
    assert lines[:2] == ["# config_hash=abc", "fpr,tpr,threshold"]
    assert lines[2] == "0.0,0.0,inf"


def test_metrics():
    m = metrics_from_counts(tp=3, fp=1, fn=2, tn=4)
    assert m.accuracy == 0.7 and m.precision == 0.75 and m.recall == 0.6
    assert m.f_measure == pytest.approx(2 * 0.75 * 0.6 / 1.35)
    none = confusion_metrics([1, 0], [0, 0])
    assert none.precision_undefined and none.precision == 0.0
    with pytest.raises(ContractError):
        confusion_metrics([1, 0], [1])


def test_fold_example():
    y = np.array([1, 1, 1, 0, 0, 0, 0, 0, 0, 0])
    folds = stratified_folds(y, 5, seed=0)
    assert np.bincount(folds.assignment).tolist() == [2] * 5
    assert sorted(np.bincount(folds.assignment[y == 1], minlength=5).tolist()) == [0, 0, 1, 1, 1]


def test_fold_errors_and_loo():
    with pytest.raises(ContractError):
        stratified_folds([0, 1, 0], 4)
    with pytest.raises(ContractError):
        stratified_folds([0, 1, 0], 1)
    assert sorted(stratified_folds([0, 1, 0, 1], 4).assignment.tolist()) == [0, 1, 2, 3]


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 400), k=st.integers(2, 12), ratio=st.floats(0.01, 0.99), seed=st.integers(0, 2**31))
def test_fold_invariants_property(n, k, ratio, seed):
    k = min(k, n)
    rng = np.random.default_rng(seed)
    y = (rng.random(n) < ratio).astype(int)
    folds = stratified_folds(y, k, seed)
    assert check_fold_invariants(folds, y) == []
    np.testing.assert_array_equal(folds.assignment, stratified_folds(y, k, seed).assignment)


@pytest.mark.parametrize("family", ["logistic", "naive_bayes", "tree"])
def test_no_leakage(family):
    rng = np.random.default_rng(3)
    X = rng.normal(size=(80, 3))
    y = (X[:, 0] > 0).astype(int)
    X[rng.random(X.shape) < 0.1] = np.nan
    spec = LearnerSpec(family, {"max_iter": 200} if family == "logistic" else {}, 0)
    assert leakage_violations(spec, numeric_matrix(X, y)) == []


def test_cross_validate_report():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(120, 2))
    y = (X[:, 0] + 0.5 * rng.normal(size=120) > 0).astype(int)
    rep = cross_validate(LearnerSpec("naive_bayes"), numeric_matrix(X, y), k=4, seed=1)
    assert rep.metrics.n == 120 and len(rep.fold_metrics) == 4
    assert rep.auc == pytest.approx(pair_count_auc(y, rep.scores), abs=1e-12)
    d = rep.to_dict()
    assert set(d["pooled"]) >= {"accuracy", "precision", "recall", "f_measure", "auc"}
    assert d["fold_mean_sd"]["accuracy"]["sd"] >= 0
