import numpy as np
import pytest

from amimort.core import ContractError, DegenerateDataError
from amimort.learners import (FAMILIES, AdaBoost, DecisionStump, DecisionTree, DeepFNN, FnnParams, LearnerSpec,
                              LogisticRegression, Model, NaiveBayes, OneR, RandomForest, fnn_backprop,
                              fnn_forward, fnn_loss, gradient_logistic, load_model, logistic_loss, predict_proba,
                              save_model, sgd_step, train)
from amimort.learners.fnn import _fused_step
from amimort.learners.rules import one_r_buckets

from helpers import central_difference, max_rel_error, numeric_matrix, separable

FAST = {"logistic": {"max_iter": 300}, "sgd_logistic": {"epochs": 5}, "random_forest": {"n_trees": 10},
        "deep_fnn": {"epochs": 5}}


def small_spec(family, seed=3):
    return LearnerSpec(family, FAST.get(family, {}), seed)


@pytest.fixture(scope="module")
def noisy():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(200, 5))
    y = (X[:, 0] + 0.8 * rng.normal(size=200) > 0).astype(int)
    X[rng.random(X.shape) < 0.05] = np.nan
    return numeric_matrix(X, y)


# -- gradients ---------------------------------------------------------------

def test_logistic_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    for _ in range(5):
        X, w = rng.normal(size=(5, 3)), rng.normal(size=3)
        y = rng.integers(0, 2, 5).astype(float)
        for ridge in (0.0, 0.3):
            fd = central_difference(lambda v: logistic_loss(v, X, y, ridge), w)
            assert max_rel_error(gradient_logistic(w, X, y, ridge), fd) < 1e-6


def test_logistic_gradient_examples():
    X = np.array([[1.0, 2.0], [1.0, -1.0]])
    y = np.array([1.0, 0.0])
    assert gradient_logistic(np.zeros(2), X, y)[0] == 0.0
    w = np.array([0.4, -0.7])
    np.testing.assert_allclose(gradient_logistic(w, X, y, 0.5) - gradient_logistic(w, X, y, 0.0), 0.5 * w,
                               atol=1e-15)


def _fnn_vector_check(d, seed):
    rng = np.random.default_rng(seed)
    params = FnnParams.init(d, rng)
    params = params.map(lambda k, v: v + 0.1 * rng.normal(size=v.shape))  # nonzero biases too
    X = rng.normal(size=(6, d))
    y = np.array([0, 1, 1, 0, 1, 0])
    grads = fnn_backprop(params, X, y)
    worst = 0.0
    for name in ("W1", "b1", "W2", "b2", "W3", "b3"):
        base = getattr(params, name)

        def loss_with(v, name=name):
            return fnn_loss(params.map(lambda k, old: v if k == name else old), X, y)

        worst = max(worst, max_rel_error(getattr(grads, name), central_difference(loss_with, base.copy())))
    return worst


@pytest.mark.parametrize("d", [1, 4])
def test_fnn_gradient_matches_finite_differences(d):
    assert _fnn_vector_check(d, seed=d) < 1e-5


def test_fnn_duplicate_rows_same_gradient():
    rng = np.random.default_rng(1)
    params = FnnParams.init(3, rng)
    X, y = rng.normal(size=(4, 3)), np.array([0, 1, 0, 1])
    a = fnn_backprop(params, X, y)
    b = fnn_backprop(params, np.vstack([X, X]), np.r_[y, y])
    for k in a.as_dict():
        np.testing.assert_allclose(getattr(a, k), getattr(b, k), atol=1e-15)


def test_fnn_zero_lr_and_fused_step():
    rng = np.random.default_rng(2)
    params = FnnParams.init(3, rng)
    X, y = rng.normal(size=(8, 3)), rng.integers(0, 2, 8)
    grads = fnn_backprop(params, X, y)
    same = sgd_step(params, grads, 0.0)
    for k in params.as_dict():
        np.testing.assert_array_equal(getattr(same, k), getattr(params, k))
    expected = sgd_step(params, grads, 0.05)
    fused = params.map(lambda k, v: v.copy())
    _fused_step(fused, X, y, 0.05)
    for k in params.as_dict():
        np.testing.assert_allclose(getattr(fused, k), getattr(expected, k), rtol=0, atol=1e-14)


def test_fnn_forward_examples():
    zero = FnnParams.zeros(3)
    np.testing.assert_array_equal(fnn_forward(zero, np.ones(3)), [[0.5, 0.5]])
    rng = np.random.default_rng(0)
    p = FnnParams.init(3, rng)
    p.W3[:] = 0
    p.b3[:] = 0
    np.testing.assert_allclose(fnn_forward(p, rng.normal(size=(5, 3))), 0.5)
    with pytest.raises(ContractError):
        FnnParams(np.zeros((3, 5)), np.zeros(5), np.zeros((5, 5)), np.zeros(5), np.zeros((5, 2)), np.zeros(2))


# -- family examples -----------------------------------------------------------

def test_stump_pair():
    stump = DecisionStump().fit(np.array([[0.0], [1.0]]), np.array([0, 1]))
    assert stump.threshold_ == 0.5
    np.testing.assert_array_equal(stump.predict_proba(np.array([[0.0], [1.0]]))[:, 1], [0, 1])


def test_oner_picks_exact_feature():
    rng = np.random.default_rng(0)
    y = rng.integers(0, 2, 60)
    noise = rng.normal(size=60)
    X = np.column_stack([noise, y * 10.0 + rng.random(60)])
    rule = OneR().fit(X, y)
    errors = [int(one_r_buckets(X[:, f], y)[1].min(axis=1).sum()) for f in range(2)]
    assert rule.feature_ == int(np.argmin(errors)) == 1
    assert rule.training_errors_ == 0
    disc = OneR().fit(np.column_stack([noise > 0, y]).astype(float), y, discrete=[True, True])
    assert disc.feature_ == 1


def test_naive_bayes_laplace_example():
    x = np.array([[1], [1], [1], [0], [1], [0], [0], [0]], dtype=float)
    y = np.array([1, 1, 1, 1, 0, 0, 0, 0])
    nb = NaiveBayes().fit(x, y, discrete=[True])
    assert nb.predict_proba(np.array([[1.0]]))[0, 1] == pytest.approx(2 / 3, abs=1e-12)
    # enumeration oracle over the two classes
    prior = 4 / 8
    like_pos, like_neg = (3 + 1) / (4 + 2), (1 + 1) / (4 + 2)
    assert nb.predict_proba(np.array([[1.0]]))[0, 1] == pytest.approx(
        prior * like_pos / (prior * like_pos + prior * like_neg), abs=1e-12)


def test_zero_weight_logistic_is_half():
    lr = LogisticRegression()
    lr.coef_ = np.zeros(4)
    np.testing.assert_array_equal(lr.predict_proba(np.random.default_rng(0).normal(size=(5, 3)))[:, 1], 0.5)


def test_unanimous_forest_is_one():
    X, y = separable(60, 2, seed=1)
    forest = RandomForest(n_trees=5, seed=0).fit(X, y)
    pos = X[y == 1]
    assert np.all(forest.predict_proba(pos[:3])[:, 1] <= 1.0)
    stumpy = RandomForest(n_trees=5, seed=0).fit(np.column_stack([y, y]).astype(float), y)
    np.testing.assert_array_equal(stumpy.predict_proba(np.array([[1.0, 1.0]]))[:, 1], [1.0])


def test_tree_fits_separable_data():
    X, y = separable(200, 3, seed=2)
    tree = DecisionTree().fit(X, y)
    assert np.mean((tree.predict_proba(X)[:, 1] >= 0.5) == y) == 1.0


@pytest.mark.parametrize("cls", [lambda: DecisionTree(seed=0), lambda: RandomForest(n_trees=15, seed=4)])
def test_tree_monotone_invariance(cls):
    rng = np.random.default_rng(9)
    X = rng.normal(size=(150, 3))
    y = (X[:, 0] * X[:, 1] + 0.3 * rng.normal(size=150) > 0).astype(int)
    Xt = X.copy()
    Xt[:, 0] = np.exp(2 * X[:, 0])
    Xt[:, 2] = X[:, 2] ** 3
    a = cls().fit(X, y).predict_proba(X)
    b = cls().fit(Xt, y).predict_proba(Xt)
    np.testing.assert_array_equal(a, b)


def test_adaboost_exponential_loss_decreases():
    # the 0/1 training error of discrete AdaBoost can tick up between rounds
    # (it does on this data); the exponential loss bounding it cannot
    X, y = separable(200, 3, seed=4)
    boost = AdaBoost(n_rounds=10).fit(X, y)
    sign = np.where(y == 1, 1.0, -1.0)
    F = np.zeros(len(y))
    losses = [1.0]
    for a, s in zip(boost.alphas_, boost.stumps_):
        F += a * s.predict_sign(X)
        losses.append(float(np.mean(np.exp(-sign * F))))
        assert np.mean(F * sign <= 0) <= losses[-1]
    assert all(b < a for a, b in zip(losses, losses[1:])), losses
    assert boost.training_errors_[-1] == 0.0


def test_adaboost_training_error_on_interval_toy():
    x = np.arange(12, dtype=float)[:, None]
    y = ((x[:, 0] >= 3) & (x[:, 0] <= 8)).astype(int)
    errs = AdaBoost(n_rounds=10).fit(x, y).training_errors_
    assert all(b <= a for a, b in zip(errs, errs[1:])), errs


# -- suite-wide properties -------------------------------------------------------

@pytest.mark.parametrize("family", FAMILIES)
def test_probabilities_and_determinism(family, noisy):
    spec = small_spec(family)
    model = train(spec, noisy)
    proba = model.predict_proba(noisy.rows)
    assert np.all((proba >= 0) & (proba <= 1))
    np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-9)
    again = train(spec, noisy).predict_proba(noisy.rows)
    np.testing.assert_array_equal(proba, again)


@pytest.mark.parametrize("family", FAMILIES)
def test_serialization_round_trip(family, noisy, tmp_path):
    model = train(small_spec(family), noisy)
    save_model(model, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    np.testing.assert_array_equal(predict_proba(model, noisy.rows), predict_proba(back, noisy.rows))


@pytest.mark.parametrize("family", FAMILIES)
def test_constant_features_tolerated(family):
    rng = np.random.default_rng(0)
    X = np.column_stack([np.full(40, 3.0), rng.normal(size=40)])
    y = np.r_[np.zeros(20, int), np.ones(20, int)]
    proba = train(small_spec(family), numeric_matrix(X, y)).predict_proba(X)
    assert np.all(np.isfinite(proba))


@pytest.mark.parametrize("family", ["logistic", "sgd_logistic", "deep_fnn", "adaboost",
                                    "logitboost_simple_logistic"])
def test_single_class_rejected(family):
    X = np.random.default_rng(0).normal(size=(20, 2))
    with pytest.raises(DegenerateDataError):
        train(small_spec(family), numeric_matrix(X, np.ones(20, int)))


def test_dimension_mismatch(noisy):
    model = train(small_spec("naive_bayes"), noisy)
    with pytest.raises(ContractError):
        model.predict_proba(np.zeros((2, 4)))


def test_spec_validation():
    with pytest.raises(ContractError):
        LearnerSpec("svm").resolved()
    with pytest.raises(ContractError):
        LearnerSpec("tree", {"pruning": 0.25}).resolved()
    with pytest.raises(ContractError):
        LearnerSpec("deep_fnn", {"epochs": -1}).resolved()
    with pytest.raises(ContractError):
        Model.from_dict({"format": "other"})


def test_fnn_float32_training_close_to_float64():
    X, y = separable(200, 3, seed=6)
    p32 = DeepFNN(epochs=20, seed=1).fit(X, y).predict_proba(X)[:, 1]
    p64 = DeepFNN(epochs=20, seed=1, dtype="float64").fit(X, y).predict_proba(X)[:, 1]
    assert np.max(np.abs(p32 - p64)) < 1e-3
