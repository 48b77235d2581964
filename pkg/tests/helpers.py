import numpy as np

from amimort.features import NUMERIC, FeatureDescriptor, FeatureMatrix, FeatureSchema

# criterion number -> (passed, detail); printed in the terminal summary
ACCEPTANCE = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (ok, detail)


def numeric_matrix(X, y, kind="lab_chart"):
    """Wrap raw arrays as a FeatureMatrix of numeric lab columns."""
    X = np.asarray(X, dtype=float)
    schema = FeatureSchema(tuple(FeatureDescriptor(f"lab_chart.x{j}", "lab_chart", NUMERIC, f"x{j}")
                                 for j in range(X.shape[1])))
    return FeatureMatrix(schema, X, np.asarray(y), np.isnan(X), kind)


def separable(n=300, d=4, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    w = np.arange(1, d + 1, dtype=float)
    score = X @ w
    y = (score > 0).astype(int)
    # push the classes apart so a margin exists
    X += np.outer(np.where(y == 1, 1.0, -1.0), w / np.linalg.norm(w))
    return X, y


def central_difference(f, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = h
        g.flat[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def max_rel_error(a, b):
    a, b = np.ravel(a), np.ravel(b)
    return float(np.max(np.abs(a - b) / np.maximum(1e-8, np.maximum(np.abs(a), np.abs(b)))))


def pair_count_auc(y, s):
    """Brute-force Mann-Whitney: P(score_pos > score_neg) + 0.5 P(tie)."""
    pos, neg = s[y == 1], s[y == 0]
    diff = pos[:, None] - neg[None, :]
    return float(((diff > 0).sum() + 0.5 * (diff == 0).sum()) / diff.size)


def random_score_sets(count=200, seed=0):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(2, 501))
        y = rng.integers(0, 2, n)
        y[0], y[1] = 0, 1
        # coarse rounding makes ties common
        s = np.round(rng.normal(size=n) + 0.7 * y, int(rng.integers(0, 3)))
        yield y, s


def check_fold_invariants(folds, y):
    """Return a list of violated invariants (empty when all hold)."""
    problems = []
    k, a = folds.k, folds.assignment
    if sorted(np.concatenate([folds.test_index(f) for f in range(k)]).tolist()) != list(range(y.size)):
        problems.append("not a partition")
    sizes = np.bincount(a, minlength=k)
    if sizes.max() - sizes.min() > 1:
        problems.append(f"fold sizes {sizes.tolist()}")
    pos = np.bincount(a[y == 1], minlength=k)
    ideal = y.sum() / k
    if np.any(np.abs(pos - ideal) >= 1):
        problems.append(f"positive counts {pos.tolist()} vs ideal {ideal:.2f}")
    for f in range(k):
        if np.intersect1d(folds.train_index(f), folds.test_index(f)).size:
            problems.append(f"fold {f} overlaps its training split")
    return problems


def leakage_violations(spec, data, k=5, seed=0):
    """Perturb held-out labels/features of each fold; that fold's model must not change.

    The fold assignment is held fixed, since stratification itself reads the labels.
    """
    from amimort.evaluate import cross_validate
    from amimort.features import FeatureMatrix

    base = cross_validate(spec, data, k, seed, keep_models=True)
    bad = []
    for f in range(k):
        te = base.folds.test_index(f)
        labels = data.labels.copy()
        labels[te] = 1 - labels[te]
        rows = data.rows.copy()
        rows[te] = rows[te] * 3.0 + 7.0
        flipped = cross_validate(spec, FeatureMatrix(data.schema, data.rows, labels, data.missing_mask, data.kind),
                                 keep_models=True, folds=base.folds)
        moved = cross_validate(spec, FeatureMatrix(data.schema, rows, data.labels, np.isnan(rows), data.kind),
                               keep_models=True, folds=base.folds)
        if not np.array_equal(flipped.scores[te], base.scores[te]):
            bad.append(f"fold {f}: scores moved when its test labels flipped")
        if flipped.models[f].to_dict() != base.models[f].to_dict() or \
                moved.models[f].to_dict() != base.models[f].to_dict():
            bad.append(f"fold {f}: model depends on its test split")
    return bad
