"""Single-attribute learners: entropy decision stump and OneR."""

from __future__ import annotations

import numpy as np


def _entropy(p):
    p = np.clip(p, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(p * np.log2(p) + (1 - p) * np.log2(1 - p))
    return np.nan_to_num(h)


class DecisionStump:
    """One threshold split ``x[f] <= t`` chosen by weighted conditional entropy.

    Thresholds sit halfway between adjacent distinct training values. Ties in
    entropy go to the lowest column index, then the lowest threshold.
    """

    def __init__(self):
        self.feature_ = -1
        self.threshold_ = 0.0
        self.left_ = self.right_ = 0.5

    def fit(self, X, y, discrete=None, sample_weight=None, orders=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        n, p = X.shape
        w = np.full(n, 1.0 / n) if sample_weight is None else np.asarray(sample_weight, dtype=float)
        total_w, total_p = w.sum(), (w * y).sum()
        prior = total_p / total_w if total_w > 0 else 0.5
        self.feature_, self.threshold_ = -1, 0.0
        self.left_ = self.right_ = prior
        best = np.inf
        for f in range(p):
            o = orders[:, f] if orders is not None else np.argsort(X[:, f], kind="stable")
            xs = X[o, f]
            valid = xs[:-1] < xs[1:]
            if not valid.any():
                continue
            lw = np.cumsum(w[o])[:-1][valid]
            lp = np.cumsum(w[o] * y[o])[:-1][valid]
            rw, rp = total_w - lw, total_p - lp
            with np.errstate(divide="ignore", invalid="ignore"):
                cost = lw * _entropy(np.where(lw > 0, lp / lw, 0)) + rw * _entropy(np.where(rw > 0, rp / rw, 0))
            k = int(np.argmin(cost))
            if cost[k] < best:
                best = cost[k]
                lo, hi = xs[:-1][valid][k], xs[1:][valid][k]
                self.feature_, self.threshold_ = f, (lo + hi) / 2.0
                self.left_ = lp[k] / lw[k] if lw[k] > 0 else prior
                self.right_ = rp[k] / rw[k] if rw[k] > 0 else prior
        return self

    def positive_rate(self, X):
        X = np.asarray(X, dtype=float)
        if self.feature_ < 0:
            return np.full(X.shape[0], self.left_)
        return np.where(X[:, self.feature_] <= self.threshold_, self.left_, self.right_)

    def predict_sign(self, X):
        return np.where(self.positive_rate(X) >= 0.5, 1.0, -1.0)

    def predict_proba(self, X):
        p = self.positive_rate(X)
        return np.column_stack([1.0 - p, p])

    def get_params(self):
        return {"feature": int(self.feature_), "threshold": float(self.threshold_),
                "left": float(self.left_), "right": float(self.right_)}

    def set_params(self, params):
        self.feature_ = params["feature"]
        self.threshold_ = params["threshold"]
        self.left_ = params["left"]
        self.right_ = params["right"]


def one_r_buckets(values, labels, min_bucket=6):
    """Holte's 1R discretisation of one numeric attribute.

    Returns (boundaries, counts): ``len(counts) == len(boundaries) + 1`` and
    bucket ``i`` holds values in ``(boundaries[i-1], boundaries[i]]``.
    ``counts[i] = [negatives, positives]``.
    """
    order = np.argsort(values, kind="stable")
    v = np.asarray(values, dtype=float)[order].tolist()
    y = np.asarray(labels, dtype=int)[order].tolist()
    n = len(v)
    buckets = []  # [counts, upper boundary]
    counts = [0, 0]
    i = 0
    while i < n:
        j = i
        while j < n and v[j] == v[i]:
            counts[y[j]] += 1
            j += 1
        i = j
        major = 1 if counts[1] > counts[0] else 0
        if counts[major] >= min_bucket and (i == n or y[i] != major):
            buckets.append([np.array(counts), (v[i - 1] + v[i]) / 2.0 if i < n else np.inf])
            counts = [0, 0]
    if counts[0] + counts[1] > 0:
        buckets.append([np.array(counts), np.inf])
    merged = [buckets[0]]
    for c, bound in buckets[1:]:
        prev = merged[-1]
        if np.argmax(prev[0]) == np.argmax(c):
            merged[-1] = [prev[0] + c, bound]
        else:
            merged.append([c, bound])
    bounds = np.array([b for _, b in merged[:-1]], dtype=float)
    return bounds, np.array([c for c, _ in merged])


class OneR:
    """Rule on the single attribute with the lowest training error."""

    def __init__(self, min_bucket=6):
        self.min_bucket = min_bucket

    def _rule_for(self, x, y, discrete):
        if discrete:
            levels, inverse = np.unique(x, return_inverse=True)
            counts = np.zeros((levels.size, 2), dtype=int)
            np.add.at(counts, (inverse.ravel(), y), 1)
            return ("discrete", levels, counts)
        bounds, counts = one_r_buckets(x, y, self.min_bucket)
        return ("numeric", bounds, counts)

    def fit(self, X, y, discrete=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        p = X.shape[1]
        discrete = np.zeros(p, bool) if discrete is None else np.asarray(discrete, bool)
        self.default_ = float(y.mean()) if y.size else 0.5
        best_err = None
        for f in range(p):
            rule = self._rule_for(X[:, f], y, discrete[f])
            err = int(rule[2].min(axis=1).sum())
            if best_err is None or err < best_err:
                best_err, self.feature_, self.rule_ = err, f, rule
        self.training_errors_ = best_err
        return self

    def positive_rate(self, X):
        x = np.asarray(X, dtype=float)[:, self.feature_]
        kind, keys, counts = self.rule_
        rates = counts[:, 1] / counts.sum(axis=1)
        if kind == "numeric":
            return rates[np.searchsorted(keys, x, side="left")]
        idx = np.searchsorted(keys, x)
        idx = np.clip(idx, 0, len(keys) - 1)
        return np.where(keys[idx] == x, rates[idx], self.default_)

    def predict_proba(self, X):
        p = self.positive_rate(X)
        return np.column_stack([1.0 - p, p])

    def get_params(self):
        kind, keys, counts = self.rule_
        return {"feature": int(self.feature_), "kind": kind, "keys": keys.tolist(),
                "counts": counts.tolist(), "default": self.default_}

    def set_params(self, params):
        self.feature_ = params["feature"]
        self.rule_ = (params["kind"], np.array(params["keys"], dtype=float), np.array(params["counts"], dtype=int))
        self.default_ = params["default"]
