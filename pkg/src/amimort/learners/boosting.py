"""Discrete AdaBoost over decision stumps, and two-class LogitBoost with
univariate least-squares base learners (a stand-in for WEKA's SimpleLogistic)."""

from __future__ import annotations

import numpy as np

from ..core import DegenerateDataError
from .linear import sigmoid
from .rules import DecisionStump

# used as the member weight when a stump classifies the weighted sample perfectly
_PERFECT_ERR = 1e-10


class AdaBoost:
    def __init__(self, n_rounds=10):
        self.n_rounds = n_rounds

    def fit(self, X, y, discrete=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        if np.unique(y).size < 2:
            raise DegenerateDataError("AdaBoost needs both classes in the training data")
        n = X.shape[0]
        sign = np.where(y == 1, 1.0, -1.0)
        w = np.full(n, 1.0 / n)
        orders = np.argsort(X, axis=0, kind="stable")
        self.stumps_, self.alphas_ = [], []
        self.training_errors_ = []
        score = np.zeros(n)
        for _ in range(self.n_rounds):
            stump = DecisionStump().fit(X, y, sample_weight=w, orders=orders)
            h = stump.predict_sign(X)
            err = float(w[h != sign].sum())
            if err >= 0.5:
                if not self.stumps_:
                    self.stumps_.append(stump)
                    self.alphas_.append(1.0)
                break
            alpha = 0.5 * np.log((1 - max(err, _PERFECT_ERR)) / max(err, _PERFECT_ERR))
            self.stumps_.append(stump)
            self.alphas_.append(float(alpha))
            score += alpha * h
            self.training_errors_.append(float(np.mean(np.where(score >= 0, 1, -1) != sign)))
            if err == 0:
                break
            w = w * np.exp(-alpha * sign * h)
            w /= w.sum()
        return self

    def decision_function(self, X):
        F = np.zeros(np.asarray(X).shape[0])
        for a, s in zip(self.alphas_, self.stumps_):
            F += a * s.predict_sign(X)
        return F

    def predict_proba(self, X):
        p = sigmoid(2.0 * self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def get_params(self):
        return {"alphas": list(self.alphas_), "stumps": [s.get_params() for s in self.stumps_]}

    def set_params(self, params):
        self.alphas_ = list(params["alphas"])
        self.stumps_ = []
        for sp in params["stumps"]:
            s = DecisionStump()
            s.set_params(sp)
            self.stumps_.append(s)


class LogitBoost:
    """Additive logistic model grown one univariate linear term per round."""

    def __init__(self, n_rounds=10, z_max=4.0):
        self.n_rounds = n_rounds
        self.z_max = z_max

    def fit(self, X, y, discrete=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if np.unique(y).size < 2:
            raise DegenerateDataError("LogitBoost needs both classes in the training data")
        F = np.zeros(X.shape[0])
        p = np.full(X.shape[0], 0.5)
        self.terms_ = []
        for _ in range(self.n_rounds):
            w = np.maximum(p * (1 - p), 1e-12)
            z = np.clip((y - p) / w, -self.z_max, self.z_max)
            sw = w.sum()
            xm = w @ X / sw
            zm = w @ z / sw
            Xc = X - xm
            sxx = w @ (Xc ** 2)
            sxz = w @ (Xc * (z - zm)[:, None])
            slope = np.divide(sxz, sxx, out=np.zeros_like(sxz), where=sxx > 1e-12)
            # weighted SSE of each univariate fit, up to a shared constant
            reduction = slope * sxz
            j = int(np.argmax(reduction))
            b = float(slope[j])
            a = float(zm - b * xm[j])
            self.terms_.append((j, a, b))
            F += 0.5 * (a + b * X[:, j])
            p = sigmoid(2.0 * F)
        return self

    def decision_function(self, X):
        X = np.asarray(X, dtype=float)
        F = np.zeros(X.shape[0])
        for j, a, b in self.terms_:
            F += 0.5 * (a + b * X[:, j])
        return F

    def predict_proba(self, X):
        p = sigmoid(2.0 * self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def get_params(self):
        return {"terms": [[int(j), a, b] for j, a, b in self.terms_]}

    def set_params(self, params):
        self.terms_ = [(int(j), float(a), float(b)) for j, a, b in params["terms"]]
