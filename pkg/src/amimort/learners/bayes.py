"""Naive Bayes with Gaussian numeric likelihoods and Laplace-smoothed discrete ones."""

from __future__ import annotations

import numpy as np


class NaiveBayes:
    def __init__(self, var_floor=1e-9):
        self.var_floor = var_floor

    def fit(self, X, y, discrete=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        n, p = X.shape
        self.discrete_ = np.zeros(p, bool) if discrete is None else np.asarray(discrete, bool)
        counts = np.array([(y == 0).sum(), (y == 1).sum()], dtype=float)
        self.log_prior_ = np.log(np.maximum(counts, 1e-300) / n)
        self.mean_ = np.zeros((2, p))
        self.var_ = np.ones((2, p))
        self.p_one_ = np.full((2, p), 0.5)
        for c in (0, 1):
            Xc = X[y == c]
            if Xc.shape[0] == 0:
                continue
            self.mean_[c] = Xc.mean(axis=0)
            self.var_[c] = np.maximum(Xc.var(axis=0), self.var_floor)
            self.p_one_[c] = ((Xc > 0.5).sum(axis=0) + 1.0) / (Xc.shape[0] + 2.0)
        return self

    def joint_log_likelihood(self, X):
        X = np.asarray(X, dtype=float)
        out = np.tile(self.log_prior_, (X.shape[0], 1))
        num, dis = ~self.discrete_, self.discrete_
        for c in (0, 1):
            if num.any():
                mu, var = self.mean_[c, num], self.var_[c, num]
                out[:, c] += np.sum(-0.5 * np.log(2 * np.pi * var) - (X[:, num] - mu) ** 2 / (2 * var), axis=1)
            if dis.any():
                on = X[:, dis] > 0.5
                out[:, c] += np.sum(np.where(on, np.log(self.p_one_[c, dis]), np.log1p(-self.p_one_[c, dis])), axis=1)
        return out

    def predict_proba(self, X):
        jll = self.joint_log_likelihood(X)
        jll -= jll.max(axis=1, keepdims=True)
        prob = np.exp(jll)
        prob /= prob.sum(axis=1, keepdims=True)
        # pin the complement so the pair sums to one exactly
        return np.column_stack([1.0 - prob[:, 1], prob[:, 1]])

    def get_params(self):
        return {"discrete": self.discrete_.tolist(), "log_prior": self.log_prior_.tolist(),
                "mean": self.mean_.tolist(), "var": self.var_.tolist(), "p_one": self.p_one_.tolist()}

    def set_params(self, params):
        self.discrete_ = np.array(params["discrete"], dtype=bool)
        self.log_prior_ = np.array(params["log_prior"])
        self.mean_ = np.array(params["mean"])
        self.var_ = np.array(params["var"])
        self.p_one_ = np.array(params["p_one"])
