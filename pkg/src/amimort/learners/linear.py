"""Ridge-penalised logistic regression, full-batch and minibatch SGD."""

from __future__ import annotations

import numpy as np

from ..core import DegenerateDataError


def sigmoid(z):
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def softplus(z):
    """log(1 + exp(z)) without overflow."""
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def logistic_loss(w, X, y, ridge=0.0):
    """Mean negative log-likelihood plus ``ridge / 2 * ||w||^2``."""
    z = X @ w
    return float(np.mean(softplus(z) - y * z) + 0.5 * ridge * (w @ w))


def gradient_logistic(w, X, y, ridge=0.0):
    """Analytic gradient of :func:`logistic_loss` with respect to ``w``."""
    return X.T @ (sigmoid(X @ w) - y) / X.shape[0] + ridge * w


def _with_intercept(X):
    return np.hstack([np.ones((X.shape[0], 1)), X])


def _check_two_classes(y, name):
    if np.unique(y).size < 2:
        raise DegenerateDataError(f"{name} needs both classes in the training data")


class LogisticRegression:
    """Full-batch gradient descent with Armijo backtracking from a fixed initial step."""

    def __init__(self, ridge=1e-8, learning_rate=0.1, tol=1e-6, max_iter=10_000):
        self.ridge = ridge
        self.learning_rate = learning_rate
        self.tol = tol
        self.max_iter = max_iter
        self.coef_ = None
        self.n_iter_ = 0

    def fit(self, X, y, discrete=None):
        _check_two_classes(y, "logistic regression")
        Xa = _with_intercept(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float)
        n = Xa.shape[0]
        w = np.zeros(Xa.shape[1])
        z = np.zeros(n)

        def loss_at(z, w):
            return np.mean(softplus(z) - y * z) + 0.5 * self.ridge * (w @ w)

        loss = loss_at(z, w)
        for it in range(self.max_iter):
            g = Xa.T @ (sigmoid(z) - y) / n + self.ridge * w
            gg = g @ g
            if np.sqrt(gg) < self.tol:
                break
            # the margins move linearly along -g, so each trial step costs O(n)
            zg = Xa @ g
            step = self.learning_rate
            while True:
                w_new, z_new = w - step * g, z - step * zg
                loss_new = loss_at(z_new, w_new)
                if loss_new <= loss - 1e-4 * step * gg or step < 1e-12:
                    break
                step *= 0.5
            w, z, loss = w_new, z_new, loss_new
        self.n_iter_ = it + 1
        self.coef_ = w
        return self

    def decision_function(self, X):
        return _with_intercept(np.asarray(X, dtype=float)) @ self.coef_

    def predict_proba(self, X):
        p = sigmoid(self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def get_params(self):
        return {"coef": self.coef_.tolist()}

    def set_params(self, params):
        self.coef_ = np.array(params["coef"], dtype=float)


class SGDLogistic(LogisticRegression):
    """Minibatch stochastic gradient descent on the same objective."""

    def __init__(self, ridge=1e-4, learning_rate=0.01, epochs=50, batch_size=32, seed=0):
        self.ridge = ridge
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed
        self.coef_ = None

    def fit(self, X, y, discrete=None):
        _check_two_classes(y, "SGD logistic regression")
        Xa = _with_intercept(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float)
        rng = np.random.default_rng(self.seed)
        w = np.zeros(Xa.shape[1])
        n = Xa.shape[0]
        for _ in range(self.epochs):
            order = rng.permutation(n)
            for start in range(0, n, self.batch_size):
                batch = order[start:start + self.batch_size]
                w -= self.learning_rate * gradient_logistic(w, Xa[batch], y[batch], self.ridge)
        self.coef_ = w
        return self
