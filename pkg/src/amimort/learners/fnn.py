"""Feedforward network: two ReLU hidden layers twice as wide as the input, a
two-way softmax output, and softmax cross-entropy trained by minibatch
gradient descent."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import ContractError, DegenerateDataError

PARAM_NAMES = ("W1", "b1", "W2", "b2", "W3", "b3")


@dataclass
class FnnParams:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    W3: np.ndarray
    b3: np.ndarray

    def __post_init__(self):
        d, h = self.W1.shape
        if h != 2 * d:
            raise ContractError(f"hidden width must be twice the input size ({2 * d}), got {h}")
        shapes = {"b1": (h,), "W2": (h, h), "b2": (h,), "W3": (h, 2), "b3": (2,)}
        for name, shape in shapes.items():
            if getattr(self, name).shape != shape:
                raise ContractError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")

    @property
    def input_dim(self) -> int:
        return self.W1.shape[0]

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in PARAM_NAMES}

    def map(self, fn) -> "FnnParams":
        return FnnParams(**{k: fn(k, v) for k, v in self.as_dict().items()})

    @classmethod
    def zeros(cls, d: int) -> "FnnParams":
        h = 2 * d
        return cls(np.zeros((d, h)), np.zeros(h), np.zeros((h, h)), np.zeros(h), np.zeros((h, 2)), np.zeros(2))

    @classmethod
    def init(cls, d: int, rng: np.random.Generator, dtype=np.float64) -> "FnnParams":
        """He-scaled uniform weights, zero biases."""
        h = 2 * d

        def he(fan_in, fan_out):
            bound = np.sqrt(6.0 / fan_in)
            return rng.uniform(-bound, bound, size=(fan_in, fan_out)).astype(dtype)

        return cls(he(d, h), np.zeros(h, dtype), he(h, h), np.zeros(h, dtype), he(h, 2), np.zeros(2, dtype))


def _softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _forward(params: FnnParams, X):
    z1 = X @ params.W1 + params.b1
    h1 = np.maximum(z1, 0)
    z2 = h1 @ params.W2 + params.b2
    h2 = np.maximum(z2, 0)
    logits = h2 @ params.W3 + params.b3
    return (z1, h1, z2, h2), logits


def fnn_forward(params: FnnParams, X) -> np.ndarray:
    """Class distribution, shape (n, 2), for a batch (or a single row)."""
    X = np.atleast_2d(np.asarray(X, dtype=params.W1.dtype))
    return _softmax(_forward(params, X)[1])


def fnn_loss(params: FnnParams, X, y) -> float:
    """Mean softmax cross-entropy."""
    X = np.atleast_2d(np.asarray(X, dtype=params.W1.dtype))
    _, logits = _forward(params, X)
    z = logits - logits.max(axis=1, keepdims=True)
    log_p = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return float(-np.mean(log_p[np.arange(X.shape[0]), np.asarray(y, dtype=int)]))


def fnn_backprop(params: FnnParams, X, y) -> FnnParams:
    """Gradients of :func:`fnn_loss` for every parameter."""
    X = np.atleast_2d(np.asarray(X, dtype=params.W1.dtype))
    y = np.asarray(y, dtype=int)
    if X.shape[0] == 0:
        raise ContractError("empty batch")
    (z1, h1, z2, h2), logits = _forward(params, X)
    d_logits = _softmax(logits)
    d_logits[np.arange(X.shape[0]), y] -= 1.0
    d_logits /= X.shape[0]
    dW3 = h2.T @ d_logits
    db3 = d_logits.sum(axis=0)
    d_z2 = (d_logits @ params.W3.T) * (z2 > 0)
    dW2 = h1.T @ d_z2
    db2 = d_z2.sum(axis=0)
    d_z1 = (d_z2 @ params.W2.T) * (z1 > 0)
    dW1 = X.T @ d_z1
    db1 = d_z1.sum(axis=0)
    return FnnParams(dW1, db1, dW2, db2, dW3, db3)


def sgd_step(params: FnnParams, grads: FnnParams, lr: float) -> FnnParams:
    g = grads.as_dict()
    return params.map(lambda k, v: v - lr * g[k])


def _fused_step(params: FnnParams, X, y, lr):
    """In-place equivalent of ``sgd_step(params, fnn_backprop(params, X, y), lr)``."""
    z1 = X @ params.W1
    z1 += params.b1
    h1 = np.maximum(z1, 0)
    z2 = h1 @ params.W2
    z2 += params.b2
    h2 = np.maximum(z2, 0)
    d = _softmax(h2 @ params.W3 + params.b3)
    d[np.arange(X.shape[0]), y] -= 1
    d /= X.shape[0]
    d_z2 = d @ params.W3.T
    d_z2 *= z2 > 0
    d_z1 = d_z2 @ params.W2.T
    d_z1 *= z1 > 0
    params.W3 -= lr * (h2.T @ d)
    params.b3 -= lr * d.sum(axis=0)
    params.W2 -= lr * (h1.T @ d_z2)
    params.b2 -= lr * d_z2.sum(axis=0)
    params.W1 -= lr * (X.T @ d_z1)
    params.b1 -= lr * d_z1.sum(axis=0)


class DeepFNN:
    def __init__(self, learning_rate=0.05, epochs=300, batch_size=64, seed=0, dtype="float32"):
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed
        self.dtype = dtype

    def fit(self, X, y, discrete=None):
        dtype = np.dtype(self.dtype)
        X = np.asarray(X, dtype=dtype)
        y = np.asarray(y, dtype=int)
        if np.unique(y).size < 2:
            raise DegenerateDataError("the FNN needs both classes in the training data")
        rng = np.random.default_rng(self.seed)
        params = FnnParams.init(X.shape[1], rng, dtype)
        n = X.shape[0]
        for _ in range(self.epochs):
            order = rng.permutation(n)
            for start in range(0, n, self.batch_size):
                batch = order[start:start + self.batch_size]
                _fused_step(params, X[batch], y[batch], dtype.type(self.learning_rate))
        self.params_ = params
        return self

    def predict_proba(self, X):
        params64 = self.params_.map(lambda k, v: v.astype(np.float64))
        p = fnn_forward(params64, np.asarray(X, dtype=np.float64))[:, 1]
        return np.column_stack([1.0 - p, p])

    def get_params(self):
        return {k: v.tolist() for k, v in self.params_.as_dict().items()}

    def set_params(self, params):
        self.params_ = FnnParams(**{k: np.array(params[k], dtype=self.dtype) for k in PARAM_NAMES})
