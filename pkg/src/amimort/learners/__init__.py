"""Classifier suite.

Every family is trained through :func:`train`, which wraps the estimator with
train-only imputation (and, for gradient-trained families, standardization of
numeric columns) so a :class:`Model` can score raw feature rows directly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..core import ContractError
from ..features import FeatureMatrix, Standardizer, fit_standardizer
from .bayes import NaiveBayes
from .boosting import AdaBoost, LogitBoost
from .fnn import DeepFNN, FnnParams, fnn_backprop, fnn_forward, fnn_loss, sgd_step
from .linear import LogisticRegression, SGDLogistic, gradient_logistic, logistic_loss, sigmoid
from .rules import DecisionStump, OneR
from .tree import DecisionTree, RandomForest

MODEL_FORMAT = "amimort-model/1"

# family -> (estimator class, default hyperparameters, standardize numeric inputs, takes seed)
_REGISTRY = {
    "logistic": (LogisticRegression, {"ridge": 1e-8, "learning_rate": 0.1, "tol": 1e-6, "max_iter": 10_000}, True, False),
    "sgd_logistic": (SGDLogistic, {"ridge": 1e-4, "learning_rate": 0.01, "epochs": 50, "batch_size": 32}, True, True),
    "naive_bayes": (NaiveBayes, {"var_floor": 1e-9}, False, False),
    "oner": (OneR, {"min_bucket": 6}, False, False),
    "stump": (DecisionStump, {}, False, False),
    "tree": (DecisionTree, {"min_leaf": 2, "max_depth": 25}, False, True),
    "random_forest": (RandomForest, {"n_trees": 100, "min_leaf": 1, "max_depth": None, "max_features": "sqrt"}, False, True),
    "adaboost": (AdaBoost, {"n_rounds": 10}, False, False),
    "logitboost_simple_logistic": (LogitBoost, {"n_rounds": 10}, False, False),
    "deep_fnn": (DeepFNN, {"learning_rate": 0.05, "epochs": 300, "batch_size": 64, "dtype": "float32"}, True, True),
}
FAMILIES = tuple(_REGISTRY)

DISPLAY_NAMES = {
    "logistic": "Logistic",
    "sgd_logistic": "SGD",
    "naive_bayes": "Naive Bayes",
    "oner": "OneR",
    "stump": "Decision Stump",
    "tree": "J48-style Tree",
    "random_forest": "Random Forest",
    "adaboost": "AdaBoost",
    "logitboost_simple_logistic": "Simple Logistic (LogitBoost)",
    "deep_fnn": "Deep FNN",
}


@dataclass(frozen=True)
class LearnerSpec:
    family: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def resolved(self) -> dict:
        """Defaults overlaid with the given hyperparameters, validated."""
        if self.family not in _REGISTRY:
            raise ContractError(f"unknown learner family {self.family!r}; expected one of {FAMILIES}")
        _, defaults, _, _ = _REGISTRY[self.family]
        unknown = set(self.hyperparameters) - set(defaults)
        if unknown:
            raise ContractError(f"{self.family}: unknown hyperparameters {sorted(unknown)}")
        params = {**defaults, **self.hyperparameters}
        for key, value in params.items():
            if isinstance(value, (int, float)) and not isinstance(value, bool) and value < 0:
                raise ContractError(f"{self.family}: {key} must be nonnegative, got {value}")
        return params

    def make_estimator(self):
        cls, _, _, seeded = _REGISTRY[self.family]
        params = self.resolved()
        if seeded:
            params["seed"] = self.seed
        return cls(**params)

    @property
    def standardize(self) -> bool:
        return _REGISTRY[self.family][2]


@dataclass
class Model:
    spec: LearnerSpec
    feature_names: list
    standardizer: Standardizer
    estimator: Any

    def predict_proba(self, rows) -> np.ndarray:
        """Class probabilities, shape (n, 2); column 1 is the positive class."""
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        if rows.shape[1] != len(self.feature_names):
            raise ContractError(f"model expects {len(self.feature_names)} features, got {rows.shape[1]}")
        return self.estimator.predict_proba(self.standardizer.apply(rows))

    def predict(self, rows, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(rows)[:, 1] >= threshold).astype(int)

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "family": self.spec.family,
            "hyperparameters": self.spec.resolved(),
            "seed": self.spec.seed,
            "feature_names": list(self.feature_names),
            "standardizer": self.standardizer.to_dict(),
            "params": self.estimator.get_params(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Model":
        if d.get("format") != MODEL_FORMAT:
            raise ContractError(f"unsupported model format {d.get('format')!r}")
        spec = LearnerSpec(d["family"], dict(d["hyperparameters"]), d["seed"])
        estimator = spec.make_estimator()
        estimator.set_params(d["params"])
        return cls(spec, list(d["feature_names"]), Standardizer.from_dict(d["standardizer"]), estimator)


def fit_estimator(spec: LearnerSpec, X, y, discrete=None):
    return spec.make_estimator().fit(X, y, discrete=discrete)


def train(spec: LearnerSpec, data: FeatureMatrix) -> Model:
    """Fit imputation/scaling on ``data`` and train the family's estimator on it."""
    if len(data) == 0:
        raise ContractError("cannot train on an empty dataset")
    spec.resolved()
    numeric = data.schema.numeric_mask()
    standardizer = fit_standardizer(data.rows, scale=numeric if spec.standardize else False)
    X = standardizer.apply(data.rows)
    estimator = fit_estimator(spec, X, data.labels, discrete=~numeric)
    return Model(spec, data.schema.names, standardizer, estimator)


def predict_proba(model: Model, rows) -> np.ndarray:
    """Probability of the positive class for each row."""
    return model.predict_proba(rows)[:, 1]


def save_model(model: Model, path, extra: dict | None = None) -> None:
    """Write the model as JSON; ``extra`` keys (e.g. a config hash) are stored alongside."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({**(extra or {}), **model.to_dict()}, fh)
        fh.write("\n")


def load_model(path) -> Model:
    with open(path, encoding="utf-8") as fh:
        return Model.from_dict(json.load(fh))


__all__ = [
    "AdaBoost", "DecisionStump", "DecisionTree", "DeepFNN", "FAMILIES", "FnnParams", "LearnerSpec",
    "LogisticRegression", "LogitBoost", "Model", "NaiveBayes", "OneR", "RandomForest", "SGDLogistic",
    "fit_estimator", "fnn_backprop", "fnn_forward", "fnn_loss", "gradient_logistic", "load_model",
    "logistic_loss", "predict_proba", "save_model", "sgd_step", "sigmoid", "train",
]
