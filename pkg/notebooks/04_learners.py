"""
The classifier suite
====================

Every family trains through the same call and returns class probabilities.
"""

# %%
import numpy as np

from amimort.features import NUMERIC, FeatureDescriptor, FeatureMatrix, FeatureSchema
from amimort.learners import (FAMILIES, FnnParams, LearnerSpec, fnn_backprop, fnn_loss, gradient_logistic,
                              logistic_loss, train)

rng = np.random.default_rng(0)
X = rng.normal(size=(400, 4))
y = (X[:, 0] - 0.5 * X[:, 1] + 0.5 * rng.normal(size=400) > 0).astype(int)
schema = FeatureSchema(tuple(FeatureDescriptor(f"lab_chart.x{j}", "lab_chart", NUMERIC, f"x{j}") for j in range(4)))
data = FeatureMatrix(schema, X, y, np.zeros_like(X, bool), "lab_chart")

# %%
quick = {"random_forest": {"n_trees": 20}, "deep_fnn": {"epochs": 30}}
for family in FAMILIES:
    model = train(LearnerSpec(family, quick.get(family, {}), seed=0), data)
    acc = (model.predict(X) == y).mean()
    print(f"{family:28s} training accuracy {acc:.3f}")

# %%
# analytic gradients against central differences
w = rng.normal(size=4)
h = 1e-6
fd = np.array([(logistic_loss(w + h * e, X, y) - logistic_loss(w - h * e, X, y)) / (2 * h) for e in np.eye(4)])
print(np.max(np.abs(fd - gradient_logistic(w, X, y))))

# small random offsets on every parameter so the check is not run at a symmetric point
params = FnnParams.init(1, rng).map(lambda k, v: v + 0.1 * rng.normal(size=v.shape))
Xs, ys = rng.normal(size=(20, 1)), rng.integers(0, 2, 20)
grads = fnn_backprop(params, Xs, ys)
worst = 0.0
for name, value in params.as_dict().items():
    for idx in np.ndindex(value.shape):
        step = np.zeros_like(value)
        step[idx] = h
        up = params.map(lambda k, v: v + step if k == name else v)
        down = params.map(lambda k, v: v - step if k == name else v)
        fd = (fnn_loss(up, Xs, ys) - fnn_loss(down, Xs, ys)) / (2 * h)
        worst = max(worst, abs(fd - getattr(grads, name)[idx]))
print("16 parameters, largest gradient discrepancy", worst)
