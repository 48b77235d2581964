"""
Cross-validation, AUC and the ROC figure
========================================
"""

# %%
import tempfile

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from amimort.evaluate import auc, cross_validate, stratified_folds
from amimort.features import build_dataset
from amimort.ingest import load_tables, prepare_cohort
from amimort.learners import LearnerSpec
from amimort.synthgen import bundled_config, generate

# %%
y = np.array([1, 1, 1, 0, 0, 0, 0, 0, 0, 0])
folds = stratified_folds(y, 5, seed=0)
print(folds.assignment, np.bincount(folds.assignment[y == 1], minlength=5))

# ties earn half credit
print(auc([0, 1, 0, 1], [0.2, 0.2, 0.1, 0.9]))

# %%
d = tempfile.mkdtemp()
cfg = bundled_config("high_signal")
generate(type(cfg).from_dict({**cfg.to_dict(), "n_admissions": 1200}), d)
cases, _ = prepare_cohort(load_tables(d))

reports = {}
for kind in ("admission", "lab_chart", "combined"):
    reports[kind] = cross_validate(LearnerSpec("naive_bayes"), build_dataset(cases, kind), k=10, seed=0)
    m = reports[kind].metrics
    print(f"{kind:10s} accuracy {m.accuracy:.3f} AUC {reports[kind].auc:.3f} recall {m.recall:.3f}")

# %%
fig, ax = plt.subplots(figsize=(5, 5))
for kind, rep in reports.items():
    ax.plot([p.fpr for p in rep.roc], [p.tpr for p in rep.roc], label=f"{kind} ({rep.auc:.3f})")
ax.plot([0, 1], [0, 1], ":", color="grey")
ax.legend(loc="lower right")
fig.savefig(f"{d}/roc.svg")
print("wrote", f"{d}/roc.svg")
