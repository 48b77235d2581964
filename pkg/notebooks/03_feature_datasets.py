"""
Feature datasets
================

Five feature groups and their union. Missing lab values stay NaN until a
training fold imputes them.
"""

# %%
import tempfile

import numpy as np

from amimort.features import DATASET_KINDS, build_dataset, encode_categorical, fit_standardizer
from amimort.ingest import load_tables, prepare_cohort
from amimort.synthgen import SynthConfig, generate

d = tempfile.mkdtemp()
generate(SynthConfig(n_admissions=500, seed=3), d)
cases, _ = prepare_cohort(load_tables(d))

# %%
datasets = {kind: build_dataset(cases, kind) for kind in DATASET_KINDS}
for kind, fm in datasets.items():
    print(f"{kind:13s} {len(fm.schema):4d} columns, {fm.missing_mask.mean():.1%} missing")

# %%
demo = datasets["demographics"].schema
print(demo.levels("ethnicity"))
print(encode_categorical(demo, "ethnicity", "MARTIAN"))   # unseen level -> all zeros

# %%
lab = datasets["lab_chart"]
half = len(lab) // 2
st = fit_standardizer(lab.rows[:half])          # statistics from the first half only
Z = st.apply(lab.rows[half:])
print(np.round(np.nanmean(Z, axis=0)[:5], 3))
