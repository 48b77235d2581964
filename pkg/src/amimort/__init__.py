"""One-year mortality prediction for acute myocardial infarction (AMI) and
post myocardial infarction syndrome (PMS) admissions.

Pipeline: :mod:`ingest` (tables -> cohort cases) -> :mod:`features` (six
datasets) -> :mod:`learners` / :mod:`evaluate` (cross-validated models),
with :mod:`cohortstats` for the subgroup chi-square table and
:mod:`synthgen` for schema-compatible synthetic inputs.
"""

__version__ = "0.1.0"

from .cohortstats import chi_square_2x2, chisq_sf, summary_table
from .core import (
    AdmissionCase,
    AdmissionRecord,
    ContractError,
    DataIntegrityError,
    DegenerateDataError,
    Label,
    PatientRecord,
    assign_label,
    restore_masked_age,
)
from .evaluate import auc, confusion_metrics, cross_validate, roc_curve, stratified_folds
from .features import DATASET_KINDS, build_dataset, encode_categorical, fit_standardizer
from .ingest import load_tables, prepare_cohort, select_cohort
from .learners import FAMILIES, LearnerSpec, Model, load_model, predict_proba, save_model, train
from .preprocess import clean_events, iqr_filter, remove_outliers
from .synthgen import SynthConfig, generate

__all__ = [
    "AdmissionCase", "AdmissionRecord", "ContractError", "DATASET_KINDS", "DataIntegrityError",
    "DegenerateDataError", "FAMILIES", "Label", "LearnerSpec", "Model", "PatientRecord", "SynthConfig",
    "assign_label", "auc", "build_dataset", "chi_square_2x2", "chisq_sf", "clean_events", "confusion_metrics",
    "cross_validate", "encode_categorical", "fit_standardizer", "generate", "iqr_filter", "load_model",
    "load_tables", "predict_proba", "prepare_cohort", "remove_outliers", "restore_masked_age", "roc_curve",
    "save_model", "select_cohort", "stratified_folds", "summary_table", "train",
]
