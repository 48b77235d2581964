"""Feature datasets built from cohort cases.

Five feature groups (admission, demographics, treatment, diagnostic, lab_chart)
plus their concatenation (combined). Categoricals are one-hot encoded with the
levels seen at schema-fit time; missing numeric values stay NaN in the matrix
and are imputed per training fold by :class:`Standardizer`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import vocab
from .core import AdmissionCase, ContractError

GROUPS = ("admission", "demographics", "treatment", "diagnostic", "lab_chart")
DATASET_KINDS = GROUPS + ("combined",)

NUMERIC, ONEHOT, BINARY = "numeric", "onehot", "binary"

# (group, field, encoding) for the scalar fields of each group
_CASE_FIELDS = {
    "admission": (("total_days", NUMERIC), ("admission_month", ONEHOT),
                  ("discharge_location", ONEHOT), ("er_initial_ami", BINARY)),
    "demographics": (("age", NUMERIC), ("gender", ONEHOT), ("religion", ONEHOT),
                     ("ethnicity", ONEHOT), ("marital_status", ONEHOT)),
}
TREATMENT_FIELDS = tuple(vocab.slugify(t) for t in vocab.TREATMENTS)
DIAGNOSTIC_FIELDS = tuple(vocab.slugify(g) for g in vocab.COMORBIDITY_GROUPS)
LAB_CHART_FIELDS = tuple(spec.name for spec in vocab.ITEMS)


class FeatureDescriptor(NamedTuple):
    name: str
    group: str
    encoding: str
    field: str
    level: str | None = None


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise ContractError("feature names must be unique")

    def __len__(self):
        return len(self.features)

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    def levels(self, field: str) -> list[str]:
        return [f.level for f in self.features if f.field == field and f.encoding == ONEHOT]

    def group_columns(self, group: str) -> np.ndarray:
        return np.array([i for i, f in enumerate(self.features) if f.group == group], dtype=int)

    def numeric_mask(self) -> np.ndarray:
        return np.array([f.encoding == NUMERIC for f in self.features], dtype=bool)

    def discrete_mask(self) -> np.ndarray:
        return ~self.numeric_mask()


@dataclass
class FeatureMatrix:
    schema: FeatureSchema
    rows: np.ndarray
    labels: np.ndarray
    missing_mask: np.ndarray
    kind: str = "combined"

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        self.missing_mask = np.asarray(self.missing_mask, dtype=bool)
        n, p = self.rows.shape
        if self.labels.shape != (n,):
            raise ContractError(f"{len(self.labels)} labels for {n} rows")
        if p != len(self.schema) or self.missing_mask.shape != (n, p):
            raise ContractError("row width, schema and missing mask disagree")

    def __len__(self):
        return self.rows.shape[0]

    def subset(self, index) -> "FeatureMatrix":
        return FeatureMatrix(self.schema, self.rows[index], self.labels[index], self.missing_mask[index], self.kind)


def _scalar_value(case: AdmissionCase, field: str):
    adm = case.admission
    if field == "total_days":
        return adm.total_days
    if field == "admission_month":
        return f"{adm.admission_month:02d}"
    if field == "discharge_location":
        return adm.discharge_location
    if field == "er_initial_ami":
        return float(adm.er_initial_ami_flag)
    if field == "age":
        return case.age_at_admission
    if field == "gender":
        return case.patient.gender
    return getattr(adm, field)


def _level(value: str) -> str:
    return value.strip() or "UNKNOWN"


def _groups_for(kind: str) -> tuple:
    if kind not in DATASET_KINDS:
        raise ContractError(f"unknown dataset kind {kind!r}; expected one of {DATASET_KINDS}")
    return GROUPS if kind == "combined" else (kind,)


def fit_schema(cases: Sequence[AdmissionCase], kind: str) -> FeatureSchema:
    """Column layout for ``kind``; one-hot levels are those observed in ``cases``."""
    features = []
    for group in _groups_for(kind):
        if group in _CASE_FIELDS:
            for field, enc in _CASE_FIELDS[group]:
                if enc == ONEHOT:
                    for level in sorted({_level(_scalar_value(c, field)) for c in cases}):
                        features.append(FeatureDescriptor(f"{group}.{field}={level}", group, ONEHOT, field, level))
                else:
                    features.append(FeatureDescriptor(f"{group}.{field}", group, enc, field))
        elif group == "treatment":
            features += [FeatureDescriptor(f"treatment.{f}", group, BINARY, f) for f in TREATMENT_FIELDS]
        elif group == "diagnostic":
            features += [FeatureDescriptor(f"diagnostic.{f}", group, BINARY, f) for f in DIAGNOSTIC_FIELDS]
        else:
            features += [FeatureDescriptor(f"lab_chart.{f}", group, NUMERIC, f) for f in LAB_CHART_FIELDS]
    return FeatureSchema(tuple(features))


def encode_categorical(schema: FeatureSchema, field: str, value: str) -> np.ndarray:
    """One-hot vector over the schema's levels for ``field``; unseen levels give all zeros."""
    levels = schema.levels(field)
    if not levels:
        raise ContractError(f"{field!r} is not a categorical field of this schema")
    out = np.zeros(len(levels))
    value = _level(value)
    if value in levels:
        out[levels.index(value)] = 1.0
    return out


def _encode_case(case: AdmissionCase, schema: FeatureSchema) -> np.ndarray:
    treatments = {vocab.slugify(t) for t in case.treatments}
    comorbidities = {vocab.slugify(g) for g in case.comorbidity_groups}
    row = np.empty(len(schema))
    for i, f in enumerate(schema.features):
        if f.group == "treatment":
            row[i] = float(f.field in treatments)
        elif f.group == "diagnostic":
            row[i] = float(f.field in comorbidities)
        elif f.group == "lab_chart":
            row[i] = case.event_means.get(f.field, np.nan)
        elif f.encoding == ONEHOT:
            row[i] = float(_level(_scalar_value(case, f.field)) == f.level)
        else:
            row[i] = _scalar_value(case, f.field)
    return row


def build_dataset(cases: Sequence[AdmissionCase], kind: str, schema: FeatureSchema | None = None) -> FeatureMatrix:
    if not cases:
        raise ContractError("cannot build a dataset from zero cases")
    _groups_for(kind)
    if schema is None:
        schema = fit_schema(cases, kind)
    rows = np.vstack([_encode_case(c, schema) for c in cases])
    labels = np.array([int(c.label) for c in cases])
    return FeatureMatrix(schema, rows, labels, np.isnan(rows), kind)


@dataclass
class Standardizer:
    """Train-fold imputation constants and scaling statistics."""

    means: np.ndarray
    sds: np.ndarray
    scale: np.ndarray  # bool per column; unscaled columns are only imputed

    def apply(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != self.means.shape[0]:
            raise ContractError(f"expected {self.means.shape[0]} columns, got shape {rows.shape}")
        out = np.where(np.isnan(rows), self.means, rows)
        out[:, self.scale] = (out[:, self.scale] - self.means[self.scale]) / self.sds[self.scale]
        return out

    def to_dict(self) -> dict:
        return {"means": self.means.tolist(), "sds": self.sds.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(np.array(d["means"], dtype=float), np.array(d["sds"], dtype=float), np.array(d["scale"], dtype=bool))


def fit_standardizer(train_rows: np.ndarray, scale=True) -> Standardizer:
    """Column means (NaN-aware) and population standard deviations of the training rows.

    ``scale`` is a bool or a per-column mask. Columns with zero variance keep
    unit scale so they are only centred; all-missing columns impute to 0.
    """
    rows = np.asarray(train_rows, dtype=float)
    observed = ~np.isnan(rows)
    counts = observed.sum(axis=0)
    sums = np.where(observed, rows, 0.0).sum(axis=0)
    means = np.divide(sums, counts, out=np.zeros(rows.shape[1]), where=counts > 0)
    dev = np.where(observed, rows - means, 0.0)
    var = np.divide((dev ** 2).sum(axis=0), counts, out=np.zeros(rows.shape[1]), where=counts > 0)
    sds = np.sqrt(var)
    sds[sds == 0] = 1.0
    scale_mask = np.broadcast_to(np.asarray(scale, dtype=bool), (rows.shape[1],)).copy()
    return Standardizer(means, sds, scale_mask)


def apply_standardizer(standardizer: Standardizer, rows: np.ndarray) -> np.ndarray:
    return standardizer.apply(rows)


def write_feature_matrix(fm: FeatureMatrix, path, header_lines: Sequence[str] = ()) -> None:
    """Delimited export: header = column names, last column = label, blank = missing."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fm.schema.names + ["label"])
        for row, label in zip(fm.rows, fm.labels):
            writer.writerow(["" if np.isnan(v) else repr(float(v)) for v in row] + [int(label)])


def _descriptor_from_name(name: str) -> FeatureDescriptor:
    group, _, rest = name.partition(".")
    if group not in GROUPS or not rest:
        raise ContractError(f"unrecognised feature column {name!r}")
    if "=" in rest:
        field, level = rest.split("=", 1)
        return FeatureDescriptor(name, group, ONEHOT, field, level)
    binary = group in ("treatment", "diagnostic") or rest == "er_initial_ami"
    return FeatureDescriptor(name, group, BINARY if binary else NUMERIC, rest)


def read_feature_matrix(path) -> FeatureMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        lines = (line for line in fh if not line.startswith("#"))
        reader = csv.reader(lines)
        header = next(reader)
        if not header or header[-1] != "label":
            raise ContractError(f"{path}: last column must be 'label'")
        schema = FeatureSchema(tuple(_descriptor_from_name(n) for n in header[:-1]))
        rows, labels = [], []
        for rec in reader:
            rows.append([float(v) if v != "" else np.nan for v in rec[:-1]])
            labels.append(int(rec[-1]))
    rows = np.array(rows, dtype=float).reshape(len(labels), len(schema))
    groups = {f.group for f in schema.features}
    kind = groups.pop() if len(groups) == 1 else "combined"
    return FeatureMatrix(schema, rows, np.array(labels), np.isnan(rows), kind)
