"""Relational table ingestion and AMI/PMS cohort selection.

Seven comma-separated tables with a header line are read from a directory:

============  ==========================================================================
file          required columns
============  ==========================================================================
patients      patient_id, gender, date_of_birth, date_of_death
admissions    admission_id, patient_id, admit_time, discharge_time, discharge_location,
              religion, ethnicity, marital_status, initial_diagnosis_text
diagnoses     admission_id, icd9_code
drg_codes     admission_id, drg_code, description
lab_events    admission_id, item_id, value, unit, timestamp
chart_events  admission_id, item_id, value, unit, timestamp
lab_items     item_id, label, category
============  ==========================================================================

Timestamps are ISO-8601; an empty ``date_of_death`` means the patient is not
known to have died.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

from . import vocab
from .core import (
    AdmissionCase,
    AdmissionRecord,
    DataIntegrityError,
    Label,
    PatientRecord,
    assign_label,
    recorded_age,
    restore_masked_age,
)
from .preprocess import CleanConfig, CleaningReport, EventRow, PlausibilityRange, preprocess_events

logger = logging.getLogger(__name__)

ICD9_LOW, ICD9_HIGH = 410.0, 411.0

TABLE_COLUMNS = {
    "patients": ("patient_id", "gender", "date_of_birth", "date_of_death"),
    "admissions": ("admission_id", "patient_id", "admit_time", "discharge_time", "discharge_location",
                   "religion", "ethnicity", "marital_status", "initial_diagnosis_text"),
    "diagnoses": ("admission_id", "icd9_code"),
    "drg_codes": ("admission_id", "drg_code", "description"),
    "lab_events": ("admission_id", "item_id", "value", "unit", "timestamp"),
    "chart_events": ("admission_id", "item_id", "value", "unit", "timestamp"),
    "lab_items": ("item_id", "label", "category"),
}
TABLES = tuple(TABLE_COLUMNS)


class SchemaError(ValueError):
    """A table file does not follow the documented column schema."""


class DiagnosisRow(NamedTuple):
    admission_id: str
    icd9_code: str


class DrgRow(NamedTuple):
    admission_id: str
    drg_code: str
    description: str


class ItemRow(NamedTuple):
    item_id: str
    label: str
    category: str


@dataclass
class RawTables:
    patients: list = field(default_factory=list)
    admissions: list = field(default_factory=list)
    diagnoses: list = field(default_factory=list)
    drg_codes: list = field(default_factory=list)
    lab_events: list = field(default_factory=list)
    chart_events: list = field(default_factory=list)
    lab_items: list = field(default_factory=list)

    def row_counts(self) -> dict[str, int]:
        return {name: len(getattr(self, name)) for name in TABLES}

    def validate(self) -> None:
        """Check referential integrity; raise on the first dangling key."""
        patient_ids = {p.patient_id for p in self.patients}
        for i, adm in enumerate(self.admissions):
            if adm.patient_id not in patient_ids:
                raise DataIntegrityError(
                    f"admissions row {i + 1}: unknown patient_id {adm.patient_id!r}")
        admission_ids = {a.admission_id for a in self.admissions}
        for name in ("diagnoses", "drg_codes", "lab_events", "chart_events"):
            for i, row in enumerate(getattr(self, name)):
                if row.admission_id not in admission_ids:
                    raise DataIntegrityError(
                        f"{name} row {i + 1}: unknown admission_id {row.admission_id!r}")
        item_ids = {it.item_id for it in self.lab_items}
        for name in ("lab_events", "chart_events"):
            for i, row in enumerate(getattr(self, name)):
                if row.item_id not in item_ids:
                    raise DataIntegrityError(f"{name} row {i + 1}: unknown item_id {row.item_id!r}")


def er_initial_ami(text: str) -> bool:
    """Whether the free-text ER diagnosis names AMI or rule-out AMI."""
    t = text.lower()
    if any(p in t for p in vocab.AMI_TEXT_PATTERNS):
        return True
    return any(m in t for m in vocab.RULE_OUT_MARKERS) and re.search(r"\bmi\b", t) is not None


def _timestamp(raw: str) -> datetime:
    return datetime.fromisoformat(raw.strip())


def _parse_patient(r):
    dod = r["date_of_death"].strip()
    return PatientRecord(r["patient_id"], r["gender"].strip().upper(), _timestamp(r["date_of_birth"]),
                         _timestamp(dod) if dod else None)


def _parse_admission(r):
    return AdmissionRecord(
        admission_id=r["admission_id"], patient_id=r["patient_id"],
        admit_time=_timestamp(r["admit_time"]), discharge_time=_timestamp(r["discharge_time"]),
        discharge_location=r["discharge_location"], er_initial_ami_flag=er_initial_ami(r["initial_diagnosis_text"]),
        religion=r["religion"], ethnicity=r["ethnicity"], marital_status=r["marital_status"],
    )


def _parse_diagnosis(r):
    code = r["icd9_code"].strip()
    if not code:
        raise ValueError("empty icd9_code")
    return DiagnosisRow(r["admission_id"], code)


def _parse_drg(r):
    return DrgRow(r["admission_id"], r["drg_code"].strip(), r["description"])


def _event_parser(kind):
    def parse(r):
        value = float(r["value"])
        if value != value or value in (float("inf"), float("-inf")):
            raise ValueError(f"non-finite value {r['value']!r}")
        return EventRow(r["admission_id"], r["item_id"], value, r["unit"], _timestamp(r["timestamp"]), kind)
    return parse


def _parse_item(r):
    category = r["category"].strip().lower()
    if category not in ("lab", "chart"):
        raise ValueError(f"category must be lab or chart, got {r['category']!r}")
    return ItemRow(r["item_id"], r["label"], category)


_PARSERS = {
    "patients": _parse_patient,
    "admissions": _parse_admission,
    "diagnoses": _parse_diagnosis,
    "drg_codes": _parse_drg,
    "lab_events": _event_parser("lab"),
    "chart_events": _event_parser("chart"),
    "lab_items": _parse_item,
}


def read_table(name: str, path) -> list:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(TABLE_COLUMNS[name]) - set(reader.fieldnames or ())
        if missing:
            raise SchemaError(f"{path}: missing columns {sorted(missing)}")
        parse = _PARSERS[name]
        rows = []
        for row in reader:
            if None in row or any(v is None for v in row.values()):
                raise SchemaError(f"{path}:{reader.line_num}: wrong number of fields")
            try:
                rows.append(parse(row))
            except (ValueError, KeyError) as exc:
                if isinstance(exc, DataIntegrityError):
                    raise DataIntegrityError(f"{path}:{reader.line_num}: {exc}") from exc
                raise SchemaError(f"{path}:{reader.line_num}: {exc}") from exc
    return rows


def table_paths(directory) -> dict[str, Path]:
    directory = Path(directory)
    return {name: directory / f"{name}.csv" for name in TABLES}


def load_tables(paths) -> RawTables:
    """Load all seven tables. ``paths`` is a directory or a mapping table name -> file."""
    if not isinstance(paths, Mapping):
        paths = table_paths(paths)
    unknown = set(paths) - set(TABLES)
    if unknown:
        raise SchemaError(f"unknown tables {sorted(unknown)}")
    for name in TABLES:
        if name not in paths:
            raise SchemaError(f"no path given for table {name!r}")
        if not Path(paths[name]).is_file():
            raise FileNotFoundError(f"missing table file {paths[name]}")
    tables = RawTables(**{name: read_table(name, paths[name]) for name in TABLES})
    tables.validate()
    logger.info("loaded tables: %s", tables.row_counts())
    return tables


def icd9_value(code: str) -> float | None:
    """Numeric value of a diagnosis code ("41071" and "410.71" both give 410.71).

    Supplementary V/E codes have no numeric value.
    """
    code = code.strip().upper()
    if not code or not code[0].isdigit():
        return None
    digits = code.replace(".", "")
    if not digits.isdigit():
        return None
    return float(f"{digits[:3]}.{digits[3:] or '0'}")


def normalize_icd9(code: str) -> str:
    code = code.strip().upper()
    if "." in code or len(code) <= 3:
        return code
    head = 4 if code[0] == "E" else 3
    return f"{code[:head]}.{code[head:]}"


def in_cohort_range(code: str) -> bool:
    value = icd9_value(code)
    return value is not None and ICD9_LOW <= value <= ICD9_HIGH


def dedup_codes(rows: Iterable[tuple]) -> list[tuple]:
    """Drop exact repeated (admission, code) pairs, keeping first occurrences in order."""
    seen = set()
    out = []
    for row in rows:
        key = tuple(row)
        if key not in seen:
            seen.add(key)
            out.append(row)
    return out


def default_clean_config(items: Sequence[ItemRow], remove_outliers: bool = False,
                         ranges: Mapping[str, PlausibilityRange] | None = None) -> CleanConfig:
    """Plausibility bounds from the vocabulary, keyed by this dataset's item ids."""
    bounds = {}
    systolic = diastolic = None
    for it in items:
        spec = vocab.ITEM_BY_LABEL.get(it.label.lower())
        if spec is None:
            continue
        bounds[it.item_id] = PlausibilityRange(it.item_id, spec.low, spec.high)
        if spec.name == vocab.SYSTOLIC_BP:
            systolic = it.item_id
        elif spec.name == vocab.DIASTOLIC_BP:
            diastolic = it.item_id
    if ranges:
        bounds.update(ranges)
    return CleanConfig(bounds, remove_outliers=remove_outliers, systolic_item=systolic, diastolic_item=diastolic)


def item_feature_names(items: Sequence[ItemRow]) -> dict[str, str]:
    names = {}
    for it in items:
        spec = vocab.ITEM_BY_LABEL.get(it.label.lower())
        names[it.item_id] = spec.name if spec is not None else vocab.slugify(it.label)
    return names


def prepare_cohort(tables: RawTables, config: CleanConfig | None = None
                   ) -> tuple[list[AdmissionCase], CleaningReport]:
    """Select qualifying admissions and assemble one case per admission.

    Events are restricted to cohort admissions before cleaning, so any outlier
    fences are computed over the cohort.
    """
    if config is None:
        config = default_clean_config(tables.lab_items)
    codes = dedup_codes((d.admission_id, normalize_icd9(d.icd9_code)) for d in tables.diagnoses)
    by_admission: dict[str, set] = {}
    for adm_id, code in codes:
        by_admission.setdefault(adm_id, set()).add(code)
    cohort_ids = {a for a, cs in by_admission.items() if any(in_cohort_range(c) for c in cs)}

    treatments: dict[str, set] = {}
    comorbidities: dict[str, set] = {}
    for row in tables.drg_codes:
        if row.admission_id not in cohort_ids:
            continue
        entry = vocab.DRG_CATALOG.get(row.drg_code)
        if entry is None:
            continue
        target = treatments if entry.kind == "treatment" else comorbidities
        target.setdefault(row.admission_id, set()).add(entry.category)

    report = CleaningReport()
    events = [ev for ev in tables.lab_events + tables.chart_events if ev.admission_id in cohort_ids]
    means = preprocess_events(events, config, report)
    names = item_feature_names(tables.lab_items)
    event_means: dict[str, dict[str, float]] = {}
    for (adm_id, item_id), value in means.items():
        event_means.setdefault(adm_id, {})[names[item_id]] = value

    patients = {p.patient_id: p for p in tables.patients}
    cases = []
    for adm in tables.admissions:
        if adm.admission_id not in cohort_ids:
            continue
        patient = patients[adm.patient_id]
        age = restore_masked_age(recorded_age(patient.date_of_birth, adm.admit_time))
        cases.append(AdmissionCase(
            admission=adm,
            patient=patient,
            age_at_admission=age,
            diagnoses=frozenset(by_admission[adm.admission_id]),
            treatments=frozenset(treatments.get(adm.admission_id, ())),
            comorbidity_groups=frozenset(comorbidities.get(adm.admission_id, ())),
            event_means=dict(sorted(event_means.get(adm.admission_id, {}).items())),
            label=assign_label(adm.admit_time, patient.date_of_death, adm.admission_id),
        ))
    logger.info("cohort: %d of %d admissions qualify", len(cases), len(tables.admissions))
    return cases, report


def select_cohort(tables: RawTables, config: CleanConfig | None = None) -> list[AdmissionCase]:
    return prepare_cohort(tables, config)[0]


# -- cohort file -------------------------------------------------------------

def _case_to_dict(case: AdmissionCase) -> dict:
    a, p = case.admission, case.patient
    return {
        "admission": {
            "admission_id": a.admission_id, "patient_id": a.patient_id,
            "admit_time": a.admit_time.isoformat(), "discharge_time": a.discharge_time.isoformat(),
            "discharge_location": a.discharge_location, "er_initial_ami_flag": a.er_initial_ami_flag,
            "religion": a.religion, "ethnicity": a.ethnicity, "marital_status": a.marital_status,
        },
        "patient": {
            "patient_id": p.patient_id, "gender": p.gender, "date_of_birth": p.date_of_birth.isoformat(),
            "date_of_death": p.date_of_death.isoformat() if p.date_of_death else None,
        },
        "age_at_admission": case.age_at_admission,
        "diagnoses": sorted(case.diagnoses),
        "treatments": sorted(case.treatments),
        "comorbidity_groups": sorted(case.comorbidity_groups),
        "event_means": dict(case.event_means),
        "label": int(case.label),
    }


def _case_from_dict(d: dict) -> AdmissionCase:
    a, p = dict(d["admission"]), dict(d["patient"])
    a["admit_time"] = datetime.fromisoformat(a["admit_time"])
    a["discharge_time"] = datetime.fromisoformat(a["discharge_time"])
    p["date_of_birth"] = datetime.fromisoformat(p["date_of_birth"])
    p["date_of_death"] = datetime.fromisoformat(p["date_of_death"]) if p["date_of_death"] else None
    return AdmissionCase(
        admission=AdmissionRecord(**a), patient=PatientRecord(**p),
        age_at_admission=d["age_at_admission"], diagnoses=frozenset(d["diagnoses"]),
        treatments=frozenset(d["treatments"]), comorbidity_groups=frozenset(d["comorbidity_groups"]),
        event_means=d["event_means"], label=Label(d["label"]),
    )


def write_cohort(cases: Sequence[AdmissionCase], path, meta: Mapping | None = None) -> None:
    doc = {"format": "amimort-cohort/1", **(meta or {}), "cases": [_case_to_dict(c) for c in cases]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=None, sort_keys=False)
        fh.write("\n")


def read_cohort(path) -> list[AdmissionCase]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != "amimort-cohort/1":
        raise SchemaError(f"{path}: not a cohort file")
    return [_case_from_dict(d) for d in doc["cases"]]
