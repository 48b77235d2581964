"""Domain records shared by every pipeline stage.

The unit of prediction is one hospital admission (``AdmissionCase``). A patient
with several qualifying admissions contributes several cases, each labelled
independently from its own admission time.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field
from datetime import date, datetime
from typing import Mapping, Optional

ONE_YEAR_DAYS = 365
AGE_MASK_OFFSET = 211
AGE_MASK_THRESHOLD = 200.0
DAYS_PER_YEAR = 365.25


class DataIntegrityError(ValueError):
    """Raised when input records contradict each other."""


class ContractError(ValueError):
    """Raised when a caller violates an operation's input contract."""


class DegenerateDataError(ValueError):
    """Training data cannot support the requested model (e.g. a single class)."""


class Label(enum.IntEnum):
    NEGATIVE = 0
    POSITIVE = 1


@dataclass(frozen=True)
class PatientRecord:
    patient_id: str
    gender: str
    date_of_birth: datetime
    date_of_death: Optional[datetime] = None

    def __post_init__(self):
        if self.gender not in ("M", "F"):
            raise DataIntegrityError(f"patient {self.patient_id}: gender must be M or F, got {self.gender!r}")
        if self.date_of_death is not None and self.date_of_death < self.date_of_birth:
            raise DataIntegrityError(f"patient {self.patient_id}: death precedes birth")


@dataclass(frozen=True)
class AdmissionRecord:
    admission_id: str
    patient_id: str
    admit_time: datetime
    discharge_time: datetime
    discharge_location: str = ""
    er_initial_ami_flag: bool = False
    religion: str = ""
    ethnicity: str = ""
    marital_status: str = ""

    def __post_init__(self):
        if self.discharge_time < self.admit_time:
            raise DataIntegrityError(f"admission {self.admission_id}: discharge precedes admission")

    @property
    def admission_month(self) -> int:
        return self.admit_time.month

    @property
    def total_days(self) -> float:
        return (self.discharge_time - self.admit_time).total_seconds() / 86400.0


@dataclass(frozen=True)
class AdmissionCase:
    admission: AdmissionRecord
    patient: PatientRecord
    age_at_admission: float
    diagnoses: frozenset = frozenset()
    treatments: frozenset = frozenset()
    comorbidity_groups: frozenset = frozenset()
    event_means: Mapping[str, float] = field(default_factory=dict)
    label: Label = Label.NEGATIVE

    @property
    def admission_id(self) -> str:
        return self.admission.admission_id


def _as_date(value) -> date:
    return value.date() if isinstance(value, datetime) else value


def assign_label(admit_time, date_of_death=None, admission_id: str | None = None) -> Label:
    """Positive iff the patient died no more than 365 days after admission.

    Both timestamps are truncated to the calendar day before comparison.
    """
    if date_of_death is None:
        return Label.NEGATIVE
    days = (_as_date(date_of_death) - _as_date(admit_time)).days
    if days < 0:
        where = f"admission {admission_id}" if admission_id is not None else "admission"
        raise DataIntegrityError(f"{where}: date of death {date_of_death} precedes admission {admit_time}")
    return Label.POSITIVE if days <= ONE_YEAR_DAYS else Label.NEGATIVE


def restore_masked_age(recorded_age: float, threshold: float = AGE_MASK_THRESHOLD) -> float:
    """Undo the age shift applied to very old patients in de-identified records."""
    if recorded_age < 0:
        raise ValueError(f"recorded age must be nonnegative, got {recorded_age}")
    if recorded_age > threshold:
        return recorded_age - AGE_MASK_OFFSET
    return recorded_age


def recorded_age(date_of_birth: datetime, at: datetime) -> float:
    """Age in years as stored in the source tables (possibly masked)."""
    return (_as_date(at) - _as_date(date_of_birth)).days / DAYS_PER_YEAR


def config_hash(obj) -> str:
    """Short digest of a JSON-serialisable configuration (key order ignored)."""
    canonical = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
