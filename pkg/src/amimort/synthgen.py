"""Synthetic cohorts in the ingest table schema.

Labels come from a planted model: each feature group contributes a latent
score (standardised over the cohort), the scores are weighted by the group's
``signal`` and pushed through a logistic link, and the Bernoulli draws are
adjusted to hit the requested positive count exactly. Timelines are then laid
out so that the death dates reproduce those labels.

The tables also carry the defects the cleaning stage is meant to handle:
masked ages, duplicate diagnosis rows, zero and implausible lab values and
reversed blood-pressure pairs.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta
from importlib import resources
from pathlib import Path

import numpy as np

from . import vocab
from .core import AGE_MASK_OFFSET, DAYS_PER_YEAR, ONE_YEAR_DAYS, ContractError, config_hash
from .features import GROUPS
from .ingest import TABLE_COLUMNS, TABLES

SYNTH_FORMAT = "amimort-synth/1"
EPOCH = datetime(2150, 1, 1)
EPOCH_SPAN_DAYS = 3650

LAB_ITEM_BASE = 50800
CHART_ITEM_BASE = 220000

# per item: (centre, spread, scale, loading on the latent severity)
# "log" items are log-normal around the centre, "lin" items normal
ITEM_MODEL = {
    "cholesterol_ratio": (4.0, 0.25, "log", -0.1),
    "ldl_cholesterol": (100.0, 0.3, "log", -0.2),
    "hdl_cholesterol": (42.0, 0.25, "log", -0.1),
    "total_cholesterol": (170.0, 0.2, "log", -0.2),
    "triglycerides": (130.0, 0.5, "log", 0.0),
    "alt": (30.0, 0.6, "log", 0.3),
    "ast": (40.0, 0.7, "log", 0.4),
    "alkaline_phosphatase": (85.0, 0.35, "log", 0.3),
    "albumin": (3.5, 0.5, "lin", -0.6),
    "bilirubin": (0.7, 0.5, "log", 0.3),
    "bun": (20.0, 0.5, "log", 0.7),
    "creatinine": (1.1, 0.45, "log", 0.7),
    "ggt": (40.0, 0.7, "log", 0.2),
    "ldh": (250.0, 0.4, "log", 0.4),
    "total_protein": (6.5, 0.6, "lin", -0.3),
    "nt_probnp": (1500.0, 1.0, "log", 0.8),
    "crp": (10.0, 1.0, "log", 0.4),
    "creatine_kinase": (300.0, 0.9, "log", 0.3),
    "ck_mb": (15.0, 1.0, "log", 0.3),
    "cortisol": (15.0, 0.4, "log", 0.3),
    "homocysteine": (11.0, 0.3, "log", 0.3),
    "troponin_i": (2.0, 1.2, "log", 0.5),
    "troponin_t": (0.3, 1.2, "log", 0.5),
    "bicarbonate": (24.0, 3.0, "lin", -0.4),
    "calcium": (8.8, 0.5, "lin", -0.2),
    "chloride": (103.0, 4.0, "lin", 0.0),
    "potassium": (4.2, 0.5, "lin", 0.3),
    "sodium": (138.0, 4.0, "lin", -0.3),
    "glucose": (140.0, 0.35, "log", 0.3),
    "hematocrit": (36.0, 5.0, "lin", -0.5),
    "hemoglobin": (12.0, 1.8, "lin", -0.5),
    "wbc": (9.0, 0.35, "log", 0.4),
    "diastolic_bp": (68.0, 10.0, "lin", -0.3),
    "systolic_bp": (122.0, 18.0, "lin", -0.5),
    "heart_rate": (82.0, 14.0, "lin", 0.5),
    "respiratory_rate": (18.0, 4.0, "lin", 0.5),
}

DISCHARGE_LOCATIONS = {
    "HOME": -0.6, "HOME HEALTH CARE": 0.0, "SNF": 0.8,
    "REHAB/DISTINCT PART HOSP": 0.3, "LONG TERM CARE HOSPITAL": 1.2,
}
ETHNICITIES = {
    "WHITE": 0.70, "BLACK/AFRICAN AMERICAN": 0.08, "HISPANIC OR LATINO": 0.03,
    "ASIAN": 0.03, "OTHER": 0.04, "UNKNOWN/NOT SPECIFIED": 0.10, "UNABLE TO OBTAIN": 0.02,
}
RELIGIONS = ("CATHOLIC", "PROTESTANT QUAKER", "JEWISH", "NOT SPECIFIED", "UNOBTAINABLE", "OTHER")
MARITAL = ("MARRIED", "SINGLE", "WIDOWED", "DIVORCED", "")
ER_AMI_TEXT = ("ACUTE MYOCARDIAL INFARCTION", "MYOCARDIAL INFARCTION\\CATH", "R/O MI", "RULE OUT MI")
ER_OTHER_TEXT = ("CHEST PAIN", "CONGESTIVE HEART FAILURE", "SHORTNESS OF BREATH", "CORONARY ARTERY DISEASE")
AMI_CODES = ("41001", "41011", "41021", "41031", "41041", "41051", "41061", "41071", "41081", "41091", "411")
SECONDARY_CODES = ("4019", "25000", "4280", "41401", "42731", "2724", "5849", "V4581")
NON_COHORT_CODES = ("4111", "41401", "4280", "42731", "V4581")

TREATMENT_PREVALENCE = 0.06
COMORBIDITY_PREVALENCE = 0.25


@dataclass(frozen=True)
class SynthConfig:
    n_admissions: int = 5436
    positive_rate: float = 1629 / 5436
    signal: dict = field(default_factory=lambda: {
        "admission": 0.6, "demographics": 0.8, "treatment": 0.6, "diagnostic": 0.8, "lab_chart": 1.2})
    masked_age_fraction: float = 0.03
    missingness_rate: float = 0.3
    duplicate_diagnosis_rate: float = 0.05
    zero_lab_rate: float = 0.005
    implausible_rate: float = 0.003
    reversed_bp_rate: float = 0.02
    readmission_rate: float = 0.08
    non_cohort_admissions: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.n_admissions < 10:
            raise ContractError(f"n_admissions must be at least 10, got {self.n_admissions}")
        if not 0 < self.positive_rate < 1:
            raise ContractError(f"positive_rate must be in (0, 1), got {self.positive_rate}")
        for name in ("masked_age_fraction", "missingness_rate", "duplicate_diagnosis_rate", "zero_lab_rate",
                     "implausible_rate", "reversed_bp_rate", "readmission_rate"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise ContractError(f"{name} must be in [0, 1], got {value}")
        if self.non_cohort_admissions < 0:
            raise ContractError("non_cohort_admissions must be nonnegative")
        unknown = set(self.signal) - set(GROUPS)
        if unknown:
            raise ContractError(f"signal given for unknown groups {sorted(unknown)}")

    @property
    def n_positive(self) -> int:
        return int(round(self.n_admissions * self.positive_rate))

    def strength(self, group: str) -> float:
        return float(self.signal.get(group, 0.0))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ContractError(f"unknown synth config keys {sorted(unknown)}")
        return cls(**d)

    def hash(self) -> str:
        return config_hash(self.to_dict())


def load_config(path) -> SynthConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ContractError(f"{path}: not valid JSON ({exc})") from exc
    return SynthConfig.from_dict(doc)


def bundled_config(name: str) -> SynthConfig:
    """One of the configs shipped with the package: ``default`` or ``high_signal``."""
    ref = resources.files("amimort").joinpath("configs", f"{name}.json")
    if not ref.is_file():
        raise ContractError(f"no bundled config named {name!r}")
    return SynthConfig.from_dict(json.loads(ref.read_text(encoding="utf-8")))


# -- planted cohort ------------------------------------------------------------

def _standardise(x):
    sd = x.std()
    return (x - x.mean()) / sd if sd > 0 else np.zeros_like(x)


def _choice(rng, options, size, p=None):
    options = list(options)
    if p is not None:
        p = np.asarray(p, dtype=float)
        p = p / p.sum()
    return [options[i] for i in rng.choice(len(options), size=size, p=p)]


def _exact_count_labels(rng, score, n_pos):
    """Bernoulli(sigmoid(b + score)) with b matching the target rate, then
    flipping the least (or most) likely cases until exactly ``n_pos`` are positive."""
    reach = float(np.max(np.abs(score))) + 40.0
    lo, hi = -reach, reach
    target = n_pos / score.size
    for _ in range(200):
        mid = (lo + hi) / 2
        if np.mean(_sigmoid(mid + score)) < target:
            lo = mid
        else:
            hi = mid
    # rank by the logit, which unlike the probability never saturates
    logit = (lo + hi) / 2 + score
    y = (rng.random(score.size) < _sigmoid(logit)).astype(int)
    excess = int(y.sum()) - n_pos
    if excess > 0:
        pos = np.flatnonzero(y == 1)
        y[pos[np.argsort(logit[pos], kind="stable")[:excess]]] = 0
    elif excess < 0:
        neg = np.flatnonzero(y == 0)
        y[neg[np.argsort(-logit[neg], kind="stable")[:-excess]]] = 1
    return y


def _sigmoid(z):
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


@dataclass
class _Cohort:
    n: int
    age: np.ndarray
    gender: list
    ethnicity: list
    religion: list
    marital: list
    los_days: np.ndarray
    discharge_location: list
    er_ami: np.ndarray
    treatments: np.ndarray
    comorbidities: np.ndarray
    severity: np.ndarray
    masked: np.ndarray
    pair_of: np.ndarray  # index of the readmission partner, or -1
    labels: np.ndarray = None


def _draw_cohort(cfg: SynthConfig, rng) -> _Cohort:
    n = cfg.n_admissions
    n_pairs = int(round(n * cfg.readmission_rate / 2))
    pair_of = np.full(n, -1)
    partners = rng.permutation(n)[:2 * n_pairs].reshape(-1, 2)
    pair_of[partners[:, 0]] = partners[:, 1]
    pair_of[partners[:, 1]] = partners[:, 0]

    masked = rng.random(n) < cfg.masked_age_fraction
    age = np.clip(rng.normal(68.0, 13.0, n), 25.0, 88.5)
    age[masked] = rng.uniform(89.5, 99.0, masked.sum())
    gender = _choice(rng, "MF", n, [0.65, 0.35])
    ethnicity = _choice(rng, ETHNICITIES, n, list(ETHNICITIES.values()))
    religion = _choice(rng, RELIGIONS, n)
    marital = _choice(rng, MARITAL, n, [0.5, 0.2, 0.15, 0.1, 0.05])
    # the second admission of a pair shares the patient's attributes
    for a, b in partners:
        age[b], masked[b] = age[a], masked[a]
        gender[b], ethnicity[b], religion[b], marital[b] = gender[a], ethnicity[a], religion[a], marital[a]

    return _Cohort(
        n=n, age=age, gender=gender, ethnicity=ethnicity, religion=religion, marital=marital,
        los_days=np.clip(rng.lognormal(np.log(5.0), 0.6, n), 0.3, 60.0),
        discharge_location=_choice(rng, DISCHARGE_LOCATIONS, n, [0.45, 0.25, 0.15, 0.1, 0.05]),
        er_ami=rng.random(n) < 0.6,
        treatments=rng.random((n, len(vocab.TREATMENTS))) < TREATMENT_PREVALENCE,
        comorbidities=rng.random((n, len(vocab.COMORBIDITY_GROUPS))) < COMORBIDITY_PREVALENCE,
        severity=rng.normal(size=n),
        masked=masked,
        pair_of=pair_of,
    )


def _group_weights(rng, k):
    return rng.choice([-1.0, 1.0], size=k) * rng.uniform(0.5, 1.5, size=k)


def group_scores(c: _Cohort, weight_rng) -> dict[str, np.ndarray]:
    """Latent per-group scores, each standardised over the cohort."""
    loc = np.array([DISCHARGE_LOCATIONS[x] for x in c.discharge_location])
    female = np.array([g == "F" for g in c.gender], dtype=float)
    raw = {
        "admission": 0.8 * _standardise(np.log(c.los_days)) + loc + 0.4 * c.er_ami,
        "demographics": _standardise(c.age) + 0.3 * female,
        "treatment": c.treatments @ _group_weights(weight_rng, c.treatments.shape[1]),
        "diagnostic": c.comorbidities @ _group_weights(weight_rng, c.comorbidities.shape[1]),
        "lab_chart": c.severity,
    }
    return {g: _standardise(v) for g, v in raw.items()}


def plant_labels(cfg: SynthConfig, c: _Cohort, rng) -> np.ndarray:
    scores = group_scores(c, np.random.default_rng([cfg.seed, 1]))
    total = sum(cfg.strength(g) * scores[g] for g in GROUPS)
    return _exact_count_labels(rng, total, cfg.n_positive)


# -- tables ----------------------------------------------------------------------

def _ts(dt: datetime) -> str:
    return dt.strftime("%Y-%m-%d %H:%M:%S")


def _num(v: float) -> str:
    return format(float(v), ".6g")


def _item_value(spec_name, z):
    centre, spread, scale, _ = ITEM_MODEL[spec_name]
    if scale == "log":
        return centre * math.exp(spread * z)
    return centre + spread * z


def _item_ids():
    ids = {}
    for i, spec in enumerate(vocab.LAB_ITEMS):
        ids[spec.name] = str(LAB_ITEM_BASE + i)
    for i, spec in enumerate(vocab.CHART_ITEMS):
        ids[spec.name] = str(CHART_ITEM_BASE + i)
    return ids


class _Tables:
    def __init__(self):
        self.rows = {name: [] for name in TABLES}

    def add(self, name, *values):
        self.rows[name].append(values)


def _timeline(cfg: SynthConfig, c: _Cohort, rng):
    """Admission day offsets and per-patient death offsets consistent with the labels."""
    n = c.n
    admit_day = rng.integers(0, EPOCH_SPAN_DAYS, n)
    admit_hour = rng.integers(0, 24 * 60, n)
    death_day = np.full(n, -1)
    patient_of = np.arange(n)
    y = c.labels

    def death_after(i, earliest_day):
        lo = admit_day[i] + max(math.ceil(c.los_days[i]) + 1, earliest_day - admit_day[i])
        return int(rng.integers(lo, admit_day[i] + ONE_YEAR_DAYS + 1))

    done = np.zeros(n, dtype=bool)
    for i in range(n):
        j = c.pair_of[i]
        if done[i]:
            continue
        if j < 0:
            if y[i] == 1:
                death_day[i] = death_after(i, 0)
            elif rng.random() < 0.3:
                death_day[i] = admit_day[i] + int(rng.integers(ONE_YEAR_DAYS + 1, 3000))
            done[i] = True
            continue
        # readmission pair: a positive admission can never precede a negative one
        first, second = (i, j) if y[i] <= y[j] else (j, i)
        patient_of[second] = first
        if y[first] == y[second] == 1:
            admit_day[second] = admit_day[first] + int(rng.integers(math.ceil(c.los_days[first]) + 2, 180))
            # stays are capped at 60 days, so this window is never empty
            lo = admit_day[second] + math.ceil(c.los_days[second]) + 1
            death_day[first] = int(rng.integers(lo, admit_day[first] + ONE_YEAR_DAYS + 1))
        elif y[first] == 0 and y[second] == 1:
            admit_day[second] = admit_day[first] + int(rng.integers(200, 700))
            death_day[first] = death_after(second, admit_day[first] + ONE_YEAR_DAYS + 1)
        else:
            admit_day[second] = admit_day[first] + int(rng.integers(math.ceil(c.los_days[first]) + 2, 400))
            if rng.random() < 0.3:
                death_day[first] = admit_day[second] + int(rng.integers(ONE_YEAR_DAYS + 1, 3000))
        done[first] = done[second] = True
    return admit_day, admit_hour, death_day, patient_of


def generate_tables(cfg: SynthConfig) -> tuple[dict, np.ndarray]:
    """Build all table rows in memory; returns (rows by table, planted labels in admission order)."""
    rng = np.random.default_rng(cfg.seed)
    c = _draw_cohort(cfg, rng)
    c.labels = plant_labels(cfg, c, rng)
    admit_day, admit_hour, death_day, patient_of = _timeline(cfg, c, rng)
    t = _Tables()
    item_ids = _item_ids()
    for spec in vocab.ITEMS:
        t.add("lab_items", item_ids[spec.name], spec.label, spec.category)

    adm_ids = [str(100000 + i) for i in range(c.n)]
    pat_ids = {}
    for i in range(c.n):
        owner = patient_of[i]
        if owner == i:
            pat_ids[i] = str(10000 + i)
    for i in range(c.n):
        pat_ids[i] = pat_ids[patient_of[i]]

    for i in range(c.n):
        if patient_of[i] != i:
            continue
        admit = EPOCH + timedelta(days=int(admit_day[i]))
        years = c.age[i] + (AGE_MASK_OFFSET if c.masked[i] else 0)
        dob = admit - timedelta(days=int(round(years * DAYS_PER_YEAR)))
        dod = "" if death_day[i] < 0 else _ts(EPOCH + timedelta(days=int(death_day[i])))
        t.add("patients", pat_ids[i], c.gender[i], _ts(dob), dod)

    dup_rate = cfg.duplicate_diagnosis_rate
    for i in range(c.n):
        admit = EPOCH + timedelta(days=int(admit_day[i]), minutes=int(admit_hour[i]))
        discharge = admit + timedelta(days=float(c.los_days[i]))
        text = _choice(rng, ER_AMI_TEXT if c.er_ami[i] else ER_OTHER_TEXT, 1)[0]
        t.add("admissions", adm_ids[i], pat_ids[i], _ts(admit), _ts(discharge), c.discharge_location[i],
              c.religion[i], c.ethnicity[i], c.marital[i], text)

        codes = [AMI_CODES[min(int(rng.integers(0, 12)), 10)]]
        codes += _choice(rng, SECONDARY_CODES, int(rng.integers(0, 4)))
        for code in codes:
            t.add("diagnoses", adm_ids[i], code)
            if rng.random() < dup_rate:
                t.add("diagnoses", adm_ids[i], code)

        for k in np.flatnonzero(c.treatments[i]):
            t.add("drg_codes", adm_ids[i], str(300 + k), vocab.TREATMENTS[k])
        for g in np.flatnonzero(c.comorbidities[i]):
            t.add("drg_codes", adm_ids[i], str(500 + 10 * g + int(rng.integers(0, 3))), vocab.COMORBIDITY_GROUPS[g])
        if rng.random() < 0.1:
            t.add("drg_codes", adm_ids[i], "999", "UNGROUPABLE")

        _events(cfg, rng, t, adm_ids[i], admit, c.los_days[i], c.severity[i], item_ids)

    _non_cohort(cfg, rng, t, item_ids)
    return t.rows, c.labels


def _events(cfg, rng, t, adm_id, admit, los_days, severity, item_ids):
    span_minutes = max(int(los_days * 24 * 60), 1)

    def when():
        return _ts(admit + timedelta(minutes=int(rng.integers(0, span_minutes))))

    def latent(name):
        loading = ITEM_MODEL[name][3]
        return loading * severity + math.sqrt(1 - loading ** 2) * rng.normal()

    for spec in vocab.LAB_ITEMS:
        if rng.random() < cfg.missingness_rate:
            continue
        z = latent(spec.name)
        for _ in range(int(rng.integers(1, 4))):
            value = _item_value(spec.name, z + 0.15 * rng.normal())
            u = rng.random()
            if u < cfg.zero_lab_rate:
                value = 0.0
            elif u < cfg.zero_lab_rate + cfg.implausible_rate:
                value = spec.high * 10
            t.add("lab_events", adm_id, item_ids[spec.name], _num(value), spec.unit, when())

    sys_spec, dia_spec = vocab.ITEM_BY_NAME[vocab.SYSTOLIC_BP], vocab.ITEM_BY_NAME[vocab.DIASTOLIC_BP]
    if rng.random() >= cfg.missingness_rate:
        z_sys, z_dia = latent(vocab.SYSTOLIC_BP), latent(vocab.DIASTOLIC_BP)
        for _ in range(int(rng.integers(1, 4))):
            stamp = when()
            s = _item_value(vocab.SYSTOLIC_BP, z_sys + 0.2 * rng.normal())
            d = min(_item_value(vocab.DIASTOLIC_BP, z_dia + 0.2 * rng.normal()), s - 15)
            if rng.random() < cfg.reversed_bp_rate:
                s, d = d, s
            t.add("chart_events", adm_id, item_ids[sys_spec.name], _num(s), sys_spec.unit, stamp)
            t.add("chart_events", adm_id, item_ids[dia_spec.name], _num(d), dia_spec.unit, stamp)
    for spec in vocab.CHART_ITEMS:
        if spec.name in (vocab.SYSTOLIC_BP, vocab.DIASTOLIC_BP) or rng.random() < cfg.missingness_rate:
            continue
        z = latent(spec.name)
        for _ in range(int(rng.integers(1, 4))):
            value = _item_value(spec.name, z + 0.15 * rng.normal())
            t.add("chart_events", adm_id, item_ids[spec.name], _num(value), spec.unit, when())


def _non_cohort(cfg, rng, t, item_ids):
    """Admissions without an AMI code; they must be filtered out by ingest."""
    lab = vocab.LAB_ITEMS[0]
    for i in range(cfg.non_cohort_admissions):
        pat_id, adm_id = str(900000 + i), str(9000000 + i)
        admit = EPOCH + timedelta(days=int(rng.integers(0, EPOCH_SPAN_DAYS)))
        dob = admit - timedelta(days=int(rng.uniform(30, 90) * DAYS_PER_YEAR))
        dod = _ts(admit + timedelta(days=int(rng.integers(1, 2000)))) if rng.random() < 0.3 else ""
        t.add("patients", pat_id, _choice(rng, "MF", 1)[0], _ts(dob), dod)
        t.add("admissions", adm_id, pat_id, _ts(admit), _ts(admit + timedelta(days=3)), "HOME",
              "NOT SPECIFIED", "WHITE", "MARRIED", "CHEST PAIN")
        t.add("diagnoses", adm_id, _choice(rng, NON_COHORT_CODES, 1)[0])
        t.add("lab_events", adm_id, item_ids[lab.name], _num(1e6), lab.unit, _ts(admit))


def write_tables(rows: dict, out_dir, manifest: dict) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name in TABLES:
        path = out / f"{name}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TABLE_COLUMNS[name])
            writer.writerows(rows[name])
        paths[name] = path
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths


def generate(cfg: SynthConfig, out_dir) -> dict[str, Path]:
    """Write the seven tables plus ``manifest.json`` (config, its hash, planted counts)."""
    rows, labels = generate_tables(cfg)
    manifest = {
        "format": SYNTH_FORMAT,
        "config": cfg.to_dict(),
        "config_hash": cfg.hash(),
        "n_admissions": int(labels.size),
        "n_positive": int(labels.sum()),
        "row_counts": {name: len(rows[name]) for name in TABLES},
    }
    try:
        return write_tables(rows, out_dir, manifest)
    except OSError as exc:
        raise OSError(f"cannot write synthetic tables to {out_dir}: {exc}") from exc
