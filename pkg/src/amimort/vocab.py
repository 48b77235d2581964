"""Fixed clinical vocabularies: treatment and comorbidity categories, measured items,
the DRG catalog that maps billing codes onto those categories, and default
plausibility bounds for event values."""

from __future__ import annotations

import re
from typing import NamedTuple


def slugify(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", text.lower()).strip("_")


TREATMENTS = (
    "cardiac catheterization",
    "cardiac defibrillator and heart assist anomaly",
    "cardiac defibrillator implant with cardiac catheterization",
    "cardiac defibrillator implant without cardiac catheterization",
    "cardiac valve and other major cardiothoracic procedures with cardiac catheterization",
    "cardiac valve and other major cardiothoracic procedures without cardiac catheterization",
    "cardiac valve procedures with cardiac catheterization",
    "cardiac valve procedures without cardiac catheterization",
    "coronary bypass with cardiac catheterization",
    "coronary bypass with cardiac catheterization or percutaneous cardiac procedure",
    "coronary bypass with PTCA",
    "coronary bypass without cardiac catheterization",
    "coronary bypass without cardiac catheterization or percutaneous cardiac procedure",
    "other cardiac pacemaker implantation",
    "other major cardiovascular procedures",
    "other permanent cardiac pacemaker implant or PTCA with coronary artery stent implant",
    "percutaneous cardiac procedure with drug-eluting stent",
    "percutaneous cardiac procedure with non-drug-eluting stent",
    "percutaneous cardiac procedure without coronary artery stent",
    "percutaneous cardiovascular procedure",
    "permanent cardiac pacemaker implant",
)

COMORBIDITY_GROUPS = (
    "cancer",
    "endocrinology",
    "gastroenterology",
    "genitourinary",
    "hematological disorder",
    "infection",
    "liver or kidney issues",
    "neurological disorder",
    "orthopaedic disorder",
    "other cardiovascular disease",
    "other comorbidities",
    "respiratory disorder",
    "toxicity issues",
)


class DrgEntry(NamedTuple):
    kind: str  # "treatment" | "comorbidity"
    category: str


def _build_drg_catalog() -> dict[str, DrgEntry]:
    catalog = {}
    for i, name in enumerate(TREATMENTS):
        catalog[str(300 + i)] = DrgEntry("treatment", name)
    # several billing codes per comorbidity group, as with severity-split DRGs
    for g, name in enumerate(COMORBIDITY_GROUPS):
        for j in range(3):
            catalog[str(500 + 10 * g + j)] = DrgEntry("comorbidity", name)
    return catalog


DRG_CATALOG = _build_drg_catalog()


class ItemSpec(NamedTuple):
    name: str
    label: str
    category: str  # "lab" | "chart"
    unit: str
    low: float  # plausibility bounds, native unit
    high: float


LAB_ITEMS = (
    ItemSpec("cholesterol_ratio", "Cholesterol Ratio (Total/HDL)", "lab", "ratio", 0.5, 30),
    ItemSpec("ldl_cholesterol", "Cholesterol, LDL, Calculated", "lab", "mg/dL", 1, 600),
    ItemSpec("hdl_cholesterol", "Cholesterol, HDL", "lab", "mg/dL", 1, 250),
    ItemSpec("total_cholesterol", "Cholesterol, Total", "lab", "mg/dL", 20, 1000),
    ItemSpec("triglycerides", "Triglycerides", "lab", "mg/dL", 5, 10000),
    ItemSpec("alt", "Alanine Aminotransferase (ALT)", "lab", "IU/L", 1, 20000),
    ItemSpec("ast", "Asparate Aminotransferase (AST)", "lab", "IU/L", 1, 30000),
    ItemSpec("alkaline_phosphatase", "Alkaline Phosphatase", "lab", "IU/L", 5, 5000),
    ItemSpec("albumin", "Albumin", "lab", "g/dL", 0.5, 7),
    ItemSpec("bilirubin", "Bilirubin, Total", "lab", "mg/dL", 0.05, 80),
    ItemSpec("bun", "Urea Nitrogen", "lab", "mg/dL", 1, 300),
    ItemSpec("creatinine", "Creatinine", "lab", "mg/dL", 0.1, 40),
    ItemSpec("ggt", "Gamma Glutamyltransferase", "lab", "IU/L", 1, 5000),
    ItemSpec("ldh", "Lactate Dehydrogenase (LD)", "lab", "IU/L", 20, 20000),
    ItemSpec("total_protein", "Protein, Total", "lab", "g/dL", 1, 15),
    ItemSpec("nt_probnp", "NTproBNP", "lab", "pg/mL", 5, 100000),
    ItemSpec("crp", "C-Reactive Protein", "lab", "mg/L", 0.01, 600),
    ItemSpec("creatine_kinase", "Creatine Kinase (CK)", "lab", "IU/L", 1, 100000),
    ItemSpec("ck_mb", "Creatine Kinase, MB Isoenzyme", "lab", "ng/mL", 0.1, 2000),
    ItemSpec("cortisol", "Cortisol", "lab", "ug/dL", 0.1, 200),
    ItemSpec("homocysteine", "Homocysteine", "lab", "umol/L", 1, 200),
    ItemSpec("troponin_i", "Troponin I", "lab", "ng/mL", 0.001, 500),
    ItemSpec("troponin_t", "Troponin T", "lab", "ng/mL", 0.001, 100),
    ItemSpec("bicarbonate", "Bicarbonate", "lab", "mEq/L", 2, 60),
    ItemSpec("calcium", "Calcium, Total", "lab", "mg/dL", 2, 20),
    ItemSpec("chloride", "Chloride", "lab", "mEq/L", 50, 160),
    ItemSpec("potassium", "Potassium", "lab", "mEq/L", 1, 12),
    ItemSpec("sodium", "Sodium", "lab", "mEq/L", 90, 200),
    ItemSpec("glucose", "Glucose", "lab", "mg/dL", 10, 2000),
    ItemSpec("hematocrit", "Hematocrit", "lab", "%", 5, 75),
    ItemSpec("hemoglobin", "Hemoglobin", "lab", "g/dL", 1, 25),
    ItemSpec("wbc", "White Blood Cells", "lab", "K/uL", 0.1, 500),
)

CHART_ITEMS = (
    ItemSpec("diastolic_bp", "Arterial Blood Pressure diastolic", "chart", "mmHg", 10, 200),
    ItemSpec("systolic_bp", "Arterial Blood Pressure systolic", "chart", "mmHg", 30, 300),
    ItemSpec("heart_rate", "Heart Rate", "chart", "bpm", 20, 300),
    ItemSpec("respiratory_rate", "Respiratory Rate", "chart", "insp/min", 2, 80),
)

ITEMS = LAB_ITEMS + CHART_ITEMS
ITEM_BY_LABEL = {spec.label.lower(): spec for spec in ITEMS}
ITEM_BY_NAME = {spec.name: spec for spec in ITEMS}

SYSTOLIC_BP = "systolic_bp"
DIASTOLIC_BP = "diastolic_bp"

AMI_TEXT_PATTERNS = ("myocardial infarction",)
RULE_OUT_MARKERS = ("rule out", "r/o")

# Groupings used by the cohort summary table.
ETHNICITY_GROUPS = ("Asian", "Black", "Hispanic/Latino", "Other", "White")
UNKNOWN_ETHNICITY_PREFIXES = ("UNKNOWN", "UNABLE TO OBTAIN", "PATIENT DECLINED")


def ethnicity_group(raw: str) -> str | None:
    """Collapse a free-form ethnicity string into a summary group (None = unknown)."""
    value = raw.strip().upper()
    if not value or value.startswith(UNKNOWN_ETHNICITY_PREFIXES):
        return None
    if value.startswith("WHITE"):
        return "White"
    if value.startswith("BLACK"):
        return "Black"
    if value.startswith("HISPANIC"):
        return "Hispanic/Latino"
    if value.startswith("ASIAN"):
        return "Asian"
    return "Other"
