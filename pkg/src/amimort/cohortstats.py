"""Subgroup summary table with 2x2 chi-square tests against each subgroup's complement."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from . import vocab
from .core import AdmissionCase, Label


class UndefinedTestError(ValueError):
    """The 2x2 table has an empty row or column."""


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    df: int
    p_value: float


@dataclass(frozen=True)
class SummaryRow:
    characteristic: str
    subgroup: str
    n: int
    positives: int
    negatives: int
    chi_square: Optional[ChiSquareResult]

    @property
    def positive_pct(self) -> float:
        return self.positives / self.n if self.n else float("nan")

    @property
    def negative_pct(self) -> float:
        return self.negatives / self.n if self.n else float("nan")


def chisq_sf(x: float, df: int = 1) -> float:
    """Upper tail of the chi-square distribution with one degree of freedom.

    For one degree of freedom P(X > x) = P(|Z| > sqrt(x)) = erfc(sqrt(x / 2)).
    """
    if df != 1:
        raise ValueError("only one degree of freedom is supported")
    if x < 0:
        raise ValueError(f"chi-square statistic must be nonnegative, got {x}")
    return math.erfc(math.sqrt(x / 2.0))


def chi_square_2x2(a: int, b: int, c: int, d: int) -> ChiSquareResult:
    """Pearson chi-square for the table [[a, b], [c, d]], no continuity correction.

    Rows are subgroup / complement, columns positive / negative outcome.
    """
    if min(a, b, c, d) < 0:
        raise ValueError("counts must be nonnegative")
    r1, r2, c1, c2 = a + b, c + d, a + c, b + d
    if 0 in (r1, r2, c1, c2):
        raise UndefinedTestError(f"zero marginal total in table {[[a, b], [c, d]]}")
    n = a + b + c + d
    # exact integer numerator keeps large tables free of cancellation
    stat = n * (a * d - b * c) ** 2 / (r1 * r2 * c1 * c2)
    return ChiSquareResult(float(stat), 1, chisq_sf(stat))


AGE_BANDS = (
    ("Under 30", lambda a: a < 30),
    ("30 to 49.9", lambda a: 30 <= a < 50),
    ("50 to 59.9", lambda a: 50 <= a < 60),
    ("60 to 69.9", lambda a: 60 <= a < 70),
    ("70 to 79.9", lambda a: 70 <= a < 80),
    ("80 to 90", lambda a: 80 <= a <= 90),
    ("Over 90", lambda a: a > 90),
)


def _subgroups() -> list[tuple[str, str, Callable[[AdmissionCase], bool]]]:
    rows = [
        ("Gender", "Male", lambda c: c.patient.gender == "M"),
        ("Gender", "Female", lambda c: c.patient.gender == "F"),
    ]
    rows += [("Age at admission", name, (lambda f: lambda c: f(c.age_at_admission))(f)) for name, f in AGE_BANDS]
    rows += [("Ethnicity", g, (lambda g: lambda c: vocab.ethnicity_group(c.admission.ethnicity) == g)(g))
             for g in vocab.ETHNICITY_GROUPS]
    rows += [
        ("Initial ER Diagnosis MI?", "Yes", lambda c: c.admission.er_initial_ami_flag),
        ("Initial ER Diagnosis MI?", "No", lambda c: not c.admission.er_initial_ami_flag),
        ("With Comorbidities", "Total", lambda c: bool(c.comorbidity_groups)),
    ]
    return rows


def subgroup_row(characteristic: str, subgroup: str, members: Sequence[bool], labels: Sequence[int]) -> SummaryRow:
    a = sum(1 for m, y in zip(members, labels) if m and y)
    b = sum(1 for m, y in zip(members, labels) if m and not y)
    total_pos = sum(labels)
    c, d = total_pos - a, len(labels) - total_pos - b
    try:
        test = chi_square_2x2(a, b, c, d)
    except UndefinedTestError:
        test = None
    return SummaryRow(characteristic, subgroup, a + b, a, b, test)


def summary_table(cases: Sequence[AdmissionCase]) -> list[SummaryRow]:
    """Overall row followed by one row per subgroup, each tested against its complement."""
    labels = [int(c.label == Label.POSITIVE) for c in cases]
    pos = sum(labels)
    rows = [SummaryRow("Overall", "All admissions", len(cases), pos, len(cases) - pos, None)]
    for characteristic, name, pred in _subgroups():
        rows.append(subgroup_row(characteristic, name, [pred(c) for c in cases], labels))
    return rows


def format_p(p: Optional[float]) -> str:
    if p is None:
        return "undefined"
    if p < 1e-5:
        return "<.00001"
    return f"{p:.6f}".lstrip("0")


def write_summary_csv(rows: Sequence[SummaryRow], path, header_lines: Sequence[str] = ()) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["characteristic", "subgroup", "n", "positives", "positive_pct",
                         "negatives", "negative_pct", "chi_square", "p_value", "p_value_display"])
        for r in rows:
            stat = f"{r.chi_square.statistic:.6f}" if r.chi_square else ""
            p = f"{r.chi_square.p_value:.6g}" if r.chi_square else ""
            display = format_p(r.chi_square.p_value) if r.chi_square else ("" if r.characteristic == "Overall" else "undefined")
            writer.writerow([r.characteristic, r.subgroup, r.n, r.positives, f"{100 * r.positive_pct:.1f}%",
                             r.negatives, f"{100 * r.negative_pct:.1f}%", stat, p, display])
