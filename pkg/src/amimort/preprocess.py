"""Cleaning rules for lab and chart events.

Fixed order: drop zero lab values, un-swap reversed blood-pressure pairs, drop
implausible values, optionally drop cohort-wide IQR outliers per lab item, then
average what survives per (admission, item).
"""

from __future__ import annotations

import csv
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

logger = logging.getLogger(__name__)

RULES = ("zero_lab_value", "bp_pair_swapped", "implausible_value", "iqr_outlier")


class EventRow(NamedTuple):
    admission_id: str
    item_id: str
    value: float
    unit: str
    timestamp: datetime
    kind: str = "lab"  # "lab" | "chart"


@dataclass(frozen=True)
class PlausibilityRange:
    item_id: str
    min: float
    max: float

    def __post_init__(self):
        if not self.min < self.max:
            raise ValueError(f"item {self.item_id}: plausibility range needs min < max, got [{self.min}, {self.max}]")

    def contains(self, value: float) -> bool:
        return self.min <= value <= self.max


@dataclass
class CleanConfig:
    ranges: Mapping[str, PlausibilityRange] = field(default_factory=dict)
    remove_outliers: bool = False
    quartile_method: str = "linear"
    systolic_item: str | None = None
    diastolic_item: str | None = None

    def __post_init__(self):
        if not isinstance(self.ranges, Mapping):
            self.ranges = {r.item_id: r for r in self.ranges}
        if self.quartile_method != "linear":
            raise ValueError(f"unsupported quartile method {self.quartile_method!r}")


@dataclass
class CleaningReport:
    counts: dict = field(default_factory=lambda: dict.fromkeys(RULES, 0))

    def add(self, rule: str, n: int = 1) -> None:
        self.counts[rule] = self.counts.get(rule, 0) + n

    def rows(self) -> list[tuple[str, int]]:
        return list(self.counts.items())

    def write_csv(self, path, header_lines: Sequence[str] = ()) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["rule", "count"])
            writer.writerows(self.rows())


def load_ranges(path) -> dict[str, PlausibilityRange]:
    """Read ``item_id,min,max`` rows."""
    ranges = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"item_id", "min", "max"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                item = PlausibilityRange(row["item_id"], float(row["min"]), float(row["max"]))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
            ranges[item.item_id] = item
    return ranges


def write_ranges(ranges: Mapping[str, PlausibilityRange], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["item_id", "min", "max"])
        for r in ranges.values():
            writer.writerow([r.item_id, repr(r.min), repr(r.max)])


def _swap_reversed_bp(events: list[EventRow], config: CleanConfig, report: CleaningReport) -> list[EventRow]:
    sys_id, dia_id = config.systolic_item, config.diastolic_item
    if sys_id is None or dia_id is None:
        return events
    pairs: dict[tuple, list[int | None]] = defaultdict(lambda: [None, None])
    for i, ev in enumerate(events):
        if ev.item_id == sys_id or ev.item_id == dia_id:
            slot = pairs[(ev.admission_id, ev.timestamp)]
            k = 0 if ev.item_id == sys_id else 1
            if slot[k] is None:
                slot[k] = i
    out = list(events)
    for i_sys, i_dia in pairs.values():
        if i_sys is None or i_dia is None:
            continue
        s, d = out[i_sys], out[i_dia]
        if d.value > s.value:
            out[i_sys] = s._replace(value=d.value)
            out[i_dia] = d._replace(value=s.value)
            report.add("bp_pair_swapped")
    return out


def clean_events(events: Iterable[EventRow], config: CleanConfig,
                 report: CleaningReport | None = None) -> list[EventRow]:
    """Apply zero removal, blood-pressure un-swapping and plausibility screening.

    Values are never modified except by the systolic/diastolic swap. Removal
    counts accumulate into ``report`` when given.
    """
    if report is None:
        report = CleaningReport()
    kept = []
    for ev in events:
        if ev.kind == "lab" and ev.value == 0:
            report.add("zero_lab_value")
            continue
        kept.append(ev)
    kept = _swap_reversed_bp(kept, config, report)
    out = []
    for ev in kept:
        bounds = config.ranges.get(ev.item_id)
        if bounds is not None and not bounds.contains(ev.value):
            report.add("implausible_value")
            continue
        out.append(ev)
    logger.info("cleaning: %s", ", ".join(f"{k}={v}" for k, v in report.counts.items()))
    return out


def iqr_fences(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("cannot compute quartiles of an empty sample")
    q1, q3 = np.quantile(arr, [0.25, 0.75], method="linear")
    iqr = q3 - q1
    return q1 - 1.5 * iqr, q3 + 1.5 * iqr


def iqr_filter(values: Sequence[float]) -> list[float]:
    """Keep values inside the Tukey fences [Q1 - 1.5 IQR, Q3 + 1.5 IQR]."""
    lo, hi = iqr_fences(values)
    return [v for v in values if lo <= v <= hi]


def remove_outliers(events: Sequence[EventRow], report: CleaningReport | None = None) -> list[EventRow]:
    """Cohort-wide IQR filtering, one set of fences per lab item."""
    by_item: dict[str, list[float]] = defaultdict(list)
    for ev in events:
        if ev.kind == "lab":
            by_item[ev.item_id].append(ev.value)
    fences = {item: iqr_fences(vals) for item, vals in by_item.items()}
    out = []
    removed = 0
    for ev in events:
        if ev.kind == "lab":
            lo, hi = fences[ev.item_id]
            if not lo <= ev.value <= hi:
                removed += 1
                continue
        out.append(ev)
    if report is not None:
        report.add("iqr_outlier", removed)
    return out


def aggregate_mean(events: Iterable[EventRow]) -> dict[tuple[str, str], float]:
    sums: dict[tuple[str, str], list[float]] = {}
    for ev in events:
        acc = sums.setdefault((ev.admission_id, ev.item_id), [0.0, 0])
        acc[0] += ev.value
        acc[1] += 1
    return {key: s / n for key, (s, n) in sums.items()}


def preprocess_events(events: Iterable[EventRow], config: CleanConfig,
                      report: CleaningReport | None = None) -> dict[tuple[str, str], float]:
    """Full cleaning pipeline; returns per-(admission, item) means."""
    if report is None:
        report = CleaningReport()
    cleaned = clean_events(events, config, report)
    if config.remove_outliers:
        cleaned = remove_outliers(cleaned, report)
    return aggregate_mean(cleaned)
