"""Command-line driver: synth, ingest, stats, train, evaluate, compare.

Every artifact records the hash of the configuration that produced it (a
``# config_hash=`` line in CSVs, a ``config_hash`` key in JSON, the SVG
description). Outputs contain no timestamps, so reruns are byte-identical.

Exit codes: 0 success, 2 bad configuration or usage, 3 bad or degenerate
data, 4 internal error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .cohortstats import summary_table, write_summary_csv
from .core import ContractError, DataIntegrityError, DegenerateDataError, config_hash
from .evaluate import EvalReport, cross_validate, write_report_json, write_roc_csv
from .features import DATASET_KINDS, build_dataset
from .ingest import SchemaError, default_clean_config, load_tables, prepare_cohort, read_cohort, write_cohort
from .learners import DISPLAY_NAMES, FAMILIES, LearnerSpec, save_model, train
from .preprocess import load_ranges
from .synthgen import SynthConfig, bundled_config, generate, load_config

logger = logging.getLogger("amimort")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INTERNAL = 0, 2, 3, 4
OUTPUT_ENV = "AMIMORT_OUTPUT_DIR"

DATASET_DISPLAY = {
    "combined": "Combined",
    "admission": "Admission",
    "treatment": "Treatment",
    "lab_chart": "Lab & Chart Values",
    "demographics": "Demographics",
    "diagnostic": "Comorbidities",
}


class ConfigError(ContractError):
    pass


@dataclass
class RunConfig:
    """Resolved options of one command; hashed into every artifact it writes."""

    command: str
    inputs: dict = field(default_factory=dict)
    datasets: tuple = ()
    learners: tuple = ()
    k: int = 10
    seed: int = 0
    out_dir: Path = Path(".")
    remove_outliers: bool = False
    emit_roc_plot: bool = True

    def to_dict(self) -> dict:
        return {
            "command": self.command, "inputs": self.inputs, "datasets": list(self.datasets),
            "learners": [[s.family, s.resolved(), s.seed] for s in self.learners],
            "k": self.k, "seed": self.seed, "remove_outliers": self.remove_outliers,
        }

    @property
    def hash(self) -> str:
        return config_hash(self.to_dict())

    def header(self) -> list[str]:
        return [f"config_hash={self.hash}", f"amimort={__version__}"]


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()[:16]


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUTPUT_ENV) or "amimort-out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_params(pairs) -> dict:
    params = {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise ConfigError(f"--param expects key=value, got {pair!r}")
        params[key.strip()] = _parse_value(value)
    return params


def _learner_specs(families, config_path, seed) -> tuple:
    overrides = {}
    if config_path:
        try:
            overrides = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read learner config {config_path}: {exc}") from exc
        if not isinstance(overrides, dict):
            raise ConfigError(f"{config_path}: expected an object mapping family -> hyperparameters")
    specs = []
    for fam in families:
        spec = LearnerSpec(fam, dict(overrides.get(fam, {})), seed)
        spec.resolved()
        specs.append(spec)
    unused = set(overrides) - set(families)
    if unused:
        raise ConfigError(f"learner config names families not being run: {sorted(unused)}")
    return tuple(specs)


def _write_json(doc: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- subcommands -------------------------------------------------------------------

def cmd_synth(args) -> int:
    if args.config and args.preset:
        raise ConfigError("give either --config or --preset, not both")
    if args.config:
        try:
            cfg = load_config(args.config)
        except OSError as exc:
            raise ConfigError(f"cannot read synth config: {exc}") from exc
    else:
        cfg = bundled_config(args.preset or "default")
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.n is not None:
        overrides["n_admissions"] = args.n
    if args.positive_rate is not None:
        overrides["positive_rate"] = args.positive_rate
    if overrides:
        cfg = SynthConfig.from_dict({**cfg.to_dict(), **overrides})
    out = _out_dir(args)
    generate(cfg, out)
    print(f"wrote synthetic tables to {out} ({cfg.n_admissions} admissions, "
          f"{cfg.n_positive} positive, config_hash={cfg.hash()})")
    return EXIT_OK


def cmd_ingest(args) -> int:
    tables_dir = Path(args.tables)
    if not tables_dir.is_dir():
        raise FileNotFoundError(f"tables directory {tables_dir} does not exist")
    ranges = None
    if args.ranges:
        try:
            ranges = load_ranges(args.ranges)
        except (OSError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
    tables = load_tables(tables_dir)
    config = default_clean_config(tables.lab_items, remove_outliers=args.remove_outliers, ranges=ranges)
    inputs = {name: file_digest(tables_dir / f"{name}.csv") for name in tables.row_counts()}
    if args.ranges:
        inputs["ranges"] = file_digest(args.ranges)
    run = RunConfig("ingest", inputs=inputs, remove_outliers=args.remove_outliers)
    cases, report = prepare_cohort(tables, config)
    if not cases:
        raise DegenerateDataError("no admission carries a diagnosis code in 410.0-411.0")
    out = _out_dir(args)
    write_cohort(cases, out / "cohort.json", {"config_hash": run.hash, "remove_outliers": args.remove_outliers})
    report.write_csv(out / "cleaning_report.csv", run.header())
    n_pos = sum(int(c.label) for c in cases)
    print(f"cohort: {len(cases)} admissions, {n_pos} positive ({100 * n_pos / len(cases):.1f}%) -> {out / 'cohort.json'}")
    return EXIT_OK


def _load_cohort(path):
    if not Path(path).is_file():
        raise FileNotFoundError(f"cohort file {path} does not exist")
    cases = read_cohort(path)
    if not cases:
        raise DegenerateDataError(f"{path}: empty cohort")
    return cases


def cmd_stats(args) -> int:
    cases = _load_cohort(args.cohort)
    run = RunConfig("stats", inputs={"cohort": file_digest(args.cohort)})
    rows = summary_table(cases)
    out = _out_dir(args)
    write_summary_csv(rows, out / "table2.csv", run.header())
    overall = rows[0]
    print(f"overall: {overall.n} admissions, {overall.positives} positive ({100 * overall.positive_pct:.1f}%) "
          f"-> {out / 'table2.csv'}")
    return EXIT_OK


def cmd_train(args) -> int:
    cases = _load_cohort(args.cohort)
    spec = LearnerSpec(args.learner, parse_params(args.param), args.seed)
    spec.resolved()
    run = RunConfig("train", inputs={"cohort": file_digest(args.cohort)}, datasets=(args.dataset,),
                    learners=(spec,), seed=args.seed)
    model = train(spec, build_dataset(cases, args.dataset))
    out = _out_dir(args)
    path = out / f"model_{args.dataset}_{args.learner}.json"
    save_model(model, path, {"config_hash": run.hash})
    print(f"trained {args.learner} on {args.dataset} ({len(model.feature_names)} features) -> {path}")
    return EXIT_OK


def _roc_plot(reports: list[EvalReport], path, run: RunConfig, title: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = run.hash
    fig, ax = plt.subplots(figsize=(6, 6))
    for rep in reports:
        fpr = [p.fpr for p in rep.roc]
        tpr = [p.tpr for p in rep.roc]
        label = f"{DATASET_DISPLAY[rep.dataset]} ({DISPLAY_NAMES[rep.learner]}, AUC {rep.auc:.3f})"
        ax.plot(fpr, tpr, linewidth=1.2, label=label)
    ax.plot([0, 1], [0, 1], color="grey", linestyle=":", linewidth=0.8)
    ax.set_xlabel("False positive rate")
    ax.set_ylabel("True positive rate")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_title(title)
    ax.legend(loc="lower right", fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None, "Description": f"config_hash={run.hash}"})
    plt.close(fig)


def cmd_evaluate(args) -> int:
    cases = _load_cohort(args.cohort)
    spec = LearnerSpec(args.learner, parse_params(args.param), args.seed)
    spec.resolved()
    run = RunConfig("evaluate", inputs={"cohort": file_digest(args.cohort)}, datasets=(args.dataset,),
                    learners=(spec,), k=args.k, seed=args.seed, emit_roc_plot=not args.no_plot)
    report = cross_validate(spec, build_dataset(cases, args.dataset), k=args.k, seed=args.seed)
    out = _out_dir(args)
    stem = f"{args.dataset}_{args.learner}"
    write_report_json(report, out / f"report_{stem}.json", {"config_hash": run.hash})
    write_roc_csv(report.roc, out / f"roc_{stem}.csv", run.header())
    if run.emit_roc_plot:
        _roc_plot([report], out / f"roc_{stem}.svg", run, f"ROC, {DISPLAY_NAMES[args.learner]}")
    m = report.metrics
    print(f"{args.learner} on {args.dataset}: accuracy {m.accuracy:.4f}, AUC {report.auc:.4f}, "
          f"precision {m.precision:.4f}, recall {m.recall:.4f}, F {m.f_measure:.4f}")
    return EXIT_OK


def _compare_job(job):
    spec, data, k, seed = job
    return cross_validate(spec, data, k=k, seed=seed)


COMPARE_COLUMNS = ("dataset", "learner", "accuracy", "auc", "precision", "recall", "f_measure",
                   "rank_accuracy", "rank_auc")


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _ranks(values):
    """Competition ranks, 1 = largest."""
    return [1 + sum(1 for w in values if w > v) for v in values]


def compare_rows(reports: list[EvalReport]) -> list[dict]:
    """One row per (dataset, learner), datasets in run order, best accuracy first."""
    rows = []
    datasets = list(dict.fromkeys(r.dataset for r in reports))
    for ds in datasets:
        group = [r for r in reports if r.dataset == ds]
        acc_rank = _ranks([r.metrics.accuracy for r in group])
        auc_rank = _ranks([r.auc for r in group])
        block = []
        for r, ra, rauc in zip(group, acc_rank, auc_rank):
            m = r.metrics
            block.append({"dataset": ds, "learner": r.learner, "accuracy": m.accuracy, "auc": r.auc,
                          "precision": m.precision, "recall": m.recall, "f_measure": m.f_measure,
                          "rank_accuracy": ra, "rank_auc": rauc})
        block.sort(key=lambda row: (row["rank_accuracy"], row["rank_auc"], row["learner"]))
        rows += block
    return rows


def best_by_accuracy(reports: list[EvalReport]) -> list[tuple[str, list[EvalReport]]]:
    """Per dataset, the reports tied at the highest accuracy (ties by exact count correct)."""
    out = []
    for ds in dict.fromkeys(r.dataset for r in reports):
        group = [r for r in reports if r.dataset == ds]
        top = max(r.metrics.tp + r.metrics.tn for r in group)
        winners = [r for r in group if r.metrics.tp + r.metrics.tn == top]
        winners.sort(key=lambda r: (-r.auc, DISPLAY_NAMES[r.learner]))
        out.append((ds, winners))
    out.sort(key=lambda item: -item[1][0].metrics.accuracy)
    return out


def _write_csv(path, header, rows, header_lines):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_compare_csv(reports, path, header_lines=()):
    rows = compare_rows(reports)
    _write_csv(path, COMPARE_COLUMNS,
               [[r["dataset"], r["learner"]] + [_fmt(r[c]) for c in COMPARE_COLUMNS[2:7]]
                + [r["rank_accuracy"], r["rank_auc"]] for r in rows], header_lines)


def join_names(names) -> str:
    return names[0] if len(names) == 1 else ", ".join(names[:-1]) + " and " + names[-1]


def write_table3(reports, path, header_lines=()):
    """Best learner per dataset by accuracy; ties are listed together as "A and B"."""
    rows = []
    for ds, winners in best_by_accuracy(reports):
        m, best = winners[0].metrics, winners[0]
        rows.append([DATASET_DISPLAY[ds], join_names([DISPLAY_NAMES[w.learner] for w in winners]),
                     f"{100 * m.accuracy:.2f}%", f"{best.auc:.3f}", f"{m.precision:.3f}",
                     f"{m.recall:.3f}", f"{m.f_measure:.3f}"])
    _write_csv(path, ["Dataset", "Best Performing Classification Algorithm", "Highest Percent Correctly Classified",
                      "AUC", "Precision", "Recall", "F-Measure"], rows, header_lines)


def write_table4(reports, path, dataset="combined", header_lines=()):
    """Every learner on one dataset; shallow learners alphabetically, the FNN last."""
    group = [r for r in reports if r.dataset == dataset]
    group.sort(key=lambda r: (r.learner == "deep_fnn", DISPLAY_NAMES[r.learner]))
    rows = [[DISPLAY_NAMES[r.learner], f"{100 * r.metrics.accuracy:.2f}%", f"{r.auc:.3f}",
             f"{r.metrics.precision:.3f}", f"{r.metrics.recall:.3f}", f"{r.metrics.f_measure:.3f}"] for r in group]
    _write_csv(path, ["Classification Algorithms", "Percent Correctly Classified", "AUC", "Precision", "Recall",
                      "F-Measure"], rows, header_lines)


def run_compare(specs, datasets: dict, k: int, seed: int, workers: int = 1) -> list[EvalReport]:
    """Cross-validate every (dataset, learner) pair; results come back in job order."""
    jobs = [(spec, data, k, seed) for data in datasets.values() for spec in specs]
    if workers <= 1:
        reports = []
        for job in jobs:
            logger.info("compare: %s on %s", job[0].family, job[1].kind)
            reports.append(_compare_job(job))
        return reports
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_compare_job, jobs))


def cmd_compare(args) -> int:
    cases = _load_cohort(args.cohort)
    kinds = tuple(args.datasets or DATASET_KINDS)
    families = tuple(args.learners or FAMILIES)
    if args.workers < 1:
        raise ConfigError("--workers must be at least 1")
    specs = _learner_specs(families, args.learner_config, args.seed)
    run = RunConfig("compare", inputs={"cohort": file_digest(args.cohort)}, datasets=kinds, learners=specs,
                    k=args.k, seed=args.seed, emit_roc_plot=not args.no_plot)
    datasets = {kind: build_dataset(cases, kind) for kind in kinds}
    reports = run_compare(specs, datasets, args.k, args.seed, args.workers)

    out = _out_dir(args)
    header = run.header()
    write_compare_csv(reports, out / "compare.csv", header)
    write_table3(reports, out / "table3.csv", header)
    if "combined" in kinds:
        write_table4(reports, out / "table4.csv", header_lines=header)
    _write_json({"config_hash": run.hash, "config": run.to_dict(),
                 "results": [r.to_dict() for r in reports]}, out / "compare.json")
    best = [winners[0] for _, winners in best_by_accuracy(reports)]
    for rep in best:
        write_roc_csv(rep.roc, out / f"roc_{rep.dataset}_{rep.learner}.csv", header)
    if run.emit_roc_plot:
        _roc_plot(best, out / "figure1.svg", run, "ROC of the most accurate learner per dataset")
    print(f"compared {len(families)} learners x {len(kinds)} datasets -> {out}")
    for ds, winners in best_by_accuracy(reports):
        r = winners[0]
        print(f"  {ds:13s} best {r.learner:28s} accuracy {r.metrics.accuracy:.4f} AUC {r.auc:.4f}")
    return EXIT_OK


# -- parser --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amimort",
        description="One-year mortality prediction for AMI/PMS admissions.",
        epilog=f"Output directory defaults to ${OUTPUT_ENV}, else ./amimort-out. "
               "Exit codes: 0 ok, 2 configuration error, 3 data error, 4 internal error.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def common(p):
        p.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./amimort-out)")

    p = sub.add_parser("synth", help="generate synthetic tables")
    p.add_argument("--config", help="synth config JSON file")
    p.add_argument("--preset", choices=("default", "high_signal"), help="bundled config (default: default)")
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int, help="number of cohort admissions")
    p.add_argument("--positive-rate", type=float)
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="select the cohort, clean events, write cohort.json")
    p.add_argument("--tables", required=True, help="directory holding the seven table CSVs")
    p.add_argument("--remove-outliers", action="store_true", help="drop lab values outside the IQR fences")
    p.add_argument("--ranges", help="CSV of item_id,min,max plausibility bounds overriding the defaults")
    common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="cohort summary with chi-square tests (table2.csv)")
    p.add_argument("--cohort", required=True)
    common(p)
    p.set_defaults(func=cmd_stats)

    for name, func, helptext in (("train", cmd_train, "fit one learner on one dataset"),
                                 ("evaluate", cmd_evaluate, "cross-validate one learner on one dataset")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--cohort", required=True)
        p.add_argument("--dataset", required=True, choices=DATASET_KINDS)
        p.add_argument("--learner", required=True, choices=FAMILIES)
        p.add_argument("--param", action="append", metavar="KEY=VALUE", help="hyperparameter override")
        p.add_argument("--seed", type=int, required=True)
        if name == "evaluate":
            p.add_argument("--k", type=int, default=10, help="number of folds (default 10)")
            p.add_argument("--no-plot", action="store_true", help="skip the ROC SVG")
        common(p)
        p.set_defaults(func=func)

    p = sub.add_parser("compare", help="cross-validate learners x datasets (compare.csv, table3/4, figure1.svg)")
    p.add_argument("--cohort", required=True)
    p.add_argument("--datasets", nargs="+", choices=DATASET_KINDS)
    p.add_argument("--learners", nargs="+", choices=FAMILIES)
    p.add_argument("--learner-config", help="JSON object: family -> hyperparameter overrides")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--workers", type=int, default=1, help="parallel (dataset, learner) jobs")
    p.add_argument("--no-plot", action="store_true", help="skip figure1.svg")
    common(p)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ContractError as exc:
        print(f"amimort: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SchemaError, DataIntegrityError, DegenerateDataError, FileNotFoundError) as exc:
        print(f"amimort: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"amimort: configuration error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - last-resort classification
        logger.debug("internal error", exc_info=True)
        print(f"amimort: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
