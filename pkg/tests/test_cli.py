import csv
import json
import subprocess
import sys

import pytest

from amimort.cli import join_names, main, parse_params
from amimort.core import ContractError

FAST = ["--learners", "naive_bayes", "stump", "oner", "tree"]


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--n", "300", "--seed", "5", "--out", str(root / "tables")]) == 0
    assert main(["ingest", "--tables", str(root / "tables"), "--out", str(root / "run")]) == 0
    return root


def _compare(run_dir, out):
    return main(["compare", "--cohort", str(run_dir / "run" / "cohort.json"), "--seed", "1", "--k", "3",
                 "--out", str(out)] + FAST)


def test_help_lists_subcommands(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    for cmd in ("synth", "ingest", "stats", "train", "evaluate", "compare"):
        assert cmd in text


def test_unknown_subcommand_exits_nonzero():
    proc = subprocess.run([sys.executable, "-m", "amimort", "frobnicate"], capture_output=True, text=True)
    assert proc.returncode == 2
    assert "usage" in proc.stderr


def test_missing_cohort_is_data_error(tmp_path, capsys):
    assert main(["stats", "--cohort", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == 3
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("amimort: data error")


def test_bad_config_is_config_error(run_dir, tmp_path, capsys):
    cohort = str(run_dir / "run" / "cohort.json")
    assert main(["train", "--cohort", cohort, "--dataset", "admission", "--learner", "tree", "--seed", "0",
                 "--param", "pruning=0.25", "--out", str(tmp_path)]) == 2
    bad = tmp_path / "synth.json"
    bad.write_text('{"n_admissions": 3}')
    assert main(["synth", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_schema_violation_is_data_error(run_dir, tmp_path):
    tables = tmp_path / "tables"
    tables.mkdir()
    for f in (run_dir / "tables").glob("*.csv"):
        (tables / f.name).write_bytes(f.read_bytes())
    (tables / "patients.csv").write_text("patient_id,sex\n1,M\n")
    assert main(["ingest", "--tables", str(tables), "--out", str(tmp_path / "o")]) == 3


def test_single_class_cohort_is_data_error(tmp_path):
    main(["synth", "--n", "40", "--seed", "1", "--out", str(tmp_path / "t")])
    main(["ingest", "--tables", str(tmp_path / "t"), "--out", str(tmp_path)])
    doc = json.loads((tmp_path / "cohort.json").read_text())
    for case in doc["cases"]:
        case["label"] = 0
    (tmp_path / "cohort.json").write_text(json.dumps(doc))
    assert main(["train", "--cohort", str(tmp_path / "cohort.json"), "--dataset", "admission", "--learner",
                 "logistic", "--seed", "0", "--out", str(tmp_path)]) == 3


def test_stats_and_artifact_hashes(run_dir, tmp_path):
    cohort = str(run_dir / "run" / "cohort.json")
    assert main(["stats", "--cohort", cohort, "--out", str(tmp_path)]) == 0
    assert main(["train", "--cohort", cohort, "--dataset", "demographics", "--learner", "naive_bayes",
                 "--seed", "0", "--out", str(tmp_path)]) == 0
    assert main(["evaluate", "--cohort", cohort, "--dataset", "demographics", "--learner", "stump",
                 "--seed", "0", "--k", "3", "--out", str(tmp_path)]) == 0
    assert json.loads((run_dir / "run" / "cohort.json").read_text())["config_hash"]
    for f in ("table2.csv", "roc_demographics_stump.csv"):
        assert (tmp_path / f).read_text().startswith("# config_hash=")
    assert (run_dir / "run" / "cleaning_report.csv").read_text().startswith("# config_hash=")
    for f in ("model_demographics_naive_bayes.json", "report_demographics_stump.json"):
        assert json.loads((tmp_path / f).read_text())["config_hash"]
    assert "config_hash=" in (tmp_path / "roc_demographics_stump.svg").read_text()
    assert json.loads((run_dir / "tables" / "manifest.json").read_text())["config_hash"]


def test_compare_outputs_and_determinism(run_dir, tmp_path):
    assert _compare(run_dir, tmp_path / "a") == 0
    assert _compare(run_dir, tmp_path / "b") == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert {"compare.csv", "compare.json", "table3.csv", "table4.csv", "figure1.svg"} <= set(files)
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
    with open(tmp_path / "a" / "compare.csv") as fh:
        next(fh), next(fh)
        rows = list(csv.DictReader([line for line in fh]))
    assert len(rows) == 6 * 4
    assert {"dataset", "learner", "accuracy", "auc", "precision", "recall", "f_measure"} <= set(rows[0])


def test_workers_agree_with_serial(run_dir, tmp_path):
    cohort = str(run_dir / "run" / "cohort.json")
    common = ["compare", "--cohort", cohort, "--seed", "1", "--k", "3", "--datasets", "admission", "treatment",
              "--learners", "naive_bayes", "tree", "--no-plot"]
    assert main(common + ["--out", str(tmp_path / "s")]) == 0
    assert main(common + ["--workers", "2", "--out", str(tmp_path / "p")]) == 0
    assert (tmp_path / "s" / "compare.csv").read_bytes() == (tmp_path / "p" / "compare.csv").read_bytes()


def test_output_dir_from_environment(run_dir, tmp_path, monkeypatch):
    monkeypatch.setenv("AMIMORT_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["stats", "--cohort", str(run_dir / "run" / "cohort.json")]) == 0
    assert (tmp_path / "env" / "table2.csv").is_file()


def test_helpers():
    assert parse_params(["epochs=5", "max_features=sqrt", "x=[1, 2]"]) == {
        "epochs": 5, "max_features": "sqrt", "x": [1, 2]}
    with pytest.raises(ContractError):
        parse_params(["epochs"])
    assert join_names(["A"]) == "A"
    assert join_names(["A", "B", "C"]) == "A, B and C"
