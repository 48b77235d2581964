import json

import numpy as np
import pytest

from amimort.core import ContractError, recorded_age
from amimort.evaluate import cross_validate
from amimort.features import build_dataset
from amimort.ingest import default_clean_config, load_tables, prepare_cohort
from amimort.learners import LearnerSpec
from amimort.preprocess import RULES
from amimort.synthgen import (SYNTH_FORMAT, SynthConfig, _draw_cohort, bundled_config, generate, generate_tables,
                              group_scores, load_config)


def test_exact_positive_count():
    cfg = SynthConfig(n_admissions=900, positive_rate=0.3, seed=2)
    _, labels = generate_tables(cfg)
    assert labels.size == 900 and labels.sum() == cfg.n_positive == 270


def test_default_counts_match_cohort_size():
    cfg = SynthConfig()
    assert (cfg.n_admissions, cfg.n_positive) == (5436, 1629)


def test_manifest_and_determinism(tmp_path):
    cfg = SynthConfig(n_admissions=120, non_cohort_admissions=5, seed=9)
    a = generate(cfg, tmp_path / "a")
    b = generate(cfg, tmp_path / "b")
    for name in a:
        assert a[name].read_bytes() == b[name].read_bytes()
    assert (tmp_path / "a" / "manifest.json").read_bytes() == (tmp_path / "b" / "manifest.json").read_bytes()
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["format"] == SYNTH_FORMAT
    assert manifest["config_hash"] == cfg.hash()
    assert SynthConfig.from_dict(manifest["config"]) == cfg
    other = generate(SynthConfig(n_admissions=120, non_cohort_admissions=5, seed=10), tmp_path / "c")
    assert other["admissions"].read_bytes() != a["admissions"].read_bytes()


def test_ingested_labels_equal_planted(small_tables, small_cohort):
    manifest = json.loads((small_tables / "manifest.json").read_text())
    _, planted = generate_tables(SynthConfig.from_dict(manifest["config"]))
    cases, _ = small_cohort
    assert [int(c.label) for c in cases] == planted.tolist()


def test_no_masked_ages_when_disabled(tmp_path):
    generate(SynthConfig(n_admissions=200, masked_age_fraction=0.0, seed=4), tmp_path)
    tables = load_tables(tmp_path)
    patients = {p.patient_id: p for p in tables.patients}
    ages = [recorded_age(patients[a.patient_id].date_of_birth, a.admit_time) for a in tables.admissions]
    assert max(ages) <= 200


def test_masked_ages_restored(tmp_path):
    generate(SynthConfig(n_admissions=300, masked_age_fraction=0.2, non_cohort_admissions=0, seed=4), tmp_path)
    tables = load_tables(tmp_path)
    patients = {p.patient_id: p for p in tables.patients}
    raw = [recorded_age(patients[a.patient_id].date_of_birth, a.admit_time) for a in tables.admissions]
    assert sum(r > 200 for r in raw) > 20
    cases, _ = prepare_cohort(tables)
    assert max(c.age_at_admission for c in cases) < 110


def test_every_cleaning_rule_fires(small_tables):
    tables = load_tables(small_tables)
    _, report = prepare_cohort(tables, default_clean_config(tables.lab_items, remove_outliers=True))
    assert all(report.counts[r] > 0 for r in RULES), report.counts


def test_non_cohort_rows_excluded(small_tables, small_cohort):
    tables = load_tables(small_tables)
    cases, _ = small_cohort
    assert len(tables.admissions) == 430 and len(cases) == 400


def test_config_validation(tmp_path):
    with pytest.raises(ContractError):
        SynthConfig(positive_rate=1.0)
    with pytest.raises(ContractError):
        SynthConfig(signal={"vitals": 1.0})
    with pytest.raises(ContractError):
        SynthConfig.from_dict({"n_admissions": 100, "colour": "red"})
    path = tmp_path / "c.json"
    path.write_text("{not json")
    with pytest.raises(ContractError):
        load_config(path)
    assert bundled_config("high_signal").strength("lab_chart") > bundled_config("default").strength("lab_chart")
    with pytest.raises(ContractError):
        bundled_config("nope")


@pytest.fixture(scope="module")
def lab_only_cases(tmp_path_factory):
    out = tmp_path_factory.mktemp("lab_only")
    generate(SynthConfig(signal={"lab_chart": 4.0}, seed=7), out)
    return prepare_cohort(load_tables(out))[0]


@pytest.mark.slow
def test_signal_lands_in_the_planted_group(lab_only_cases):
    spec = LearnerSpec("logistic", {"max_iter": 500})
    lab = cross_validate(spec, build_dataset(lab_only_cases, "lab_chart"), k=10, seed=0).auc
    diag = cross_validate(spec, build_dataset(lab_only_cases, "diagnostic"), k=10, seed=0).auc
    assert lab >= 0.85
    assert abs(diag - 0.5) <= 0.05


def test_extreme_signal_gives_threshold_labels():
    # at very large strengths the labels must follow the planted score, not admission order
    cfg = SynthConfig(n_admissions=600, signal={"diagnostic": 200.0}, seed=9)
    _, labels = generate_tables(cfg)
    cohort = _draw_cohort(cfg, np.random.default_rng(cfg.seed))
    score = group_scores(cohort, np.random.default_rng([cfg.seed, 1]))["diagnostic"]
    cut = np.sort(score)[::-1][cfg.n_positive - 1]
    # labels stay Bernoulli draws, so cases within a hair of the cut-off can land either way
    assert np.mean((score >= cut).astype(int) == labels) >= 0.99


@pytest.mark.slow
def test_extreme_signal_cohort_is_learnable(tmp_path):
    generate(SynthConfig(n_admissions=1000, signal={"diagnostic": 200.0}, seed=9), tmp_path)
    cases, _ = prepare_cohort(load_tables(tmp_path))
    rep = cross_validate(LearnerSpec("logistic"), build_dataset(cases, "diagnostic"), k=10, seed=0)
    assert rep.auc >= 0.99
