import pytest

from amimort.ingest import load_tables, prepare_cohort
from amimort.synthgen import SynthConfig, generate

from helpers import ACCEPTANCE


@pytest.fixture(scope="session")
def small_tables(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    generate(SynthConfig(n_admissions=400, non_cohort_admissions=30, seed=11), out)
    return out


@pytest.fixture(scope="session")
def small_cohort(small_tables):
    cases, report = prepare_cohort(load_tables(small_tables))
    return cases, report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
