import numpy as np
import pytest

from amimort.core import ContractError
from amimort.features import (DATASET_KINDS, GROUPS, build_dataset, encode_categorical, fit_schema,
                              fit_standardizer, read_feature_matrix, write_feature_matrix)


@pytest.fixture(scope="module")
def datasets(small_cohort):
    cases, _ = small_cohort
    return {kind: build_dataset(cases, kind) for kind in DATASET_KINDS}


def test_fixed_width_groups(datasets):
    assert len(datasets["treatment"].schema) == 21
    assert len(datasets["diagnostic"].schema) == 13
    assert len(datasets["lab_chart"].schema) == 36


def test_combined_is_union_of_groups(datasets):
    combined = datasets["combined"]
    assert len(combined.schema) == sum(len(datasets[g].schema) for g in GROUPS)
    for g in GROUPS:
        cols = combined.schema.group_columns(g)
        np.testing.assert_array_equal(combined.rows[:, cols], datasets[g].rows)
        assert [combined.schema.names[i] for i in cols] == datasets[g].schema.names


def test_onehot_rows_sum_to_one(datasets):
    adm = datasets["admission"]
    month = [i for i, f in enumerate(adm.schema.features) if f.field == "admission_month"]
    np.testing.assert_array_equal(adm.rows[:, month].sum(axis=1), 1.0)


def test_missing_mask(datasets):
    lab = datasets["lab_chart"]
    assert lab.missing_mask.any()
    np.testing.assert_array_equal(lab.missing_mask, np.isnan(lab.rows))


def test_unseen_level_is_all_zero(datasets):
    schema = datasets["demographics"].schema
    assert encode_categorical(schema, "gender", "Q").sum() == 0
    v = encode_categorical(schema, "gender", "F")
    assert v.sum() == 1 and schema.levels("gender")[int(np.argmax(v))] == "F"
    with pytest.raises(ContractError):
        encode_categorical(schema, "age", "3")


def test_schema_reuse_on_other_cases(small_cohort):
    cases, _ = small_cohort
    schema = fit_schema(cases[:50], "demographics")
    data = build_dataset(cases[50:], "demographics", schema)
    assert data.schema is schema


def test_unknown_kind(small_cohort):
    with pytest.raises(ContractError):
        build_dataset(small_cohort[0], "vitals")
    with pytest.raises(ContractError):
        build_dataset([], "admission")


def test_standardizer_example():
    st = fit_standardizer(np.array([[2.0, 5.0], [4.0, 5.0], [6.0, np.nan]]))
    out = st.apply(np.array([[2.0, 5.0], [4.0, 5.0], [6.0, 5.0]]))
    np.testing.assert_allclose(out[:, 0], [-1.224744871391589, 0, 1.224744871391589], atol=1e-12)
    np.testing.assert_array_equal(out[:, 1], 0.0)
    assert st.apply(np.array([[np.nan, np.nan]]))[0, 0] == 0.0


def test_standardizer_moments():
    X = np.random.default_rng(0).normal(3, 2, size=(200, 4))
    Z = fit_standardizer(X).apply(X)
    np.testing.assert_allclose(Z.mean(axis=0), 0, atol=1e-10)
    np.testing.assert_allclose(Z.std(axis=0), 1, atol=1e-10)


def test_standardizer_uses_train_rows_only():
    train = np.array([[0.0], [2.0]])
    st = fit_standardizer(train)
    np.testing.assert_allclose(st.apply(np.array([[100.0]])), [[99.0]])


def test_feature_matrix_round_trip(tmp_path, datasets):
    fm = datasets["combined"]
    write_feature_matrix(fm, tmp_path / "fm.csv", ["config_hash=x"])
    back = read_feature_matrix(tmp_path / "fm.csv")
    assert back.schema.names == fm.schema.names
    np.testing.assert_array_equal(back.missing_mask, fm.missing_mask)
    np.testing.assert_array_equal(np.nan_to_num(back.rows), np.nan_to_num(fm.rows))
    np.testing.assert_array_equal(back.labels, fm.labels)
    np.testing.assert_array_equal(back.schema.numeric_mask(), fm.schema.numeric_mask())
