import json
import math

import numpy as np
import pytest

from distvae.data_core.schema import ColumnKind, ColumnSpec, Schema, load_schema
from distvae.data_core.table import (ScalingStats, Table, destandardize, encode_rows,
                                     load_csv, one_hot, standardize, train_test_split,
                                     trim_percentiles, write_csv)
from distvae.errors import DataError, SchemaError


@pytest.fixture
def age_sex_schema():
    return Schema((
        ColumnSpec('age', ColumnKind.CONTINUOUS),
        ColumnSpec('sex', ColumnKind.DISCRETE, ('M', 'F')),
    ))


@pytest.fixture
def write_file(tmp_path):
    def _write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding='utf-8')
        return str(path)
    return _write


def test_column_spec_invariants():
    with pytest.raises(SchemaError):
        ColumnSpec('x', ColumnKind.DISCRETE, ('only',))
    with pytest.raises(SchemaError):
        ColumnSpec('x', ColumnKind.CONTINUOUS, ('a', 'b'))
    assert ColumnSpec('x', ColumnKind.DISCRETE, ('a', 'b', 'c')).levels == 3
    assert ColumnSpec('x', ColumnKind.ORDINAL).levels is None


def test_load_schema(write_file):
    path = write_file('toy.schema', json.dumps({'columns': [
        {'name': 'age', 'kind': 'continuous'},
        {'name': 'rooms', 'kind': 'ordinal'},
        {'name': 'sex', 'kind': 'discrete', 'levels': ['M', 'F']},
    ]}))
    schema = load_schema(path)
    assert schema.names == ['age', 'rooms', 'sex']
    assert schema.continuous_indices == [0, 1]
    assert schema.discrete_indices == [2]
    assert schema.encoded_width == 4


def test_load_schema_rejects_unknown_kind(write_file):
    path = write_file('bad.schema', json.dumps({'columns': [{'name': 'a', 'kind': 'text'}]}))
    with pytest.raises(SchemaError):
        load_schema(path)


def test_load_csv_maps_labels(age_sex_schema, write_file):
    path = write_file('toy.csv', 'age,sex\n30,M\n40,F\n')
    table = load_csv(path, age_sex_schema)
    np.testing.assert_array_equal(table.rows, [[30, 0], [40, 1]])


def test_load_csv_unknown_level(age_sex_schema, write_file):
    path = write_file('toy.csv', 'age,sex\n30,X\n')
    with pytest.raises(DataError, match='unknown level X at row 1'):
        load_csv(path, age_sex_schema)


def test_load_csv_header_only(age_sex_schema, write_file):
    table = load_csv(write_file('empty.csv', 'age,sex\n'), age_sex_schema)
    assert table.n_rows == 0


def test_load_csv_missing_column(age_sex_schema, write_file):
    with pytest.raises(DataError, match='missing column sex'):
        load_csv(write_file('toy.csv', 'age\n30\n'), age_sex_schema)


def test_load_csv_unparseable_cell(age_sex_schema, write_file):
    with pytest.raises(DataError, match='row 2'):
        load_csv(write_file('toy.csv', 'age,sex\n30,M\nabc,F\n'), age_sex_schema)


def test_load_csv_ragged_row(age_sex_schema, write_file):
    with pytest.raises(DataError, match='malformed'):
        load_csv(write_file('toy.csv', 'age,sex\n30,M\n40,F,extra\n'), age_sex_schema)


def test_load_csv_rejects_missing_value(age_sex_schema, write_file):
    with pytest.raises(DataError):
        load_csv(write_file('toy.csv', 'age,sex\n,M\n'), age_sex_schema)


def test_write_csv_emits_labels(age_sex_schema, tmp_path):
    path = tmp_path / 'out.csv'
    write_csv(Table(age_sex_schema, [[30.5, 1], [41.0, 0]]), str(path))
    lines = path.read_text(encoding='utf-8').splitlines()
    assert lines == ['age,sex', '30.5,F', '41.0,M']


def test_table_rejects_bad_discrete_cell(age_sex_schema):
    with pytest.raises(DataError):
        Table(age_sex_schema, [[1.0, 2.0]])
    with pytest.raises(DataError):
        Table(age_sex_schema, [[1.0, 0.5]])


def test_standardize_hand_values():
    schema = Schema((ColumnSpec('x', ColumnKind.CONTINUOUS),))
    scaled, stats = standardize(Table(schema, [[1.0], [3.0]]))
    np.testing.assert_allclose(scaled.rows[:, 0], [-1 / math.sqrt(2), 1 / math.sqrt(2)])
    assert stats.mean[0] == pytest.approx(2.0)
    assert stats.stddev[0] == pytest.approx(math.sqrt(2))


def test_standardize_is_idempotent():
    schema = Schema((ColumnSpec('x', ColumnKind.CONTINUOUS),))
    rng = np.random.default_rng(3)
    once, _ = standardize(Table(schema, rng.normal(5, 2, size=(50, 1))))
    _, stats = standardize(once)
    assert stats.mean[0] == pytest.approx(0.0, abs=1e-12)
    assert stats.stddev[0] == pytest.approx(1.0)


def test_standardize_zero_variance():
    schema = Schema((ColumnSpec('flat', ColumnKind.CONTINUOUS),))
    with pytest.raises(DataError, match='flat'):
        standardize(Table(schema, [[5.0], [5.0], [5.0]]))


def test_standardize_leaves_discrete_alone(age_sex_schema):
    scaled, _ = standardize(Table(age_sex_schema, [[1.0, 1], [3.0, 0], [8.0, 1]]))
    np.testing.assert_array_equal(scaled.rows[:, 1], [1, 0, 1])


def test_destandardize_inverse_and_identity():
    schema = Schema((ColumnSpec('x', ColumnKind.CONTINUOUS),))
    stats = ScalingStats(['x'], [2.0], [math.sqrt(2)])
    back = destandardize(Table(schema, [[-1 / math.sqrt(2)], [1 / math.sqrt(2)]]), stats)
    np.testing.assert_allclose(back.rows[:, 0], [1.0, 3.0])
    table = Table(schema, [[0.25], [7.0]])
    np.testing.assert_array_equal(destandardize(table, ScalingStats.identity(['x'])).rows, table.rows)


def test_standardize_round_trip():
    schema = Schema((
        ColumnSpec('a', ColumnKind.CONTINUOUS),
        ColumnSpec('b', ColumnKind.ORDINAL),
        ColumnSpec('c', ColumnKind.DISCRETE, ('x', 'y', 'z')),
    ))
    rng = np.random.default_rng(11)
    rows = np.column_stack([rng.normal(100, 30, 100), rng.integers(0, 9, 100),
                            rng.integers(0, 3, 100)])
    table = Table(schema, rows)
    scaled, stats = standardize(table)
    assert np.max(np.abs(destandardize(scaled, stats).rows - rows)) < 1e-9


def test_destandardize_mismatch():
    schema = Schema((ColumnSpec('x', ColumnKind.CONTINUOUS),))
    with pytest.raises(SchemaError):
        destandardize(Table(schema, [[1.0]]), ScalingStats(['y'], [0.0], [1.0]))


def test_one_hot_examples():
    schema = Schema((
        ColumnSpec('x', ColumnKind.CONTINUOUS),
        ColumnSpec('c', ColumnKind.DISCRETE, ('a', 'b', 'c')),
    ))
    np.testing.assert_array_equal(one_hot([1.5, 2], schema), [1.5, 0, 0, 1])

    schema = Schema((
        ColumnSpec('x', ColumnKind.CONTINUOUS),
        ColumnSpec('c', ColumnKind.DISCRETE, ('a', 'b')),
        ColumnSpec('d', ColumnKind.DISCRETE, ('a', 'b')),
    ))
    np.testing.assert_array_equal(one_hot([0.0, 0, 1], schema), [0, 1, 0, 0, 1])

    schema = Schema((ColumnSpec('x', ColumnKind.CONTINUOUS), ColumnSpec('y', ColumnKind.ORDINAL)))
    np.testing.assert_array_equal(one_hot([0.3, -2.0], schema), [0.3, -2.0])


def test_encode_rows_blocks_sum_to_one():
    schema = Schema((
        ColumnSpec('x', ColumnKind.CONTINUOUS),
        ColumnSpec('c', ColumnKind.DISCRETE, ('a', 'b', 'c', 'd')),
    ))
    rng = np.random.default_rng(0)
    rows = np.column_stack([rng.normal(size=20), rng.integers(0, 4, 20)])
    encoded = encode_rows(rows, schema)
    assert encoded.shape == (20, 5)
    np.testing.assert_array_equal(encoded[:, 1:].sum(axis=1), np.ones(20))


def test_train_test_split_sizes_and_determinism():
    schema = Schema((ColumnSpec('x', ColumnKind.CONTINUOUS),))
    table = Table(schema, np.arange(10.0).reshape(-1, 1))
    train, test = train_test_split(table, 0.2, seed=7)
    assert (train.n_rows, test.n_rows) == (8, 2)
    assert set(train.rows[:, 0]).isdisjoint(test.rows[:, 0])
    assert set(train.rows[:, 0]) | set(test.rows[:, 0]) == set(range(10))

    train2, test2 = train_test_split(table, 0.2, seed=7)
    np.testing.assert_array_equal(train.rows, train2.rows)
    np.testing.assert_array_equal(test.rows, test2.rows)


@pytest.mark.parametrize('fraction', [0.0, 1.0, -0.1])
def test_train_test_split_fraction_out_of_range(fraction):
    schema = Schema((ColumnSpec('x', ColumnKind.CONTINUOUS),))
    with pytest.raises(DataError):
        train_test_split(Table(schema, [[1.0], [2.0]]), fraction, seed=0)


def test_trim_percentiles_drops_tails():
    schema = Schema((ColumnSpec('x', ColumnKind.CONTINUOUS),))
    table = Table(schema, np.arange(1000.0).reshape(-1, 1))
    trimmed = trim_percentiles(table)
    assert trimmed.rows.min() >= 9.0
    assert trimmed.rows.max() <= 990.0
    assert trimmed.n_rows < table.n_rows
