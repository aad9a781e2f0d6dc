import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from distvae.data_core.schema import Schema
from distvae.errors import DataError, SchemaError
from settings.config import config as default_config

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScalingStats:
    """Per continuous/ordinal column mean and sample standard deviation."""
    names: tuple
    mean: np.ndarray
    stddev: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'names', tuple(self.names))
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        stddev = np.asarray(self.stddev, dtype=np.float64).reshape(-1)
        if not (len(self.names) == mean.size == stddev.size):
            raise SchemaError("scaling stats: names, mean and stddev lengths differ")
        for name, s in zip(self.names, stddev):
            if not (np.isfinite(s) and s > 0):
                raise DataError(f"scaling stats: stddev of column {name} must be > 0, got {s}")
        object.__setattr__(self, 'mean', mean)
        object.__setattr__(self, 'stddev', stddev)

    @classmethod
    def identity(cls, names):
        names = tuple(names)
        return cls(names, np.zeros(len(names)), np.ones(len(names)))

    def to_dict(self):
        return {
            name: {'mean': float(m), 'stddev': float(s)}
            for name, m, s in zip(self.names, self.mean, self.stddev)
        }

    @classmethod
    def from_dict(cls, document):
        names = list(document)
        return cls(
            names,
            [document[n]['mean'] for n in names],
            [document[n]['stddev'] for n in names],
        )


@dataclass(frozen=True)
class Table:
    """Row-major float64 matrix; discrete cells hold level indices."""
    schema: Schema
    rows: np.ndarray
    scaling: ScalingStats = field(default=None)

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.float64, copy=True)
        if rows.ndim == 1 and rows.size == 0:
            rows = rows.reshape(0, len(self.schema))
        if rows.ndim != 2 or rows.shape[1] != len(self.schema):
            raise DataError(
                f"table rows must be n x {len(self.schema)}, got shape {rows.shape}")
        for j in self.schema.discrete_indices:
            col = rows[:, j]
            levels = self.schema.columns[j].levels
            bad = ~((col == np.floor(col)) & (col >= 0) & (col < levels))
            if bad.any():
                i = int(np.argmax(bad))
                raise DataError(
                    f"column {self.schema.columns[j].name}: cell {col[i]} at row {i + 1} "
                    f"is not a level index in [0, {levels})")
        if self.scaling is not None and list(self.scaling.names) != self.schema.continuous_names:
            raise SchemaError("scaling stats do not match the table's continuous columns")
        rows.flags.writeable = False
        object.__setattr__(self, 'rows', rows)

    @property
    def n_rows(self):
        return self.rows.shape[0]

    def column(self, name):
        return self.rows[:, self.schema.index(name)]

    def continuous_block(self):
        return self.rows[:, self.schema.continuous_indices]

    def take(self, indices):
        return Table(self.schema, self.rows[np.asarray(indices, dtype=np.int64)], self.scaling)

    def with_rows(self, rows, scaling=None):
        return Table(self.schema, rows, scaling)


def load_csv(path, schema):
    """Read a UTF-8 CSV whose header matches the schema names in order."""
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False,
                            encoding='utf-8')
    except FileNotFoundError:
        raise DataError(f"data file not found: {path}")
    except pd.errors.EmptyDataError:
        raise DataError(f"data file {path} has no header row")
    except pd.errors.ParserError as err:
        raise DataError(f"data file {path} is malformed: {err}")

    header = list(frame.columns)
    for name in schema.names:
        if name not in header:
            raise DataError(f"missing column {name} in {path}")
    if header != schema.names:
        raise DataError(f"header {header} does not match schema order {schema.names}")

    rows = np.empty((len(frame), len(schema)), dtype=np.float64)
    for j, spec in enumerate(schema.columns):
        cells = frame[spec.name].to_numpy()
        if spec.is_discrete:
            lookup = {label: k for k, label in enumerate(spec.level_labels)}
            for i, cell in enumerate(cells):
                if cell not in lookup:
                    raise DataError(f"unknown level {cell} at row {i + 1} (column {spec.name})")
                rows[i, j] = lookup[cell]
        else:
            values = pd.to_numeric(pd.Series(cells, dtype=object), errors='coerce').to_numpy(dtype=np.float64)
            bad = ~np.isfinite(values)
            if bad.any():
                i = int(np.argmax(bad))
                raise DataError(
                    f"unparseable or missing value '{cells[i]}' at row {i + 1} (column {spec.name})")
            rows[:, j] = values

    logger.info(f"Loaded {len(frame)} rows from {path}")
    return Table(schema, rows)


def table_to_frame(table):
    """DataFrame view with discrete columns mapped back to their labels."""
    data = {}
    for j, spec in enumerate(table.schema.columns):
        col = table.rows[:, j]
        if spec.is_discrete:
            labels = np.array(spec.level_labels, dtype=object)
            data[spec.name] = labels[col.astype(np.int64)]
        else:
            data[spec.name] = col
    return pd.DataFrame(data, columns=table.schema.names)


def write_csv(table, path):
    table_to_frame(table).to_csv(path, index=False, lineterminator='\n')
    logger.info(f"Wrote {table.n_rows} rows to {path}")


def standardize(table):
    """Centre and scale every continuous/ordinal column by its sample std."""
    if table.n_rows < 2:
        raise DataError(f"standardize needs at least 2 rows, got {table.n_rows}")
    block = table.continuous_block()
    mean = block.mean(axis=0)
    stddev = block.std(axis=0, ddof=1)
    for name, s in zip(table.schema.continuous_names, stddev):
        if not s > 0:
            raise DataError(f"column {name} has zero variance")
    stats = ScalingStats(table.schema.continuous_names, mean, stddev)
    return apply_scaling(table, stats), stats


def apply_scaling(table, stats):
    """Standardize with precomputed stats (e.g. test or synthetic data in training units)."""
    _check_stats(table, stats)
    rows = table.rows.copy()
    idx = table.schema.continuous_indices
    rows[:, idx] = (rows[:, idx] - stats.mean) / stats.stddev
    return Table(table.schema, rows, stats)


def destandardize(table, stats):
    _check_stats(table, stats)
    rows = table.rows.copy()
    idx = table.schema.continuous_indices
    rows[:, idx] = rows[:, idx] * stats.stddev + stats.mean
    return Table(table.schema, rows)


def _check_stats(table, stats):
    if list(stats.names) != table.schema.continuous_names:
        raise SchemaError(
            f"scaling stats columns {list(stats.names)} do not match "
            f"table continuous columns {table.schema.continuous_names}")


def one_hot(row, schema):
    """Encoder input for one row: continuous values pass through, discrete columns expand."""
    return encode_rows(np.asarray(row, dtype=np.float64).reshape(1, -1), schema)[0]


def encode_rows(rows, schema):
    rows = np.asarray(rows, dtype=np.float64)
    blocks = []
    for j, spec in enumerate(schema.columns):
        if spec.is_discrete:
            blocks.append(np.eye(spec.levels)[rows[:, j].astype(np.int64)])
        else:
            blocks.append(rows[:, j:j + 1])
    if not blocks:
        return np.zeros((rows.shape[0], 0))
    return np.concatenate(blocks, axis=1)


def train_test_split(table, test_fraction=default_config['test_fraction'], seed=0):
    if not 0 < test_fraction < 1:
        raise DataError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    if table.n_rows < 2:
        raise DataError(f"train_test_split needs at least 2 rows, got {table.n_rows}")
    n_test = int(round(table.n_rows * test_fraction))
    order = np.random.default_rng(seed).permutation(table.n_rows)
    test_idx = np.sort(order[:n_test])
    train_idx = np.sort(order[n_test:])
    return table.take(train_idx), table.take(test_idx)


def trim_percentiles(table, lower=1.0, upper=99.0):
    """Drop rows with any continuous value outside its [lower, upper] percentile range."""
    idx = table.schema.continuous_indices
    if table.n_rows == 0 or not idx:
        return table
    block = table.rows[:, idx]
    lo = np.percentile(block, lower, axis=0)
    hi = np.percentile(block, upper, axis=0)
    keep = np.all((block >= lo) & (block <= hi), axis=1)
    logger.info(f"Percentile trim kept {int(keep.sum())} of {table.n_rows} rows")
    return table.take(np.flatnonzero(keep))
