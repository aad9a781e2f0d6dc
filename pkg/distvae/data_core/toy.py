"""Small synthetic datasets with known marginals, for smoke runs and tests."""
import logging

import numpy as np

from distvae.data_core.schema import ColumnKind, ColumnSpec, Schema
from distvae.data_core.table import Table

logger = logging.getLogger(__name__)

TOY_LEVELS = ('low', 'mid', 'high')
# P(level | mixture component): component 0 favours 'low', component 1 'high'
TOY_LEVEL_PROBS = np.array([[0.9, 0.08, 0.02],
                            [0.02, 0.08, 0.9]])


def toy_schema():
    return Schema((
        ColumnSpec('gauss', ColumnKind.CONTINUOUS),
        ColumnSpec('bimodal', ColumnKind.CONTINUOUS),
        ColumnSpec('grade', ColumnKind.DISCRETE, TOY_LEVELS),
    ))


def make_toy_table(n, seed):
    """gauss ~ N(3, 1); bimodal is an equal mix of N(-2, 0.5^2) and N(2, 0.5^2);
    grade depends on the bimodal component, marginally (0.46, 0.08, 0.46)."""
    rng = np.random.default_rng(seed)
    component = rng.integers(0, 2, size=n)
    gauss = rng.normal(3.0, 1.0, size=n)
    bimodal = rng.normal(np.where(component == 1, 2.0, -2.0), 0.5)
    u = rng.uniform(size=n)
    grade = np.sum(u[:, None] > np.cumsum(TOY_LEVEL_PROBS[component], axis=1)[:, :-1], axis=1)
    return Table(toy_schema(), np.column_stack([gauss, bimodal, grade.astype(np.float64)]))


def gaussian_table(n, seed, mean=0.0, stddev=1.0, name='x'):
    """One continuous column drawn from N(mean, stddev^2)."""
    rng = np.random.default_rng(seed)
    schema = Schema((ColumnSpec(name, ColumnKind.CONTINUOUS),))
    return Table(schema, rng.normal(mean, stddev, size=(n, 1)))


def ordinal_table(n, seed, levels=(1, 2, 3, 4, 5), name='rating'):
    """One ordinal column with values drawn uniformly from the given integer levels."""
    rng = np.random.default_rng(seed)
    schema = Schema((ColumnSpec(name, ColumnKind.ORDINAL),))
    return Table(schema, rng.choice(np.asarray(levels, dtype=np.float64), size=(n, 1)))
