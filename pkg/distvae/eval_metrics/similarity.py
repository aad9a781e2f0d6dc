"""Statistical similarity between real and synthetic tables."""
import logging

import numpy as np
from scipy.stats import contingency, ks_2samp, wasserstein_distance

from distvae.errors import MetricError, SchemaError

logger = logging.getLogger(__name__)


def _samples(a, b, what):
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.size == 0 or b.size == 0:
        raise MetricError(f"{what} needs two non-empty samples, got sizes {a.size} and {b.size}")
    return a, b


def ks_statistic(a, b):
    """sup_x |F_a(x) - F_b(x)| over the empirical CDFs."""
    a, b = _samples(a, b, 'ks_statistic')
    return float(ks_2samp(a, b, method='asymp').statistic)


def wasserstein1(a, b):
    """Area between the two empirical CDF step functions."""
    a, b = _samples(a, b, 'wasserstein1')
    return float(wasserstein_distance(a, b))


def _pearson(x, y, names):
    if np.std(x) == 0 or np.std(y) == 0:
        logger.warning(f"Zero-variance column in pair {names}; association set to 0")
        return 0.0
    return float(np.corrcoef(x, y)[0, 1])


def correlation_ratio(values, labels, names=('', '')):
    """eta: share of the variance of values explained by the label means."""
    values = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels).astype(np.int64)
    total = np.sum((values - values.mean()) ** 2)
    if total == 0 or np.unique(labels).size < 2:
        logger.warning(f"Degenerate pair {names} for the correlation ratio; association set to 0")
        return 0.0
    counts = np.bincount(labels)
    sums = np.bincount(labels, weights=values)
    present = counts > 0
    means = sums[present] / counts[present]
    between = np.sum(counts[present] * (means - values.mean()) ** 2)
    return float(np.sqrt(between / total))


def cramers_v(a, b, names=('', '')):
    table = contingency.crosstab(np.asarray(a).astype(np.int64), np.asarray(b).astype(np.int64)).count
    if min(table.shape) < 2:
        logger.warning(f"Single-level column in pair {names}; association set to 0")
        return 0.0
    return float(contingency.association(table, method='cramer'))


def association_matrix(table):
    """Mixed-type association: Pearson, correlation ratio or Cramer's V by column kinds."""
    columns = table.schema.columns
    m = len(columns)
    out = np.eye(m)
    for i in range(m):
        for j in range(i + 1, m):
            x, y = table.rows[:, i], table.rows[:, j]
            names = (columns[i].name, columns[j].name)
            if not columns[i].is_discrete and not columns[j].is_discrete:
                value = _pearson(x, y, names)
            elif columns[i].is_discrete and columns[j].is_discrete:
                value = cramers_v(x, y, names)
            elif columns[i].is_discrete:
                value = correlation_ratio(y, x, names)
            else:
                value = correlation_ratio(x, y, names)
            out[i, j] = out[j, i] = value
    return out


def correlation_distance(real, synth):
    """Frobenius distance between the association matrices of two tables."""
    if real.schema != synth.schema:
        raise SchemaError("correlation_distance needs tables with the same schema")
    if real.n_rows < 2 or synth.n_rows < 2:
        raise MetricError("correlation_distance needs at least 2 rows per table")
    return float(np.linalg.norm(association_matrix(real) - association_matrix(synth)))
