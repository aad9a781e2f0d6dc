"""Prior sampling, inverse-transform generation and posterior representations."""
import logging

import numpy as np

from distvae.data_core.schema import ColumnKind
from distvae.data_core.table import Table, apply_scaling, destandardize, encode_rows
from distvae.distvae_model.model import decode, encode
from distvae.errors import DataError
from distvae.quantile_spline.spline import spline_eval

logger = logging.getLogger(__name__)


def sample_prior(n, d, seed):
    """n x d matrix of i.i.d. N(0, 1) draws."""
    if n < 1:
        raise DataError(f"sample_prior needs n >= 1, got {n}")
    return np.random.default_rng(seed).standard_normal((n, d))


def gumbel_max(pi, gumbel_noise):
    """argmax_l (log pi_l + G_l); pi_l = 0 never wins, ties go to the lowest index.

    Works on one probability vector or a batch of them (last axis = levels).
    """
    pi = np.asarray(pi, dtype=np.float64)
    with np.errstate(divide='ignore'):
        log_pi = np.where(pi > 0, np.log(np.where(pi > 0, pi, 1.0)), -np.inf)
    choice = np.argmax(log_pi + np.asarray(gumbel_noise, dtype=np.float64), axis=-1)
    return choice if np.ndim(choice) else int(choice)


def round_ordinal(value, levels=None, mode='nearest_level'):
    """Post-process generated ordinal values.

    nearest_level snaps to the closest observed level (the lower one on a
    tie), or to the nearest integer when no levels are known; first_decimal
    rounds half-up to one decimal place.
    """
    value = np.asarray(value, dtype=np.float64)
    if mode == 'first_decimal':
        # half-up; np.round would send 3.25 to 3.2
        out = np.floor(value * 10.0 + 0.5) / 10.0
    elif levels is None or len(levels) == 0:
        out = np.floor(value + 0.5)
    else:
        levels = np.sort(np.asarray(levels, dtype=np.float64))
        out = levels[np.argmin(np.abs(value[..., None] - levels), axis=-1)]
    return out if out.ndim else float(out)


def _row_streams(n, seed, p, n_levels, d):
    """Per-row draws from default_rng([seed, i]) so row i never depends on n."""
    z = np.empty((n, d))
    u = np.empty((n, p))
    g = np.empty((n, n_levels))
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        z[i] = rng.standard_normal(d)
        u[i] = rng.uniform(size=p)
        g[i] = rng.gumbel(size=n_levels)
    return z, u, g


def generate(checkpoint, n, seed):
    """n synthetic rows in native units: prior z, spline quantiles at uniform u, Gumbel-Max."""
    schema = checkpoint.schema
    if n == 0:
        return Table(schema, np.zeros((0, len(schema))))
    model = checkpoint.model()
    cont = schema.continuous_indices
    disc = schema.discrete_indices
    widths = [schema.columns[j].levels for j in disc]
    z, u, g = _row_streams(n, seed, len(cont), sum(widths), model.latent_dim)

    output = decode(model, z)
    rows = np.empty((n, len(schema)))
    if cont:
        rows[:, cont] = spline_eval(output.splines, u)
    start = 0
    for j, pi, width in zip(disc, output.probs, widths):
        rows[:, j] = gumbel_max(pi, g[:, start:start + width])
        start += width

    table = destandardize(Table(schema, rows, checkpoint.scaling), checkpoint.scaling)
    ordinal = [j for j in cont if schema.columns[j].kind is ColumnKind.ORDINAL]
    if ordinal:
        rows = table.rows.copy()
        for j in ordinal:
            name = schema.columns[j].name
            levels = checkpoint.column_summary.get(name, {}).get('levels')
            rows[:, j] = round_ordinal(rows[:, j], levels, checkpoint.config.ordinal_rounding)
        table = Table(schema, rows)
    logger.info(f"Generated {n} rows with seed {seed}")
    return table


def posterior_means(checkpoint, table):
    """Encoder means mu(x) for every row of a native-unit table."""
    scaled = apply_scaling(table, checkpoint.scaling)
    return encode(checkpoint.model(), encode_rows(scaled.rows, checkpoint.schema)).mu
