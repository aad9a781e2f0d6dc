"""Monte-Carlo estimate of the model's marginal CDF and its discretization for ordinal columns.

F(x) = E_z[ D^{-1}(x | z) ] over prior draws z, which is non-decreasing in x
because every inverse spline is.
"""
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from distvae.data_core.schema import ColumnKind
from distvae.distvae_model.model import decode
from distvae.errors import CheckpointError, DataError, SchemaError
from distvae.quantile_spline.spline import SplineCoeffs, spline_inverse
from distvae.synthesis.sampling import sample_prior
from settings.config import config as default_config

logger = logging.getLogger(__name__)

MC_CHUNK = 1000


@dataclass(frozen=True)
class CdfCurve:
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=np.float64).reshape(-1)
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if grid.size != values.size:
            raise DataError(f"CDF grid has {grid.size} points but {values.size} values")
        if np.any(np.diff(grid) < 0):
            raise DataError("CDF grid must be ascending")
        object.__setattr__(self, 'grid', grid)
        object.__setattr__(self, 'values', values)


@dataclass(frozen=True)
class DiscretizedCdf:
    levels: np.ndarray
    cum_probs: np.ndarray


def continuous_position(schema, column):
    spec = schema.column(column)
    if spec.is_discrete:
        raise SchemaError(f"column {column} is discrete; the CDF is defined for continuous/ordinal columns")
    return schema.continuous_names.index(column)


def estimate_cdf(checkpoint, column, grid, n_mc=default_config['cdf_mc_samples'], seed=0):
    """Estimated CDF of one continuous/ordinal column on a grid in standardized units."""
    position = continuous_position(checkpoint.schema, column)
    grid = np.asarray(grid, dtype=np.float64).reshape(-1)
    if np.any(np.diff(grid) < 0):
        raise DataError("CDF grid must be ascending")
    model = checkpoint.model()
    z = sample_prior(n_mc, model.latent_dim, seed)

    total = np.zeros(grid.size)
    for start in range(0, n_mc, MC_CHUNK):
        spline = decode(model, z[start:start + MC_CHUNK]).spline(position)
        coeffs = SplineCoeffs(spline.gamma[:, None], spline.b[:, None, :], spline.knots)
        alpha, _ = spline_inverse(coeffs, grid[None, :])
        total += np.sum(alpha, axis=0)
    # rounding at knot images may leave 1-ulp dips
    values = np.clip(np.maximum.accumulate(total / n_mc), 0.0, 1.0)
    return CdfCurve(grid, values)


def default_grid(checkpoint, column, points=default_config['cdf_grid_points']):
    """points values spanning the column's 1%-99% training range, standardized units."""
    continuous_position(checkpoint.schema, column)
    summary = checkpoint.column_summary.get(column)
    if summary is None:
        raise CheckpointError(f"checkpoint has no training summary for column {column}")
    return np.linspace(summary['p01'], summary['p99'], points)


def discretize_cdf(cdf, levels):
    """Cumulative probabilities of ordered integer-spaced levels from an evaluable CDF.

    Each level takes the mass of its +-0.5 window, the running sum is the
    discretized CDF, and a running maximum repairs any decreasing step.
    """
    levels = np.asarray(levels, dtype=np.float64).reshape(-1)
    if levels.size == 0 or np.any(np.diff(levels) <= 0):
        raise DataError("levels must be non-empty and strictly increasing")
    upper = np.asarray(cdf(levels + 0.5), dtype=np.float64)
    lower = np.asarray(cdf(levels - 0.5), dtype=np.float64)
    cum_probs = np.cumsum(upper - lower)
    cum_probs = np.clip(np.maximum.accumulate(cum_probs), 0.0, 1.0)
    return DiscretizedCdf(levels, cum_probs)


def discretize_ordinal(checkpoint, column, levels=None, n_mc=default_config['cdf_mc_samples'], seed=0):
    """discretize_cdf on a trained ordinal column, windows taken in native units."""
    spec = checkpoint.schema.column(column)
    if spec.kind is not ColumnKind.ORDINAL:
        raise SchemaError(f"column {column} is not ordinal")
    if levels is None:
        levels = checkpoint.column_summary.get(column, {}).get('levels')
        if not levels:
            raise CheckpointError(f"checkpoint records no observed levels for column {column}")
    k = list(checkpoint.scaling.names).index(column)
    mean, stddev = checkpoint.scaling.mean[k], checkpoint.scaling.stddev[k]

    def native_cdf(x):
        return estimate_cdf(checkpoint, column, (np.asarray(x) - mean) / stddev, n_mc, seed).values

    return discretize_cdf(native_cdf, levels)


def export_cdf(curve, path, loc=0.0, scale=1.0):
    """Two-column CSV (x, cdf); loc/scale map the standardized grid back to native units."""
    frame = pd.DataFrame({'x': curve.grid * scale + loc, 'cdf': curve.values})
    frame.to_csv(path, index=False, lineterminator='\n')
    logger.info(f"Wrote {curve.grid.size}-point CDF to {path}")
