import math

import numpy as np
import pandas as pd
import pytest
from scipy.stats import chisquare, norm

from distvae.data_core.schema import ColumnKind, ColumnSpec, Schema
from distvae.data_core.table import ScalingStats
from distvae.data_core.toy import gaussian_table, ordinal_table, toy_schema
from distvae.distvae_model.checkpoint import Checkpoint
from distvae.distvae_model.config import TrainConfig
from distvae.distvae_model.model import DistVAE
from distvae.distvae_model.training import prepare_training_table, train
from distvae.errors import DataError, SchemaError
from distvae.synthesis.cdf import (default_grid, discretize_cdf, discretize_ordinal, estimate_cdf,
                                   export_cdf)
from distvae.synthesis.sampling import (generate, gumbel_max, posterior_means, round_ordinal,
                                        sample_prior)

UNIT_SLOPE_RAW = math.log(math.e - 1.0)


def fixed_checkpoint(schema, scaling, gamma, slope_raw, logits=(), column_summary=None, **config):
    """A checkpoint whose decoder ignores z: every head is its bias."""
    config = TrainConfig.from_mapping({'hidden_width': 4, 'knot_count': 4, **config})
    model = DistVAE.init(schema, config, np.random.default_rng(0))
    for p in model.parameters():
        p.fill(0.0)
    p = len(schema.continuous_indices)
    width = config.knot_count + 1
    bias = model.decoder.layers[-1].bias
    bias[:p] = gamma
    bias[p:p + p * width] = slope_raw
    if len(logits):
        bias[p + p * width:] = logits
    return Checkpoint(schema, scaling, config, model.encoder, model.decoder,
                      column_summary=column_summary or {})


@pytest.fixture
def identity_checkpoint():
    """D(alpha) = alpha for every z: the standardized column is U(0, 1)."""
    schema = Schema((ColumnSpec('x', ColumnKind.CONTINUOUS),))
    slopes = [UNIT_SLOPE_RAW] * 5
    return fixed_checkpoint(schema, ScalingStats.identity(['x']), 0.0, slopes,
                            column_summary={'x': {'p01': 0.01, 'p99': 0.99}})


def test_sample_prior_moments():
    z = sample_prior(100_000, 2, seed=0)
    assert np.all(np.abs(z.mean(axis=0)) < 0.02)
    assert np.all((z.var(axis=0) > 0.97) & (z.var(axis=0) < 1.03))


def test_sample_prior_deterministic_and_single_row():
    assert np.array_equal(sample_prior(5, 3, seed=4), sample_prior(5, 3, seed=4))
    one = sample_prior(1, 2, seed=1)
    assert one.shape == (1, 2) and np.all(np.isfinite(one))


def test_sample_prior_rejects_empty_draw():
    with pytest.raises(DataError):
        sample_prior(0, 2, seed=0)


def test_gumbel_max_degenerate_and_ties():
    rng = np.random.default_rng(0)
    for _ in range(100):
        assert gumbel_max([1.0, 0.0, 0.0], rng.gumbel(size=3)) == 0
    assert gumbel_max([0.25] * 4, np.zeros(4)) == 0


def test_gumbel_max_frequencies():
    n = 100_000
    noise = np.random.default_rng(1).gumbel(size=(n, 2))
    picks = gumbel_max(np.tile([0.3, 0.7], (n, 1)), noise)
    assert np.mean(picks == 1) == pytest.approx(0.7, abs=0.01)


def test_gumbel_max_goodness_of_fit():
    n = 100_000
    pi = np.array([0.2, 0.5, 0.3])
    picks = gumbel_max(np.tile(pi, (n, 1)), np.random.default_rng(2).gumbel(size=(n, 3)))
    observed = np.bincount(picks, minlength=3)
    assert chisquare(observed, pi * n).pvalue > 1e-3


def test_round_ordinal_examples():
    assert round_ordinal(3.4, levels=[1, 2, 3, 4, 5]) == 3.0
    assert round_ordinal(3.4) == 3.0
    assert round_ordinal(3.46, mode='first_decimal') == 3.5
    assert round_ordinal(3.25, mode='first_decimal') == 3.3
    np.testing.assert_array_equal(round_ordinal([0.25, 1.75, -0.25], mode='first_decimal'), [0.3, 1.8, -0.2])
    assert round_ordinal(4.0, levels=[1, 2, 3, 4, 5]) == 4.0
    assert round_ordinal(2.5, levels=[2, 3]) == 2.0


def test_generate_degenerate_quantile_function():
    schema = Schema((ColumnSpec('x', ColumnKind.CONTINUOUS),))
    checkpoint = fixed_checkpoint(schema, ScalingStats(['x'], [10.0], [2.0]), 0.7, [-60.0] * 5)
    table = generate(checkpoint, 50, seed=3)
    np.testing.assert_allclose(table.column('x'), 10.0 + 2.0 * 0.7, atol=1e-9)


def test_generate_contract_and_determinism():
    schema = toy_schema()
    scaling = ScalingStats(['gauss', 'bimodal'], [3.0, 0.0], [1.0, 2.0])
    checkpoint = fixed_checkpoint(schema, scaling, [0.0, 0.0], np.zeros(10), logits=[0.0, 1.0, 2.0])
    first = generate(checkpoint, 200, seed=9)
    assert first.n_rows == 200
    assert set(np.unique(first.column('grade'))) <= {0.0, 1.0, 2.0}
    assert np.array_equal(first.rows, generate(checkpoint, 200, seed=9).rows)
    # each row owns its random stream
    assert np.array_equal(first.rows[:50], generate(checkpoint, 50, seed=9).rows)


def test_generate_zero_rows():
    schema = toy_schema()
    checkpoint = fixed_checkpoint(schema, ScalingStats.identity(['gauss', 'bimodal']), [0.0, 0.0], np.zeros(10))
    assert generate(checkpoint, 0, seed=1).n_rows == 0


def test_generate_rounds_ordinal_columns():
    schema = Schema((ColumnSpec('rating', ColumnKind.ORDINAL),))
    summary = {'rating': {'p01': -1.0, 'p99': 1.0, 'levels': [1.0, 2.0, 3.0]}}
    checkpoint = fixed_checkpoint(schema, ScalingStats(['rating'], [2.0], [1.0]), -1.0,
                                  [math.log(math.expm1(2.0))] * 5, column_summary=summary)
    values = generate(checkpoint, 300, seed=0).column('rating')
    assert set(np.unique(values)) <= {1.0, 2.0, 3.0}

    literal = fixed_checkpoint(schema, ScalingStats(['rating'], [2.0], [1.0]), -1.0,
                               [math.log(math.expm1(2.0))] * 5, column_summary=summary,
                               ordinal_rounding='first_decimal')
    values = generate(literal, 300, seed=0).column('rating')
    np.testing.assert_allclose(values, np.round(values, 1))


def test_estimate_cdf_clamps_and_identity(identity_checkpoint):
    curve = estimate_cdf(identity_checkpoint, 'x', [-1.0, 0.25, 0.5, 2.0], n_mc=20, seed=0)
    np.testing.assert_allclose(curve.values, [0.0, 0.25, 0.5, 1.0], atol=1e-12)


def test_estimate_cdf_monotone_for_random_model():
    schema = toy_schema()
    config = TrainConfig.from_mapping({'hidden_width': 8, 'knot_count': 6})
    model = DistVAE.init(schema, config, np.random.default_rng(5))
    checkpoint = Checkpoint(schema, ScalingStats.identity(['gauss', 'bimodal']), config,
                            model.encoder, model.decoder)
    rng = np.random.default_rng(6)
    for _ in range(5):
        grid = np.sort(rng.normal(0.0, 3.0, size=50))
        curve = estimate_cdf(checkpoint, 'bimodal', grid, n_mc=500, seed=1)
        assert np.all(np.diff(curve.values) >= 0)
        assert np.all((curve.values >= 0) & (curve.values <= 1))


def test_estimate_cdf_mc_one_is_valid(identity_checkpoint):
    curve = estimate_cdf(identity_checkpoint, 'x', np.linspace(0, 1, 11), n_mc=1, seed=0)
    assert curve.values[0] == 0.0 and curve.values[-1] == 1.0


def test_estimate_cdf_rejects_discrete_column():
    schema = toy_schema()
    checkpoint = fixed_checkpoint(schema, ScalingStats.identity(['gauss', 'bimodal']), [0.0, 0.0], np.zeros(10))
    with pytest.raises(SchemaError):
        estimate_cdf(checkpoint, 'grade', [0.0], n_mc=5)


def test_default_grid_spans_training_percentiles(identity_checkpoint):
    grid = default_grid(identity_checkpoint, 'x')
    assert grid.size == 201
    assert (grid[0], grid[-1]) == (0.01, 0.99)


def test_discretize_uniform_cdf():
    def uniform_cdf(x):
        return np.clip(np.asarray(x) / 5.0, 0.0, 1.0)

    result = discretize_cdf(uniform_cdf, [1, 2, 3, 4])
    np.testing.assert_allclose(result.cum_probs, [0.2, 0.4, 0.6, 0.8])


def test_discretize_flat_cdf_is_constant():
    result = discretize_cdf(lambda x: np.full(np.shape(x), 0.3), [1, 2, 3])
    np.testing.assert_array_equal(result.cum_probs, [0.0, 0.0, 0.0])


def test_discretize_repairs_decreasing_estimates():
    def wobbly(x):
        x = np.asarray(x, dtype=float)
        return np.clip(x / 10.0 + 0.08 * np.sin(3.0 * x), 0.0, 1.0)

    result = discretize_cdf(wobbly, np.arange(1, 9))
    assert np.all(np.diff(result.cum_probs) >= 0)
    assert np.all((result.cum_probs >= 0) & (result.cum_probs <= 1))


def test_discretize_rejects_unsorted_levels():
    with pytest.raises(DataError):
        discretize_cdf(lambda x: x, [1, 3, 2])


def test_trained_ordinal_column_uses_observed_levels():
    config = TrainConfig.from_mapping({'epochs': 2, 'batch_size': 64, 'hidden_width': 8, 'seed': 3})
    checkpoint = train(prepare_training_table(ordinal_table(200, seed=1), config), config)
    assert checkpoint.column_summary['rating']['levels'] == [1.0, 2.0, 3.0, 4.0, 5.0]
    values = generate(checkpoint, 100, seed=2).column('rating')
    assert set(values) <= {1.0, 2.0, 3.0, 4.0, 5.0}
    result = discretize_ordinal(checkpoint, 'rating', n_mc=50)
    assert np.all(np.diff(result.cum_probs) >= 0)
    assert 0.0 <= result.cum_probs[-1] <= 1.0


def test_discretize_ordinal_translates_windows():
    # standardized U(0, 1) with stddev 5 is U(0, 5) in native units
    schema = Schema((ColumnSpec('rating', ColumnKind.ORDINAL),))
    checkpoint = fixed_checkpoint(schema, ScalingStats(['rating'], [0.0], [5.0]), 0.0, [UNIT_SLOPE_RAW] * 5)
    result = discretize_ordinal(checkpoint, 'rating', levels=[1, 2, 3, 4], n_mc=10)
    np.testing.assert_allclose(result.cum_probs, [0.2, 0.4, 0.6, 0.8], atol=1e-12)


def test_export_cdf(identity_checkpoint, tmp_path):
    curve = estimate_cdf(identity_checkpoint, 'x', [0.0, 0.5, 1.0], n_mc=5)
    path = tmp_path / 'cdf.csv'
    export_cdf(curve, path, loc=1.0, scale=2.0)
    frame = pd.read_csv(path)
    assert list(frame.columns) == ['x', 'cdf']
    np.testing.assert_allclose(frame['x'], [1.0, 2.0, 3.0])


def test_posterior_means_shape(identity_checkpoint):
    table = gaussian_table(7, seed=0)
    assert posterior_means(identity_checkpoint, table).shape == (7, 2)


@pytest.mark.slow
def test_generate_recovers_gaussian_column():
    table = prepare_training_table(gaussian_table(5000, seed=0, mean=3.0), TrainConfig())
    checkpoint = train(table, TrainConfig.from_mapping({'seed': 1}))
    values = generate(checkpoint, 5000, seed=2).column('x')
    assert values.mean() == pytest.approx(3.0, abs=0.15)
    assert values.std() == pytest.approx(1.0, abs=0.15)


@pytest.mark.slow
def test_estimated_cdf_matches_normal():
    table = prepare_training_table(gaussian_table(5000, seed=3), TrainConfig())
    checkpoint = train(table, TrainConfig.from_mapping({'seed': 4}))
    grid = np.linspace(-2.5, 2.5, 51)
    curve = estimate_cdf(checkpoint, 'x', grid, n_mc=5000, seed=5)
    mean, stddev = checkpoint.scaling.mean[0], checkpoint.scaling.stddev[0]
    assert np.max(np.abs(curve.values - norm.cdf(grid * stddev + mean))) < 0.05
