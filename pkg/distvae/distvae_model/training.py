import logging

import numpy as np

from distvae.data_core.schema import ColumnKind
from distvae.data_core.table import destandardize, standardize, trim_percentiles
from distvae.distvae_model.checkpoint import Checkpoint
from distvae.distvae_model.model import DistVAE, LossBreakdown, elbo_loss_and_grad
from distvae.errors import DataError, NonFiniteError
from distvae.nn_core.adam import AdamState, adam_step

logger = logging.getLogger(__name__)

LEVEL_DECIMALS = 9


def prepare_training_table(table, config):
    """Optional percentile trim, then standardization with the table's own stats."""
    if config.clip_percentiles:
        table = trim_percentiles(table)
    standardized, _ = standardize(table)
    return standardized


def column_summary(table):
    """Per continuous/ordinal column: 1%/99% standardized percentiles and ordinal levels."""
    native = destandardize(table, table.scaling)
    summary = {}
    for j in table.schema.continuous_indices:
        spec = table.schema.columns[j]
        values = table.rows[:, j]
        entry = {'p01': float(np.percentile(values, 1)), 'p99': float(np.percentile(values, 99))}
        if spec.kind is ColumnKind.ORDINAL:
            # undoing the scaling leaves ulp-level noise on the native levels
            entry['levels'] = [float(v) for v in np.unique(np.round(native.rows[:, j], LEVEL_DECIMALS))]
        summary[spec.name] = entry
    return summary


def train(table, config, on_epoch=None):
    """Fit a DistVAE on a standardized table with minibatch Adam.

    A single generator seeded from config.seed drives initialization, the
    per-epoch shuffles and the reparameterization noise, so a run is fully
    determined by (table, config). The final partial batch is kept.
    """
    if table.scaling is None:
        raise DataError("train expects a standardized table (see prepare_training_table)")
    if table.n_rows == 0:
        raise DataError("cannot train on an empty table")

    rng = np.random.default_rng(config.seed)
    model = DistVAE.init(table.schema, config, rng)
    params = model.parameters()
    state = AdamState.create(params, config.learning_rate, config.adam_beta1, config.adam_beta2,
                             config.adam_eps)
    n = table.n_rows
    logger.info(f"Training on {n} rows, {model.encoder.n_parameters() + model.decoder.n_parameters()} "
                f"parameters, {config.epochs} epochs")

    loss_trace = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        sums = np.zeros(3)
        for batch_index, start in enumerate(range(0, n, config.batch_size)):
            rows = table.rows[order[start:start + config.batch_size]]
            noise = rng.standard_normal((rows.shape[0], config.latent_dim))
            try:
                loss, tape = elbo_loss_and_grad(model, rows, noise)
                adam_step(params, tape, state)
            except NonFiniteError as err:
                raise NonFiniteError(f"training diverged at epoch {epoch}, batch {batch_index}: {err}")
            sums += rows.shape[0] * np.array([loss.crps_recon, loss.discrete_recon, loss.kl])

        epoch_loss = LossBreakdown.compose(*(sums / n), config.beta)
        loss_trace.append({'epoch': epoch, **epoch_loss.to_dict()})
        logger.info(f"Epoch {epoch}: total={epoch_loss.total:.6f} crps={epoch_loss.crps_recon:.6f} "
                    f"discrete={epoch_loss.discrete_recon:.6f} kl={epoch_loss.kl:.6f}")
        if on_epoch is not None:
            on_epoch(epoch, epoch_loss)

    return Checkpoint(
        schema=table.schema,
        scaling=table.scaling,
        config=config,
        encoder=model.encoder,
        decoder=model.decoder,
        loss_trace=loss_trace,
        column_summary=column_summary(table),
    )
