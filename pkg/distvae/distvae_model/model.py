"""The DistVAE networks and the training objective.

The encoder maps the one-hot encoded row to (mu, log sigma^2). The decoder
maps z to one head block per column kind, laid out as

    [gamma_raw (p) | slope_raw (p * (M+1)) | logits of each discrete column]

where p is the number of continuous/ordinal columns and M the knot count.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import log_softmax, softmax

from distvae.data_core.table import encode_rows
from distvae.errors import NonFiniteError, ShapeError
from distvae.nn_core.layers import Activation, GradientTape, Mlp, mlp_backward, mlp_forward
from distvae.quantile_spline.spline import (SplineCoeffs, build_spline, build_spline_backward,
                                            crps_grad, crps_loss, standard_normal_heads, uniform_knots)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LatentGaussian:
    mu: np.ndarray
    log_var: np.ndarray

    @property
    def sigma(self):
        return np.exp(0.5 * self.log_var)


@dataclass(frozen=True)
class DecoderOutput:
    """Splines for the continuous/ordinal columns and pi vectors for the discrete ones.

    splines.gamma is (n, p), splines.b is (n, p, M+1); probs holds one (n, T_j)
    array per discrete column in schema order.
    """
    splines: SplineCoeffs
    probs: tuple

    def spline(self, j):
        return self.splines.column(j)


@dataclass(frozen=True)
class LossBreakdown:
    crps_recon: float
    discrete_recon: float
    kl: float
    total: float

    @classmethod
    def compose(cls, crps_recon, discrete_recon, kl, beta):
        crps_recon, discrete_recon, kl = float(crps_recon), float(discrete_recon), float(kl)
        return cls(crps_recon, discrete_recon, kl, crps_recon + discrete_recon + beta * kl)

    def to_dict(self):
        return {'crps_recon': self.crps_recon, 'discrete_recon': self.discrete_recon,
                'kl': self.kl, 'total': self.total}


@dataclass
class DistVAE:
    schema: object
    config: object
    encoder: Mlp
    decoder: Mlp

    def __post_init__(self):
        expected_enc = self.encoder_sizes(self.schema, self.config)
        expected_dec = self.decoder_sizes(self.schema, self.config)
        for net, sizes in ((self.encoder, expected_enc), (self.decoder, expected_dec)):
            actual = [net.input_size] + [layer.fan_out for layer in net.layers]
            if actual != sizes:
                raise ShapeError(f"{net.name} layer sizes {actual} do not match the config {sizes}")

    @staticmethod
    def encoder_sizes(schema, config):
        return [schema.encoded_width] + [config.hidden_width] * config.hidden_layers + [2 * config.latent_dim]

    @staticmethod
    def decoder_sizes(schema, config):
        p = len(schema.continuous_indices)
        head = p + p * (config.knot_count + 1) + sum(schema.columns[j].levels for j in schema.discrete_indices)
        return [config.latent_dim] + [config.hidden_width] * config.hidden_layers + [head]

    @classmethod
    def init(cls, schema, config, rng):
        """Glorot networks; the spline heads start at the N(0, 1) quantile function."""
        activations = [Activation.RELU] * config.hidden_layers + [Activation.IDENTITY]
        encoder = Mlp.build(cls.encoder_sizes(schema, config), activations, rng, 'encoder')
        decoder = Mlp.build(cls.decoder_sizes(schema, config), activations, rng, 'decoder')
        p = len(schema.continuous_indices)
        gamma, slope_raw = standard_normal_heads(uniform_knots(config.knot_count))
        bias = decoder.layers[-1].bias
        bias[:p] = gamma
        bias[p:p + p * slope_raw.size] = np.tile(slope_raw, p)
        return cls(schema, config, encoder, decoder)

    @property
    def knots(self):
        return uniform_knots(self.config.knot_count)

    @property
    def latent_dim(self):
        return self.config.latent_dim

    def parameters(self):
        return self.encoder.parameters() + self.decoder.parameters()

    def parameter_names(self):
        return self.encoder.parameter_names() + self.decoder.parameter_names()

    def split_heads(self, out):
        """Slice raw decoder output (n, head) into gamma_raw, slope_raw and the logits blocks."""
        n = out.shape[0]
        p = len(self.schema.continuous_indices)
        width = self.config.knot_count + 1
        gamma_raw = out[:, :p]
        slope_raw = out[:, p:p + p * width].reshape(n, p, width)
        logits, start = [], p + p * width
        for j in self.schema.discrete_indices:
            levels = self.schema.columns[j].levels
            logits.append(out[:, start:start + levels])
            start += levels
        return gamma_raw, slope_raw, logits


def _encode_batch(model, x_encoded):
    out, cache = mlp_forward(model.encoder, np.atleast_2d(x_encoded))
    d = model.latent_dim
    return LatentGaussian(out[:, :d], out[:, d:]), cache


def encode(model, x_encoded):
    """Posterior parameters for one encoded row (vector) or a batch (matrix)."""
    x_encoded = np.asarray(x_encoded, dtype=np.float64)
    if x_encoded.shape[-1] != model.schema.encoded_width:
        raise ShapeError(f"encoder input must have width {model.schema.encoded_width}, got {x_encoded.shape}")
    latent, _ = _encode_batch(model, x_encoded)
    if x_encoded.ndim == 1:
        return LatentGaussian(latent.mu[0], latent.log_var[0])
    return latent


def reparameterize(latent, noise):
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape != np.shape(latent.mu):
        raise ShapeError(f"noise shape {noise.shape} does not match latent shape {np.shape(latent.mu)}")
    return latent.mu + np.exp(0.5 * latent.log_var) * noise


def _decode_batch(model, z):
    out, cache = mlp_forward(model.decoder, z)
    gamma_raw, slope_raw, logits = model.split_heads(out)
    splines = build_spline(gamma_raw, slope_raw, model.knots)
    probs = tuple(softmax(block, axis=1) for block in logits)
    return DecoderOutput(splines, probs), (cache, slope_raw, logits)


def decode(model, z):
    """Decoder heads for one latent vector or a batch of them."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape[-1] != model.latent_dim or z.ndim > 2:
        raise ShapeError(f"z must have trailing dimension {model.latent_dim}, got shape {z.shape}")
    output, _ = _decode_batch(model, np.atleast_2d(z))
    if z.ndim == 1:
        splines = SplineCoeffs(output.splines.gamma[0], output.splines.b[0], output.splines.knots)
        return DecoderOutput(splines, tuple(pi[0] for pi in output.probs))
    return output


def kl_divergence(latent):
    """KL(N(mu, diag sigma^2) || N(0, I)); one value per row for batched latents."""
    mu = np.asarray(latent.mu, dtype=np.float64)
    log_var = np.asarray(latent.log_var, dtype=np.float64)
    kl = 0.5 * np.sum(mu ** 2 + np.exp(log_var) - log_var - 1.0, axis=-1)
    kl = np.maximum(kl, 0.0)
    return kl if kl.ndim else float(kl)


def _as_rows(model, batch):
    rows = getattr(batch, 'rows', batch)
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if rows.shape[0] == 0:
        raise ShapeError("elbo_loss needs a non-empty batch")
    if rows.shape[1] != len(model.schema):
        raise ShapeError(f"batch rows must have {len(model.schema)} columns, got {rows.shape[1]}")
    return rows


def elbo_loss(model, batch, noise, beta=None):
    """Batch-mean negative ELBO split into its three terms."""
    loss, _ = elbo_loss_and_grad(model, batch, noise, beta, with_grad=False)
    return loss


def elbo_loss_and_grad(model, batch, noise, beta=None, with_grad=True):
    """Negative ELBO and its gradient w.r.t. model.parameters() (encoder first).

    One reparameterized z per row; the CRPS term is crps_loss / 2 summed over
    continuous columns, beta weights only the KL term.
    """
    beta = model.config.beta if beta is None else beta
    rows = _as_rows(model, batch)
    n = rows.shape[0]
    noise = np.asarray(noise, dtype=np.float64).reshape(n, model.latent_dim)
    schema = model.schema

    latent, enc_cache = _encode_batch(model, encode_rows(rows, schema))
    z = reparameterize(latent, noise)
    output, (dec_cache, slope_raw, logits) = _decode_batch(model, z)

    x_cont = rows[:, schema.continuous_indices]
    crps = crps_loss(output.splines, x_cont) if schema.continuous_indices else None
    crps_recon = float(np.sum(crps.loss) / 2.0 / n) if crps is not None else 0.0

    targets = [rows[:, j].astype(np.int64) for j in schema.discrete_indices]
    log_probs = [log_softmax(block, axis=1) for block in logits]
    discrete_recon = float(sum(-np.sum(lp[np.arange(n), t]) for lp, t in zip(log_probs, targets)) / n)

    kl_rows = kl_divergence(latent)
    kl = float(np.mean(kl_rows))
    loss = LossBreakdown.compose(crps_recon, discrete_recon, kl, beta)

    if not np.isfinite(loss.total):
        raise NonFiniteError(
            f"non-finite loss on a batch of {n} rows: crps={loss.crps_recon} discrete={loss.discrete_recon} "
            f"kl={loss.kl}; max |mu|={np.max(np.abs(latent.mu)):.4g}, "
            f"max log_var={np.max(latent.log_var):.4g}")
    if not with_grad:
        return loss, None

    head_grads = []
    if crps is not None:
        # envelope gradient of crps_loss / 2, averaged over the batch
        grad_gamma, grad_b = crps_grad(output.splines, x_cont)
        head_grads.append(grad_gamma / (2.0 * n))
        grad_b = grad_b / (2.0 * n)
        head_grads.append(build_spline_backward(slope_raw, grad_b).reshape(n, -1))
    else:
        head_grads.append(np.zeros((n, 0)))
    for pi, t in zip(output.probs, targets):
        onehot = np.zeros_like(pi)
        onehot[np.arange(n), t] = 1.0
        head_grads.append((pi - onehot) / n)
    dz, dec_tape = mlp_backward(model.decoder, dec_cache, np.concatenate(head_grads, axis=1))

    sigma = latent.sigma
    dmu = dz + beta * latent.mu / n
    dlog_var = dz * noise * 0.5 * sigma + beta * 0.5 * (np.exp(latent.log_var) - 1.0) / n
    _, enc_tape = mlp_backward(model.encoder, enc_cache, np.concatenate([dmu, dlog_var], axis=1))
    return loss, GradientTape.concat(enc_tape, dec_tape)
