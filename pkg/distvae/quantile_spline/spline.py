"""Linear isotonic spline quantile functions and their closed-form CRPS.

A spline is D(alpha) = gamma + sum_m b_m (alpha - d_m)_+ on knots
0 = d_0 < ... < d_M = 1, monotone as long as every partial sum of b is >= 0.
All functions broadcast over leading batch axes: gamma has shape (...),
b has shape (..., M+1), the knots are shared.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.stats import norm

from distvae.errors import DataError, ShapeError
from distvae.nn_core.layers import softplus, softplus_grad, softplus_inverse

logger = logging.getLogger(__name__)

INIT_TAIL = 0.005


@dataclass(frozen=True)
class SplineCoeffs:
    gamma: np.ndarray
    b: np.ndarray
    knots: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'gamma', np.asarray(self.gamma, dtype=np.float64))
        object.__setattr__(self, 'b', np.asarray(self.b, dtype=np.float64))
        object.__setattr__(self, 'knots', validate_knots(self.knots))
        if self.b.shape[-1] != self.knots.size:
            raise ShapeError(f"b has {self.b.shape[-1]} entries per spline, knots have {self.knots.size}")

    @property
    def knot_count(self):
        return self.knots.size - 1

    def slopes(self):
        """Cumulative slopes s_k = sum_{m<=k} b_m; s_k is the slope on [d_k, d_{k+1}]."""
        return np.maximum(np.cumsum(self.b, axis=-1), 0.0)

    def knot_images(self):
        """D(d_0), ..., D(d_M)."""
        s = self.slopes()[..., :-1]
        steps = s * np.diff(self.knots)
        first = np.zeros(steps.shape[:-1] + (1,))
        return self.gamma[..., None] + np.concatenate([first, np.cumsum(steps, axis=-1)], axis=-1)

    def column(self, j):
        """Coefficients of one column from a (..., p, M+1) batch."""
        return SplineCoeffs(self.gamma[..., j], self.b[..., j, :], self.knots)


@dataclass(frozen=True)
class CrpsBreakdown:
    loss: np.ndarray
    alpha_tilde: np.ndarray
    segment: np.ndarray


def uniform_knots(knot_count):
    return np.linspace(0.0, 1.0, knot_count + 1)


def validate_knots(knots):
    knots = np.asarray(knots, dtype=np.float64)
    if knots.ndim != 1 or knots.size < 2:
        raise ShapeError(f"knots must be a vector of at least 2 values, got shape {knots.shape}")
    if knots[0] != 0.0 or knots[-1] != 1.0:
        raise ShapeError(f"knots must start at 0 and end at 1, got {knots[0]} .. {knots[-1]}")
    if np.any(np.diff(knots) <= 0):
        raise ShapeError("knots must be strictly increasing")
    return knots


def build_spline(gamma_raw, slope_raw, knots):
    """Map raw network outputs to monotone spline coefficients.

    Cumulative slopes are softplus(slope_raw), so every partial sum of b is
    non-negative whatever the raw values are.
    """
    knots = validate_knots(knots)
    slope_raw = np.asarray(slope_raw, dtype=np.float64)
    if slope_raw.shape[-1] != knots.size:
        raise ShapeError(f"expected {knots.size} slope values per spline, got {slope_raw.shape[-1]}")
    s = softplus(slope_raw)
    b = np.diff(s, axis=-1, prepend=0.0)
    return SplineCoeffs(np.asarray(gamma_raw, dtype=np.float64), b, knots)


def standard_normal_heads(knots):
    """(gamma_raw, slope_raw) whose spline interpolates the N(0, 1) quantile function.

    The outer knots are pulled in to INIT_TAIL and 1 - INIT_TAIL; the last
    slope, which acts beyond d_M, repeats the one before it.
    """
    knots = validate_knots(knots)
    images = norm.ppf(np.clip(knots, INIT_TAIL, 1.0 - INIT_TAIL))
    slopes = np.diff(images) / np.diff(knots)
    return float(images[0]), softplus_inverse(np.append(slopes, slopes[-1]))


def build_spline_backward(slope_raw, grad_b):
    """Chain d loss / d b back to d loss / d slope_raw through build_spline."""
    grad_b = np.asarray(grad_b, dtype=np.float64)
    # b_k = s_k - s_{k-1}  =>  dL/ds_k = dL/db_k - dL/db_{k+1}
    shifted = np.concatenate([grad_b[..., 1:], np.zeros(grad_b.shape[:-1] + (1,))], axis=-1)
    return (grad_b - shifted) * softplus_grad(slope_raw)


def spline_eval(coeffs, alpha):
    alpha = np.asarray(alpha, dtype=np.float64)
    if np.any((alpha < 0.0) | (alpha > 1.0)) or np.any(np.isnan(alpha)):
        raise DataError("alpha must lie in [0, 1]")
    hinge = np.maximum(alpha[..., None] - coeffs.knots, 0.0)
    out = coeffs.gamma + np.sum(coeffs.b * hinge, axis=-1)
    return out if np.ndim(out) else float(out)


def spline_inverse(coeffs, x):
    """Solve D(alpha) = x for alpha, clamped to [0, 1].

    Returns (alpha_tilde, segment m0). At a knot image the left segment is
    used; on a flat segment the result is its left knot.
    """
    M = coeffs.knot_count
    shape = np.broadcast_shapes(np.shape(x), coeffs.gamma.shape)
    x = np.broadcast_to(np.asarray(x, dtype=np.float64), shape)
    gamma = np.broadcast_to(coeffs.gamma, shape)
    images = np.broadcast_to(coeffs.knot_images(), shape + (M + 1,))
    partial_b = np.broadcast_to(np.cumsum(coeffs.b, axis=-1), shape + (M + 1,))
    partial_bd = np.broadcast_to(np.cumsum(coeffs.b * coeffs.knots, axis=-1), shape + (M + 1,))

    count = np.sum(images < x[..., None], axis=-1)
    segment = np.clip(count - 1, 0, M - 1)
    denom = np.take_along_axis(partial_b, segment[..., None], axis=-1)[..., 0]
    numer = x - gamma + np.take_along_axis(partial_bd, segment[..., None], axis=-1)[..., 0]
    flat = denom <= 0.0
    alpha = np.where(flat, coeffs.knots[segment], numer / np.where(flat, 1.0, denom))

    alpha = np.where(x <= images[..., 0], 0.0, alpha)
    alpha = np.where(x >= images[..., -1], 1.0, alpha)
    alpha = np.clip(alpha, 0.0, 1.0)
    if alpha.ndim == 0:
        return float(alpha), int(segment)
    return alpha, segment


def _knot_terms(alpha_tilde, knots):
    top = np.maximum(alpha_tilde[..., None], knots)
    return (1.0 - knots ** 3) / 3.0 - knots - top ** 2 + 2.0 * top * knots


def crps_at(coeffs, x, alpha_tilde):
    """The closed-form CRPS expression evaluated at a given alpha_tilde.

    Stationary in alpha_tilde at the solution of D(alpha_tilde) = x.
    """
    x = np.asarray(x, dtype=np.float64)
    alpha_tilde = np.asarray(alpha_tilde, dtype=np.float64)
    return ((2.0 * alpha_tilde - 1.0) * x + (1.0 - 2.0 * alpha_tilde) * coeffs.gamma
            + np.sum(coeffs.b * _knot_terms(alpha_tilde, coeffs.knots), axis=-1))


def crps_loss(coeffs, x):
    """Closed form of 2 * int_0^1 rho_alpha(x - D(alpha)) d alpha, b-sum over m = 0..M."""
    alpha_tilde, segment = spline_inverse(coeffs, x)
    alpha_tilde = np.asarray(alpha_tilde)
    loss = np.maximum(crps_at(coeffs, x, alpha_tilde), 0.0)
    if loss.ndim == 0:
        return CrpsBreakdown(float(loss), float(alpha_tilde), int(segment))
    return CrpsBreakdown(loss, alpha_tilde, np.asarray(segment))


def crps_grad(coeffs, x):
    """(d loss / d gamma, d loss / d b) holding alpha_tilde fixed (envelope argument)."""
    alpha_tilde, _ = spline_inverse(coeffs, x)
    alpha_tilde = np.asarray(alpha_tilde)
    return 1.0 - 2.0 * alpha_tilde, _knot_terms(alpha_tilde, coeffs.knots)


def check_loss(u, alpha):
    """rho_alpha(u) = u * (alpha - 1(u < 0))."""
    u = np.asarray(u, dtype=np.float64)
    return u * (alpha - (u < 0))


def crps_loss_finite_k(coeffs, x, K):
    """(1/K) sum_k rho_{k/K}(x - D(k/K)), the composite quantile loss."""
    if K < 1:
        raise DataError(f"K must be >= 1, got {K}")
    alphas = np.arange(1, K + 1) / K
    x = np.asarray(x, dtype=np.float64)
    hinge = np.maximum(alphas[:, None] - coeffs.knots, 0.0)
    values = coeffs.gamma[..., None] + np.einsum('...m,km->...k', coeffs.b, hinge)
    out = np.mean(check_loss(x[..., None] - values, alphas), axis=-1)
    return out if out.ndim else float(out)


def crps_quadrature(coeffs, x, nodes=1_000_001):
    """Trapezoid-rule value of 2 * int_0^1 rho_alpha(x - D(alpha)) d alpha."""
    if np.ndim(coeffs.gamma) != 0:
        raise ShapeError("crps_quadrature evaluates one spline at a time")
    alphas = np.linspace(0.0, 1.0, nodes)
    values = spline_eval(coeffs, alphas)
    return float(2.0 * trapezoid(check_loss(float(x) - values, alphas), alphas))


def ald_log_alpha_mean(K):
    """(1/K) sum_k log alpha_k (1 - alpha_k) with alpha_k = k/K.

    The k = K term is log 0; it is left out, the limit (-2) is unaffected.
    """
    alphas = np.arange(1, K) / K
    return float(np.sum(np.log(alphas * (1.0 - alphas))) / K)


def finite_k_negative_elbo_constant(p, beta, K):
    """Parameter-free part of the finite-K negative ELBO for p continuous columns."""
    return -beta * p * ald_log_alpha_mean(K) + beta * p * np.log(beta)
