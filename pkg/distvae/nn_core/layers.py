"""Dense layers, the MLP forward/backward pass and softplus.

Everything is float64 and batched: inputs are (n, in) matrices, a 1-D vector
is treated as a batch of one and returned as a vector.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import expit

from distvae.errors import DataError, ShapeError

logger = logging.getLogger(__name__)

SOFTPLUS_LINEAR_ABOVE = 30.0
SOFTPLUS_EXP_BELOW = -30.0


class Activation(str, Enum):
    IDENTITY = 'identity'
    RELU = 'relu'


@dataclass
class DenseLayer:
    weight: np.ndarray
    bias: np.ndarray
    activation: Activation = Activation.IDENTITY

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64).reshape(-1)
        self.activation = Activation(self.activation)
        if self.weight.ndim != 2 or self.weight.shape[0] != self.bias.size:
            raise ShapeError(
                f"dense layer weight {self.weight.shape} and bias {self.bias.shape} do not agree")

    @property
    def fan_in(self):
        return self.weight.shape[1]

    @property
    def fan_out(self):
        return self.weight.shape[0]

    @classmethod
    def glorot(cls, fan_in, fan_out, activation, rng):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weight = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        return cls(weight, np.zeros(fan_out), activation)


@dataclass
class Mlp:
    layers: list
    name: str = 'mlp'

    def __post_init__(self):
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.fan_out != nxt.fan_in:
                raise ShapeError(
                    f"{self.name}: layer output {prev.fan_out} does not feed input {nxt.fan_in}")

    @classmethod
    def build(cls, sizes, activations, rng, name='mlp'):
        """sizes = [in, h1, ..., out]; one activation tag per layer."""
        if len(activations) != len(sizes) - 1:
            raise ShapeError("need one activation per layer")
        layers = [DenseLayer.glorot(a, b, act, rng)
                  for a, b, act in zip(sizes[:-1], sizes[1:], activations)]
        return cls(layers, name)

    @property
    def input_size(self):
        return self.layers[0].fan_in

    @property
    def output_size(self):
        return self.layers[-1].fan_out

    def parameters(self):
        params = []
        for layer in self.layers:
            params.extend([layer.weight, layer.bias])
        return params

    def parameter_names(self):
        names = []
        for i, _ in enumerate(self.layers):
            names.extend([f"{self.name}.{i}.weight", f"{self.name}.{i}.bias"])
        return names

    def n_parameters(self):
        return sum(p.size for p in self.parameters())

    def to_dict(self):
        return {
            'name': self.name,
            'layers': [
                {'activation': layer.activation.value,
                 'weight': layer.weight.tolist(),
                 'bias': layer.bias.tolist()}
                for layer in self.layers
            ],
        }

    @classmethod
    def from_dict(cls, document):
        layers = [DenseLayer(np.array(entry['weight'], dtype=np.float64).reshape(len(entry['bias']), -1),
                             entry['bias'], entry['activation'])
                  for entry in document['layers']]
        return cls(layers, document['name'])


@dataclass
class GradientTape:
    """Gradients aligned one-to-one with a parameter list."""
    grads: list
    names: list = field(default_factory=list)

    @classmethod
    def zeros_like(cls, net):
        return cls([np.zeros_like(p) for p in net.parameters()], net.parameter_names())

    @classmethod
    def concat(cls, *tapes):
        grads, names = [], []
        for tape in tapes:
            grads.extend(tape.grads)
            names.extend(tape.names)
        return cls(grads, names)

    def zero(self):
        for g in self.grads:
            g.fill(0.0)


def _as_batch(values, width, what):
    values = np.asarray(values, dtype=np.float64)
    squeeze = values.ndim == 1
    batch = values.reshape(1, -1) if squeeze else values
    if batch.ndim != 2 or batch.shape[1] != width:
        raise ShapeError(f"{what}: expected width {width}, got shape {values.shape}")
    return batch, squeeze


def mlp_forward(net, inputs):
    """Affine-then-activation through every layer; the cache feeds mlp_backward."""
    x, squeeze = _as_batch(inputs, net.input_size, f"{net.name} input")
    cache = []
    for layer in net.layers:
        pre = x @ layer.weight.T + layer.bias
        out = np.maximum(pre, 0.0) if layer.activation is Activation.RELU else pre
        cache.append((x, pre))
        x = out
    return (x[0] if squeeze else x), cache


def mlp_backward(net, cache, output_grad):
    """Gradients of sum(output * output_grad) w.r.t. the input and every parameter."""
    if len(cache) != len(net.layers):
        raise ShapeError(f"{net.name}: cache has {len(cache)} layers, net has {len(net.layers)}")
    grad, squeeze = _as_batch(output_grad, net.output_size, f"{net.name} output grad")
    if grad.shape[0] != cache[-1][0].shape[0]:
        raise ShapeError(f"{net.name}: output grad batch does not match the cached forward pass")
    tape = GradientTape.zeros_like(net)
    for i in reversed(range(len(net.layers))):
        layer = net.layers[i]
        x, pre = cache[i]
        if layer.activation is Activation.RELU:
            grad = grad * (pre > 0)
        tape.grads[2 * i] += grad.T @ x
        tape.grads[2 * i + 1] += grad.sum(axis=0)
        grad = grad @ layer.weight
    return (grad[0] if squeeze else grad), tape


def softplus(x):
    """log(1 + exp(x)) without overflow; linear above 30, exp below -30."""
    x = np.asarray(x, dtype=np.float64)
    mid = np.clip(x, SOFTPLUS_EXP_BELOW, SOFTPLUS_LINEAR_ABOVE)
    out = np.where(x > SOFTPLUS_LINEAR_ABOVE, x,
                   np.where(x < SOFTPLUS_EXP_BELOW, np.exp(np.minimum(x, 0.0)), np.log1p(np.exp(mid))))
    return out if out.ndim else float(out)


def softplus_grad(x):
    """Derivative of softplus: the logistic function."""
    out = expit(np.asarray(x, dtype=np.float64))
    return out if out.ndim else float(out)


def softplus_inverse(y):
    """x with softplus(x) = y for y > 0."""
    y = np.asarray(y, dtype=np.float64)
    if np.any(y <= 0):
        raise DataError("softplus_inverse needs positive values")
    out = y + np.log(-np.expm1(-y))
    return out if out.ndim else float(out)
