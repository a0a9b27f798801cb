"""Small fully-connected network engine with hand-written backpropagation.

Parameters are float64 numpy arrays. Layer l maps a (B, in) batch to (B, out)
with `a @ W + b`; hidden layers use ReLU, the output layer is either the
identity (critic) or a tanh scaled to [low, high] (actor).
"""
from dataclasses import dataclass, field
import logging

import numpy as np

from .errors import DimensionMismatchError, DivergenceError

logger = logging.getLogger(__name__)

HIDDEN_SIZES = (400, 300)
ACTOR_FINAL_INIT = 3e-3


@dataclass
class GradientSet:
    """Per-parameter partials, shaped like the network they came from."""
    weights: list
    biases: list
    timestamp: int = 0

    @classmethod
    def zeros_like(cls, net, timestamp=0):
        return cls([np.zeros_like(w) for w in net.weights], [np.zeros_like(b) for b in net.biases], timestamp)

    def arrays(self):
        return [*self.weights, *self.biases]

    def scaled(self, factor):
        return GradientSet([w * factor for w in self.weights], [b * factor for b in self.biases], self.timestamp)

    def __add__(self, other):
        return GradientSet(
            [a + b for a, b in zip(self.weights, other.weights)],
            [a + b for a, b in zip(self.biases, other.biases)],
            max(self.timestamp, other.timestamp),
        )

    def is_finite(self):
        return all(np.all(np.isfinite(a)) for a in self.arrays())

    def shape_matches(self, net):
        return ([w.shape for w in self.weights] == [w.shape for w in net.weights]
                and [b.shape for b in self.biases] == [b.shape for b in net.biases])


class DenseNetwork:
    def __init__(self, layer_sizes, output="identity", output_bounds=(-1.0, 1.0),
                 rng=None, final_init=None):
        if len(layer_sizes) < 2:
            raise DimensionMismatchError("a network needs at least an input and an output layer")
        if output not in ("identity", "tanh"):
            raise ValueError(f"unknown output activation {output!r}")
        self.layer_sizes = tuple(int(s) for s in layer_sizes)
        self.output = output
        self.output_bounds = (float(output_bounds[0]), float(output_bounds[1]))

        rng = rng if rng is not None else np.random.default_rng()
        self.weights, self.biases = [], []
        n_layers = len(self.layer_sizes) - 1
        for l, (fan_in, fan_out) in enumerate(zip(self.layer_sizes[:-1], self.layer_sizes[1:])):
            limit = 1.0 / np.sqrt(fan_in)
            if l == n_layers - 1 and final_init is not None:
                limit = final_init
            self.weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            self.biases.append(rng.uniform(-limit, limit, size=fan_out))

    @classmethod
    def actor(cls, state_dim, action_dim, bounds, rng=None, hidden=HIDDEN_SIZES):
        return cls((state_dim, *hidden, action_dim), output="tanh", output_bounds=bounds,
                   rng=rng, final_init=ACTOR_FINAL_INIT)

    @classmethod
    def critic(cls, state_dim, action_dim, rng=None, hidden=HIDDEN_SIZES):
        return cls((state_dim + action_dim, *hidden, 1), output="identity", rng=rng)

    @property
    def input_dim(self):
        return self.layer_sizes[0]

    @property
    def output_dim(self):
        return self.layer_sizes[-1]

    @property
    def n_params(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def parameters(self):
        return [*self.weights, *self.biases]

    def copy(self):
        clone = object.__new__(DenseNetwork)
        clone.layer_sizes = self.layer_sizes
        clone.output = self.output
        clone.output_bounds = self.output_bounds
        clone.weights = [w.copy() for w in self.weights]
        clone.biases = [b.copy() for b in self.biases]
        return clone

    def load_from(self, other):
        """Copy `other`'s parameters into this network (same shapes)."""
        if other.layer_sizes != self.layer_sizes:
            raise DimensionMismatchError(f"shape mismatch {other.layer_sizes} vs {self.layer_sizes}")
        for dst, src in zip(self.parameters(), other.parameters()):
            dst[...] = src

    def same_shape(self, other):
        return self.layer_sizes == other.layer_sizes and self.output == other.output

    def _as_batch(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        batch = x[None, :] if single else x
        if batch.ndim != 2 or batch.shape[1] != self.input_dim:
            raise DimensionMismatchError(f"expected input dim {self.input_dim}, got shape {x.shape}")
        return batch, single

    def _scale_output(self, z):
        if self.output == "identity":
            return z
        low, high = self.output_bounds
        return (high + low) / 2 + (high - low) / 2 * np.tanh(z)

    def _forward(self, batch):
        activations, pre = [batch], []
        a = batch
        last = len(self.weights) - 1
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w + b
            pre.append(z)
            a = z if l == last else np.maximum(z, 0.0)
            activations.append(a)
        return activations, pre, self._scale_output(pre[-1])

    def forward(self, x):
        batch, single = self._as_batch(x)
        out = self._forward(batch)[2]
        return out[0] if single else out

    def _backward(self, batch, upstream):
        """Gradients of sum(upstream * output) w.r.t. parameters and inputs."""
        activations, pre, _ = self._forward(batch)
        if upstream.shape != (batch.shape[0], self.output_dim):
            raise DimensionMismatchError(
                f"upstream shape {upstream.shape} does not match output {(batch.shape[0], self.output_dim)}")
        dz = upstream
        if self.output == "tanh":
            low, high = self.output_bounds
            t = np.tanh(pre[-1])
            dz = upstream * (high - low) / 2 * (1.0 - t * t)

        d_w, d_b = [None] * len(self.weights), [None] * len(self.biases)
        for l in range(len(self.weights) - 1, -1, -1):
            d_w[l] = activations[l].T @ dz
            d_b[l] = dz.sum(axis=0)
            da = dz @ self.weights[l].T
            if l > 0:
                dz = da * (pre[l - 1] > 0)
        return d_w, d_b, da

    def param_gradient(self, x, upstream, timestamp=0):
        batch, single = self._as_batch(x)
        up = np.asarray(upstream, dtype=float)
        up = up[None, :] if single and up.ndim == 1 else up
        d_w, d_b, _ = self._backward(batch, up)
        return GradientSet(d_w, d_b, timestamp)

    def input_gradient(self, x, wrt=None):
        """d(output)/d(input) for a scalar-output network, optionally sliced to `wrt`."""
        if self.output_dim != 1:
            raise DimensionMismatchError("input_gradient needs a scalar-output network")
        batch, single = self._as_batch(x)
        _, _, dx = self._backward(batch, np.ones((batch.shape[0], 1)))
        if wrt is not None:
            dx = dx[:, wrt]
        return dx[0] if single else dx

    def save(self, path):
        arrays = {f"W{l}": w for l, w in enumerate(self.weights)}
        arrays.update({f"b{l}": b for l, b in enumerate(self.biases)})
        np.savez(path, layer_sizes=np.array(self.layer_sizes), output=np.array(self.output),
                 output_bounds=np.array(self.output_bounds), **arrays)

    @classmethod
    def load(cls, path):
        with np.load(path, allow_pickle=False) as data:
            net = object.__new__(cls)
            net.layer_sizes = tuple(int(s) for s in data["layer_sizes"])
            net.output = str(data["output"])
            net.output_bounds = tuple(float(v) for v in data["output_bounds"])
            n = len(net.layer_sizes) - 1
            net.weights = [data[f"W{l}"].copy() for l in range(n)]
            net.biases = [data[f"b{l}"].copy() for l in range(n)]
        for l, w in enumerate(net.weights):
            if w.shape != (net.layer_sizes[l], net.layer_sizes[l + 1]):
                raise DimensionMismatchError(f"{path}: layer {l} has shape {w.shape}")
        return net


def forward(net, x):
    return net.forward(x)


def param_gradient(net, x, upstream, timestamp=0):
    return net.param_gradient(x, upstream, timestamp)


def input_gradient(net, x, wrt=None):
    return net.input_gradient(x, wrt)


def soft_update(guide, source, tau):
    """guide <- tau * source + (1 - tau) * guide, in place; returns guide."""
    if not 0 < tau <= 1:
        raise ValueError(f"tau must be in (0, 1], got {tau}")
    if guide.layer_sizes != source.layer_sizes:
        raise DimensionMismatchError(f"shape mismatch {guide.layer_sizes} vs {source.layer_sizes}")
    if tau == 1:
        guide.load_from(source)
        return guide
    for g, s in zip(guide.parameters(), source.parameters()):
        g *= 1.0 - tau
        g += tau * s
    return guide


@dataclass
class Optimizer:
    """Plain gradient steps ('sgd') or adaptive-moment estimation ('adam')."""
    rate: float
    mode: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list, repr=False)
    v: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("learning rate must be > 0")
        if self.mode not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer mode {self.mode!r}")

    def step(self, params, grads, ascent=False):
        sign = 1.0 if ascent else -1.0
        if self.mode == "sgd":
            for p, g in zip(params, grads):
                p += sign * self.rate * g
            return
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p += sign * self.rate * (m / c1) / (np.sqrt(v / c2) + self.eps)


def apply_gradients(net, grads, opt, ascent=False):
    """Update `net` in place; descent on a loss by default, ascent for the actor objective."""
    if not grads.shape_matches(net):
        raise DimensionMismatchError("gradient set does not match the network shape")
    if not grads.is_finite():
        raise DivergenceError("non-finite gradient; the run has diverged")
    opt.step(net.parameters(), grads.arrays(), ascent=ascent)
    return net
