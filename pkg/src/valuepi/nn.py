"""Small feed-forward networks with hand-written backpropagation and Adam.

Two architectures are needed: the quantile MLP (4 -> 128 -> 128 -> 1) and the
dueling Q-network (4 -> 512 -> 256 -> 1 + |A|, aggregated into |A| Q-values).
Both are plain :class:`Mlp` instances; the dueling aggregation is a fixed
linear map applied to the last layer's output.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ShapeError(ValueError):
    pass


class NumericError(FloatingPointError):
    pass


def relu(z):
    return np.maximum(z, 0)


@dataclass
class Mlp:
    """ReLU hidden layers, linear output layer.

    ``weights[k]`` has shape (in_k, out_k) so a batch ``x`` of shape
    (n, in_0) is propagated as ``x @ W + b``.
    """

    widths: tuple
    weights: list
    biases: list
    buffer: np.ndarray = field(default=None, repr=False)

    @classmethod
    def create(cls, widths, rng=None, init="he", dtype=np.float64):
        widths = tuple(int(w) for w in widths)
        if len(widths) < 2 or min(widths) < 1:
            raise ShapeError(f"invalid architecture {widths}")
        # every parameter array is a view into one flat buffer
        buf = np.zeros(sum(a * b + b for a, b in zip(widths[:-1], widths[1:])), dtype=dtype)
        views = _split(widths, buf)
        weights, biases = views[0::2], views[1::2]
        if init == "he":
            if rng is None:
                raise ValueError("He initialization needs an rng")
            for W in weights:
                limit = np.sqrt(6.0 / W.shape[0])
                W[...] = rng.uniform(-limit, limit, size=W.shape)
        elif init != "zeros":
            raise ValueError(f"unknown init {init!r}")
        model = cls(widths, weights, biases)
        model.buffer = buf
        return model

    @property
    def n_layers(self):
        return len(self.weights)

    def params(self):
        """Parameters in canonical order W0, b0, W1, b1, ..."""
        out = []
        for W, b in zip(self.weights, self.biases):
            out.extend((W, b))
        return out

    def n_params(self):
        return sum(p.size for p in self.params())

    def flat(self):
        return self.buffer.copy()

    def load_flat(self, flat):
        flat = np.asarray(flat)
        if flat.size != self.buffer.size:
            raise ShapeError(f"expected {self.buffer.size} parameters, got {flat.size}")
        self.buffer[...] = flat

    def copy(self):
        model = Mlp.create(self.widths, init="zeros", dtype=self.buffer.dtype)
        model.load_flat(self.buffer)
        return model

    def check(self):
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.shape != (self.widths[k], self.widths[k + 1]) or b.shape != (self.widths[k + 1],):
                raise ShapeError(f"layer {k} shapes {W.shape}, {b.shape} disagree with {self.widths}")
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise NumericError(f"non-finite parameters in layer {k}")


def _split(widths, flat):
    """Views W0, b0, W1, b1, ... into a flat parameter-sized array."""
    views, pos = [], 0
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        views.append(flat[pos:pos + fan_in * fan_out].reshape(fan_in, fan_out))
        pos += fan_in * fan_out
        views.append(flat[pos:pos + fan_out])
        pos += fan_out
    return views


def _as_batch(model, x):
    x = np.asarray(x, dtype=model.buffer.dtype)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != model.widths[0]:
        raise ShapeError(f"input shape {x.shape} does not match input width {model.widths[0]}")
    return x, single


def forward(model, x, keep=False):
    """Evaluate the network on a vector or a batch of row vectors.

    With ``keep=True`` the layer inputs (the batch, then each hidden ReLU
    output) are returned as well, for use by :func:`backward`.
    """
    a, single = _as_batch(model, x)
    cache = [a]
    last = model.n_layers - 1
    for k, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ W
        z += b
        a = z if k == last else relu(z)
        if k < last:
            cache.append(a)
    out = a[0] if single else a
    if keep:
        return out, cache
    return out


def backward(model, cache, output_gradient):
    """Gradients of <output_gradient, f(x)> with respect to every parameter.

    ``cache`` comes from ``forward(..., keep=True)`` on the same input.
    Returns a list aligned with :meth:`Mlp.params`. ReLU'(0) is taken as 0.
    """
    return _split(model.widths, flat_backward(model, cache, output_gradient))


def flat_backward(model, cache, output_gradient):
    """Like :func:`backward`, but as one vector laid out like ``model.buffer``."""
    g = np.asarray(output_gradient, dtype=model.buffer.dtype)
    if g.ndim == 1:
        g = g[None, :]
    x = cache[0]
    if g.shape != (x.shape[0], model.widths[-1]):
        raise ShapeError(f"output gradient shape {g.shape} does not match {(x.shape[0], model.widths[-1])}")
    flat = np.empty_like(model.buffer)
    grads = _split(model.widths, flat)
    for k in range(model.n_layers - 1, -1, -1):
        a_prev = cache[k]
        np.matmul(a_prev.T, g, out=grads[2 * k])
        np.sum(g, axis=0, out=grads[2 * k + 1])
        if k > 0:
            g = g @ model.weights[k].T
            g *= a_prev > 0
    return flat


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: np.ndarray = None
    v: np.ndarray = None

    @classmethod
    def for_model(cls, model, lr):
        return cls(lr=lr, m=np.zeros_like(model.buffer), v=np.zeros_like(model.buffer))


def adam_step(state, params, grads):
    """In-place Adam update with bias correction.

    ``params`` is either a flat array or a list of arrays (W0, b0, W1, ...);
    gradients must match it in structure. Moments are kept as flat vectors.
    """
    if isinstance(params, np.ndarray):
        if grads.shape != params.shape:
            raise ShapeError(f"gradient shape {grads.shape} does not match parameters {params.shape}")
        flat_g = grads.ravel()
        # a finite sum is a cheap screen; overflow alone falls through to the exact check
        if not np.isfinite(flat_g.sum()):
            bad = np.flatnonzero(~np.isfinite(flat_g))
            if bad.size:
                raise NumericError(f"non-finite gradient at parameter {int(bad[0])}")
        params = [params]
    else:
        if len(params) != len(grads):
            raise ShapeError("parameter and gradient lists differ in length")
        for i, (p, g) in enumerate(zip(params, grads)):
            if g.shape != p.shape:
                raise ShapeError(f"gradient {i} has shape {g.shape}, parameter has {p.shape}")
            if not np.all(np.isfinite(g)):
                kind = "weights" if i % 2 == 0 else "bias"
                raise NumericError(f"non-finite gradient in layer {i // 2} ({kind})")
        flat_g = np.concatenate([np.ravel(g) for g in grads])
    if flat_g.size != state.m.size:
        raise ShapeError(f"{flat_g.size} gradients for {state.m.size} moment entries")
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    m, v = state.m, state.v
    tmp = np.subtract(flat_g, m)
    tmp *= 1.0 - state.beta1
    m += tmp
    np.multiply(flat_g, flat_g, out=tmp)
    tmp -= v
    tmp *= 1.0 - state.beta2
    v += tmp
    # lr/c1 * m / (sqrt(v/c2) + eps) == (lr sqrt(c2)/c1) * m / (sqrt(v) + eps sqrt(c2))
    root_c2 = np.sqrt(c2)
    np.sqrt(v, out=tmp)
    tmp += state.eps * root_c2
    np.divide(m, tmp, out=tmp)
    tmp *= state.lr * root_c2 / c1
    step = tmp
    pos = 0
    for p in params:
        p -= step[pos:pos + p.size].reshape(p.shape)
        pos += p.size


# -- dueling aggregation ---------------------------------------------------

def dueling_aggregate(raw):
    """Map raw outputs ``[V, A_1..A_n]`` to Q = V + A - mean(A)."""
    raw = np.asarray(raw)
    v = raw[..., :1]
    adv = raw[..., 1:]
    return v + adv - adv.mean(axis=-1, keepdims=True)


def dueling_output_gradient(dq):
    """Pull a gradient on Q back to the raw ``[V, A]`` outputs."""
    dq = np.asarray(dq, dtype=float)
    dv = dq.sum(axis=-1, keepdims=True)
    dadv = dq - dq.mean(axis=-1, keepdims=True)
    return np.concatenate([dv, dadv], axis=-1)


@dataclass
class DuelingHead:
    """Shared ReLU trunk with a fused value/advantage output layer."""

    net: Mlp
    n_actions: int

    @classmethod
    def create(cls, n_inputs, hidden, n_actions, rng=None, init="he", dtype=np.float64):
        widths = (n_inputs, *hidden, 1 + n_actions)
        return cls(Mlp.create(widths, rng=rng, init=init, dtype=dtype), int(n_actions))

    def value_and_advantage(self, state):
        raw = forward(self.net, state)
        return raw[..., 0], raw[..., 1:]


def dueling_q(head, state):
    state = np.asarray(state, dtype=float)
    if state.shape[-1] != head.net.widths[0]:
        raise ShapeError(f"state has length {state.shape[-1]}, expected {head.net.widths[0]}")
    return dueling_aggregate(forward(head.net, state))
