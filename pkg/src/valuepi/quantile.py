"""Quantile-regression MLPs trained online with the pinball loss."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import checkpoint
from .nn import AdamState, Mlp, adam_step, flat_backward, forward
from .replay import ReplayBuffer

QMLP_WIDTHS = (4, 128, 128, 1)
BUFFER_CAPACITY = 50_000


@dataclass(frozen=True)
class ProportionPair:
    """Lower/upper quantile levels of an interval with coverage ``ncp``."""

    lower: float
    upper: float
    ncp: float

    @classmethod
    def from_lower(cls, lower, beta):
        if not 0.0 < lower < beta < 1.0:
            raise ValueError(f"need 0 < lower < beta < 1, got lower={lower}, beta={beta}")
        return cls(lower, lower + 1.0 - beta, 1.0 - beta)

    @classmethod
    def central(cls, beta):
        return cls.from_lower(beta / 2.0, beta)


@dataclass(frozen=True)
class PredictionInterval:
    lower: float
    upper: float
    proportions: ProportionPair | None = None

    @property
    def width(self):
        return self.upper - self.lower


def repair_interval(lower, upper, capacity):
    """Clamp both bounds into [0, capacity] and undo quantile crossing."""
    lo = min(max(float(lower), 0.0), capacity)
    hi = min(max(float(upper), 0.0), capacity)
    if lo > hi:
        lo, hi = hi, lo
    return lo, hi


def pinball_loss(alpha, prediction, realization):
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    d = np.asarray(realization, dtype=float) - np.asarray(prediction, dtype=float)
    return np.maximum(alpha * d, (alpha - 1.0) * d)


def pinball_grad(alpha, prediction, realization):
    """d(loss)/d(prediction); 0 on exact hits."""
    d = np.asarray(realization, dtype=float) - np.asarray(prediction, dtype=float)
    return np.where(d > 0, -alpha, np.where(d < 0, 1.0 - alpha, 0.0))


def proportion_key(alpha):
    return f"q{alpha:.6f}"


class QrModel:
    """One quantile level: network, FIFO replay buffer, own Adam state and rng."""

    def __init__(self, alpha, rng, lr=1e-3, widths=QMLP_WIDTHS, buffer_capacity=BUFFER_CAPACITY,
                 init="he", dtype="float64"):
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
        self.alpha = float(alpha)
        self.rng = rng
        self.net = Mlp.create(widths, rng=rng, init=init, dtype=dtype)
        self.opt = AdamState.for_model(self.net, lr)
        self.buffer = ReplayBuffer(buffer_capacity, self.net.widths[0])

    def predict(self, features):
        out = forward(self.net, features)
        return out[..., 0]

    def store(self, features, y):
        self.buffer.append(features, y)

    def train_step(self, batch_size):
        """One Adam step on a uniform random batch drawn from the buffer."""
        if len(self.buffer) == 0:
            return 0.0
        x, y, _ = self.buffer.sample(self.rng, batch_size)
        pred, cache = forward(self.net, x, keep=True)
        pred = pred[:, 0]
        grad = flat_backward(self.net, cache, pinball_grad(self.alpha, pred, y)[:, None])
        adam_step(self.opt, self.net.buffer, grad)
        return float(pinball_loss(self.alpha, pred, y).mean())

    def param_hash(self):
        return hashlib.sha256(self.net.flat().tobytes()).hexdigest()


class QrBank:
    """Quantile models keyed by role ('lower'/'upper') and proportion.

    Lower and upper models are distinct objects even if their proportions
    happen to coincide. ``median=True`` adds a ('median', 0.5) model for point
    forecasts.
    """

    def __init__(self, lower, upper, seed_stream, lr=1e-3, widths=QMLP_WIDTHS,
                 buffer_capacity=BUFFER_CAPACITY, init="he", median=False, dtype="float64"):
        self.models = {}
        roles = [("lower", lower), ("upper", upper)]
        if median:
            roles.append(("median", (0.5,)))
        for role, alphas in roles:
            for a in alphas:
                key = (role, proportion_key(a))
                if key in self.models:
                    raise ValueError(f"duplicate {role} proportion {a}")
                self.models[key] = QrModel(a, seed_stream(f"qr/{role}/{key[1]}"), lr=lr, widths=widths,
                                           buffer_capacity=buffer_capacity, init=init, dtype=dtype)

    @classmethod
    def for_pairs(cls, pairs, seed_stream, **kw):
        return cls([p.lower for p in pairs], [p.upper for p in pairs], seed_stream, **kw)

    def model(self, role, alpha):
        try:
            return self.models[(role, proportion_key(alpha))]
        except KeyError:
            raise LookupError(f"no {role} model for proportion {alpha}") from None

    def update_selected(self, pair, features, y, batch_size):
        """Store the sample with both selected models and take one step each."""
        chosen = (self.model("lower", pair.lower), self.model("upper", pair.upper))
        losses = []
        for m in chosen:
            m.store(features, y)
            losses.append(m.train_step(batch_size))
        return losses

    def predict_interval(self, pair, features, capacity):
        lo = self.model("lower", pair.lower).predict(features)
        hi = self.model("upper", pair.upper).predict(features)
        lo, hi = repair_interval(lo, hi, capacity)
        return PredictionInterval(lo, hi, pair)

    def predict_batch(self, pair, features, capacity):
        """Vectorised :meth:`predict_interval` returning (lower, upper) arrays."""
        lo = self.model("lower", pair.lower).predict(features)
        hi = self.model("upper", pair.upper).predict(features)
        lo = np.clip(lo, 0.0, capacity)
        hi = np.clip(hi, 0.0, capacity)
        return np.minimum(lo, hi), np.maximum(lo, hi)

    def param_hashes(self):
        return {k: m.param_hash() for k, m in self.models.items()}

    def save(self, directory):
        directory = Path(directory)
        for (role, key), m in sorted(self.models.items()):
            checkpoint.save(directory / role / f"{key}.bin", m.net,
                            {"alpha": m.alpha, "role": role, "adam_step": m.opt.step})

    def load(self, directory):
        directory = Path(directory)
        for (role, key), m in self.models.items():
            net, header = checkpoint.load(directory / role / f"{key}.bin")
            if tuple(net.widths) != tuple(m.net.widths):
                raise checkpoint.CheckpointError(f"{role}/{key}: architecture mismatch")
            m.net = net
            m.opt = AdamState.for_model(net, m.opt.lr)
        return self
