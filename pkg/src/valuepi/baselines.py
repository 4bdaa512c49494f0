"""Quality-oriented comparison forecasters and the proposed forecaster.

Every forecaster exposes ``predict(dataset) -> (lower, upper)`` arrays in MW,
consumed by :func:`valuepi.metrics.evaluate`.
"""
from __future__ import annotations

import enum

import numpy as np

from .quantile import PredictionInterval, ProportionPair, repair_interval

NAIVE_WINDOW = 168


class BaselineKind(enum.Enum):
    CENTRAL_QMLP = "central"
    NAIVE_PERSISTENCE = "naive"
    DETERMINISTIC = "deterministic"


def central_pi_forecast(bank, features, beta, capacity):
    return bank.predict_interval(ProportionPair.central(beta), features, capacity)


def naive_pi_forecast(history, beta, capacity):
    """Empirical beta/2 and 1 - beta/2 quantiles of recent realizations."""
    history = np.asarray(history, dtype=float)
    if history.size < 2:
        raise ValueError("naive forecast needs at least two past observations")
    lo, hi = np.quantile(history, [beta / 2.0, 1.0 - beta / 2.0], method="linear")
    lo, hi = repair_interval(lo, hi, capacity)
    return PredictionInterval(lo, hi, ProportionPair.central(beta))


def deterministic_forecast(bank, features, capacity):
    """Degenerate interval at the median-model forecast."""
    m = float(bank.model("median", 0.5).predict(features))
    m = min(max(m, 0.0), capacity)
    return PredictionInterval(m, m)


class ProposedForecaster:
    """Greedy bandit policy choosing the proportion pair per sample."""

    name = "proposed"

    def __init__(self, agent, bank, capacity):
        self.agent = agent
        self.bank = bank
        self.capacity = capacity

    def actions(self, dataset):
        return self.agent.greedy(dataset.scaled_features)

    def predict(self, dataset):
        x = dataset.scaled_features
        actions = self.actions(dataset)
        lower = np.empty(len(dataset))
        upper = np.empty(len(dataset))
        for a in np.unique(actions):
            pair = ProportionPair.from_lower(self.agent.space[a], self.agent.space.beta)
            rows = actions == a
            lower[rows], upper[rows] = self.bank.predict_batch(pair, x[rows], self.capacity)
        return lower, upper


class CentralForecaster:
    name = "central"

    def __init__(self, bank, beta, capacity):
        self.bank = bank
        self.pair = ProportionPair.central(beta)
        self.capacity = capacity

    def predict(self, dataset):
        return self.bank.predict_batch(self.pair, dataset.scaled_features, self.capacity)


class NaiveForecaster:
    """Rolling empirical quantiles over the previous ``window`` hours.

    ``history`` holds realizations preceding the evaluated dataset (usually
    the training tail), so the first test samples have a full window.
    """

    name = "naive"

    def __init__(self, history, beta, capacity, window=NAIVE_WINDOW):
        if window < 2:
            raise ValueError("window must be at least 2")
        self.history = np.asarray(history, dtype=float)
        self.beta = beta
        self.capacity = capacity
        self.window = window

    def predict(self, dataset):
        series = np.concatenate([self.history, dataset.power])
        offset = len(self.history)
        lower = np.empty(len(dataset))
        upper = np.empty(len(dataset))
        for i in range(len(dataset)):
            past = series[max(0, offset + i - self.window):offset + i]
            iv = naive_pi_forecast(past, self.beta, self.capacity)
            lower[i], upper[i] = iv.lower, iv.upper
        return lower, upper


class DeterministicForecaster:
    name = "deterministic"

    def __init__(self, bank, capacity):
        self.model = bank.model("median", 0.5)
        self.capacity = capacity

    def predict(self, dataset):
        m = np.clip(self.model.predict(dataset.scaled_features), 0.0, self.capacity)
        return m, m.copy()
