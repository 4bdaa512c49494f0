"""Wind-power datasets: CSV ingestion, synthetic generation, splitting, scaling."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

FEATURES = ("ws10", "wd10", "ws100", "wd100")
COLUMNS = ("timestamp", *FEATURES, "power", "load")


class SchemaError(ValueError):
    pass


class ParseError(ValueError):
    pass


@dataclass(frozen=True)
class PowerSample:
    timestamp: int
    features: np.ndarray
    power: float
    load: float


@dataclass(frozen=True)
class FeatureScaler:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, x):
        x = np.asarray(x, dtype=float)
        std = x.std(axis=0)
        # constant columns (or a single training row) are only centred
        std = np.where(std > 0, std, 1.0)
        return cls(x.mean(axis=0), std)

    def scale(self, x):
        return (np.asarray(x, dtype=float) - self.mean) / self.std

    def unscale(self, z):
        return np.asarray(z, dtype=float) * self.std + self.mean


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Chronologically ordered hourly samples; immutable once built."""

    timestamps: np.ndarray
    features: np.ndarray
    power: np.ndarray
    load: np.ndarray
    capacity: float
    scaler: FeatureScaler | None = None
    n_clamped: int = 0

    def __post_init__(self):
        object.__setattr__(self, "timestamps", _frozen(self.timestamps, np.int64))
        object.__setattr__(self, "features", _frozen(self.features).reshape(-1, len(FEATURES)))
        object.__setattr__(self, "power", _frozen(self.power))
        object.__setattr__(self, "load", _frozen(self.load))
        n = len(self.timestamps)
        if not (len(self.features) == len(self.power) == len(self.load) == n):
            raise ValueError("column lengths differ")
        if n > 1 and np.any(np.diff(self.timestamps) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("non-finite feature values")
        if np.any(self.power < 0) or np.any(self.power > self.capacity):
            raise ValueError("power outside [0, capacity]")
        if np.any(self.load <= 0):
            raise ValueError("load must be positive")

    def __len__(self):
        return len(self.timestamps)

    def __getitem__(self, i):
        return PowerSample(int(self.timestamps[i]), self.features[i], float(self.power[i]), float(self.load[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def scaled_features(self):
        if self.scaler is None:
            raise ValueError("dataset has no fitted scaler; use split() first")
        return self.scaler.scale(self.features)

    def subset(self, idx):
        return replace(self, timestamps=self.timestamps[idx], features=self.features[idx],
                       power=self.power[idx], load=self.load[idx], n_clamped=0)

    def with_capacity(self, capacity):
        """Rescale power linearly to a new installed capacity."""
        ratio = capacity / self.capacity
        return replace(self, power=np.clip(self.power * ratio, 0.0, capacity), capacity=float(capacity))


def load_csv(path, capacity):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        for col in COLUMNS:
            if col not in header:
                raise SchemaError(f"missing column {col!r}")
        pos = [header.index(c) for c in COLUMNS]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append([float(row[j]) for j in pos])
            except (ValueError, IndexError):
                raise ParseError(f"{path}: row {lineno}: non-numeric or missing cell") from None
    data = np.array(rows, dtype=float).reshape(-1, len(COLUMNS))
    ts = data[:, 0]
    if np.any(ts != np.round(ts)):
        raise ParseError(f"{path}: timestamps must be integer hour indices")
    power = data[:, 5]
    n_clamped = int(np.sum((power < 0) | (power > capacity)))
    if n_clamped:
        warnings.warn(f"{path}: clamped {n_clamped} power values into [0, {capacity}]", stacklevel=2)
    return Dataset(ts.astype(np.int64), data[:, 1:5], np.clip(power, 0.0, capacity), data[:, 6],
                   float(capacity), n_clamped=n_clamped)


def write_csv(dataset, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for i in range(len(dataset)):
            w.writerow([int(dataset.timestamps[i]), *(repr(float(v)) for v in dataset.features[i]),
                        repr(float(dataset.power[i])), repr(float(dataset.load[i]))])


def _stream(seed, name):
    return np.random.default_rng([int(seed), *name.encode()])


def power_curve(ws):
    """Normalized turbine curve: 0 at calm, ~1 above 14 m/s."""
    return 1.0 / (1.0 + np.exp(-(np.asarray(ws) - 9.0) / 1.5))


def generate_synthetic(n, capacity=30.0, seed=0, load_mean=50.0, load_amplitude=0.2,
                       noise_sigma=0.45, persistence=0.95):
    """Synthetic hourly wind farm with positively skewed conditional power.

    Wind speed at 100 m is a log-AR(1) process; 10 m speed follows a power-law
    shear; directions are slow random walks in degrees. Power is
    ``capacity * power_curve(ws100)`` times mean-one lognormal noise, clamped.
    Every column comes from its own random stream and is generated
    sequentially, so a run of length m is a prefix of any longer run.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    e_ws = _stream(seed, "ws100").standard_normal(n)
    e_shear = _stream(seed, "ws10").standard_normal(n)
    e_dir = _stream(seed, "wd100").standard_normal(n)
    e_dir10 = _stream(seed, "wd10").standard_normal(n)
    e_pow = _stream(seed, "power").standard_normal(n)
    d0 = _stream(seed, "wd0").uniform(0.0, 360.0)

    u = np.empty(n)
    u[0] = e_ws[0]
    root = math.sqrt(1.0 - persistence ** 2)
    for t in range(1, n):
        u[t] = persistence * u[t - 1] + root * e_ws[t]
    ws100 = 7.0 * np.exp(0.45 * u)
    ws10 = ws100 * 0.1 ** 0.14 * np.exp(0.05 * e_shear)
    wd100 = np.mod(d0 + np.cumsum(15.0 * e_dir), 360.0)
    wd10 = np.mod(wd100 + 10.0 + 5.0 * e_dir10, 360.0)

    noise = np.exp(noise_sigma * e_pow - 0.5 * noise_sigma ** 2)
    power = np.clip(capacity * power_curve(ws100) * noise, 0.0, capacity)

    hours = np.arange(n)
    load = load_mean * (1.0 + load_amplitude * np.sin(2.0 * np.pi * (hours % 24 - 9) / 24.0))
    features = np.column_stack([ws10, wd10, ws100, wd100])
    return Dataset(hours, features, power, load, float(capacity))


def split(dataset, train_fraction):
    """Chronological split; the scaler is fitted on the training part only."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n = len(dataset)
    if n == 0:
        raise ValueError("cannot split an empty dataset")
    n_train = max(1, math.ceil(n * train_fraction - 1e-9))
    if n > 1:
        n_train = min(n_train, n - 1)
    train = dataset.subset(slice(0, n_train))
    test = dataset.subset(slice(n_train, n))
    scaler = FeatureScaler.fit(train.features)
    return replace(train, scaler=scaler), replace(test, scaler=scaler)
