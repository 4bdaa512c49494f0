"""Training loop, evaluation runs, sweeps and run configuration."""
from __future__ import annotations

import configparser
import csv
import dataclasses
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import data as data_mod
from .agent import Agent, AgentConfig, EpsilonSchedule, build_action_space, select_action
from .baselines import (CentralForecaster, DeterministicForecaster, NaiveForecaster, ProposedForecaster)
from .dispatch import GeneratorParams, RegulationParams, VppConfig, monetary_score
from .metrics import SUMMARY_COLUMNS, evaluate, markdown_summary, score_reduction
from .quantile import QrBank, ProportionPair
from .seeding import Seeds

log = logging.getLogger(__name__)

OUTPUT_ROOT_ENV = "VALUEPI_OUTPUT_ROOT"
BASELINES = ("central", "naive", "deterministic")


@dataclass
class RunConfig:
    ncp: float = 0.95
    n: int = 2
    epochs: int = 30
    batch_size: int = 128
    lr_qr: float = 1e-3
    lr_agent: float = 1e-4
    seed: int = 0
    data_seed: int = 0
    data: str = "synthetic"
    n_samples: int = 10_000
    capacity: float = 30.0
    train_fraction: float = 0.8
    load_mean: float = 50.0
    load_amplitude: float = 0.2
    baseline: str = "central,naive,deterministic"
    output_dir: str = "runs/default"
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_fraction: float = 0.5
    reward_scale: float = 0.01
    naive_window: int = 168
    buffer_capacity: int = 50_000
    n_seeds: int = 1
    precision: str = "float32"
    vpp: VppConfig = field(default_factory=VppConfig)

    def __post_init__(self):
        if not 0.0 < self.ncp < 1.0:
            raise ValueError(f"ncp must lie in (0, 1), got {self.ncp}")
        if self.n < 1 or self.epochs < 1 or self.batch_size < 1 or self.n_seeds < 1:
            raise ValueError("n, epochs, batch_size and n_seeds must be >= 1")
        if self.precision not in ("float32", "float64"):
            raise ValueError(f"precision must be float32 or float64, got {self.precision!r}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")
        if not (0.0 <= self.epsilon_end <= 1.0 and 0.0 <= self.epsilon_start <= 1.0):
            raise ValueError("epsilon values must lie in [0, 1]")
        unknown = set(self.baselines) - set(BASELINES) - {"proposed"}
        if unknown:
            raise ValueError(f"unknown baselines {sorted(unknown)}")
        if self.vpp.wind_capacity != self.capacity:
            self.vpp = dataclasses.replace(self.vpp, wind_capacity=float(self.capacity))

    @property
    def beta(self):
        return 1.0 - self.ncp

    @property
    def baselines(self):
        return tuple(b.strip() for b in self.baseline.split(",") if b.strip() and b.strip() != "proposed")

    def output_path(self):
        root = os.environ.get(OUTPUT_ROOT_ENV)
        out = Path(self.output_dir)
        return Path(root) / out if root and not out.is_absolute() else out


# -- config file ------------------------------------------------------------

SCALAR_FIELDS = tuple(f for f in dataclasses.fields(RunConfig) if f.name != "vpp")


def _coerce(f, value):
    kind = type(f.default)
    if kind is bool:
        return str(value).lower() in ("1", "true", "yes", "on")
    return kind(value)


def config_from_mapping(values, vpp=None, base=None):
    base = base or RunConfig()
    kw = {}
    names = {f.name: f for f in SCALAR_FIELDS}
    for key, value in values.items():
        key = key.replace("-", "_")
        if key not in names:
            raise KeyError(f"unknown config key {key!r}")
        kw[key] = _coerce(names[key], value)
    if vpp is not None:
        kw["vpp"] = vpp
    return dataclasses.replace(base, **kw)


def _floats(text):
    return [float(v) for v in text.split(",")]


def read_config(path):
    """Read an INI-style file with a [run] section and an optional [vpp] section."""
    parser = configparser.ConfigParser()
    if not parser.read(path, encoding="utf-8"):
        raise FileNotFoundError(path)
    run = dict(parser["run"]) if parser.has_section("run") else {}
    vpp = None
    if parser.has_section("vpp"):
        sec = parser["vpp"]
        gens = tuple(GeneratorParams(*_floats(sec[k])) for k in sorted(sec) if k.startswith("dg"))
        regs = tuple(RegulationParams(*_floats(sec[k])) for k in sorted(sec) if k.startswith("reg"))
        vpp = VppConfig(gens or VppConfig().generators, regs or VppConfig().regulation,
                        float(run.get("capacity", RunConfig.capacity)))
    return config_from_mapping(run, vpp)


def write_config(config, path):
    parser = configparser.ConfigParser()
    parser["run"] = {f.name: str(getattr(config, f.name)) for f in SCALAR_FIELDS}
    vpp = {}
    for i, g in enumerate(config.vpp.generators, start=1):
        vpp[f"dg{i}"] = f"{g.capacity!r}, {g.a!r}, {g.b!r}, {g.c!r}"
    for i, r in enumerate(config.vpp.regulation, start=1):
        vpp[f"reg{i}"] = f"{r.c_down!r}, {r.c_up!r}, {r.cap_down!r}, {r.cap_up!r}"
    parser["vpp"] = vpp
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        parser.write(fh)


# -- data -------------------------------------------------------------------

def load_dataset(config):
    if config.data == "synthetic":
        ds = data_mod.generate_synthetic(config.n_samples, config.capacity, config.data_seed,
                                         load_mean=config.load_mean, load_amplitude=config.load_amplitude)
    else:
        ds = data_mod.load_csv(config.data, config.capacity)
    return data_mod.split(ds, config.train_fraction)


# -- training ---------------------------------------------------------------

@dataclass
class TrainResult:
    config: RunConfig
    agent: Agent
    bank: QrBank
    train: data_mod.Dataset
    test: data_mod.Dataset
    central_bank: QrBank | None = None
    median_bank: QrBank | None = None
    log: list = field(default_factory=list)
    rewards: dict = field(default_factory=dict)


def make_agent(config, seeds, n_steps):
    space = build_action_space(config.beta, config.n)
    schedule = EpsilonSchedule(config.epsilon_start, config.epsilon_end,
                               int(round(config.epsilon_decay_fraction * n_steps)))
    cfg = AgentConfig(epsilon=schedule, batch_size=config.batch_size, lr=config.lr_agent,
                      buffer_capacity=config.buffer_capacity, reward_scale=config.reward_scale,
                      dtype=config.precision)
    return Agent(space, cfg, rng=seeds("agent"))


def make_bank(config, seeds, space):
    pairs = [ProportionPair.from_lower(a, space.beta) for a in space.actions]
    return QrBank.for_pairs(pairs, seeds, lr=config.lr_qr, buffer_capacity=config.buffer_capacity,
                            dtype=config.precision)


def monetary_reward(config):
    vpp = config.vpp

    def reward(interval, t, dataset):
        return -monetary_score(vpp, interval, dataset.load[t], dataset.power[t]).score

    return reward


def train(config, datasets=None, reward_fn=None):
    """Run the closed-loop bandit/quantile training plus enabled baselines.

    ``reward_fn(interval, t, train_dataset)`` overrides the monetary reward,
    e.g. for contrived environments in tests.
    """
    seeds = Seeds(config.seed)
    train_ds, test_ds = datasets if datasets is not None else load_dataset(config)
    if len(train_ds) == 0:
        raise ValueError("empty training partition")
    x = train_ds.scaled_features
    y = train_ds.power
    n = len(train_ds)
    reward_fn = reward_fn or monetary_reward(config)

    agent = make_agent(config, seeds, config.epochs * n)
    bank = make_bank(config, seeds, agent.space)
    eps_rng = seeds("epsilon")
    k = len(agent.space)
    pairs = [ProportionPair.from_lower(a, agent.space.beta) for a in agent.space.actions]

    epochs = np.repeat(np.arange(config.epochs), n)
    steps_t = np.tile(np.arange(n), config.epochs)
    actions = np.empty(config.epochs * n, dtype=np.int64)
    rewards = np.empty(config.epochs * n)
    history = []
    for e in range(config.epochs):
        loss_lo = loss_hi = 0.0
        for t in range(n):
            step = e * n + t
            i, _ = select_action(agent, x[t], rng=eps_rng)
            pair = pairs[i]
            interval = bank.predict_interval(pair, x[t], config.capacity)
            l_lo, l_hi = bank.update_selected(pair, x[t], y[t], config.batch_size)
            r = reward_fn(interval, t, train_ds)
            if not np.isfinite(r):
                raise FloatingPointError(f"non-finite reward at epoch {e}, sample {t}")
            agent.observe(x[t], i, r)
            agent.learn()
            agent.steps += 1
            actions[step] = i
            rewards[step] = r
            loss_lo += l_lo
            loss_hi += l_hi
        sl = slice(e * n, (e + 1) * n)
        entry = {"epoch": e, "avg_reward": float(np.mean(rewards[sl])),
                 "pinball_lower": loss_lo / n, "pinball_upper": loss_hi / n, "epsilon": agent.epsilon}
        counts = np.bincount(actions[sl], minlength=k)
        entry.update({f"count_{j}": int(c) for j, c in enumerate(counts)})
        history.append(entry)
        log.info("epoch %d: avg reward %.2f $, actions %s", e, entry["avg_reward"], counts.tolist())

    result = TrainResult(config, agent, bank, train_ds, test_ds, log=history,
                         rewards={"epoch": epochs, "t": steps_t, "action": actions, "reward": rewards})
    if "central" in config.baselines:
        result.central_bank = train_central_bank(config, train_ds, seeds)
    if "deterministic" in config.baselines:
        result.median_bank = train_median_bank(config, train_ds, seeds)
    return result


def _stream_train(models, x, y, epochs, batch_size):
    for _ in range(epochs):
        for t in range(len(y)):
            for m in models:
                m.store(x[t], y[t])
                m.train_step(batch_size)


def train_central_bank(config, train_ds, seeds):
    """Symmetric-proportion QR pair trained on every training sample."""
    pair = ProportionPair.central(config.beta)
    bank = QrBank.for_pairs([pair], seeds, lr=config.lr_qr, buffer_capacity=config.buffer_capacity,
                            dtype=config.precision)
    models = [bank.model("lower", pair.lower), bank.model("upper", pair.upper)]
    _stream_train(models, train_ds.scaled_features, train_ds.power, config.epochs, config.batch_size)
    return bank


def train_median_bank(config, train_ds, seeds):
    bank = QrBank((), (), seeds, lr=config.lr_qr, buffer_capacity=config.buffer_capacity, median=True,
                  dtype=config.precision)
    _stream_train([bank.model("median", 0.5)], train_ds.scaled_features, train_ds.power,
                  config.epochs, config.batch_size)
    return bank


# -- artifacts --------------------------------------------------------------

def save_artifacts(result, out_dir):
    out = Path(out_dir)
    ckpt = out / "checkpoints"
    result.agent.save(ckpt / "agent.bin")
    result.bank.save(ckpt / "proposed")
    if result.central_bank is not None:
        result.central_bank.save(ckpt / "central")
    if result.median_bank is not None:
        result.median_bank.save(ckpt / "median")
    write_config(result.config, out / "config.ini")
    _write_rows(out / "training_log.csv", result.log)
    r = result.rewards
    _write_rows(out / "training_rewards.csv",
                [{"epoch": int(e), "t": int(t), "action": int(a), "reward": repr(float(v))}
                 for e, t, a, v in zip(r["epoch"], r["t"], r["action"], r["reward"])])


def load_artifacts(config, out_dir):
    out = Path(out_dir)
    ckpt = out / "checkpoints"
    if not (ckpt / "agent.bin").exists():
        raise FileNotFoundError(f"no trained artifacts under {out}")
    seeds = Seeds(config.seed)
    train_ds, test_ds = load_dataset(config)
    agent = make_agent(config, seeds, 1).load(ckpt / "agent.bin")
    bank = make_bank(config, seeds, agent.space).load(ckpt / "proposed")
    result = TrainResult(config, agent, bank, train_ds, test_ds)
    if (ckpt / "central").exists():
        pair = ProportionPair.central(config.beta)
        result.central_bank = QrBank.for_pairs([pair], seeds, dtype=config.precision).load(ckpt / "central")
    if (ckpt / "median").exists():
        result.median_bank = QrBank((), (), seeds, median=True, dtype=config.precision).load(ckpt / "median")
    return result


def _write_rows(path, rows, columns=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = columns or (list(rows[0]) if rows else [])
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


# -- evaluation -------------------------------------------------------------

def forecasters(result):
    cfg = result.config
    out = {"proposed": ProposedForecaster(result.agent, result.bank, cfg.capacity)}
    if "central" in cfg.baselines and result.central_bank is not None:
        out["central"] = CentralForecaster(result.central_bank, cfg.beta, cfg.capacity)
    if "naive" in cfg.baselines:
        out["naive"] = NaiveForecaster(result.train.power, cfg.beta, cfg.capacity, cfg.naive_window)
    if "deterministic" in cfg.baselines and result.median_bank is not None:
        out["deterministic"] = DeterministicForecaster(result.median_bank, cfg.capacity)
    return out


def reduction_table(reports):
    """Accumulated score reduction of the proposed method against each method."""
    proposed = reports["proposed"]
    return {name: score_reduction(rep, proposed) for name, rep in reports.items()}


def evaluate_run(result, out_dir=None):
    """Greedy-policy evaluation on the test partition; optionally writes reports."""
    cfg = result.config
    reports = {name: evaluate(f, result.test, cfg.vpp, cfg.ncp) for name, f in forecasters(result).items()}
    if out_dir is not None:
        out = Path(out_dir)
        for name, rep in reports.items():
            rep.write_csv(out / f"samples_{name}.csv")
        _write_rows(out / "summary.csv",
                    [{"method": name, **{k: repr(v) for k, v in rep.summary().items()}}
                     for name, rep in reports.items()], ["method", *SUMMARY_COLUMNS])
        _write_rows(out / "reductions.csv",
                    [{"method": name, "reduction": repr(v)} for name, v in reduction_table(reports).items()])
        (out / "summary.md").write_text(summary_markdown(reports, cfg))
    return reports


def summary_markdown(reports, cfg):
    text = markdown_summary(reports, f"Quality and value of PIs at {cfg.ncp:.0%} NCP, "
                                     f"{cfg.capacity:g} MW wind")
    red = reduction_table(reports)
    text += "\n### Accumulative monetary score reduction (method minus proposed)\n\n| Method | Reduction/$ |\n|---|---|\n"
    text += "".join(f"| {k} | {v:.2f} |\n" for k, v in red.items() if k != "proposed")
    return text


def seed_runs(config, out):
    """(config, directory) per replicate; one seed keeps the root config and directory."""
    if config.n_seeds == 1:
        return [(config, Path(out))]
    seeds = Seeds(config.seed)
    return [(dataclasses.replace(config, seed=seeds.child(f"seed/{s}").root), Path(out) / f"seed_{s}")
            for s in range(config.n_seeds)]


def run(config, out_dir=None, datasets=None):
    """Train and evaluate ``config.n_seeds`` times; returns per-seed reports."""
    out = Path(out_dir) if out_dir is not None else config.output_path()
    datasets = datasets or load_dataset(config)
    per_seed = []
    for cfg, sub in seed_runs(config, out):
        result = train(cfg, datasets)
        save_artifacts(result, sub)
        per_seed.append(evaluate_run(result, sub))
    if config.n_seeds > 1:
        rows = []
        for name in per_seed[0]:
            for col in SUMMARY_COLUMNS:
                vals = np.array([rep[name].summary()[col] for rep in per_seed])
                rows.append({"method": name, "metric": col, "mean": repr(float(vals.mean())),
                             "std": repr(float(vals.std())), "values": " ".join(repr(float(v)) for v in vals)})
        _write_rows(out / "seed_summary.csv", rows)
    return per_seed


def average_reports(per_seed):
    """Mean of each summary metric across seeds: {method: {metric: value}}."""
    return {name: {c: float(np.mean([rep[name].summary()[c] for rep in per_seed])) for c in SUMMARY_COLUMNS}
            for name in per_seed[0]}


# -- sweeps -----------------------------------------------------------------

def sweep(config, ncps=(), capacities=(), ns=(), out_dir=None):
    """Train and evaluate once per setting; failures are recorded, not raised."""
    settings = [("ncp", v) for v in ncps] + [("capacity", v) for v in capacities] + [("n", v) for v in ns]
    if not settings:
        raise ValueError("sweep needs at least one setting")
    seeds = Seeds(config.seed)
    out = Path(out_dir) if out_dir is not None else config.output_path()
    rows = []
    for key, value in settings:
        sub_seed = seeds.child(f"sweep/{key}={value}").root
        try:
            cfg = dataclasses.replace(config, **{key: type(getattr(config, key))(value)}, seed=sub_seed,
                                      n_seeds=1)
            result = train(cfg)
            reports = evaluate_run(result, out / f"{key}_{value}")
            red = reduction_table(reports)
            for name, rep in reports.items():
                rows.append({"setting": key, "value": value, "method": name, "n_actions": len(result.agent.space),
                             **rep.summary(), "reduction": red[name], "error": ""})
        except Exception as exc:  # noqa: BLE001 - one bad setting must not end the sweep
            log.exception("sweep setting %s=%s failed", key, value)
            rows.append({"setting": key, "value": value, "method": "", "n_actions": "",
                         **{c: "" for c in SUMMARY_COLUMNS}, "reduction": "", "error": repr(exc)})
    _write_rows(out / "sweep.csv", rows,
                ["setting", "value", "method", "n_actions", *SUMMARY_COLUMNS, "reduction", "error"])
    return rows
