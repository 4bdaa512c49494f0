"""Command-line entry point: ``valuepi <subcommand> [options]``.

Every scalar run setting can come from ``--config FILE`` (INI, [run] and
[vpp] sections) and be overridden by a flag of the same name, e.g.
``--ncp 0.9 --epochs 5``. Relative output directories are placed under
``$VALUEPI_OUTPUT_ROOT`` when that variable is set.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import data as data_mod
from . import harness
from .dispatch import monetary_score, solve_day_ahead
from .quantile import PredictionInterval

log = logging.getLogger("valuepi")


def _add_config_flags(p):
    p.add_argument("--config", help="INI file with [run] and optional [vpp] sections")
    for f in harness.SCALAR_FIELDS:
        p.add_argument("--" + f.name.replace("_", "-"), dest=f.name, default=None,
                       help=f"(default: {f.default})")


def _config(args):
    base = harness.read_config(args.config) if args.config else harness.RunConfig()
    overrides = {f.name: getattr(args, f.name) for f in harness.SCALAR_FIELDS
                 if getattr(args, f.name, None) is not None}
    return harness.config_from_mapping(overrides, base=base)


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def cmd_generate_data(args):
    cfg = _config(args)
    ds = data_mod.generate_synthetic(cfg.n_samples, cfg.capacity, cfg.data_seed,
                                     load_mean=cfg.load_mean, load_amplitude=cfg.load_amplitude)
    out = Path(args.out) if args.out else cfg.output_path() / "data.csv"
    data_mod.write_csv(ds, out)
    print(f"wrote {len(ds)} samples to {out}")


def cmd_train(args):
    cfg = _config(args)
    out = cfg.output_path()
    datasets = harness.load_dataset(cfg)
    for sub_cfg, sub in harness.seed_runs(cfg, out):
        result = harness.train(sub_cfg, datasets)
        harness.save_artifacts(result, sub)
        print(f"trained seed {sub_cfg.seed}: artifacts in {sub}")


def cmd_evaluate(args):
    cfg = _config(args)
    out = cfg.output_path()
    per_seed = []
    for sub_cfg, sub in harness.seed_runs(cfg, out):
        result = harness.load_artifacts(sub_cfg, sub)
        per_seed.append(harness.evaluate_run(result, sub))
        print(f"evaluated {sub}")
    for name, summary in harness.average_reports(per_seed).items():
        print(name, " ".join(f"{k}={v:.2f}" for k, v in summary.items()))


def cmd_sweep(args):
    cfg = _config(args)
    rows = harness.sweep(cfg, _floats(args.ncp_list or ""), _floats(args.capacity_list or ""),
                         [int(v) for v in _floats(args.n_list or "")])
    failed = [r for r in rows if r["error"]]
    print(f"{len(rows)} rows written to {cfg.output_path() / 'sweep.csv'}")
    if failed:
        print(f"{len(failed)} setting(s) failed", file=sys.stderr)
        return 1
    return 0


def cmd_dispatch(args):
    cfg = _config(args)
    vpp = cfg.vpp
    iv = PredictionInterval(args.lower, args.upper)
    sol = solve_day_ahead(vpp, iv, args.load)
    print(f"p* = {sol.p:.6f} MW")
    print("x  = " + ", ".join(f"{v:.6f}" for v in sol.x) + " MW")
    print(f"day-ahead cost = {sol.da_cost:.2f} $")
    print(f"worst-case recourse = {sol.worst_case_recourse:.2f} $ at w = {sol.worst_case_w:.6f} MW")
    if args.y is not None:
        s = monetary_score(vpp, iv, args.load, args.y)
        print(f"real-time cost = {s.rt:.2f} $")
        print(f"monetary score = {s.score:.2f} $")


def cmd_report(args):
    cfg = _config(args)
    out = cfg.output_path()
    files = sorted(out.glob("**/summary.csv"))
    if not files:
        raise FileNotFoundError(f"no evaluation summaries under {out}")
    for path in files:
        print(f"## {path.parent}")
        with path.open() as fh:
            for row in csv.DictReader(fh):
                print(row["method"], " ".join(f"{k}={float(row[k]):.2f}" for k in row if k != "method"))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="valuepi", description="Value-oriented wind power prediction intervals")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-data", help="write a synthetic wind/load CSV")
    _add_config_flags(p)
    p.add_argument("--out", help="CSV path (default: <output_dir>/data.csv)")
    p.set_defaults(func=cmd_generate_data)

    p = sub.add_parser("train", help="train the bandit, quantile models and baselines")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate trained artifacts on the test partition")
    _add_config_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="train and evaluate over NCP, capacity or n settings")
    _add_config_flags(p)
    p.add_argument("--ncp-list")
    p.add_argument("--capacity-list")
    p.add_argument("--n-list")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("dispatch", help="solve the dispatch problem for one interval")
    _add_config_flags(p)
    p.add_argument("--load", type=float, required=True)
    p.add_argument("--lower", type=float, required=True)
    p.add_argument("--upper", type=float, required=True)
    p.add_argument("--y", type=float, help="realized wind power, to settle in real time")
    p.set_defaults(func=cmd_dispatch)

    p = sub.add_parser("report", help="print evaluation summaries found under the output directory")
    _add_config_flags(p)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args) or 0
    except Exception as exc:  # noqa: BLE001 - report and exit non-zero
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
