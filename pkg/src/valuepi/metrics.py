"""Interval quality (Winkler, ACD, width) and operational value metrics."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dispatch import InfeasibleError, operate
from .quantile import PredictionInterval

SUMMARY_COLUMNS = ("winkler", "width", "acd", "monetary", "monetary_da", "monetary_rt")
RECORD_COLUMNS = ("timestamp", "power", "load", "lower", "upper", "width", "winkler", "covered",
                  "p_star", "monetary", "monetary_da", "monetary_rt")


def winkler_scores(lower, upper, y, beta):
    """Interval score: width plus (2/beta) times the miss distance."""
    lower, upper, y = (np.asarray(v, dtype=float) for v in (lower, upper, y))
    below = np.where(y < lower, lower - y, 0.0)
    above = np.where(y > upper, y - upper, 0.0)
    return (upper - lower) + (2.0 / beta) * (below + above)


def winkler(interval, y, beta):
    return float(winkler_scores(interval.lower, interval.upper, y, beta))


def covered(lower, upper, y):
    y = np.asarray(y, dtype=float)
    return (np.asarray(lower) <= y) & (y <= np.asarray(upper))


def acd(intervals, realizations, ncp):
    """Empirical coverage minus nominal coverage, in percentage points."""
    if len(intervals) != len(realizations):
        raise ValueError(f"{len(intervals)} intervals but {len(realizations)} realizations")
    if len(intervals) == 0:
        raise ValueError("need at least one interval")
    lo = np.array([iv.lower for iv in intervals])
    hi = np.array([iv.upper for iv in intervals])
    return acd_arrays(lo, hi, realizations, ncp)


def acd_arrays(lower, upper, y, ncp):
    return float((np.mean(covered(lower, upper, y)) - ncp) * 100.0)


@dataclass
class EvaluationReport:
    winkler_avg: float
    width_avg: float
    acd: float
    monetary_avg: float
    monetary_da_avg: float
    monetary_rt_avg: float
    records: dict = field(repr=False, default_factory=dict)

    def summary(self):
        return dict(zip(SUMMARY_COLUMNS, (self.winkler_avg, self.width_avg, self.acd, self.monetary_avg,
                                          self.monetary_da_avg, self.monetary_rt_avg)))

    @property
    def total_score(self):
        return float(np.sum(self.records["monetary"]))

    def write_csv(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        n = len(self.records["monetary"])
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RECORD_COLUMNS)
            for i in range(n):
                w.writerow([_fmt(self.records[c][i]) for c in RECORD_COLUMNS])


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return repr(float(v))


def report_from_records(records, ncp):
    # fixed-order reductions keep sums reproducible
    return EvaluationReport(
        winkler_avg=float(np.mean(records["winkler"])),
        width_avg=float(np.mean(records["width"])),
        acd=float((np.mean(records["covered"]) - ncp) * 100.0),
        monetary_avg=float(np.mean(records["monetary"])),
        monetary_da_avg=float(np.mean(records["monetary_da"])),
        monetary_rt_avg=float(np.mean(records["monetary_rt"])),
        records=records,
    )


def evaluate(forecaster, dataset, config, ncp):
    """Score a forecaster's intervals on every sample of ``dataset``.

    ``forecaster`` is either an object with ``predict(dataset) -> (lower,
    upper)`` or a plain callable with the same signature.
    """
    predict = getattr(forecaster, "predict", forecaster)
    lower, upper = (np.asarray(v, dtype=float) for v in predict(dataset))
    if lower.shape != (len(dataset),) or upper.shape != (len(dataset),):
        raise ValueError("forecaster must return one interval per sample")
    beta = 1.0 - ncp
    y = dataset.power
    n = len(dataset)
    p_star = np.empty(n)
    da = np.empty(n)
    rt = np.empty(n)
    for i in range(n):
        try:
            day, real = operate(config, PredictionInterval(lower[i], upper[i]), dataset.load[i], y[i])
        except InfeasibleError as exc:
            raise InfeasibleError(f"sample at timestamp {int(dataset.timestamps[i])}: {exc}") from exc
        p_star[i] = day.p
        da[i] = day.da_cost
        rt[i] = real.cost
    records = {
        "timestamp": dataset.timestamps.copy(),
        "power": y.copy(),
        "load": dataset.load.copy(),
        "lower": lower,
        "upper": upper,
        "width": upper - lower,
        "winkler": winkler_scores(lower, upper, y, beta),
        "covered": covered(lower, upper, y),
        "p_star": p_star,
        "monetary": da + rt,
        "monetary_da": da,
        "monetary_rt": rt,
    }
    return report_from_records(records, ncp)


def markdown_summary(reports, title="Forecast quality and value"):
    """Markdown table with one row per method (quality then value columns)."""
    lines = [f"### {title}", "",
             "| Method | Winkler score/MW | Average width/MW | ACD/% | Average monetary score/$ "
             "| Average day-ahead score/$ | Average real-time score/$ |",
             "|---|---|---|---|---|---|---|"]
    for name, rep in reports.items():
        lines.append(f"| {name} | {rep.winkler_avg:.2f} | {rep.width_avg:.2f} | {rep.acd:.1f} | "
                     f"{rep.monetary_avg:.2f} | {rep.monetary_da_avg:.2f} | {rep.monetary_rt_avg:.2f} |")
    return "\n".join(lines) + "\n"


def score_reduction(baseline, proposed):
    """Accumulated score of ``baseline`` minus ``proposed`` over the test set."""
    return float(np.sum(baseline.records["monetary"] - proposed.records["monetary"]))
