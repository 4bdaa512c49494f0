from dataclasses import replace

import numpy as np
import pytest
from scipy.stats import norm

from valuepi.data import generate_synthetic, power_curve, split
from valuepi.dispatch import VppConfig, monetary_score
from valuepi.metrics import (SUMMARY_COLUMNS, acd, acd_arrays, evaluate, markdown_summary, score_reduction, winkler,
                             winkler_scores)
from valuepi.quantile import PredictionInterval

CFG = VppConfig()


@pytest.mark.parametrize("y, expected", [(15.0, 10.0), (8.0, 90.0), (25.0, 210.0), (10.0, 10.0), (20.0, 10.0)])
def test_winkler_examples(y, expected):
    assert winkler(PredictionInterval(10.0, 20.0), y, 0.05) == pytest.approx(expected)


def test_winkler_at_least_width():
    rng = np.random.default_rng(0)
    lo = rng.uniform(0, 10, 500)
    hi = lo + rng.uniform(0, 10, 500)
    y = rng.uniform(-5, 25, 500)
    w = winkler_scores(lo, hi, y, 0.1)
    assert np.all(w >= hi - lo - 1e-12)
    inside = (y >= lo) & (y <= hi)
    np.testing.assert_allclose(w[inside], (hi - lo)[inside])


def test_acd_examples():
    ivs = [PredictionInterval(0.0, 1.0)] * 100
    ys = [0.5] * 93 + [2.0] * 7
    assert acd(ivs, ys, 0.95) == pytest.approx(-2.0)
    assert acd(ivs, [0.5] * 100, 0.95) == pytest.approx(5.0)


def test_acd_errors():
    with pytest.raises(ValueError):
        acd([PredictionInterval(0, 1)], [0.5, 0.5], 0.95)
    with pytest.raises(ValueError):
        acd([], [], 0.95)


def true_quantile_coverage(ncp=0.95, n=10_000, seed=1, sigma=0.45, capacity=30.0):
    """ACD of exact conditional-quantile intervals, plus its binomial expectation and sd.

    Power is ``min(m * r, capacity)`` with ``m = capacity * curve(ws100)`` and
    lognormal ``r``; the clamped quantiles are the clamped raw quantiles. The
    atom at capacity makes coverage exceed nominal where the upper quantile is
    clamped, so each sample's coverage probability is computed exactly.
    """
    ds = generate_synthetic(n, capacity, seed, noise_sigma=sigma)
    m = capacity * power_curve(ds.features[:, 2])
    beta = 1 - ncp

    def raw_q(a):
        return m * np.exp(sigma * norm.ppf(a) - sigma ** 2 / 2)

    q_lo, q_hi = raw_q(beta / 2), raw_q(1 - beta / 2)
    lo, hi = np.minimum(q_lo, capacity), np.minimum(q_hi, capacity)

    def p_above(v):
        return norm.sf((np.log(v / m) + sigma ** 2 / 2) / sigma)

    p = p_above(lo) - np.where(q_hi < capacity, p_above(q_hi), 0.0)
    got = acd_arrays(lo, hi, ds.power, ncp)
    expected = (p.mean() - ncp) * 100
    sd = np.sqrt(np.sum(p * (1 - p))) / n * 100
    return got, expected, sd


def test_true_quantile_intervals_have_small_acd():
    got, expected, sd = true_quantile_coverage()
    assert abs(got - expected) < 3 * sd
    assert abs(got) < 1.5


def constant_power_dataset(y, n=1, load=50.0):
    ds = generate_synthetic(n + 1, seed=2)
    ds = replace(ds, power=np.full(n + 1, y), load=np.full(n + 1, load))
    return ds.subset(slice(0, n))


def test_degenerate_interval_at_realization():
    ds = constant_power_dataset(12.0)
    rep = evaluate(lambda d: (np.array([12.0]), np.array([12.0])), ds, CFG, 0.95)
    assert rep.width_avg == 0.0
    assert rep.winkler_avg == 0.0
    assert rep.monetary_rt_avg == pytest.approx(0.0, abs=1e-6)
    assert rep.monetary_avg == pytest.approx(rep.monetary_da_avg)


def test_two_identical_samples_average_like_one():
    one = evaluate(lambda d: (np.full(len(d), 5.0), np.full(len(d), 15.0)), constant_power_dataset(12.0, 1),
                   CFG, 0.95)
    two = evaluate(lambda d: (np.full(len(d), 5.0), np.full(len(d), 15.0)), constant_power_dataset(12.0, 2),
                   CFG, 0.95)
    assert one.summary() == pytest.approx(two.summary())
    assert one.monetary_avg == pytest.approx(monetary_score(CFG, PredictionInterval(5, 15), 50.0, 12.0).score)


def test_report_decomposition_and_columns(tmp_path):
    _, test = split(generate_synthetic(300, seed=4), 0.5)
    rep = evaluate(lambda d: (np.clip(d.power - 3, 0, 30), np.clip(d.power + 3, 0, 30)), test, CFG, 0.9)
    assert tuple(rep.summary()) == SUMMARY_COLUMNS
    assert abs(rep.monetary_avg - (rep.monetary_da_avg + rep.monetary_rt_avg)) < 1e-6
    assert rep.acd == pytest.approx(10.0)
    rep.write_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert len(lines) == len(test) + 1
    assert lines[0].startswith("timestamp,power,load,lower,upper")


def test_score_reduction_identity():
    _, test = split(generate_synthetic(200, seed=5), 0.5)
    a = evaluate(lambda d: (np.full(len(d), 2.0), np.full(len(d), 20.0)), test, CFG, 0.95)
    b = evaluate(lambda d: (np.full(len(d), 6.0), np.full(len(d), 20.0)), test, CFG, 0.95)
    assert score_reduction(a, a) == 0.0
    assert score_reduction(a, b) == pytest.approx(np.sum(a.records["monetary"]) - np.sum(b.records["monetary"]),
                                                  abs=1e-6)
    assert score_reduction(a, b) == pytest.approx(-score_reduction(b, a))


def test_forecaster_shape_checked():
    _, test = split(generate_synthetic(20, seed=5), 0.5)
    with pytest.raises(ValueError):
        evaluate(lambda d: (np.zeros(3), np.zeros(3)), test, CFG, 0.95)


def test_markdown_summary_rows():
    ds = constant_power_dataset(12.0)
    rep = evaluate(lambda d: (np.array([5.0]), np.array([15.0])), ds, CFG, 0.95)
    text = markdown_summary({"a": rep, "b": rep})
    assert text.count("\n| a |") == 1 and "| b |" in text
