import numpy as np
import pytest
from hypothesis import given, strategies as st

from valuepi.quantile import (PredictionInterval, ProportionPair, QrBank, QrModel, pinball_grad, pinball_loss,
                              proportion_key, repair_interval)
from valuepi.seeding import Seeds

finite = st.floats(-1e3, 1e3)


def test_pinball_examples():
    assert pinball_loss(0.1, 5.0, 3.0) == pytest.approx(1.8)
    assert pinball_loss(0.3, 2.0, 2.0) == 0.0


@given(finite, finite)
def test_pinball_median_is_half_absolute_error(x, y):
    assert pinball_loss(0.5, x, y) == pytest.approx(abs(y - x) / 2)


@given(st.floats(0.01, 0.99), finite, finite, finite, st.floats(0, 1))
def test_pinball_convex(alpha, x1, x2, y, lam):
    lhs = pinball_loss(alpha, lam * x1 + (1 - lam) * x2, y)
    rhs = lam * pinball_loss(alpha, x1, y) + (1 - lam) * pinball_loss(alpha, x2, y)
    assert lhs <= rhs + 1e-9 * (1 + abs(rhs))


def test_pinball_gradient_signs():
    np.testing.assert_allclose(pinball_grad(0.1, np.array([1.0, 3.0, 2.0]), 2.0), [-0.1, 0.9, 0.0])


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1])
def test_pinball_rejects_alpha(alpha):
    with pytest.raises(ValueError):
        pinball_loss(alpha, 1.0, 2.0)


def test_proportion_pair():
    pair = ProportionPair.from_lower(0.0125, 0.05)
    assert pair.upper == pytest.approx(0.9625)
    assert pair.ncp == pytest.approx(0.95)
    central = ProportionPair.central(0.1)
    assert (central.lower, central.upper, central.ncp) == pytest.approx((0.05, 0.95, 0.9))
    with pytest.raises(ValueError):
        ProportionPair.from_lower(0.06, 0.05)


def six_model_bank(**kw):
    pairs = [ProportionPair.from_lower(a, 0.05) for a in (0.0125, 0.025, 0.0375)]
    return QrBank.for_pairs(pairs, Seeds(0), widths=(4, 8, 1), **kw), pairs


def test_update_touches_only_selected_models():
    bank, pairs = six_model_bank()
    before = bank.param_hashes()
    assert len(before) == 6
    bank.update_selected(pairs[1], np.ones(4), 3.0, 128)
    after = bank.param_hashes()
    changed = {k for k in before if before[k] != after[k]}
    assert changed == {("lower", proportion_key(0.025)), ("upper", proportion_key(0.975))}


def test_single_sample_buffer_batch():
    m = QrModel(0.1, np.random.default_rng(0), widths=(4, 8, 1))
    m.store(np.zeros(4), 1.0)
    loss = m.train_step(128)
    assert np.isfinite(loss)
    assert len(m.buffer) == 1


def test_buffer_is_fifo():
    m = QrModel(0.1, np.random.default_rng(0), widths=(4, 8, 1), buffer_capacity=3)
    for i in range(5):
        m.store(np.zeros(4), float(i))
    np.testing.assert_array_equal(m.buffer.ordered()[1], [2.0, 3.0, 4.0])


def test_missing_model_lookup():
    bank, _ = six_model_bank()
    with pytest.raises(LookupError):
        bank.model("lower", 0.3)


def test_zero_init_interval_is_zero():
    bank, pairs = six_model_bank(init="zeros")
    iv = bank.predict_interval(pairs[0], np.ones(4), 30.0)
    assert (iv.lower, iv.upper) == (0.0, 0.0)


def set_output(bank, role, alpha, value):
    m = bank.model(role, alpha)
    m.net.buffer[:] = 0.0
    m.net.biases[-1][:] = value


@pytest.mark.parametrize("raw, expected", [((-2.0, 35.0), (0.0, 30.0)), ((12.0, 9.0), (9.0, 12.0))])
def test_interval_repair(raw, expected):
    bank, pairs = six_model_bank()
    set_output(bank, "lower", pairs[0].lower, raw[0])
    set_output(bank, "upper", pairs[0].upper, raw[1])
    iv = bank.predict_interval(pairs[0], np.ones(4), 30.0)
    assert (iv.lower, iv.upper) == expected
    lo, hi = bank.predict_batch(pairs[0], np.ones((2, 4)), 30.0)
    np.testing.assert_array_equal(lo, expected[0])
    np.testing.assert_array_equal(hi, expected[1])
    assert repair_interval(*raw, 30.0) == expected


def test_interval_width():
    assert PredictionInterval(3.0, 7.5).width == 4.5


def test_bank_save_load(tmp_path):
    bank, pairs = six_model_bank()
    bank.update_selected(pairs[0], np.ones(4), 2.0, 8)
    bank.save(tmp_path)
    other, _ = six_model_bank(init="zeros")
    other.load(tmp_path)
    assert other.param_hashes() == bank.param_hashes()


def test_quantile_model_is_calibrated_on_held_out_data():
    # y = 2 + 3 x0 + Exp(1): the alpha-quantile is 2 + 3 x0 - log(1 - alpha)
    rng = np.random.default_rng(11)
    alpha = 0.9
    m = QrModel(alpha, rng, lr=1e-3, widths=(4, 32, 32, 1))

    def draw(n):
        x = rng.uniform(-1, 1, size=(n, 4))
        return x, 2 + 3 * x[:, 0] + rng.exponential(size=n)

    x, y = draw(20_000)
    for t in range(len(y)):
        m.store(x[t], y[t])
        m.train_step(128)
    xt, yt = draw(4000)
    below = yt <= m.predict(xt)
    # coverage within the 3-sigma binomial band, overall and on each half of the x0 range
    for rows in (slice(None), xt[:, 0] < 0, xt[:, 0] >= 0):
        n = below[rows].size
        assert abs(below[rows].mean() - alpha) < 3 * np.sqrt(alpha * (1 - alpha) / n)
