"""Two-timescale VPP operation: robust day-ahead dispatch and real-time settlement.

Day ahead, two dispatchable generators and a wind schedule ``p`` meet the load,
hedged against the worst wind outcome in the prediction interval. The recourse
(and the real-time settlement) buys up-regulation or sells down-regulation in
blocks at linear prices. Under the no-arbitrage condition
``min(c_up) > max(c_down)`` the settlement is a merit-order fill, the
recourse cost is nonincreasing in realized wind, and the worst case is the
interval's lower endpoint.
"""
from __future__ import annotations

import bisect
import functools
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
TOL_MW = 1e-6
TOL_COST = 1e-9


class InfeasibleError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorParams:
    capacity: float
    a: float
    b: float
    c: float

    def __post_init__(self):
        if self.a <= 0 or self.capacity <= 0:
            raise ValueError(f"generator needs a > 0 and capacity > 0: {self}")

    def cost(self, x):
        return 0.5 * self.a * x * x + self.b * x + self.c


@dataclass(frozen=True)
class RegulationParams:
    c_down: float
    c_up: float
    cap_down: float
    cap_up: float

    def __post_init__(self):
        if min(self.c_down, self.c_up, self.cap_down, self.cap_up) < 0:
            raise ValueError(f"regulation parameters must be non-negative: {self}")


DEFAULT_GENERATORS = (GeneratorParams(70.0, 0.27, 40.0, 3.4), GeneratorParams(60.0, 0.3, 26.5, 3.0))
DEFAULT_REGULATION = (RegulationParams(10.0, 100.0, 10.0, 10.0), RegulationParams(20.0, 200.0, 30.0, 30.0))


@dataclass(frozen=True)
class VppConfig:
    generators: tuple = DEFAULT_GENERATORS
    regulation: tuple = DEFAULT_REGULATION
    wind_capacity: float = 30.0

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "regulation", tuple(self.regulation))
        check_no_arbitrage(self.regulation)
        if self.wind_capacity < 0:
            raise ValueError("wind capacity must be non-negative")
        if (sum(r.cap_up for r in self.regulation) < self.wind_capacity
                or sum(r.cap_down for r in self.regulation) < self.wind_capacity):
            warnings.warn("regulation capacity below wind capacity: some deviations will be infeasible",
                          stacklevel=3)

    @property
    def generation_capacity(self):
        return sum(g.capacity for g in self.generators)

    def scaled_costs(self, k):
        """Copy with every cost coefficient multiplied by ``k``."""
        gens = tuple(GeneratorParams(g.capacity, k * g.a, k * g.b, k * g.c) for g in self.generators)
        regs = tuple(RegulationParams(k * r.c_down, k * r.c_up, r.cap_down, r.cap_up) for r in self.regulation)
        return VppConfig(gens, regs, self.wind_capacity)


def check_no_arbitrage(regulation):
    up = min(r.c_up for r in regulation)
    down = max(r.c_down for r in regulation)
    if not up > down:
        raise ValueError(f"no-arbitrage violated: cheapest up-regulation {up} <= dearest down-regulation {down}")


# -- economic dispatch ------------------------------------------------------

def _units_at(gens, lam):
    return [min(max((lam - g.b) / g.a, 0.0), g.capacity) for g in gens]


@functools.lru_cache(maxsize=64)
def _supply_curve(gens):
    """Breakpoints of total output as a function of the marginal price.

    Each unit's output clamp((lam - b) / a, 0, cap) is piecewise linear in
    lam, so the total is too; knots are where some unit hits a bound.
    """
    knots = sorted({g.b for g in gens} | {g.b + g.a * g.capacity for g in gens})
    totals = [sum(_units_at(gens, k)) for k in knots]
    return knots, totals


def _dispatch(gens, residual):
    total_cap = sum(g.capacity for g in gens)
    if residual < -TOL_MW or residual > total_cap + TOL_MW:
        raise InfeasibleError(f"residual load {residual:.6f} MW outside [0, {total_cap}]")
    residual = min(max(residual, 0.0), total_cap)
    knots, totals = _supply_curve(tuple(gens))
    # bisect for the bracketing knots, then solve the linear piece exactly
    hi = bisect.bisect_left(totals, residual)
    if hi == 0:
        lam = knots[0]
    else:
        hi = min(hi, len(knots) - 1)
        lo = hi - 1
        span = totals[hi] - totals[lo]
        lam = knots[lo] + (residual - totals[lo]) * (knots[hi] - knots[lo]) / span if span > 0 else knots[hi]
    x = _units_at(gens, lam)
    # absorb rounding in the unit with the most headroom
    err = residual - sum(x)
    if err:
        j = max(range(len(gens)), key=lambda i: min(x[i], gens[i].capacity - x[i]))
        x[j] = min(max(x[j] + err, 0.0), gens[j].capacity)
    cost = sum(g.cost(xi) for g, xi in zip(gens, x))
    return x, cost, lam


def economic_dispatch(gens, residual_load):
    """Least-cost split of ``residual_load`` over quadratic-cost generators.

    Returns ``(x, cost)``; fixed costs are always charged.
    """
    x, cost, _ = _dispatch(gens, residual_load)
    return np.array(x), cost


def marginal_price(gens, residual_load):
    return _dispatch(gens, residual_load)[2]


# -- regulation settlement --------------------------------------------------

@dataclass(frozen=True)
class RealTimeSolution:
    z_down: np.ndarray
    z_up: np.ndarray
    cost: float


def _down_order(reg):
    return sorted(range(len(reg)), key=lambda i: (-reg[i].c_down, i))


def _up_order(reg):
    return sorted(range(len(reg)), key=lambda i: (reg[i].c_up, i))


def settle_deviation(reg, deviation):
    """Settle ``deviation = wind - schedule`` with regulation blocks.

    Excess wind (> 0) is sold as down-regulation, dearest block first;
    a shortfall buys up-regulation, cheapest block first.
    """
    n = len(reg)
    z_down = np.zeros(n)
    z_up = np.zeros(n)
    if deviation > 0:
        cap = sum(r.cap_down for r in reg)
        if deviation > cap + TOL_MW:
            raise InfeasibleError(f"excess wind {deviation:.6f} MW exceeds down-regulation capacity {cap}")
        rest = min(deviation, cap)
        for i in _down_order(reg):
            z_down[i] = min(rest, reg[i].cap_down)
            rest -= z_down[i]
    elif deviation < 0:
        cap = sum(r.cap_up for r in reg)
        if -deviation > cap + TOL_MW:
            raise InfeasibleError(f"wind shortfall {-deviation:.6f} MW exceeds up-regulation capacity {cap}")
        rest = min(-deviation, cap)
        for i in _up_order(reg):
            z_up[i] = min(rest, reg[i].cap_up)
            rest -= z_up[i]
    cost = float(sum(-r.c_down * zd + r.c_up * zu for r, zd, zu in zip(reg, z_down, z_up)))
    return RealTimeSolution(z_down, z_up, cost)


class _Settlement:
    """Precomputed merit order for fast scalar settlement costs."""

    def __init__(self, reg):
        self.down = [(reg[i].c_down, reg[i].cap_down) for i in _down_order(reg)]
        self.up = [(reg[i].c_up, reg[i].cap_up) for i in _up_order(reg)]
        self.cap_down = sum(c for _, c in self.down)
        self.cap_up = sum(c for _, c in self.up)

    def cost(self, dev):
        total = 0.0
        if dev > 0:
            if dev > self.cap_down + TOL_MW:
                return math.inf
            for price, cap in self.down:
                q = min(dev, cap)
                total -= price * q
                dev -= q
        elif dev < 0:
            dev = -dev
            if dev > self.cap_up + TOL_MW:
                return math.inf
            for price, cap in self.up:
                q = min(dev, cap)
                total += price * q
                dev -= q
        return total

    def breakpoints(self):
        """Deviations at which the settlement cost changes slope."""
        pts = [0.0]
        acc = 0.0
        for _, cap in self.down:
            acc += cap
            pts.append(acc)
        acc = 0.0
        for _, cap in self.up:
            acc += cap
            pts.append(-acc)
        return pts


def worst_case_recourse(reg, interval, p):
    """Worst-case settlement cost over wind in the interval: ``(cost, w)``.

    Both endpoints are evaluated; ties resolve to the lower endpoint.
    """
    lo = settle_deviation(reg, interval.lower - p).cost
    hi = settle_deviation(reg, interval.upper - p).cost
    if hi > lo + TOL_COST:
        return hi, interval.upper
    return lo, interval.lower


# -- day-ahead problem ------------------------------------------------------

def golden_section(f, lo, hi, tol=TOL_MW):
    """Minimize a unimodal scalar function on [lo, hi]; returns (x, f(x))."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


@dataclass(frozen=True)
class DayAheadSolution:
    x: np.ndarray
    p: float
    da_cost: float
    worst_case_recourse: float
    worst_case_w: float

    @property
    def objective(self):
        return self.da_cost + self.worst_case_recourse


def _check_interval(interval, capacity):
    if not (-TOL_MW <= interval.lower <= interval.upper <= capacity + TOL_MW):
        raise ValueError(f"invalid interval [{interval.lower}, {interval.upper}] for capacity {capacity}")


def day_ahead_objective(config, interval, load, p):
    """Dispatch cost plus worst-case recourse at wind schedule ``p``."""
    settle = _Settlement(config.regulation)
    rec = max(settle.cost(interval.lower - p), settle.cost(interval.upper - p))
    return _dispatch(config.generators, load - p)[1] + rec


def feasible_schedule_range(config, interval, load):
    settle = _Settlement(config.regulation)
    p_lo = max(0.0, load - config.generation_capacity, interval.upper - settle.cap_down)
    p_hi = min(config.wind_capacity, load, interval.lower + settle.cap_up)
    return p_lo, p_hi


def solve_day_ahead(config, interval, load):
    _check_interval(interval, config.wind_capacity)
    gens = config.generators
    settle = _Settlement(config.regulation)
    p_lo, p_hi = feasible_schedule_range(config, interval, load)
    if p_lo > p_hi + TOL_MW:
        raise InfeasibleError(
            f"no feasible wind schedule for load {load:.6f} MW and interval [{interval.lower}, {interval.upper}]")
    p_hi = max(p_hi, p_lo)
    w_lo, w_hi = interval.lower, interval.upper

    def objective(p):
        rec = max(settle.cost(w_lo - p), settle.cost(w_hi - p))
        return _dispatch(gens, load - p)[1] + rec

    p_best, f_best = golden_section(objective, p_lo, p_hi)
    # the recourse term is piecewise linear, so the optimum often sits on a kink
    candidates = [p_lo, p_hi]
    for w in (w_lo, w_hi):
        candidates.extend(w - d for d in settle.breakpoints())
    for p in sorted(candidates):
        if p_lo <= p <= p_hi:
            f = objective(p)
            if f < f_best - TOL_COST or (abs(f - f_best) <= TOL_COST and p < p_best):
                p_best, f_best = p, f
    x, da_cost, _ = _dispatch(gens, load - p_best)
    rec, w = worst_case_recourse(config.regulation, interval, p_best)
    return DayAheadSolution(np.array(x), p_best, da_cost, rec, w)


class ScoreBreakdown(NamedTuple):
    score: float
    da: float
    rt: float


def operate(config, interval, load, y):
    """Run both stages; returns (DayAheadSolution, RealTimeSolution)."""
    if not -TOL_MW <= y <= config.wind_capacity + TOL_MW:
        raise ValueError(f"realization {y} outside [0, {config.wind_capacity}]")
    da = solve_day_ahead(config, interval, load)
    rt = settle_deviation(config.regulation, y - da.p)
    return da, rt


def monetary_score(config, interval, load, y):
    """Operational cost of acting on ``interval`` when wind turns out ``y``.

    Lower is better; the bandit reward is its negative.
    """
    da, rt = operate(config, interval, load, y)
    return ScoreBreakdown(da.da_cost + rt.cost, da.da_cost, rt.cost)


def reward(config, interval, load, y):
    return -monetary_score(config, interval, load, y).score
