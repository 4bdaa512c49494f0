"""Brute-force reference solvers, deliberately independent of the package code.

Economic dispatch is solved by enumerating active sets of the two-unit
problem; settlement by enumerating vertices of the regulation LP; the
day-ahead problem by scanning a fine grid of wind schedules.
"""
import itertools

import numpy as np

GENERATORS = np.array([[70.0, 0.27, 40.0, 3.4], [60.0, 0.3, 26.5, 3.0]])   # cap, a, b, c
REGULATION = np.array([[10.0, 100.0, 10.0, 10.0], [20.0, 200.0, 30.0, 30.0]])  # c_down, c_up, cap_down, cap_up


def ed_cost(residual, gens=GENERATORS):
    """Minimum generation cost for two units, vectorised over ``residual``.

    Candidates: either unit at a bound (0 or cap), or the interior point where
    marginal costs match. Infeasible residuals give inf.
    """
    r = np.asarray(residual, dtype=float)
    (c1, a1, b1, k1), (c2, a2, b2, k2) = gens
    interior = (a2 * r + b2 - b1) / (a1 + a2)
    cands = [np.zeros_like(r), np.full_like(r, c1), r, r - c2, interior]
    best = np.full(r.shape, np.inf)
    for x1 in cands:
        x2 = r - x1
        ok = (x1 >= -1e-12) & (x1 <= c1 + 1e-12) & (x2 >= -1e-12) & (x2 <= c2 + 1e-12)
        cost = 0.5 * a1 * x1 ** 2 + b1 * x1 + k1 + 0.5 * a2 * x2 ** 2 + b2 * x2 + k2
        best = np.where(ok, np.minimum(best, cost), best)
    return best


def settle_cost(deviation, reg=REGULATION):
    """Optimal value of min sum(c_up zU - c_down zD) s.t. sum zD - sum zU = dev, bounds.

    Every vertex of this LP has all variables but one at a bound; the free
    variable is fixed by the equality. Enumerate all of them.
    """
    dev = np.asarray(deviation, dtype=float)
    n = len(reg)
    # variable j: (sign in equality, cost, cap)
    var = [(1.0, -r[0], r[2]) for r in reg] + [(-1.0, r[1], r[3]) for r in reg]
    best = np.full(dev.shape, np.inf)
    for free in range(2 * n):
        others = [j for j in range(2 * n) if j != free]
        for bounds in itertools.product((0, 1), repeat=len(others)):
            fixed_sum = sum(var[j][0] * var[j][2] * b for j, b in zip(others, bounds))
            fixed_cost = sum(var[j][1] * var[j][2] * b for j, b in zip(others, bounds))
            s, c, cap = var[free]
            z = (dev - fixed_sum) / s
            ok = (z >= -1e-12) & (z <= cap + 1e-12)
            best = np.where(ok, np.minimum(best, fixed_cost + c * z), best)
    return best


def settle_grid(deviation, step=1.0, reg=REGULATION):
    """Settlement by scanning a grid over three of the four LP variables."""
    best = np.inf
    zd1 = np.arange(0, reg[0, 2] + step / 2, step)
    zd2 = np.arange(0, reg[1, 2] + step / 2, step)
    zu1 = np.arange(0, reg[0, 3] + step / 2, step)
    D1, D2, U1 = np.meshgrid(zd1, zd2, zu1, indexing="ij")
    U2 = D1 + D2 - U1 - deviation
    ok = (U2 >= -1e-9) & (U2 <= reg[1, 3] + 1e-9)
    cost = -reg[0, 0] * D1 - reg[1, 0] * D2 + reg[0, 1] * U1 + reg[1, 1] * U2
    if ok.any():
        best = cost[ok].min()
    return best


def day_ahead_grid(load, lower, upper, step_milli=1, wind_capacity=30.0, gens=GENERATORS, reg=REGULATION):
    """Grid search over p in integer multiples of ``step_milli`` * 1e-3 MW.

    Returns (p_best, objective). Inputs should lie on the 1e-3 grid so the
    kinks of the piecewise objective are grid points.
    """
    k = np.arange(0, int(round(min(wind_capacity, load) * 1000)) + 1, step_milli)
    p = k / 1000.0
    obj = ed_cost(load - p, gens) + np.maximum(settle_cost(lower - p, reg), settle_cost(upper - p, reg))
    i = int(np.argmin(obj))
    return p[i], obj[i]
