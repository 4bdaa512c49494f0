"""
Day-ahead dispatch under an interval forecast
=============================================

Walks through one hour: the operator receives a wind interval, schedules
generators and wind day-ahead against the worst case in the interval, then
settles the realized deviation with regulation blocks.
"""

import numpy as np

from valuepi import PredictionInterval, VppConfig, monetary_score, settle_deviation, solve_day_ahead

config = VppConfig()
load = 50.0
interval = PredictionInterval(5.0, 15.0)

# the schedule hedges toward the lower endpoint: wind above the schedule is
# sold off cheaply, wind below it has to be bought back at a premium
sol = solve_day_ahead(config, interval, load)
print(f"scheduled wind p* = {sol.p:.3f} MW, generators x = {np.round(sol.x, 3)}")
print(f"day-ahead cost {sol.da_cost:.2f} $, worst-case recourse {sol.worst_case_recourse:.2f} $"
      f" at w = {sol.worst_case_w:.1f} MW")

# realized wind 12 MW: 7 MW surplus goes to the down-regulation blocks in merit order
rt = settle_deviation(config.regulation, 12.0 - sol.p)
print(f"down regulation {rt.z_down}, up regulation {rt.z_up}, real-time cost {rt.cost:.2f} $")

score = monetary_score(config, interval, load, 12.0)
print(f"monetary score {score.score:.2f} $ = {score.da:.2f} day-ahead + {score.rt:.2f} real-time")

# a narrower interval with the same lower endpoint buys the same schedule
for lo, hi in [(5.0, 15.0), (5.0, 6.0), (8.0, 15.0), (2.0, 15.0)]:
    s = monetary_score(config, PredictionInterval(lo, hi), load, 12.0)
    print(f"  [{lo:4.1f}, {hi:4.1f}] -> score {s.score:8.2f} $")
