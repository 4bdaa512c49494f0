"""
Streaming quantile regression
=============================

Fits a pair of quantile networks to synthetic wind power one sample at a
time, then checks how often held-out power falls inside the interval.
"""

import numpy as np

from valuepi import ProportionPair, QrBank, generate_synthetic, split
from valuepi.seeding import Seeds
from valuepi.metrics import acd_arrays, winkler_scores

train_ds, test_ds = split(generate_synthetic(6000, seed=1), 0.8)
x, y = train_ds.scaled_features, train_ds.power

# a 90% interval with symmetric tails, and one that shifts both tails down
beta = 0.1
pairs = [ProportionPair.central(beta), ProportionPair.from_lower(0.02, beta)]
bank = QrBank.for_pairs(pairs, Seeds(0))

for t in range(len(train_ds)):
    for pair in pairs:
        bank.update_selected(pair, x[t], y[t], 128)

xt = test_ds.scaled_features
for pair in pairs:
    lo, hi = bank.predict_batch(pair, xt, train_ds.capacity)
    print(f"proportions ({pair.lower:.3f}, {pair.upper:.3f}): "
          f"ACD {acd_arrays(lo, hi, test_ds.power, 1 - beta):+.2f}%, "
          f"mean width {np.mean(hi - lo):.2f} MW, "
          f"Winkler {np.mean(winkler_scores(lo, hi, test_ds.power, beta)):.2f}")
