"""
Training the proportion-selecting bandit
========================================

A short closed-loop run: each hour the agent picks a lower proportion, the
matching quantile pair forecasts an interval, and the negated monetary score
is the reward.
"""

import logging

import numpy as np

from valuepi import RunConfig, train

logging.basicConfig(level=logging.INFO, format="%(message)s")

config = RunConfig(n_samples=1500, epochs=3, baseline="")
result = train(config)

print("actions:", np.round(result.agent.space.actions, 4))
for entry in result.log:
    counts = [entry[f"count_{j}"] for j in range(len(result.agent.space))]
    print(f"epoch {entry['epoch']}: avg reward {entry['avg_reward']:.2f} $, eps {entry['epsilon']:.2f}, picks {counts}")

# state-dependent choice on held-out hours
picks = result.agent.greedy(result.test.scaled_features)
print("greedy picks on the test set:", np.bincount(picks, minlength=len(result.agent.space)))
