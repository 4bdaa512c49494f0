"""
Forecast quality versus forecast value
======================================

Compares the trained bandit against central, naive and deterministic
forecasts on held-out data. Statistical scores (Winkler, ACD) and the
monetary score need not rank methods the same way.

Takes a few minutes; raise ``epochs`` for a closer look at the value gap.
"""

from valuepi import RunConfig, train
from valuepi.harness import evaluate_run, reduction_table, summary_markdown

config = RunConfig(n_samples=3000, epochs=3, naive_window=168)
result = train(config)
reports = evaluate_run(result)

print(summary_markdown(reports, config))
print("total score reduction of the proposed method versus each baseline ($):")
for name, value in reduction_table(reports).items():
    print(f"  {name:14s} {value:10.2f}")
