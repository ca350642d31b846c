"""Bayesian odds that a series comes from an underdamped (ringing) system.

Run: python3 demos/oscillation_odds.py
"""

import numpy as np

from twodsys import gp, inference

t = np.arange(200) * 0.25
for s in (2.0, 0.0, -2.0):
    x = gp.sample((0.0, s, 0.0, 0.0), t, seed=11)[0]
    data = gp.TimeSeries(t, x)
    prior = inference.default_prior(data)
    result = inference.classify(data, prior, threshold_odds=10, budget=20000, seed=0)
    odds = result.odds
    print(f"true s={s:+.0f}: log odds {odds.log_odds:+7.2f} +- {odds.stderr:.2f}, "
          f"P(oscillatory)={odds.p_oscillatory:.3f} -> {result.label}")

# A prior tilted towards smooth members barely matters once the data speak.
prior = inference.default_prior(data, j_prior="tilted")
print("tilted prior:", inference.posterior_odds(data, prior, budget=20000, seed=0))
