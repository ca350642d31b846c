"""Sample a ringing process, then recover its parameters by maximum likelihood.

Run: python3 demos/fit_recovery.py
"""

import numpy as np

from twodsys import gp, kernel

truth = kernel.HyperParams(h=0.0, s=2.0, k=0.0, p=0.5)
t = np.arange(300) * 0.1
x = gp.sample(truth, t, seed=3)[0] + 1.5

res = gp.fit((t, x), gp.FitConfig(), restarts=3, seed=0)
est = res.model.theta
print(f"converged={res.converged}  LML={res.log_marginal_likelihood:.3f}")
print(f"{'':6}{'h':>8}{'s':>8}{'k':>8}{'p':>8}{'Q':>8}")
for name, th in (("true", truth), ("fit", est)):
    print(f"{name:6}{th.h:8.3f}{th.s:8.3f}{th.k:8.3f}{th.p:8.3f}{kernel.q_factor(th):8.3f}")
print(f"fitted mean {res.model.mean:.3f} (true 1.5)")

# Forecast a few time units past the data.
q = np.linspace(30, 33, 4)
mean, var = gp.predict(res.model, (t, x), q)
for a, m, v in zip(q, mean, var):
    print(f"t={a:4.1f}  {m:+.3f} +- {np.sqrt(v):.3f}")
