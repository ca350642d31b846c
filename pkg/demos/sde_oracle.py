"""Check the closed-form covariance against a simulated 2D linear SDE.

Run: python3 demos/sde_oracle.py
"""

import numpy as np

from twodsys import kernel, sde

# A lightly damped oscillator driven through its first component.
spec = sde.SystemSpec(A=0.5, B=1.0, C=-2.0, D=0.3, K=((1.0, 0.2), (0.2, 0.5)))
print("stable:", bool(sde.check_stability(spec)))

nat = sde.system_to_kernel(spec)
theta = kernel.from_natural(nat)
print("natural:", nat)
print("hyper:  ", theta)

sigma = nat.sigma
# Euler-Maruyama damps too little by about omega**2 dt / 2; keep dt small next to 1/omega.
omega = np.sqrt(max(-nat.Delta, 0.0))
cfg = sde.SimConfig(dt=0.02 / (sigma + omega ** 2 / sigma), total_time=2000 / sigma, seed=1)
_, path = sde.simulate(spec, cfg)
acf = sde.empirical_autocov(path[:, 0], cfg.dt, max_lag=4 / sigma)

print(f"{'lag':>6} {'simulated':>10} {'+-se':>7} {'closed form':>12}")
for lag, est, se in acf[:: len(acf) // 8]:
    print(f"{lag:6.2f} {est:10.4f} {se:7.4f} {kernel.evaluate(theta, lag):12.4f}")

# The reverse map gives a system with the same first-component covariance.
twin = sde.kernel_to_system(nat)
print("twin realisation:", twin.A, twin.B, twin.C, twin.D)
print("same S11:", np.isclose(sde.stationary_covariance(twin)[0, 0], nat.S11))
