"""Tour of the kernel family: damping regimes, the smooth edge and the OU limit.

Run: python3 demos/kernel_regimes.py
"""

import math

import numpy as np

from twodsys import kernel

tau = np.linspace(0, 6, 7)

# s sets the damping: negative is overdamped, positive rings.
for s in (-2.0, 0.0, 2.0):
    theta = kernel.HyperParams(h=0.0, s=s, k=0.0, p=0.0)
    print(f"s={s:+.0f}  Q={kernel.q_factor(theta):.2f}  C =", np.round(kernel.evaluate(theta, tau), 4))

# p = 1 (j = 1) is the only member with a flat top, hence differentiable paths.
for p in (0.9, 1.0):
    slope = kernel.right_derivative_at_zero((0.0, 1.0, 0.0, p))
    print(f"p={p}: C'(0+) = {slope:.4f}")

# With j = sqrt(1 - e^s) the slow eigenmode drops out, leaving a single exponential.
s = -1.0
j = math.sqrt(-math.expm1(s))
theta = (0.0, s, 0.0, 2 / math.pi * math.asin(j))
rate = 1 - j
print("OU limit matches exp(-rate*tau):",
      np.allclose(kernel.evaluate(theta, tau), np.exp(-rate * tau), rtol=1e-12))

# Natural parameters are the ones a physicist would quote.
print(kernel.to_natural((0.5, 1.0, 0.2, 0.3)))
