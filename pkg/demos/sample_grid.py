"""Regenerate the 6x5 grid of sample paths and measure path roughness.

Run: python3 demos/sample_grid.py [output_dir]

Writes one CSV and one SVG per (s, p) cell, then prints the log-log slope
of increment variance against lag: about 2 for smooth paths (p = 1) and
about 1 for rough ones.  Slopes near 1 only appear at small enough lags,
so they are measured on exact Markov draws at lag 1e-5 as well.
"""

import sys

import numpy as np

from twodsys import cli, sde, statespace

out = sys.argv[1] if len(sys.argv) > 1 else "figure_out"
cli.main(["figure", "--output", out, "--seed", "0"])

dt = 1e-5
fine = np.arange(17) * dt
print(f"{'s':>3} {'p':>5} {'slope@0.01':>11} {'slope@1e-5':>11}")
for s, p in cli.figure_cells():
    x = np.loadtxt(f"{out}/{cli.cell_name(s, p)}.csv", delimiter=",", skiprows=1)[:, 1]
    coarse = sde.increment_slope(x, 0.01, steps=(1, 2, 4, 8))
    paths = statespace.sample_markov((0, s, 0, p), fine, seed=0, count=4000)
    v = [np.mean((paths[:, m] - paths[:, 0]) ** 2) for m in (1, 2, 4, 8, 16)]
    slope = np.polyfit(np.log(np.array([1, 2, 4, 8, 16]) * dt), np.log(v), 1)[0]
    print(f"{s:+3d} {p:5.2f} {coarse:11.2f} {slope:11.2f}")
