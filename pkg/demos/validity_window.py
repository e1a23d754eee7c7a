"""
Why the diffusive bound needs a ballistic validity window.

Pure transport u_t = u_x moves data to the left at unit speed. Nothing
reaches X = [-2, -0.5] from Y = [0, 0.2] before t = 0.5, after which half
of the mass arrives at once: no Gaussian factor can describe that jump.
The traveling ramp shows the same effect for a degenerate diffusion whose
gradient acts like a drift.
"""

import numpy as np

from diffbounds import Grid, SolverConfig, apply_propagator, certify_dg_bound, indicator
from diffbounds.coefficients import constant
from diffbounds.showcase import traveling_wave_scenario

grid = Grid.interval(-3.0, 3.0, 768, "periodic")
X, Y = grid.box_region([-2.0], [-0.5], "X"), grid.box_region([0.0], [0.2], "Y")
transport = constant(0.0, b=1.0)
cfg = SolverConfig(dt=1e-3)

print("upwind transport, mass fraction of chi_Y arriving in X")
u = indicator(Y)
t = 0.0
for stop in (0.3, 0.45, 0.55, 0.6, 0.7):
    u = apply_propagator(u, transport, grid, t, stop, cfg)
    t = stop
    frac = u[X.mask].sum() / Y.size
    print(f"  t = {t:4.2f}: {frac:.3f}   (exact shift: {max(0.0, min(t - 0.5, 0.2)) / 0.2:.3f})")
print("the upwind scheme smears the front over a numerical diffusivity alpha_num = |b| h / 2")

c = certify_dg_bound(transport, grid, X, Y, 0.0, 1.0, np.inf, SolverConfig(dt=1e-2))
print(f"alpha_num = {c.alpha_num:.4f}, certified window t <= {c.t_max:.3e}\n")

rep = traveling_wave_scenario(0.5, 0.1)
print("traveling ramp A(x - t/2) with R = 0.1")
print(f"  alpha = {rep.alpha:.3f}, beta constant = {rep.beta_constant:.3f}")
print(f"  bound inside the window holds: {rep.inside_passed}")
for row in rep.outside[::2]:
    print(f"  t = {row['t']:4.2f}: measured {row['measured']:.3f} vs naive diffusive bound "
          f"{row['naive_diffusive']:.3f}, in window: {row['validity']}")
print(f"  largest distance of the numerical front from t/2: {rep.max_front_error:.3f}")
print("  the regularised limit strands mass behind the front instead of carrying the profile along")
