"""Reading compositional effects: gradients, clr coefficients and ratio factors.

A log-linear effect of a composition ``x`` enters the predictor as
``<b, x>_A``; the clr coordinates of the gradient ``b`` say how the
expected count responds when one part grows relative to the others.
"""

import numpy as np

from gfamm import simplex
from gfamm.bayes_space import Grid, clr_density, clr_density_inv, normalize_density

# a four-part composition (shares of a population) and a 10% relative
# increase of the first part, applied by perturbation
x = np.array([0.248, 0.021, 0.205, 0.527])
shifted = simplex.perturb(x, simplex.closure([1.1, 1, 1, 1]))
print("before ", np.round(x, 3))
print("after  ", np.round(shifted, 3))

# a gradient given by its clr coordinates; the response factor for scaling
# part j by alpha (relative to the others) is alpha ** clr_j(b)
clr_b = np.array([5.747, -1.515, 0.778, -5.010])
b = simplex.clr_inv(clr_b)
print("\nsimplicial gradient", np.round(b, 5))
for j, c in enumerate(clr_b):
    f = simplex.relative_ratio_effect(c, 1.1)
    print(f"part {j + 1}: clr {c:+.3f} -> factor {f:.3f} ({100 * (f - 1):+.0f}% per 10% relative increase)")

# the contribution to the predictor is the same whichever coordinates are used
xs = simplex.closure(np.random.default_rng(1).uniform(0.1, 1, (3, 4)))
print("\n<b, x>_A           ", np.round(simplex.aitchison_inner(xs, b), 6))
print("clr(b) . clr(x)    ", np.round(simplex.clr(xs) @ clr_b, 6))
print("ilr(b) . ilr(x)    ", np.round(simplex.ilr_pivot(xs) @ simplex.ilr_pivot(b), 6))

# the functional analogue: a density on an age grid and a clr-space effect
grid = Grid.from_points(np.linspace(0, 100, 101))
s = grid.points / 100
dens = normalize_density(np.exp(-((s - 0.4) ** 2) / 0.05), grid)
beta = np.cos(np.pi * s)
beta -= grid.integrate(beta) / grid.length
print(f"\nintegral of beta(s): {grid.integrate(beta):.1e}")
print(f"contribution <beta, clr(f)>: {grid.integrate(beta * clr_density(dens, grid)):.4f}")
g = clr_density_inv(beta, grid)
print(f"clr^-1(beta) is a density: integral {grid.integrate(g):.6f}, peak at age {grid.points[np.argmax(g)]:.0f}")
