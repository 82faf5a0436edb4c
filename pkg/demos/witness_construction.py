"""Sum-of-squares witnesses for the dual constraint function.

For a convex potential f with transport map T = grad f, the nonnegative
constraint function h(x, y) = f(x) + f*(y) - x'y equals an explicit sum of d
squares built from the Taylor remainder of f.  This script verifies the
identity numerically for a quadratic potential (exact) and a quartic one
(limited only by the quadrature and the map inversion).

Run with:  python demos/witness_construction.py
"""

import numpy as np

from smoothot import (
    Domain,
    quadratic_potential_spec,
    quartic_potential_1d,
    verify_sos_identity,
    witness_functions,
)
from smoothot.witness import constraint_gap

# quadratic potential in 2D: everything decouples per axis
quad = quadratic_potential_spec(np.array([2.0, 4.0]), Domain.unit(2))
res = verify_sos_identity(quad, grid_per_dim=10, quad_nodes=8)
print(f"quadratic potential: max identity residual {res:.2e}")

x = np.array([0.3, 0.8])
y = np.array([1.1, 2.5])
w = witness_functions(quad, x, y)
print(f"  at one pair: h = {constraint_gap(quad, x, y):.6f}, sum w_i^2 = {float(w @ w):.6f}")

# quartic potential: transport map x^3 + x, inverted by bisection
quartic = quartic_potential_1d()
res = verify_sos_identity(quartic, grid_per_dim=20, quad_nodes=32)
print(f"\nquartic potential:   max identity residual {res:.2e}")

# h vanishes exactly along the graph of the map
xs = np.linspace(-1, 1, 5)
print("\n   x      T(x)      h(x, T(x))")
for xv in xs:
    yv = quartic.transport(np.array([xv]))
    print(f"  {xv:+.2f}   {yv[0]:+.3f}    {constraint_gap(quartic, [xv], yv):.2e}")
