"""Tour of the building blocks: kernels, Gram factors, and fill sets.

Run with:  python demos/kernels_and_fill_sets.py
"""

import numpy as np

from smoothot import (
    Domain,
    KernelSpec,
    cholesky_psd,
    eval_kernel,
    fill_distance,
    gram,
    sobol_pairs,
    uniform_pairs,
)

# --- Sobolev kernels collapse to polynomial-times-exponential profiles ------

print("Sobolev kernel values at distance r = 1 (unit normalization):")
for s, label in [(1.0, "exp(-r)"), (2.0, "(1+r)exp(-r)"), (3.0, "(1+r+r^2/3)exp(-r)")]:
    spec = KernelSpec.sobolev(s, 1)
    print(f"  smoothness {s}: k(0,1) = {eval_kernel(spec, [0.0], [1.0]):.7f}  [{label}]")

# --- Gram matrices factor into feature vectors ------------------------------

rng = np.random.default_rng(0)
points = rng.uniform(0, 1, size=(6, 2))
spec = KernelSpec.gaussian(0.25)
k = gram(spec, points)
factor = cholesky_psd(k)
phi = factor.features
print("\nGram factorization K = R'R:")
print(f"  jitter used: {factor.jitter_used:.1e}")
print(f"  max |phi_i . phi_j - K_ij| = {np.abs(phi.T @ phi - k.entries).max():.2e}")

# --- fill sets cover the product space ---------------------------------------

dom = Domain.unit(1)
for n_pairs in (16, 64, 256):
    sob = sobol_pairs(dom, dom, n_pairs)
    uni = uniform_pairs(dom, dom, n_pairs, seed=1)
    h_sob = fill_distance(sob, dom, dom, grid_per_dim=65)
    h_uni = fill_distance(uni, dom, dom, grid_per_dim=65)
    print(
        f"\nfill distance at {n_pairs:4d} pairs: "
        f"sobol {h_sob:.4f} vs uniform {h_uni:.4f}"
    )
