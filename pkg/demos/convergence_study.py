"""Error versus sample size on a 4D instance with a known linear map.

A truncated standard Gaussian pushed forward by x -> 0.8 x + 0.1 keeps its
optimal map linear, so the true transport value is available by Monte Carlo.
The estimation error from sample embeddings concentrates as the number of
samples grows.  (A smaller replica of the command-line `convergence`
experiment; runs in under a minute.)

Run with:  python demos/convergence_study.py
"""

import numpy as np

from smoothot import KernelSpec, estimate_ot, sample_embedding, sobol_pairs
from smoothot.benchmarks import truncated_gaussian_instance

inst = truncated_gaussian_instance()
reference, stderr = inst.mc_reference(200_000, seed=0)
print(f"reference value: {reference:.5f} +- {stderr:.1e} (Monte Carlo)\n")

kernel = KernelSpec.gaussian(1.0)
seeds = 8

print("  n    median |error|   quartiles")
for n in (10, 25, 50):
    ell = 100 + n
    fill = sobol_pairs(inst.domain_x, inst.domain_y, ell)
    errors = []
    for rep in range(seeds):
        rng = np.random.default_rng([0, n, rep])
        emb_mu = sample_embedding(inst.sample_mu(rng, n), kernel)
        emb_nu = sample_embedding(inst.sample_nu(rng, n), kernel)
        est = estimate_ot(
            fill, kernel, kernel, kernel, emb_mu, emb_nu,
            lambda1=1.0 / ell, lambda2=1.4, tau=1e-5,
        )
        errors.append(abs(est.value - reference))
    q25, med, q75 = np.quantile(errors, [0.25, 0.5, 0.75])
    print(f"  {n:3d}   {med:.4f}           [{q25:.4f}, {q75:.4f}]")
