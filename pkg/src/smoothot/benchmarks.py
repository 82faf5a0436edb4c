"""Benchmark instances with known transport structure.

Two desk-scale problems used by the command-line experiments and the test
suite: a 1D uniform distribution pushed forward by a translation (transport
value t^2/2, map x -> x + t), and a 4D truncated standard Gaussian pushed
forward by the linear map x -> a x + b (the gradient of a convex quadratic,
hence the optimal map; the value is estimated by Monte Carlo).
"""

from dataclasses import dataclass

import numpy as np

from .embeddings import MeasureSpec, exact_embedding
from .geometry import Domain, sobol_pairs
from .kernels import KernelSpec

__all__ = [
    "TranslationBenchmark",
    "translation_benchmark",
    "TruncatedGaussianInstance",
    "truncated_gaussian_instance",
    "sample_truncated_normal",
]


@dataclass(frozen=True)
class TranslationBenchmark:
    domain_x: Domain
    domain_y: Domain
    shift: float
    kernel: KernelSpec
    kernel_joint: KernelSpec
    fill: object
    emb_mu: object
    emb_nu: object

    @property
    def reference(self):
        return 0.5 * self.shift**2

    def true_map(self, x):
        return np.asarray(x) + self.shift


def _joint_kernel(kernel, joint_dim):
    """Kernel on the product space with the same radial profile.

    Raising the sobolev smoothness by (joint_dim - d) / 2 keeps the Bessel
    order, hence the profile, unchanged; gaussians are dimension-free.
    """
    if kernel.family != "sobolev":
        return kernel
    return KernelSpec.sobolev(
        kernel.s + (joint_dim - kernel.d) / 2.0, joint_dim, kernel.lengthscale
    )


def translation_benchmark(shift=0.3, n_fill=128, sigma_sq=0.1, kernel=None):
    """Uniform on [0, 1] to uniform on [shift, 1 + shift], exact embeddings."""
    domain_x = Domain(((0.0, 1.0),))
    domain_y = Domain(((shift, 1.0 + shift),))
    k = kernel or KernelSpec.gaussian(sigma_sq)
    fill = sobol_pairs(domain_x, domain_y, n_fill)
    emb_mu = exact_embedding(MeasureSpec.uniform_box(domain_x), k)
    emb_nu = exact_embedding(MeasureSpec.uniform_box(domain_y), k)
    return TranslationBenchmark(
        domain_x=domain_x,
        domain_y=domain_y,
        shift=shift,
        kernel=k,
        kernel_joint=_joint_kernel(k, 2),
        fill=fill,
        emb_mu=emb_mu,
        emb_nu=emb_nu,
    )


def sample_truncated_normal(rng, n, dim, mean=None, half_width=1.0):
    """Rejection sampling of a standard normal truncated to a centered box."""
    mean = np.zeros(dim) if mean is None else np.asarray(mean, dtype=float)
    out = np.empty((n, dim))
    filled = 0
    while filled < n:
        batch = rng.standard_normal((max(64, 4 * (n - filled)), dim)) + mean
        keep = batch[np.all(np.abs(batch - mean) <= half_width, axis=1)]
        take = min(keep.shape[0], n - filled)
        out[filled : filled + take] = keep[:take]
        filled += take
    return out


@dataclass(frozen=True)
class TruncatedGaussianInstance:
    """4D truncated Gaussian source with a linear optimal map a x + b."""

    dim: int
    scale: float
    offset: float
    domain_x: Domain
    domain_y: Domain

    def map(self, x):
        return self.scale * np.asarray(x, dtype=float) + self.offset

    def sample_mu(self, rng, n):
        return sample_truncated_normal(rng, n, self.dim)

    def sample_nu(self, rng, n):
        return self.map(sample_truncated_normal(rng, n, self.dim))

    def mc_reference(self, n_samples=1_000_000, seed=0):
        """Monte-Carlo value of the quadratic cost along the optimal map.

        Returns the estimate and its standard error.
        """
        rng = np.random.default_rng(seed)
        x = self.sample_mu(rng, n_samples)
        vals = 0.5 * np.sum((x - self.map(x)) ** 2, axis=1)
        return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n_samples))


def truncated_gaussian_instance(dim=4, scale=0.8, offset=0.1):
    domain_x = Domain(tuple((-1.0, 1.0) for _ in range(dim)))
    domain_y = Domain(
        tuple((scale * -1.0 + offset, scale * 1.0 + offset) for _ in range(dim))
    )
    return TruncatedGaussianInstance(
        dim=dim,
        scale=scale,
        offset=offset,
        domain_x=domain_x,
        domain_y=domain_y,
    )
