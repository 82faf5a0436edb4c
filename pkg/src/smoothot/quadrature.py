"""Gauss-Legendre quadrature rules on intervals and boxes."""

import numpy as np
from numpy.polynomial.legendre import leggauss

# hard cap on tensorized rules; beyond this the integrals should be
# restructured (or estimated by sampling) rather than brute-forced
MAX_TENSOR_NODES = 400_000


def gauss_legendre(n, a=0.0, b=1.0):
    """Nodes and weights integrating exactly polynomials of degree 2n-1 on [a, b]."""
    if n < 1:
        raise ValueError("need at least one quadrature node")
    x, w = leggauss(int(n))
    nodes = 0.5 * (b - a) * (x + 1.0) + a
    weights = 0.5 * (b - a) * w
    return nodes, weights


def box_rule(bounds, nodes_per_dim):
    """Tensorized Gauss-Legendre rule on an axis-aligned box.

    Parameters
    ----------
    bounds : sequence of (low, high)
        One pair per dimension.
    nodes_per_dim : int
        Nodes of the underlying 1D rule.

    Returns
    -------
    points : ndarray (n_total, d)
    weights : ndarray (n_total,)
    """
    bounds = [(float(lo), float(hi)) for lo, hi in bounds]
    d = len(bounds)
    total = nodes_per_dim**d
    if total > MAX_TENSOR_NODES:
        raise ValueError(
            f"tensor rule with {total} nodes exceeds budget {MAX_TENSOR_NODES}"
        )
    axes = [gauss_legendre(nodes_per_dim, lo, hi) for lo, hi in bounds]
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.ones(total)
    wgrids = np.meshgrid(*[a[1] for a in axes], indexing="ij")
    for wg in wgrids:
        weights *= wg.ravel()
    return points, weights
