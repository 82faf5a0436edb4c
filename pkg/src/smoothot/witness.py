"""Constructive sum-of-squares witnesses for the dual constraint function.

For a convex potential f with transport map T = grad f, the constraint
function h(x, y) = f(x) + f*(y) - x'y vanishes exactly on the graph of T and
is nonnegative elsewhere.  Reparameterizing y = T(z) and Taylor-expanding f
around z exposes h as an explicit sum of d squares,

    h(x, T(z)) = (x - z)' R(x, z) (x - z),
    R(x, z) = integral_0^1 (1 - t) H_f(z + t (x - z)) dt  >=  (rho/2) I,

so the witnesses are w_i(x, y) = [sqrt(R)(x - z)]_i at z = T^{-1}(y).  This
module evaluates the remainder by quadrature, builds the witnesses, and
checks the identity on a grid.

The Hessian inside the remainder is evaluated along z + t (x - z): that is
the orientation for which the quadratic Taylor identity
f(x) - f(z) - grad f(z)'(x - z) = (x - z)' R (x - z) holds exactly (the
reversed orientation fails already for cubic f).
"""

from dataclasses import dataclass

import numpy as np

from .geometry import Domain
from .quadrature import gauss_legendre

__all__ = [
    "PotentialSpec",
    "integral_remainder",
    "witness_functions",
    "verify_sos_identity",
    "conjugate_value",
    "constraint_gap",
    "bisect_inverse_1d",
    "quadratic_potential_spec",
    "quartic_potential_1d",
]


@dataclass(frozen=True)
class PotentialSpec:
    """Convex potential with known derivatives and invertible gradient map.

    ``rho`` lower-bounds the Hessian eigenvalues on the domain; it is checked
    on a coarse validation grid at construction.
    """

    f: callable
    grad_f: callable
    hessian_f: callable
    T_inverse: callable
    domain_x: Domain
    domain_y: Domain
    rho: float

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        per_dim = max(2, int(round(9 ** (1.0 / self.domain_x.dim))))
        for x in self.domain_x.grid(per_dim):
            eigs = np.linalg.eigvalsh(np.atleast_2d(self.hessian_f(x)))
            if eigs.min() < self.rho - 1e-9:
                raise ValueError(
                    f"hessian eigenvalue {eigs.min():.3g} below rho={self.rho} at {x}"
                )

    def transport(self, x):
        return np.asarray(self.grad_f(np.asarray(x, dtype=float)), dtype=float)


def integral_remainder(spec, x, z, quad_nodes=16):
    """Taylor remainder matrix R(x, z), by Gauss-Legendre quadrature on [0, 1].

    Satisfies f(x) - f(z) - grad f(z)'(x - z) = (x - z)' R (x - z) exactly for
    polynomial Hessians up to the rule's degree; always symmetric and, for
    Hessians >= rho I, bounded below by (rho/2) I up to quadrature error.
    """
    if quad_nodes < 2:
        raise ValueError("need at least two quadrature nodes")
    x = np.asarray(x, dtype=float).ravel()
    z = np.asarray(z, dtype=float).ravel()
    for endpoint in (x, z):
        if not spec.domain_x.contains(endpoint[None, :])[0]:
            raise ValueError("segment endpoint outside the potential's domain")
    nodes, weights = gauss_legendre(quad_nodes, 0.0, 1.0)
    d = x.size
    acc = np.zeros((d, d))
    for t, w in zip(nodes, weights):
        acc += w * (1.0 - t) * np.atleast_2d(spec.hessian_f(z + t * (x - z)))
    return 0.5 * (acc + acc.T)


def _sqrt_psd(mat, floor):
    vals, vecs = np.linalg.eigh(mat)
    if vals.min() < floor:
        raise ValueError(
            f"remainder matrix eigenvalue {vals.min():.3g} below tolerance {floor:.3g}"
        )
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T


def witness_functions(spec, x, y, quad_nodes=16):
    """Witness values w_i(x, y) = [sqrt(R(x, z)) (x - z)]_i at z = T^{-1}(y)."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if not spec.domain_y.contains(y[None, :])[0]:
        raise ValueError("y outside the target domain")
    z = np.asarray(spec.T_inverse(y), dtype=float).ravel()
    remainder = integral_remainder(spec, x, z, quad_nodes)
    root = _sqrt_psd(remainder, floor=spec.rho / 2.0 - 1e-6)
    return root @ (x - z)


def conjugate_value(spec, y):
    """Fenchel conjugate f*(y) = y'z - f(z) at z = T^{-1}(y)."""
    y = np.asarray(y, dtype=float).ravel()
    z = np.asarray(spec.T_inverse(y), dtype=float).ravel()
    return float(y @ z - spec.f(z))


def constraint_gap(spec, x, y):
    """h(x, y) = f(x) + f*(y) - x'y; nonnegative, zero on the graph of T."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    return float(spec.f(x) + conjugate_value(spec, y) - x @ y)


def verify_sos_identity(spec, grid_per_dim=20, quad_nodes=16):
    """Max over a product grid of |h(x, y) - sum_i w_i(x, y)^2|."""
    worst = 0.0
    for x in spec.domain_x.grid(grid_per_dim):
        for y in spec.domain_y.grid(grid_per_dim):
            w = witness_functions(spec, x, y, quad_nodes)
            gap = constraint_gap(spec, x, y)
            worst = max(worst, abs(gap - float(w @ w)))
    return worst


def bisect_inverse_1d(forward, lo, hi, tol=1e-13, max_iter=200):
    """Inverse of a strictly increasing scalar map by bisection on [lo, hi]."""

    def inverse(y):
        y = float(np.asarray(y).ravel()[0])
        a, b = lo, hi
        fa = forward(a) - y
        fb = forward(b) - y
        if fa > 0 or fb < 0:
            raise ValueError(f"target {y} outside the map's range on [{lo}, {hi}]")
        for _ in range(max_iter):
            mid = 0.5 * (a + b)
            fm = forward(mid) - y
            if fm <= 0:
                a = mid
            else:
                b = mid
            if b - a < tol:
                break
        return np.array([0.5 * (a + b)])

    return inverse


def quadratic_potential_spec(diag, domain_x):
    """Potential f(x) = 0.5 x' diag(a) x with the exact linear map T(x) = a * x."""
    a = np.asarray(diag, dtype=float).ravel()
    if np.any(a <= 0):
        raise ValueError("diagonal must be positive for a convex potential")
    bounds_y = tuple(
        (ai * lo, ai * hi) for ai, (lo, hi) in zip(a, domain_x.bounds)
    )
    return PotentialSpec(
        f=lambda x: 0.5 * float(np.sum(a * np.asarray(x) ** 2)),
        grad_f=lambda x: a * np.asarray(x, dtype=float),
        hessian_f=lambda x: np.diag(a),
        T_inverse=lambda y: np.asarray(y, dtype=float) / a,
        domain_x=domain_x,
        domain_y=Domain(bounds_y),
        rho=float(a.min()),
    )


def quartic_potential_1d():
    """f(x) = x^4/4 + x^2/2 on [-1, 1]; T(x) = x^3 + x inverted by bisection."""
    domain_x = Domain(((-1.0, 1.0),))
    domain_y = Domain(((-2.0, 2.0),))
    forward = lambda x: x**3 + x

    inverse = bisect_inverse_1d(forward, -1.0, 1.0)
    return PotentialSpec(
        f=lambda x: float(np.asarray(x).ravel()[0] ** 4 / 4 + np.asarray(x).ravel()[0] ** 2 / 2),
        grad_f=lambda x: np.array([forward(float(np.asarray(x).ravel()[0]))]),
        hessian_f=lambda x: np.array([[3.0 * float(np.asarray(x).ravel()[0]) ** 2 + 1.0]]),
        T_inverse=inverse,
        domain_x=domain_x,
        domain_y=domain_y,
        rho=1.0,
    )
