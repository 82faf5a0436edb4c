"""Transport-plan reformulation with MMD marginal penalties.

Covering the product space with all sample pairs (x_i, y_j) turns the dual
program into a regularized transport problem over a plan Gamma:

    min_Gamma  sum_ij Gamma_ij c(x_i, y_j)
               + (1/2 l2) r' Kx r + (1/2 l2) s' Ky s
    s.t.       sum_ij Gamma_ij Phi_ij Phi_ij' + l1 I >= 0,

where r and s are the row/column marginal violations against the uniform
weights.  Flattening Gamma row-major, the objective is a quadratic in the
flattened vector, so the same barrier solver applies after rewriting it in
the canonical (Q, z, q^2) form.  As both penalties vanish the minimum
approaches the unregularized transport cost between the empirical measures,
which a brute-force assignment oracle verifies at desk scale.
"""

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .geometry import product_pairs
from .kernels import cholesky_psd, gram
from .solver import DualData, _single_threaded_blas, solve_dual

__all__ = [
    "PlanProblem",
    "build_plan_problem",
    "build_and_solve_mmd_ot",
    "exact_ot_oracle",
]

MAX_PLAN_SIZE = 400


@dataclass(frozen=True)
class PlanProblem:
    """Flattened plan problem in the canonical dual form."""

    x: np.ndarray
    y: np.ndarray
    cost: np.ndarray  # (n_mu, n_nu)
    kx_mat: np.ndarray
    ky_mat: np.ndarray
    dual: DualData
    lambda1: float
    lambda2: float

    @property
    def shape(self):
        return self.cost.shape


def _marginal_operators(n_mu, n_nu):
    """Row-sum and column-sum operators on the row-major flattened plan."""
    size = n_mu * n_nu
    a_r = np.zeros((n_mu, size))
    a_c = np.zeros((n_nu, size))
    for i in range(n_mu):
        a_r[i, i * n_nu : (i + 1) * n_nu] = 1.0
    for j in range(n_nu):
        a_c[j, j::n_nu] = 1.0
    return a_r, a_c


def build_plan_problem(x_samples, y_samples, kx, ky, kxy, lambda1, lambda2):
    """Assemble the canonical quadratic form of the plan problem.

    With row/column-sum operators A_r, A_c and uniform weights r0 = 1/n_mu,
    s0 = 1/n_nu, completing squares gives

        Q = 2 (A_r' Kx A_r + A_c' Ky A_c)
        z = 2 (A_r' Kx r0 + A_c' Ky s0) - 2 l2 c
        q^2 = 2 (r0' Kx r0 + s0' Ky s0),

    so the canonical objective (1/4 l2) g'Qg - (1/2 l2) z'g + q^2/(4 l2)
    equals the plan objective at g = vec(Gamma).
    """
    x = np.atleast_2d(np.asarray(x_samples, dtype=float))
    y = np.atleast_2d(np.asarray(y_samples, dtype=float))
    n_mu, n_nu = x.shape[0], y.shape[0]
    if n_mu * n_nu > MAX_PLAN_SIZE:
        raise ValueError(
            f"plan with {n_mu * n_nu} pairs exceeds the {MAX_PLAN_SIZE} budget"
        )
    if lambda1 <= 0 or lambda2 <= 0:
        raise ValueError("regularization parameters must be positive")
    kx_mat = gram(kx, x).entries
    ky_mat = gram(ky, y).entries
    pairs = product_pairs(x, y)
    factor = cholesky_psd(gram(kxy, pairs.joint))
    cost = 0.5 * np.sum(
        (x[:, None, :] - y[None, :, :]) ** 2, axis=2
    )  # (n_mu, n_nu)
    a_r, a_c = _marginal_operators(n_mu, n_nu)
    r0 = np.full(n_mu, 1.0 / n_mu)
    s0 = np.full(n_nu, 1.0 / n_nu)
    q_mat = 2.0 * (a_r.T @ kx_mat @ a_r + a_c.T @ ky_mat @ a_c)
    z = 2.0 * (a_r.T @ (kx_mat @ r0) + a_c.T @ (ky_mat @ s0)) - 2.0 * lambda2 * cost.ravel()
    q_sq = 2.0 * float(r0 @ kx_mat @ r0 + s0 @ ky_mat @ s0)
    dual = DualData(
        Q=q_mat,
        z=z,
        q_sq=q_sq,
        Phi=factor.features,
        lambda1=lambda1,
        lambda2=lambda2,
        cost_values=cost.ravel(),
        w_values=z + 2.0 * lambda2 * cost.ravel(),
    )
    return PlanProblem(
        x=x,
        y=y,
        cost=cost,
        kx_mat=kx_mat,
        ky_mat=ky_mat,
        dual=dual,
        lambda1=lambda1,
        lambda2=lambda2,
    )


def build_and_solve_mmd_ot(
    x_samples, y_samples, kx, ky, kxy, lambda1, lambda2, tau, schedule=None
):
    """Solve the plan problem; returns (Gamma, objective value).

    The objective includes the MMD penalty terms, so as (l1, l2) -> 0 it
    approaches the unregularized transport cost of the empirical measures.
    """
    with _single_threaded_blas():
        problem = build_plan_problem(
            x_samples, y_samples, kx, ky, kxy, lambda1, lambda2
        )
        sol = solve_dual(problem.dual, tau, schedule=schedule)
    if not sol.converged:
        raise RuntimeError("plan solver did not converge within its budget")
    gamma = sol.gamma_hat.reshape(problem.shape)
    return gamma, float(sol.objective_value)


def exact_ot_oracle(x_samples, y_samples):
    """Brute-force assignment value for equally weighted samples.

    Enumerates all permutations (n <= 7), returning
    min_pi (1/n) sum_i 0.5 ||x_i - y_pi(i)||^2.
    """
    x = np.atleast_2d(np.asarray(x_samples, dtype=float))
    y = np.atleast_2d(np.asarray(y_samples, dtype=float))
    n = x.shape[0]
    if y.shape[0] != n:
        raise ValueError("oracle needs equally many x and y samples")
    if n > 7:
        raise ValueError("oracle enumerates permutations, n <= 7 only")
    cost = 0.5 * np.sum((x[:, None, :] - y[None, :, :]) ** 2, axis=2)
    best = np.inf
    for perm in permutations(range(n)):
        val = cost[np.arange(n), perm].sum() / n
        best = min(best, val)
    return float(best)
