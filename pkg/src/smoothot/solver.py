"""Damped-Newton interior-point solver for the subsampled dual program.

The finite-dimensional dual reads

    min_gamma  F(gamma) = (1/4 l2) g'Qg - (1/2 l2) z'g + q^2/(4 l2)
    s.t.       M(gamma) = sum_j gamma_j Phi_j Phi_j' + l1 I  >=  0,

with Q the sum of the two marginal Gram matrices on the fill pairs, z the
embedding evaluations minus the cost term, and Phi_j the Cholesky features of
the joint-kernel Gram matrix.  It is solved by minimizing the barrier
functional

    J(gamma) = F(gamma) - q^2/(4 l2) - (delta / l) logdet M(gamma)

with damped Newton steps, shrinking delta geometrically until it reaches the
requested precision.  Since -logdet is a self-concordant barrier, delta
bounds the gap between the inner solution's value and the true optimum, and
the damped step keeps iterates interior (a halving backtrack guards the
floating-point edge cases).

At the final barrier level the loop additionally drives gamma' J'(gamma) to
zero.  That quantity equals the difference between the primal-dual gap and
delta, so controlling it is what makes the gap certificate exact; it is
evaluated stably through extended-precision dot products and the identity
sum_i gamma_i W_ii = l - l1 tr(M^{-1}).
"""

import threading
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from threadpoolctl import threadpool_limits

from .kernels import cholesky_psd, gram

__all__ = [
    "DualData",
    "BarrierState",
    "DualSolution",
    "NewtonSchedule",
    "build_dual_data",
    "barrier_objective",
    "barrier_derivatives",
    "damped_newton_step",
    "solve_dual",
    "check_feasible",
]


@dataclass(frozen=True)
class DualData:
    """Immutable problem data of one dual instance."""

    Q: np.ndarray
    z: np.ndarray
    q_sq: float
    Phi: np.ndarray  # column j is the feature vector Phi_j
    lambda1: float
    lambda2: float
    cost_values: np.ndarray
    w_values: np.ndarray  # cached embedding evaluations at the fill pairs

    def __post_init__(self):
        if self.lambda1 <= 0 or self.lambda2 <= 0:
            raise ValueError("regularization parameters must be positive")

    @property
    def ell(self):
        return self.z.shape[0]

    def constraint_matrix(self, gamma):
        """M(gamma) = sum_j gamma_j Phi_j Phi_j' + lambda1 I."""
        m = (self.Phi * np.asarray(gamma)[None, :]) @ self.Phi.T
        m[np.diag_indices_from(m)] += self.lambda1
        return m

    def objective(self, gamma):
        """Barrier-free dual objective F(gamma), constant term included."""
        gamma = np.asarray(gamma, dtype=float)
        return float(
            0.25 / self.lambda2 * gamma @ self.Q @ gamma
            - 0.5 / self.lambda2 * self.z @ gamma
            + 0.25 * self.q_sq / self.lambda2
        )


@dataclass
class BarrierState:
    """One interior iterate of the barrier subproblem at penalty delta."""

    gamma: np.ndarray
    delta: float
    decrement: float = np.inf


@dataclass(frozen=True)
class DualSolution:
    gamma_hat: np.ndarray
    delta_final: float
    newton_iterations: int
    min_eig_M: float
    objective_value: float
    converged: bool = True


@dataclass(frozen=True)
class NewtonSchedule:
    """Path-following schedule.

    ``inner_tol`` bounds the Newton decrement; ``gap_tol`` additionally
    bounds |gamma' J'| / (1 + |F|) at the final barrier level, which is the
    error of the duality-gap certificate.  ``stall_steps`` consecutive
    non-improving iterations end an inner solve early (the decrement has a
    floating-point floor on badly conditioned Gram matrices); the result
    still counts as converged if the best iterate passed ``stall_tol``.
    """

    delta0: float = 1.0
    shrink: float = 0.5
    inner_tol: float = 1e-10
    gap_tol: float = 1e-9
    max_outer: int = 200
    max_inner: int = 600
    stall_tol: float = 1e-6
    stall_steps: int = 12


def build_dual_data(fs, kx, ky, kxy, emb_mu, emb_nu, lambda1, lambda2):
    """Assemble the dual problem for a fill set, kernels, and embeddings.

    The cost is fixed to c(x, y) = 0.5 ||x - y||^2, so the fill pairs must
    share the ambient dimension.
    """
    if lambda1 <= 0 or lambda2 <= 0:
        raise ValueError("regularization parameters must be positive")
    if fs.x.shape[1] != fs.y.shape[1]:
        raise ValueError("quadratic cost needs dim(X) == dim(Y)")
    q_mat = gram(kx, fs.x).entries + gram(ky, fs.y).entries
    factor = cholesky_psd(gram(kxy, fs.joint))
    cost = 0.5 * np.sum((fs.x - fs.y) ** 2, axis=1)
    w_values = emb_mu(fs.x) + emb_nu(fs.y)
    z = w_values - 2.0 * lambda2 * cost
    q_sq = float(emb_mu.norm_sq + emb_nu.norm_sq)
    return DualData(
        Q=q_mat,
        z=z,
        q_sq=q_sq,
        Phi=factor.features,
        lambda1=lambda1,
        lambda2=lambda2,
        cost_values=cost,
        w_values=w_values,
    )


# Multithreaded BLAS loses badly on this solver's small factorizations and
# makes results depend on reduction order.  The limit is process-global, so
# concurrent solves (grid-search cells) must share one registration instead
# of stacking contexts that would race on restore.
_blas_lock = threading.Lock()
_blas_refcount = 0
_blas_controller = None


@contextmanager
def _single_threaded_blas():
    global _blas_refcount, _blas_controller
    with _blas_lock:
        if _blas_refcount == 0:
            _blas_controller = threadpool_limits(limits=1)
        _blas_refcount += 1
    try:
        yield
    finally:
        with _blas_lock:
            _blas_refcount -= 1
            if _blas_refcount == 0:
                _blas_controller.unregister()
                _blas_controller = None


def _chol_or_none(m):
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return None


def barrier_objective(data, gamma, delta):
    """Barrier functional J(gamma); the constant q^2/(4 l2) is not included.

    Raises ValueError when gamma is not interior (M(gamma) not positive
    definite).
    """
    gamma = np.asarray(gamma, dtype=float)
    m = data.constraint_matrix(gamma)
    low = _chol_or_none(m)
    if low is None:
        raise ValueError("gamma is outside the barrier domain (M not PD)")
    logdet = 2.0 * np.sum(np.log(np.diag(low)))
    quad = 0.25 / data.lambda2 * gamma @ data.Q @ gamma
    lin = 0.5 / data.lambda2 * data.z @ gamma
    return float(quad - lin - delta / data.ell * logdet)


def _derivative_parts(data, gamma, delta, with_gap=True):
    """Gradient, Hessian, and the stably evaluated certificate gamma' J'."""
    gamma = np.asarray(gamma, dtype=float)
    m = data.constraint_matrix(gamma)
    low = _chol_or_none(m)
    if low is None:
        raise ValueError("gamma is outside the barrier domain (M not PD)")
    half = solve_triangular(low, data.Phi, lower=True, check_finite=False)
    w = half.T @ half  # W = Phi' M^{-1} Phi
    # Q gamma - z cancels almost exactly near the optimum; accumulate it in
    # extended precision so the gradient keeps meaningful digits there
    gamma_ld = gamma.astype(np.longdouble)
    resid_ld = data.Q.astype(np.longdouble) @ gamma_ld - data.z.astype(np.longdouble)
    grad = np.asarray(resid_ld, dtype=float) / (2.0 * data.lambda2) - (
        delta / data.ell
    ) * np.diag(w)
    hess = data.Q / (2.0 * data.lambda2) + (delta / data.ell) * w**2
    if not with_gap:
        return grad, hess, np.nan
    # gamma' J' via sum_i gamma_i W_ii = l - l1 tr(M^{-1}); this is the
    # deviation of the primal-dual gap from delta
    inv_low = solve_triangular(
        low, np.eye(low.shape[0]), lower=True, check_finite=False
    )
    trace_m_inv = float(np.sum(inv_low**2))
    gap_residual = float(
        gamma_ld @ resid_ld / (2.0 * data.lambda2)
        - (delta / data.ell) * (data.ell - data.lambda1 * trace_m_inv)
    )
    return grad, hess, gap_residual


def barrier_derivatives(data, gamma, delta):
    """Gradient and Hessian of the barrier functional at an interior gamma.

    With W = Phi' M^{-1} Phi these are

        J'_i  = (Q gamma - z)_i / (2 l2) - (delta / l) W_ii
        J''_ij = Q_ij / (2 l2) + (delta / l) W_ij^2,

    and the Hessian is symmetric PSD on the interior.
    """
    grad, hess, _ = _derivative_parts(data, gamma, delta, with_gap=False)
    return grad, hess


def _solve_newton_system(hess, grad):
    """Newton direction with a jitter fallback and refinement rounds.

    The Hessian inherits the Gram matrices' conditioning, so iterative
    refinement (residuals accumulated in extended precision) buys back most
    of the accuracy the factorization loses.
    """
    scale = max(np.abs(hess).max(), 1e-300)
    jitter = 0.0
    while True:
        try:
            factor = cho_factor(
                hess + jitter * np.eye(hess.shape[0]), lower=True, check_finite=False
            )
            break
        except np.linalg.LinAlgError:
            if jitter >= 1e-6 * scale:
                raise
            jitter = 1e-12 * scale if jitter == 0.0 else jitter * 10.0
    direction = cho_solve(factor, grad, check_finite=False)
    hess_ld = hess.astype(np.longdouble)
    grad_ld = grad.astype(np.longdouble)
    for _ in range(2):
        resid = np.asarray(
            grad_ld - hess_ld @ direction.astype(np.longdouble), dtype=float
        )
        direction = direction + cho_solve(factor, resid, check_finite=False)
    return direction


@dataclass
class _Iterate:
    gamma: np.ndarray
    decrement: float
    gap_residual: float
    direction: np.ndarray


def _analyze(data, gamma, delta, need_gap=True):
    grad, hess, gap_residual = _derivative_parts(data, gamma, delta, with_gap=need_gap)
    direction = _solve_newton_system(hess, grad)
    decrement = np.sqrt(max(float(grad @ direction), 0.0))
    return _Iterate(
        gamma=gamma, decrement=decrement, gap_residual=gap_residual, direction=direction
    )


def _apply_step(data, it, delta):
    """Damped step with a halving backtrack guarding interiority."""
    scale = 1.0 / (1.0 + np.sqrt(data.ell / delta) * it.decrement)
    step = scale * it.direction
    gamma_new = it.gamma - step
    for _ in range(60):
        if _chol_or_none(data.constraint_matrix(gamma_new)) is not None:
            return gamma_new
        step = 0.5 * step
        gamma_new = it.gamma - step
    return it.gamma.copy()


def damped_newton_step(data, state):
    """One damped Newton step gamma' = gamma - step / (1 + sqrt(l/delta) lam).

    The damping keeps exact iterates interior; a halving backtrack restores
    interiority if floating point breaks it.  The returned state carries the
    Newton decrement recomputed at the new iterate.
    """
    it = _analyze(data, state.gamma, state.delta, need_gap=False)
    gamma_new = _apply_step(data, it, state.delta)
    it_new = _analyze(data, gamma_new, state.delta, need_gap=False)
    return BarrierState(gamma=gamma_new, delta=state.delta, decrement=it_new.decrement)


def _inner_solve(data, gamma, delta, sched, certify_gap, f_scale):
    """Newton loop at fixed delta; returns (gamma, ok, steps)."""

    def meets_target(it):
        if it.decrement > sched.inner_tol:
            return False
        if not certify_gap:
            return True
        return abs(it.gap_residual) <= sched.gap_tol * f_scale

    def score(it):
        return it.decrement + (abs(it.gap_residual) if certify_gap else 0.0)

    it = _analyze(data, gamma, delta, need_gap=certify_gap)
    best = it
    steps = 0
    since_progress = 0
    for _ in range(sched.max_inner):
        if meets_target(it):
            return it.gamma, True, steps
        gamma_new = _apply_step(data, it, delta)
        it = _analyze(data, gamma_new, delta, need_gap=certify_gap)
        steps += 1
        if score(it) < 0.5 * score(best):
            since_progress = 0
        else:
            since_progress += 1
        if score(it) < score(best):
            best = it
        if since_progress >= sched.stall_steps and best.decrement <= sched.stall_tol:
            # floating-point floor reached; accept the best iterate seen
            return best.gamma, True, steps
    if meets_target(it):
        return it.gamma, True, steps
    return best.gamma, False, steps


def solve_dual(data, tau, schedule=None):
    """Path-following solve of the dual program to value precision ~tau.

    Starts from gamma = 0 (always interior since M(0) = lambda1 I), runs
    damped Newton to the schedule's tolerances for each barrier penalty
    delta, and shrinks delta geometrically until delta <= tau.  The final
    level additionally certifies the duality gap (see ``NewtonSchedule``).
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    sched = schedule or NewtonSchedule()
    gamma = np.zeros(data.ell)
    delta = sched.delta0
    total_steps = 0
    converged = True
    with _single_threaded_blas():
        for _ in range(sched.max_outer):
            final_level = delta <= tau
            f_scale = 1.0 + abs(data.objective(gamma))
            gamma, ok, steps = _inner_solve(
                data, gamma, delta, sched, certify_gap=final_level, f_scale=f_scale
            )
            total_steps += steps
            if final_level:
                converged = converged and ok
                break
            delta *= sched.shrink
        else:
            converged = False
    min_eig = check_feasible(gamma, data.Phi, data.lambda1)
    return DualSolution(
        gamma_hat=gamma,
        delta_final=delta,
        newton_iterations=total_steps,
        min_eig_M=min_eig,
        objective_value=data.objective(gamma),
        converged=converged,
    )


def check_feasible(gamma, phi, lambda1):
    """Smallest eigenvalue of sum_j gamma_j Phi_j Phi_j' + lambda1 I."""
    gamma = np.asarray(gamma, dtype=float)
    m = (phi * gamma[None, :]) @ phi.T
    m[np.diag_indices_from(m)] += lambda1
    return float(np.linalg.eigvalsh(0.5 * (m + m.T)).min())
