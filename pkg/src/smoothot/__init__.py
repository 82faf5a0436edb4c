"""Kernel sum-of-squares estimation of smooth optimal transport.

A small numpy/scipy library that estimates the quadratic-cost transport value
between two measures by (i) writing the dual constraint as an equality
against a positive operator, (ii) subsampling it on a space-filling set of
pairs, and (iii) solving the resulting log-det-barrier program with damped
Newton steps.  Potentials, transport maps, and a pointwise-nonnegative model
of the constraint function come out of the same solve.
"""

from .embeddings import (
    EmbeddingEstimate,
    MeasureSpec,
    evaluation_embedding,
    exact_embedding,
    sample_embedding,
)
from .estimator import (
    OTEstimate,
    compute_ot_hat,
    constraint_function,
    estimate_ot,
    grid_search,
    primal_objective_and_gap,
    recover_constraint_operator,
    recover_potentials,
    select_lambdas,
    transport_map,
)
from .geometry import Domain, FillSet, fill_distance, product_pairs, sobol_pairs, uniform_pairs
from .kernels import (
    CholeskyFactor,
    GramMatrix,
    KernelSpec,
    bessel_k,
    cholesky_psd,
    eval_kernel,
    gram,
    kernel_gradient,
)
from .mmd import build_and_solve_mmd_ot, exact_ot_oracle
from .solver import (
    DualData,
    DualSolution,
    NewtonSchedule,
    barrier_derivatives,
    barrier_objective,
    build_dual_data,
    check_feasible,
    damped_newton_step,
    solve_dual,
)
from .witness import (
    PotentialSpec,
    integral_remainder,
    quadratic_potential_spec,
    quartic_potential_1d,
    verify_sos_identity,
    witness_functions,
)

__version__ = "0.1.0"
