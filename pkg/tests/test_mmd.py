from itertools import permutations

import numpy as np
import pytest

from smoothot.kernels import KernelSpec
from smoothot.mmd import (
    build_and_solve_mmd_ot,
    build_plan_problem,
    exact_ot_oracle,
)

GAUSS = KernelSpec.gaussian(0.1)


class TestExactOracle:
    def test_identical_samples_cost_zero(self):
        x = np.array([[0.1], [0.9], [0.4]])
        assert exact_ot_oracle(x, x) == 0.0

    def test_1d_monotone_matching(self):
        x = np.array([[0.0], [1.0], [2.0]])
        y = np.array([[0.5], [1.5], [2.5]])
        assert exact_ot_oracle(x, y) == pytest.approx(0.125)

    def test_2d_against_independent_enumeration(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(5, 2))
        y = rng.normal(size=(5, 2))
        # second enumeration in reversed order with explicit loops
        best = np.inf
        for perm in reversed(list(permutations(range(5)))):
            total = 0.0
            for i, j in enumerate(perm):
                total += 0.5 * float(np.sum((x[i] - y[j]) ** 2))
            best = min(best, total / 5)
        assert exact_ot_oracle(x, y) == pytest.approx(best, abs=1e-14)

    def test_guards(self):
        with pytest.raises(ValueError):
            exact_ot_oracle(np.zeros((2, 1)), np.zeros((3, 1)))
        with pytest.raises(ValueError):
            exact_ot_oracle(np.zeros((8, 1)), np.zeros((8, 1)))


class TestPlanProblem:
    def test_canonical_form_matches_plan_objective(self):
        rng = np.random.default_rng(9)
        x = rng.uniform(0, 1, size=(2, 1))
        y = rng.uniform(0, 1, size=(3, 1))
        lam2 = 0.4
        problem = build_plan_problem(x, y, GAUSS, GAUSS, GAUSS, 0.2, lam2)
        gram_x = np.exp(-((x - x.T) ** 2) / 0.2)
        gram_y = np.exp(-((y - y.T) ** 2) / 0.2)
        for _ in range(5):
            plan = rng.normal(size=(2, 3)) * 0.3
            r = np.full(2, 1 / 2) - plan.sum(axis=1)
            c = np.full(3, 1 / 3) - plan.sum(axis=0)
            direct = (
                float(np.sum(plan * problem.cost))
                + 0.5 / lam2 * r @ gram_x @ r
                + 0.5 / lam2 * c @ gram_y @ c
            )
            assert problem.dual.objective(plan.ravel()) == pytest.approx(
                direct, abs=1e-12
            )

    def test_size_guard(self):
        x = np.zeros((21, 1))
        y = np.zeros((21, 1))
        with pytest.raises(ValueError):
            build_plan_problem(x, y, GAUSS, GAUSS, GAUSS, 0.1, 0.1)


class TestSolvePlan:
    def test_zero_cost_matching(self):
        x = np.array([[0.0], [1.0]])
        gamma, objective = build_and_solve_mmd_ot(
            x, x, GAUSS, GAUSS, GAUSS, 1e-3, 1e-3, tau=1e-7
        )
        assert abs(objective) <= 5e-3
        # mass concentrates on the identity assignment
        assert gamma[0, 0] > 0.3 and gamma[1, 1] > 0.3
        assert gamma[0, 0] + gamma[0, 1] == pytest.approx(0.5, abs=0.05)

    def test_small_lambda_matches_oracle(self):
        x = np.array([[0.0], [1.0]])
        y = np.array([[0.5], [1.5]])
        _, objective = build_and_solve_mmd_ot(
            x, y, GAUSS, GAUSS, GAUSS, 1e-4, 1e-4, tau=1e-8
        )
        assert objective == pytest.approx(0.125, abs=5e-3)

    def test_large_lambda2_beats_zero_plan(self):
        x = np.array([[0.1], [0.8]])
        y = np.array([[0.3], [0.9]])
        lam2 = 50.0
        problem = build_plan_problem(x, y, GAUSS, GAUSS, GAUSS, 0.5, lam2)
        _, objective = build_and_solve_mmd_ot(
            x, y, GAUSS, GAUSS, GAUSS, 0.5, lam2, tau=1e-8
        )
        at_zero = problem.dual.objective(np.zeros(4))
        assert objective <= at_zero + 1e-9
        assert at_zero == pytest.approx(problem.dual.q_sq / (4 * lam2), abs=1e-12)

    def test_limit_ladder_monotone_to_oracle(self):
        rng = np.random.default_rng(123)
        x = np.sort(rng.uniform(0, 1, 3))[:, None]
        y = np.sort(rng.uniform(0, 1, 3))[:, None]
        oracle = exact_ot_oracle(x, y)
        previous = -np.inf
        objective = None
        for k in range(1, 5):
            lam = 10.0 ** (-k)
            gamma, objective = build_and_solve_mmd_ot(
                x, y, GAUSS, GAUSS, GAUSS, lam, lam, tau=1e-6
            )
            assert objective >= previous - 1e-9
            previous = objective
        assert abs(objective - oracle) <= 1e-2
        # marginal residuals vanish with the penalties
        row = np.abs(gamma.sum(axis=1) - 1 / 3)
        col = np.abs(gamma.sum(axis=0) - 1 / 3)
        assert row.max() <= 0.05 and col.max() <= 0.05
