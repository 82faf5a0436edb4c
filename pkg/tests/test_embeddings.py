import math

import numpy as np
import pytest
from scipy.special import erf

from smoothot.embeddings import (
    MeasureSpec,
    evaluation_embedding,
    exact_embedding,
    gaussian_product_integral,
    sample_embedding,
)
from smoothot.geometry import Domain
from smoothot.kernels import KernelSpec, eval_kernel, gram
from smoothot.quadrature import box_rule, gauss_legendre


def quad_integral_1d(f, a, b, nodes=400):
    x, w = gauss_legendre(nodes, a, b)
    return float(np.sum(w * f(x)))


class TestSampleEmbedding:
    def test_single_sample_is_kernel_section(self):
        k = KernelSpec.sobolev(1.0, 1)
        emb = sample_embedding([[0.4]], k)
        assert emb.norm_sq == pytest.approx(1.0)
        p = np.array([[0.9]])
        assert emb(p)[0] == pytest.approx(eval_kernel(k, [0.4], [0.9]))

    def test_duplicate_samples_average_out(self):
        k = KernelSpec.sobolev(1.0, 1)
        one = sample_embedding([[0.4]], k)
        two = sample_embedding([[0.4], [0.4]], k)
        pts = np.linspace(0, 1, 7)[:, None]
        assert np.allclose(one(pts), two(pts))
        assert two.norm_sq == pytest.approx(one.norm_sq)

    def test_norm_matches_direct_double_sum(self):
        k = KernelSpec.gaussian(0.1)
        samples = np.array([[0.0], [0.5], [1.0]])
        emb = sample_embedding(samples, k)
        direct = sum(
            eval_kernel(k, a, b) for a in samples for b in samples
        ) / 9.0
        assert emb.norm_sq == pytest.approx(direct, abs=1e-12)

    def test_norm_equals_expansion_self_inner_product(self):
        rng = np.random.default_rng(0)
        k = KernelSpec.gaussian(0.3)
        samples = rng.uniform(0, 1, size=(8, 2))
        emb = sample_embedding(samples, k)
        kmat = gram(k, samples).entries
        self_inner = emb.coeffs @ kmat @ emb.coeffs
        assert emb.norm_sq == pytest.approx(self_inner, abs=1e-12)

    def test_sobolev_sample_norm_at_most_one(self):
        rng = np.random.default_rng(1)
        k = KernelSpec.sobolev(2.0, 2)
        emb = sample_embedding(rng.uniform(0, 1, size=(20, 2)), k)
        assert 0.0 <= emb.norm_sq <= 1.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            sample_embedding(np.empty((0, 1)), KernelSpec.gaussian(1.0))


class TestExactEmbedding:
    def test_uniform_box_gaussian_closed_form(self):
        sigma_sq = 0.1
        sigma = math.sqrt(sigma_sq)
        k = KernelSpec.gaussian(sigma_sq)
        emb = exact_embedding(MeasureSpec.uniform_box(Domain.unit(1)), k)
        p = 0.5
        expected = (
            sigma
            * math.sqrt(math.pi / 2)
            * (erf((1 - p) / (sigma * math.sqrt(2))) + erf(p / (sigma * math.sqrt(2))))
        )
        assert emb(np.array([[p]]))[0] == pytest.approx(expected, abs=1e-14)
        quad = quad_integral_1d(lambda x: np.exp(-((p - x) ** 2) / (2 * sigma_sq)), 0, 1)
        assert emb(np.array([[p]]))[0] == pytest.approx(quad, abs=1e-10)

    def test_gaussian_norm_against_quadrature(self):
        k = KernelSpec.gaussian(0.07)
        emb = exact_embedding(MeasureSpec.uniform_box(Domain.unit(1)), k)
        nodes, weights = box_rule(((0.0, 1.0), (0.0, 1.0)), 200)
        dbl = float(
            np.sum(weights * np.exp(-((nodes[:, 0] - nodes[:, 1]) ** 2) / (2 * 0.07)))
        )
        assert emb.norm_sq == pytest.approx(dbl, abs=1e-10)

    def test_multivariate_gaussian_factorizes(self):
        k = KernelSpec.gaussian(0.2)
        box = Domain(((0.0, 1.0), (2.0, 3.5)))
        emb = exact_embedding(MeasureSpec.uniform_box(box), k)
        p = np.array([[0.3, 2.9]])
        per_dim = []
        for i, (a, b) in enumerate(box.bounds):
            per_dim.append(
                quad_integral_1d(
                    lambda x, i=i: np.exp(-((p[0, i] - x) ** 2) / (2 * 0.2)), a, b
                )
                / (b - a)
            )
        assert emb(p)[0] == pytest.approx(per_dim[0] * per_dim[1], abs=1e-10)

    def test_sobolev_half_integer_1d_closed_form(self):
        # quadrature oracle split at the |p - x| kink, where the radial
        # profile loses smoothness
        for s in (1.0, 2.0, 3.0):  # nu = 1/2, 3/2, 5/2
            k = KernelSpec.sobolev(s, 1)
            emb = exact_embedding(MeasureSpec.uniform_box(Domain.unit(1)), k)
            for p in (0.1, 0.5, 0.97):
                quad = 0.0
                for a, b in ((0.0, p), (p, 1.0)):
                    if b > a:
                        quad += quad_integral_1d(
                            lambda x: np.array(
                                [eval_kernel(k, [p], [xx]) for xx in np.atleast_1d(x)]
                            ),
                            a,
                            b,
                            nodes=150,
                        )
                assert emb(np.array([[p]]))[0] == pytest.approx(quad, abs=1e-10)

    def test_sobolev_1d_norm_against_quadrature(self):
        k = KernelSpec.sobolev(2.0, 1)
        emb = exact_embedding(MeasureSpec.uniform_box(Domain.unit(1)), k)
        nodes, weights = box_rule(((0.0, 1.0), (0.0, 1.0)), 250)
        r = np.abs(nodes[:, 0] - nodes[:, 1])
        dbl = float(np.sum(weights * (1 + r) * np.exp(-r)))
        assert emb.norm_sq == pytest.approx(dbl, abs=1e-8)

    def test_tiny_box_approaches_point_mass(self):
        k = KernelSpec.gaussian(0.3)
        eps = 1e-5
        box = Domain(((0.4 - eps, 0.4 + eps),))
        emb = exact_embedding(MeasureSpec.uniform_box(box), k)
        p = np.array([[0.9]])
        assert emb(p)[0] == pytest.approx(eval_kernel(k, [0.4], [0.9]), abs=1e-8)

    def test_norm_translation_invariant(self):
        k = KernelSpec.gaussian(0.25)
        a = exact_embedding(MeasureSpec.uniform_box(Domain(((0.0, 1.0),))), k)
        b = exact_embedding(MeasureSpec.uniform_box(Domain(((5.0, 6.0),))), k)
        assert a.norm_sq == pytest.approx(b.norm_sq, abs=1e-14)

    def test_quadrature_fallback_matches_refined_rule(self):
        # multivariate sobolev has no closed form and goes through quadrature;
        # the kink of the radial profile at the evaluation point limits the
        # rule to ~1e-8 at 48 nodes per dimension
        k = KernelSpec.sobolev(2.0, 2)
        box = Domain.unit(2)
        emb = exact_embedding(MeasureSpec.uniform_box(box), k, nodes_per_dim=48)
        p = np.array([[0.3, 0.6]])
        nodes, weights = box_rule(box.bounds, 160)
        direct = float(np.sum(weights * gram(k, nodes, p).ravel()))
        assert emb(p)[0] == pytest.approx(direct, abs=5e-8)

    def test_lengthscale_respected_in_closed_forms(self):
        for k in (
            KernelSpec.gaussian(0.2, lengthscale=1.7),
            KernelSpec.sobolev(2.0, 1, lengthscale=0.6),
        ):
            emb = exact_embedding(MeasureSpec.uniform_box(Domain.unit(1)), k)
            for p in (0.25, 0.8):
                quad = 0.0
                for a, b in ((0.0, p), (p, 1.0)):
                    if b > a:
                        quad += quad_integral_1d(
                            lambda x: np.array(
                                [eval_kernel(k, [p], [xx]) for xx in np.atleast_1d(x)]
                            ),
                            a,
                            b,
                            nodes=150,
                        )
                assert emb(np.array([[p]]))[0] == pytest.approx(quad, abs=1e-10)

    def test_truncated_gaussian_density_normalized(self):
        box = Domain(((-1.0, 1.0),))
        spec = MeasureSpec.truncated_gaussian([0.0], [1.0], box)
        k = KernelSpec.gaussian(0.5)
        emb = exact_embedding(spec, k, nodes_per_dim=80)
        # coefficients integrate the density: they must sum to one
        assert emb.coeffs.sum() == pytest.approx(1.0, abs=1e-12)


class TestEvaluationEmbedding:
    def test_single_point_structure(self):
        k = KernelSpec.gaussian(0.2)
        spec = MeasureSpec.from_density_evals([[0.5]], [2.0], Domain.unit(1))
        emb = evaluation_embedding(spec, k)
        # alpha = K^{-1} c = [2.0]; embedding value is alpha * pair integral
        p = np.array([[0.3]])
        pair = gaussian_product_integral(k, [0.3], [0.5], Domain.unit(1))
        assert emb(p)[0] == pytest.approx(2.0 * pair, rel=1e-10)

    def test_pair_integral_against_quadrature(self):
        k = KernelSpec.gaussian(0.1)
        val = gaussian_product_integral(k, [0.2], [0.7], Domain.unit(1))
        quad = quad_integral_1d(
            lambda x: np.exp(-((0.2 - x) ** 2) / 0.2) * np.exp(-((0.7 - x) ** 2) / 0.2),
            0.0,
            1.0,
            nodes=200,
        )
        assert val == pytest.approx(quad, abs=1e-9)

    def test_constant_density_reproduces_uniform_embedding(self):
        k = KernelSpec.gaussian(0.1)
        pts = np.linspace(0.05, 0.95, 9)[:, None]
        spec = MeasureSpec.from_density_evals(pts, np.ones(9), Domain.unit(1))
        emb = evaluation_embedding(spec, k)
        exact = exact_embedding(MeasureSpec.uniform_box(Domain.unit(1)), k)
        test_pts = np.linspace(0.1, 0.9, 5)[:, None]
        assert np.abs(emb(test_pts) - exact(test_pts)).max() < 1e-3

    def test_smooth_density_sup_error(self):
        k = KernelSpec.gaussian(0.1)
        rng = np.random.default_rng(3)
        pts = np.sort(rng.uniform(0, 1, 25))[:, None]
        density = 1.0 + 0.5 * np.sin(2 * np.pi * pts.ravel())
        spec = MeasureSpec.from_density_evals(pts, density, Domain.unit(1))
        emb = evaluation_embedding(spec, k)
        grid = np.linspace(0, 1, 20)[:, None]
        truth = np.array(
            [
                quad_integral_1d(
                    lambda x: np.exp(-((p - x) ** 2) / 0.2)
                    * (1.0 + 0.5 * np.sin(2 * np.pi * x)),
                    0.0,
                    1.0,
                )
                for p in grid.ravel()
            ]
        )
        assert np.abs(emb(grid) - truth).max() < 1e-3

    def test_norm_nonnegative(self):
        k = KernelSpec.gaussian(0.3)
        rng = np.random.default_rng(8)
        pts = rng.uniform(0, 1, size=(12, 1))
        vals = rng.uniform(0.1, 2.0, 12)
        spec = MeasureSpec.from_density_evals(pts, vals, Domain.unit(1))
        emb = evaluation_embedding(spec, k)
        assert emb.norm_sq >= 0.0

    def test_negative_density_rejected(self):
        with pytest.raises(ValueError):
            MeasureSpec.from_density_evals([[0.5]], [-1.0], Domain.unit(1))


class TestGradients:
    def _fd(self, emb, p, step=1e-6):
        out = np.zeros_like(p)
        for i in range(p.size):
            pp, pm = p.copy(), p.copy()
            pp[i] += step
            pm[i] -= step
            out[i] = (emb(pp[None, :])[0] - emb(pm[None, :])[0]) / (2 * step)
        return out

    def test_sample_embedding_gradient(self):
        rng = np.random.default_rng(11)
        k = KernelSpec.gaussian(0.4)
        emb = sample_embedding(rng.uniform(0, 1, size=(6, 2)), k)
        p = np.array([0.3, 0.7])
        assert np.abs(emb.gradient(p) - self._fd(emb, p)).max() < 1e-8

    def test_box_exact_gradient(self):
        k = KernelSpec.gaussian(0.15)
        emb = exact_embedding(
            MeasureSpec.uniform_box(Domain(((0.0, 1.0), (0.0, 2.0)))), k
        )
        p = np.array([0.4, 1.1])
        assert np.abs(emb.gradient(p) - self._fd(emb, p)).max() < 1e-8

    def test_evaluation_gradient(self):
        k = KernelSpec.gaussian(0.2)
        pts = np.linspace(0.1, 0.9, 7)[:, None]
        spec = MeasureSpec.from_density_evals(pts, np.ones(7), Domain.unit(1))
        emb = evaluation_embedding(spec, k)
        p = np.array([0.45])
        assert np.abs(emb.gradient(p) - self._fd(emb, p)).max() < 1e-6


class TestConsistencyTrend:
    def test_sample_embedding_approaches_exact(self):
        k = KernelSpec.gaussian(0.1)
        exact = exact_embedding(MeasureSpec.uniform_box(Domain.unit(1)), k)
        grid = np.linspace(0, 1, 20)[:, None]
        truth = exact(grid)
        medians = []
        for n in (10, 100, 1000):
            sups = []
            for seed in range(20):
                rng = np.random.default_rng(seed)
                emb = sample_embedding(rng.uniform(0, 1, size=(n, 1)), k)
                sups.append(np.abs(emb(grid) - truth).max())
            medians.append(np.median(sups))
        assert medians[0] > medians[1] > medians[2]
