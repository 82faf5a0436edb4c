import numpy as np
import pytest

from smoothot.geometry import (
    Domain,
    FillSet,
    fill_distance,
    product_pairs,
    sobol_pairs,
    uniform_pairs,
)


def mini_sobol_2d(n, bits=30):
    """Independent reference generator from the standard direction numbers."""
    v1 = [1 << (bits - k - 1) for k in range(bits)]
    v2 = [0] * bits
    v2[0] = 1 << (bits - 1)
    for k in range(1, bits):
        v2[k] = v2[k - 1] ^ (v2[k - 1] >> 1)
    pts = np.zeros((n, 2))
    x1 = x2 = 0
    for i in range(1, n + 1):
        c = (i & -i).bit_length() - 1
        x1 ^= v1[c]
        x2 ^= v2[c]
        pts[i - 1] = [x1 / 2.0**bits, x2 / 2.0**bits]
    return pts


class TestDomain:
    def test_validation(self):
        with pytest.raises(ValueError):
            Domain(())
        with pytest.raises(ValueError):
            Domain(((1.0, 0.0),))
        with pytest.raises(ValueError):
            Domain(((0.0, np.inf),))

    def test_containment_and_volume(self):
        d = Domain(((0.0, 1.0), (2.0, 4.0)))
        assert d.volume == 2.0
        assert d.contains([[0.5, 3.0]])[0]
        assert not d.contains([[0.5, 5.0]])[0]


class TestSobolPairs:
    def test_first_point_is_center(self):
        fs = sobol_pairs(Domain.unit(1), Domain.unit(1), 1)
        assert np.allclose(fs.joint, [[0.5, 0.5]])

    def test_first_points_match_reference_generator(self):
        fs = sobol_pairs(Domain.unit(1), Domain.unit(1), 8)
        assert np.allclose(fs.joint, mini_sobol_2d(8), atol=1e-12)

    def test_first_four_joint_points(self):
        # frozen from the reference generator: three points on the quarter
        # lattice, then (0.375, 0.375)
        fs = sobol_pairs(Domain.unit(1), Domain.unit(1), 4)
        expected = [[0.5, 0.5], [0.75, 0.25], [0.25, 0.75], [0.375, 0.375]]
        assert np.allclose(fs.joint, expected)
        assert len(np.unique(fs.joint, axis=0)) == 4

    def test_deterministic(self):
        a = sobol_pairs(Domain.unit(2), Domain.unit(2), 37)
        b = sobol_pairs(Domain.unit(2), Domain.unit(2), 37)
        assert np.array_equal(a.joint, b.joint)

    def test_affine_mapping_into_domains(self):
        dx = Domain(((2.0, 3.0),))
        dy = Domain(((-1.0, 0.0),))
        fs = sobol_pairs(dx, dy, 16)
        assert np.all(dx.contains(fs.x))
        assert np.all(dy.contains(fs.y))
        assert np.allclose(fs.x[0], [2.5]) and np.allclose(fs.y[0], [-0.5])

    def test_dimension_guard(self):
        with pytest.raises(ValueError):
            sobol_pairs(Domain.unit(9), Domain.unit(8), 4)
        with pytest.raises(ValueError):
            sobol_pairs(Domain.unit(1), Domain.unit(1), 0)


class TestUniformPairs:
    def test_seed_determinism(self):
        a = uniform_pairs(Domain.unit(1), Domain.unit(1), 50, seed=7)
        b = uniform_pairs(Domain.unit(1), Domain.unit(1), 50, seed=7)
        assert np.array_equal(a.joint, b.joint)
        c = uniform_pairs(Domain.unit(1), Domain.unit(1), 50, seed=8)
        assert not np.array_equal(a.joint, c.joint)

    def test_mean_close_to_center(self):
        fs = uniform_pairs(Domain.unit(1), Domain.unit(1), 10_000, seed=0)
        means = fs.joint.mean(axis=0)
        assert np.abs(means - 0.5).max() < 0.02

    def test_containment(self):
        dx = Domain(((0.0, 2.0), (1.0, 3.0)))
        dy = Domain(((-5.0, -4.0),))
        fs = uniform_pairs(dx, dy, 200, seed=3)
        assert np.all(dx.contains(fs.x))
        assert np.all(dy.contains(fs.y))


class TestProductPairs:
    def test_single(self):
        fs = product_pairs([[1.0]], [[2.0]])
        assert np.allclose(fs.joint, [[1.0, 2.0]])

    def test_row_major_order(self):
        fs = product_pairs([[1.0], [2.0]], [[10.0], [20.0], [30.0]])
        expected_x = [[1.0], [1.0], [1.0], [2.0], [2.0], [2.0]]
        expected_y = [[10.0], [20.0], [30.0], [10.0], [20.0], [30.0]]
        assert np.allclose(fs.x, expected_x)
        assert np.allclose(fs.y, expected_y)

    def test_duplicates_preserved(self):
        fs = product_pairs([[0.0], [0.0]], [[1.0]])
        assert len(fs) == 2

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            product_pairs(np.empty((0, 1)), [[1.0]])


class TestFillDistance:
    def test_center_pair_reaches_corner(self):
        fs = FillSet(x=[[0.5]], y=[[0.5]], provenance="product")
        h = fill_distance(fs, Domain.unit(1), Domain.unit(1), grid_per_dim=101)
        assert h == pytest.approx(np.sqrt(2) / 2, abs=1e-12)

    def test_lattice_fill(self):
        grid = [0.0, 0.5, 1.0]
        xs, ys = np.meshgrid(grid, grid, indexing="ij")
        fs = FillSet(
            x=xs.ravel()[:, None], y=ys.ravel()[:, None], provenance="product"
        )
        h = fill_distance(fs, Domain.unit(1), Domain.unit(1), grid_per_dim=101)
        assert h == pytest.approx(0.5 / np.sqrt(2), abs=1e-12)

    def test_monotone_under_addition(self):
        rng = np.random.default_rng(5)
        pts = rng.uniform(0, 1, size=(12, 2))
        prev = np.inf
        for count in range(1, 13):
            fs = FillSet(
                x=pts[:count, :1], y=pts[:count, 1:], provenance="product"
            )
            h = fill_distance(fs, Domain.unit(1), Domain.unit(1), grid_per_dim=33)
            assert h <= prev + 1e-12
            prev = h

    def test_guards(self):
        fs = FillSet(x=[[0.5]], y=[[0.5]], provenance="product")
        with pytest.raises(ValueError):
            fill_distance(fs, Domain.unit(1), Domain.unit(1), grid_per_dim=1)
        with pytest.raises(ValueError):
            fill_distance(fs, Domain.unit(4), Domain.unit(4), grid_per_dim=100)

    @pytest.mark.xfail(
        strict=True,
        reason=(
            "zero-skipped power-of-two blocks leave one dyadic corner cell "
            "empty, so their covering radius is comparable to uniform draws"
        ),
    )
    def test_sobol_beats_uniform_on_most_seeds(self):
        dx = dy = Domain.unit(1)
        sob = sobol_pairs(dx, dy, 64)
        h_sobol = fill_distance(sob, dx, dy, grid_per_dim=65)
        wins = 0
        for seed in range(50):
            uni = uniform_pairs(dx, dy, 64, seed=seed)
            if h_sobol < fill_distance(uni, dx, dy, grid_per_dim=65):
                wins += 1
        assert wins >= 40

    def test_net_with_corner_point_beats_uniform_on_most_seeds(self):
        # the underlying sequence is genuinely low-discrepancy: restoring the
        # skipped corner point makes the 2^k block win convincingly
        dx = dy = Domain.unit(1)
        sob = sobol_pairs(dx, dy, 63)
        block = np.vstack([np.zeros((1, 2)), sob.joint])
        fs = FillSet(x=block[:, :1], y=block[:, 1:], provenance="product")
        h_sobol = fill_distance(fs, dx, dy, grid_per_dim=65)
        wins = 0
        for seed in range(50):
            uni = uniform_pairs(dx, dy, 64, seed=seed)
            if h_sobol < fill_distance(uni, dx, dy, grid_per_dim=65):
                wins += 1
        assert wins >= 40
