"""Axis-aligned box domains, constraint fill sets, and fill-distance scans."""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import qmc

__all__ = [
    "Domain",
    "FillSet",
    "sobol_pairs",
    "uniform_pairs",
    "product_pairs",
    "fill_distance",
]

FILL_GRID_BUDGET = 10_000_000


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box: one (low, high) pair per dimension."""

    bounds: tuple

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        if len(bounds) == 0:
            raise ValueError("domain needs at least one dimension")
        for lo, hi in bounds:
            if not (np.isfinite(lo) and np.isfinite(hi)):
                raise ValueError("domain bounds must be finite")
            if lo >= hi:
                raise ValueError(f"invalid bounds ({lo}, {hi})")
        object.__setattr__(self, "bounds", bounds)

    @classmethod
    def unit(cls, dim):
        return cls(tuple((0.0, 1.0) for _ in range(dim)))

    @property
    def dim(self):
        return len(self.bounds)

    @property
    def lows(self):
        return np.array([b[0] for b in self.bounds])

    @property
    def highs(self):
        return np.array([b[1] for b in self.bounds])

    @property
    def lengths(self):
        return self.highs - self.lows

    @property
    def volume(self):
        return float(np.prod(self.lengths))

    def contains(self, points, atol=1e-12):
        pts = np.atleast_2d(points)
        return np.all(
            (pts >= self.lows - atol) & (pts <= self.highs + atol), axis=1
        )

    def grid(self, per_dim):
        """Regular grid including boundary nodes, shape (per_dim**dim, dim)."""
        axes = [np.linspace(lo, hi, per_dim) for lo, hi in self.bounds]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)


@dataclass(frozen=True)
class FillSet:
    """Constraint-subsampling pairs (x_j, y_j), stored as (l, dx) and (l, dy)."""

    x: np.ndarray
    y: np.ndarray
    provenance: str

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        y = np.atleast_2d(np.asarray(self.y, dtype=float))
        if x.shape[0] != y.shape[0]:
            raise ValueError("x and y pair counts differ")
        if x.shape[0] < 1:
            raise ValueError("fill set needs at least one pair")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.x.shape[0]

    @property
    def joint(self):
        """Pairs as points of the product space, shape (l, dx + dy)."""
        return np.hstack([self.x, self.y])


def _split(joint, dim_x):
    return joint[:, :dim_x], joint[:, dim_x:]


def sobol_pairs(domain_x, domain_y, n_pairs):
    """First ``n_pairs`` Sobol points of the product box, zero point skipped.

    The joint dimension dim(X) + dim(Y) must be at most 16.  Deterministic:
    repeated calls return the same set.
    """
    if n_pairs < 1:
        raise ValueError("need at least one pair")
    joint_dim = domain_x.dim + domain_y.dim
    if joint_dim > 16:
        raise ValueError("sobol_pairs supports joint dimension <= 16")
    sampler = qmc.Sobol(d=joint_dim, scramble=False)
    with warnings.catch_warnings():
        # drawing n not a power of two degrades balance, which is fine here
        warnings.simplefilter("ignore", UserWarning)
        unit = sampler.random(n_pairs + 1)[1:]  # drop the all-zeros point
    lows = np.concatenate([domain_x.lows, domain_y.lows])
    highs = np.concatenate([domain_x.highs, domain_y.highs])
    joint = lows + unit * (highs - lows)
    x, y = _split(joint, domain_x.dim)
    return FillSet(x=x, y=y, provenance="sobol")


def uniform_pairs(domain_x, domain_y, n_pairs, seed):
    """``n_pairs`` i.i.d. uniform pairs from the product box, reproducible per seed."""
    if n_pairs < 1:
        raise ValueError("need at least one pair")
    rng = np.random.default_rng(seed)
    joint_dim = domain_x.dim + domain_y.dim
    unit = rng.random((n_pairs, joint_dim))
    lows = np.concatenate([domain_x.lows, domain_y.lows])
    highs = np.concatenate([domain_x.highs, domain_y.highs])
    joint = lows + unit * (highs - lows)
    x, y = _split(joint, domain_x.dim)
    return FillSet(x=x, y=y, provenance=f"uniform(seed={seed})")


def product_pairs(x_samples, y_samples):
    """All pairs (x_i, y_j) in row-major order (i outer, j inner).

    Duplicates in the inputs are preserved; degenerate Gram matrices are the
    downstream jitter ladder's problem.
    """
    x = np.atleast_2d(np.asarray(x_samples, dtype=float))
    y = np.atleast_2d(np.asarray(y_samples, dtype=float))
    if x.shape[0] == 0 or y.shape[0] == 0:
        raise ValueError("empty sample list")
    nx, ny = x.shape[0], y.shape[0]
    xs = np.repeat(x, ny, axis=0)
    ys = np.tile(y, (nx, 1))
    return FillSet(x=xs, y=ys, provenance="product")


def fill_distance(fs, domain_x, domain_y, grid_per_dim=64):
    """Largest grid-point distance to the fill set on the product box.

    Scans a regular grid (boundary nodes included) of ``grid_per_dim`` nodes
    per joint dimension; this lower-bounds the continuum fill distance and
    converges to it as the grid refines.  The total grid size is capped at
    ``FILL_GRID_BUDGET`` nodes, so high joint dimensions need a coarser grid.
    """
    if grid_per_dim < 2:
        raise ValueError("grid_per_dim must be at least 2")
    joint_dim = domain_x.dim + domain_y.dim
    total = grid_per_dim**joint_dim
    if total > FILL_GRID_BUDGET:
        raise ValueError(
            f"grid of {total} nodes exceeds budget {FILL_GRID_BUDGET}"
        )
    joint_domain = Domain(domain_x.bounds + domain_y.bounds)
    grid = joint_domain.grid(grid_per_dim)
    tree = cKDTree(fs.joint)
    dists, _ = tree.query(grid, k=1)
    return float(dists.max())
