"""Command-line driver: configure an experiment, run it, write results to disk.

Experiments
-----------
estimate     transport value on the 1D translation benchmark (JSON)
map          estimated transport map on a grid (CSV: x,t_hat)
constraint   dual constraint surface and its model (CSV: x,y,h_hat,sos)
convergence  4D truncated-Gaussian error-vs-n study (CSV: n,seed,ot_hat,...)
gridsearch   one solve per regularization cell (CSV: lambda1,lambda2,...)
witness      sum-of-squares identity residuals for closed-form potentials (JSON)
mmd_limit    plan-problem objective along a shrinking-regularization ladder (JSON)

Every run writes ``<experiment>.json`` (schema version, parameters, scalar
results) into the output directory, plus ``<experiment>.csv`` for the tabular
experiments.  Outputs are byte-identical across reruns with the same
configuration and seed.  Exit codes: 0 success, 1 configuration error,
2 solver non-convergence.
"""

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import benchmarks, witness
from .embeddings import sample_embedding
from .estimator import estimate_ot, grid_search, select_lambdas, transport_map
from .geometry import Domain, sobol_pairs
from .kernels import KernelSpec
from .mmd import build_and_solve_mmd_ot, exact_ot_oracle

SCHEMA_VERSION = "1"

EXPERIMENTS = (
    "estimate",
    "map",
    "constraint",
    "convergence",
    "gridsearch",
    "witness",
    "mmd_limit",
)

CSV_HEADERS = {
    "map": "x,t_hat",
    "constraint": "x,y,h_hat,sos",
    "convergence": "n,seed,ot_hat,reference,abs_error",
    "gridsearch": "lambda1,lambda2,ot_hat,duality_gap,residual_max",
}


class ConfigError(ValueError):
    pass


class SolverFailure(RuntimeError):
    pass


@dataclass
class RunConfig:
    experiment: str = "estimate"
    out: str = "results"
    seed: int = 0
    tau: float = 1e-6
    threads: int = 1
    # benchmark problem
    l: int = 128
    n: int = 25
    shift: float = 0.3
    kernel: str = "gaussian:0.1"
    lambda_mode: str = "heuristic"
    lambda1: float = None
    lambda2: float = None
    # experiment-specific knobs
    map_grid: int = 50
    constraint_grid: int = 40
    n_list: list = field(default_factory=lambda: [10, 25, 50])
    n_seeds: int = 20
    conv_lambda2: float = 1.4
    conv_sigma2: float = 1.0
    mc_samples: int = 1_000_000
    grid_lambda1: list = field(default_factory=lambda: [0.001, 0.01, 0.1])
    grid_lambda2: list = field(default_factory=lambda: [0.02, 0.06, 0.2, 0.6])
    mmd_lambdas: list = field(default_factory=lambda: [1e-1, 1e-2, 1e-3, 1e-4])
    witness_grid: int = 20
    witness_nodes: int = 32

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.tau <= 0:
            raise ConfigError("tau must be positive")
        if self.l < 1 or self.n < 1 or self.n_seeds < 1:
            raise ConfigError("counts must be at least 1")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if self.lambda_mode not in ("heuristic", "exact", "evaluation", "sampling", "manual"):
            raise ConfigError(f"unknown lambda_mode {self.lambda_mode!r}")
        if self.lambda_mode == "manual" and (self.lambda1 is None or self.lambda2 is None):
            raise ConfigError("manual lambda_mode needs lambda1 and lambda2")
        if any(n < 1 for n in self.n_list):
            raise ConfigError("n_list entries must be at least 1")
        self.parse_kernel()

    def parse_kernel(self, dim=1):
        try:
            family, _, value = self.kernel.partition(":")
            if family == "gaussian":
                return KernelSpec.gaussian(float(value))
            if family == "sobolev":
                return KernelSpec.sobolev(float(value), dim)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad kernel spec {self.kernel!r}: {exc}") from None
        raise ConfigError(f"bad kernel spec {self.kernel!r}")

    def pick_lambdas(self):
        if self.lambda_mode == "manual":
            return float(self.lambda1), float(self.lambda2)
        lam1, lam2 = select_lambdas(
            self.lambda_mode if self.lambda_mode != "heuristic" else "heuristic",
            ell=self.l,
            n_mu=self.n,
            n_nu=self.n,
            m=3,
            d=1,
        )
        if self.lambda1 is not None:
            lam1 = float(self.lambda1)
        if self.lambda2 is not None:
            lam2 = float(self.lambda2)
        return lam1, lam2


def _fmt(x):
    return format(float(x), ".17g")


def _write_csv(path, header, rows):
    lines = [header]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def _write_json(path, payload):
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _result_payload(config, **extra):
    payload = {
        "schema_version": SCHEMA_VERSION,
        "experiment": config.experiment,
        "seed": config.seed,
        "tau": config.tau,
    }
    payload.update(extra)
    return payload


def _benchmark_estimate(config):
    """Solve the translation benchmark with the configured regularization."""
    kernel = config.parse_kernel()
    bench = benchmarks.translation_benchmark(
        shift=config.shift, n_fill=config.l, kernel=kernel
    )
    lam1, lam2 = config.pick_lambdas()
    est = estimate_ot(
        bench.fill,
        bench.kernel,
        bench.kernel,
        bench.kernel_joint,
        bench.emb_mu,
        bench.emb_nu,
        lam1,
        lam2,
        tau=config.tau,
    )
    if not est.converged:
        raise SolverFailure("dual solver did not converge within its budget")
    return bench, est


def run_estimate(config, out_dir):
    bench, est = _benchmark_estimate(config)
    _write_json(
        out_dir / "estimate.json",
        _result_payload(
            config,
            ot_hat=est.value,
            lambda1=est.lambda1,
            lambda2=est.lambda2,
            delta_final=est.delta_final,
            duality_gap=est.duality_gap,
            constraint_residual_max=est.constraint_residual_max,
            reference=bench.reference,
            newton_iterations=est.newton_iterations,
        ),
    )


def run_map(config, out_dir):
    bench, est = _benchmark_estimate(config)
    lo, hi = bench.domain_x.bounds[0]
    xs = np.linspace(lo, hi, config.map_grid)
    t_hat = transport_map(est.u, xs[:, None]).ravel()
    _write_csv(out_dir / "map.csv", CSV_HEADERS["map"], zip(xs, t_hat))
    _write_json(
        out_dir / "map.json",
        _result_payload(
            config,
            ot_hat=est.value,
            lambda1=est.lambda1,
            lambda2=est.lambda2,
            rows=len(xs),
            csv="map.csv",
        ),
    )


def run_constraint(config, out_dir):
    bench, est = _benchmark_estimate(config)
    lo_x, hi_x = bench.domain_x.bounds[0]
    lo_y, hi_y = bench.domain_y.bounds[0]
    xs = np.linspace(lo_x, hi_x, config.constraint_grid)
    ys = np.linspace(lo_y, hi_y, config.constraint_grid)
    rows = []
    for x in xs:
        h_row = (
            0.5 * (x - ys) ** 2
            - est.u(np.array([[x]]))[0]
            - est.v(ys[:, None])
        )
        joint = np.column_stack([np.full_like(ys, x), ys])
        sos_row = est.constraint.sos_value(joint)
        rows.extend(zip(np.full_like(ys, x), ys, h_row, sos_row))
    _write_csv(out_dir / "constraint.csv", CSV_HEADERS["constraint"], rows)
    _write_json(
        out_dir / "constraint.json",
        _result_payload(config, rows=len(rows), csv="constraint.csv"),
    )


def run_convergence(config, out_dir):
    """Error-versus-sample-size study on the 4D truncated-Gaussian instance.

    The regularization is held fixed across n (lambda1 = 1/l heuristic,
    lambda2 = conv_lambda2): re-selecting parameters per draw against the
    reference hides the concentration this experiment is meant to show.
    """
    inst = benchmarks.truncated_gaussian_instance()
    reference, ref_se = inst.mc_reference(config.mc_samples, seed=config.seed)
    kernel = KernelSpec.gaussian(config.conv_sigma2)

    def one_cell(n, rep):
        ell = 100 + n
        fs = sobol_pairs(inst.domain_x, inst.domain_y, ell)
        rng = np.random.default_rng([config.seed, n, rep])
        emb_mu = sample_embedding(inst.sample_mu(rng, n), kernel)
        emb_nu = sample_embedding(inst.sample_nu(rng, n), kernel)
        est = estimate_ot(
            fs,
            kernel,
            kernel,
            kernel,
            emb_mu,
            emb_nu,
            1.0 / ell,
            config.conv_lambda2,
            tau=config.tau,
        )
        return est

    cells = [(n, rep) for n in config.n_list for rep in range(config.n_seeds)]
    if config.threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            estimates = list(pool.map(lambda c: one_cell(*c), cells))
    else:
        estimates = [one_cell(*c) for c in cells]
    if not all(e.converged for e in estimates):
        raise SolverFailure("a convergence cell did not converge")
    rows = [
        (n, rep, est.value, reference, abs(est.value - reference))
        for (n, rep), est in zip(cells, estimates)
    ]
    _write_csv(out_dir / "convergence.csv", CSV_HEADERS["convergence"], rows)
    medians = {
        str(n): float(
            np.median([r[4] for r in rows if r[0] == n])
        )
        for n in config.n_list
    }
    _write_json(
        out_dir / "convergence.json",
        _result_payload(
            config,
            reference=reference,
            reference_stderr=ref_se,
            medians=medians,
            rows=len(rows),
            csv="convergence.csv",
        ),
    )


def run_gridsearch(config, out_dir):
    kernel = config.parse_kernel()
    bench = benchmarks.translation_benchmark(
        shift=config.shift, n_fill=config.l, kernel=kernel
    )
    result = grid_search(
        bench.fill,
        bench.kernel,
        bench.kernel,
        bench.kernel_joint,
        bench.emb_mu,
        bench.emb_nu,
        config.grid_lambda1,
        config.grid_lambda2,
        tau=config.tau,
        reference=bench.reference,
        threads=config.threads,
    )
    rows = [
        (l1, l2, est.value, est.duality_gap, est.constraint_residual_max)
        for (l1, l2, est) in result.estimates
        if est is not None
    ]
    _write_csv(out_dir / "gridsearch.csv", CSV_HEADERS["gridsearch"], rows)
    _write_json(
        out_dir / "gridsearch.json",
        _result_payload(
            config,
            reference=bench.reference,
            best_lambda1=result.best.lambda1,
            best_lambda2=result.best.lambda2,
            best_ot_hat=result.best.value,
            failures=[(l1, l2) for (l1, l2, _) in result.errors],
            rows=len(rows),
            csv="gridsearch.csv",
        ),
    )


def run_witness(config, out_dir):
    quad = witness.quadratic_potential_spec(
        np.array([2.0, 4.0]), Domain(((-1.0, 1.0), (-1.0, 1.0)))
    )
    quartic = witness.quartic_potential_1d()
    res_quad = witness.verify_sos_identity(
        quad, grid_per_dim=min(config.witness_grid, 12), quad_nodes=config.witness_nodes
    )
    res_quartic = witness.verify_sos_identity(
        quartic, grid_per_dim=config.witness_grid, quad_nodes=config.witness_nodes
    )
    _write_json(
        out_dir / "witness.json",
        _result_payload(
            config,
            quadratic_residual=res_quad,
            quartic_residual=res_quartic,
            grid_per_dim=config.witness_grid,
            quad_nodes=config.witness_nodes,
        ),
    )


def run_mmd_limit(config, out_dir):
    rng = np.random.default_rng(config.seed)
    x = np.sort(rng.uniform(0.0, 1.0, 3))[:, None]
    y = np.sort(rng.uniform(0.0, 1.0, 3))[:, None]
    kernel = config.parse_kernel()
    oracle = exact_ot_oracle(x, y)
    ladder = []
    for lam in config.mmd_lambdas:
        _, objective = build_and_solve_mmd_ot(
            x, y, kernel, kernel, kernel, lam, lam, tau=config.tau
        )
        ladder.append({"lambda": lam, "objective": objective})
    _write_json(
        out_dir / "mmd_limit.json",
        _result_payload(
            config,
            oracle=oracle,
            ladder=ladder,
            x=[float(v) for v in x.ravel()],
            y=[float(v) for v in y.ravel()],
        ),
    )


RUNNERS = {
    "estimate": run_estimate,
    "map": run_map,
    "constraint": run_constraint,
    "convergence": run_convergence,
    "gridsearch": run_gridsearch,
    "witness": run_witness,
    "mmd_limit": run_mmd_limit,
}


def run(config):
    """Validate and execute one experiment; returns the process exit code."""
    try:
        config.validate()
    except ConfigError as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return 1
    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        RUNNERS[config.experiment](config, out_dir)
    except SolverFailure as exc:
        record = {"error": "non-convergence", "message": str(exc)}
        _write_json(out_dir / "error.json", record)
        print(json.dumps(record), file=sys.stderr)
        return 2
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="smoothot", description="kernel sum-of-squares transport experiments"
    )
    parser.add_argument("--experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", type=str, help="JSON config file")
    parser.add_argument("--out", type=str)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--threads", type=int)
    parser.add_argument("--tau", type=float)
    parser.add_argument("--l", type=int, help="number of constraint fill pairs")
    parser.add_argument("--n", type=int, help="sample count per measure")
    parser.add_argument("--shift", type=float)
    parser.add_argument("--lambda1", type=float)
    parser.add_argument("--lambda2", type=float)
    parser.add_argument("--lambda-mode", dest="lambda_mode", type=str)
    parser.add_argument("--sigma2", type=float, help="gaussian kernel bandwidth")
    parser.add_argument(
        "--kernel", type=str, help="sobolev:<s> or gaussian:<sigma2>"
    )
    return parser


def parse_config(argv):
    args = _build_parser().parse_args(argv)
    payload = {}
    if args.config:
        try:
            payload = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        if not isinstance(payload, dict):
            raise ConfigError("config file must hold a JSON object")
    known = {f.name for f in RunConfig.__dataclass_fields__.values()}
    unknown = set(payload) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    config = RunConfig(**payload)
    for name in (
        "experiment",
        "out",
        "seed",
        "threads",
        "tau",
        "l",
        "n",
        "shift",
        "lambda1",
        "lambda2",
        "lambda_mode",
        "kernel",
    ):
        value = getattr(args, name, None)
        if value is not None:
            setattr(config, name, value)
    if args.sigma2 is not None:
        config.kernel = f"gaussian:{args.sigma2}"
        config.conv_sigma2 = args.sigma2
    return config


def main(argv=None):
    try:
        config = parse_config(argv if argv is not None else sys.argv[1:])
    except ConfigError as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return 1
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
