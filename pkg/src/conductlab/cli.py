"""Command-line interface: ``conductlab {simulate,estimate,montecarlo,check,nonident,config}``.

Exit codes: 0 success, 1 invalid configuration or input data, 2 I/O failure,
3 a check ran but did not pass.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .dgp import DgpConfig, MarketDataset, generate_dataset
from .errors import ConductLabError
from .estimators import ConductEstimator
from .identlab import LinearCost, build_equivalent_pair, demonstrate_nonidentification
from .model import StructuralParams, check_separability, lau_exception_check, power_demand
from .montecarlo import ExperimentGrid, render_replications, render_table, run_grid

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_CHECK = 0, 1, 2, 3


class InvalidConfig(Exception):
    pass


@dataclass
class RunConfig:
    """Flat on-disk mirror of the structural parameters and the experiment grid."""

    alpha0: float = -1.0
    alpha1: float = 1.0
    alpha2: float = 1.0
    beta0: float = 1.0
    beta1: float = 1.0
    beta2: float = 1.0
    theta: float = 0.5
    sigma: float = 1.0
    sigmas: list = field(default_factory=lambda: [0.001, 0.5, 1.0])
    sample_sizes: list = field(default_factory=lambda: [50, 100, 200, 1000])
    sample_size: int = 100
    n_reps: int = 1000
    seed: int = 0
    shifter_low: float = 1.0
    shifter_high: float = 3.0
    instrument_noise_sd: float = 1.0
    demand_instruments: str = "full"
    format: str = "markdown"

    def __post_init__(self):
        if self.format not in ("csv", "markdown"):
            raise InvalidConfig(f"field 'format': expected 'csv' or 'markdown', got {self.format!r}")
        if self.demand_instruments not in ("full", "named"):
            raise InvalidConfig(
                f"field 'demand_instruments': expected 'full' or 'named', got {self.demand_instruments!r}"
            )

    def params(self) -> StructuralParams:
        return StructuralParams(
            self.alpha0, self.alpha1, self.alpha2, self.beta0,
            self.beta1, self.beta2, self.theta, self.sigma,
        )

    def dgp(self) -> DgpConfig:
        return DgpConfig(
            params=self.params(),
            sample_size=self.sample_size,
            seed=self.seed,
            shifter_low=self.shifter_low,
            shifter_high=self.shifter_high,
            instrument_noise_sd=self.instrument_noise_sd,
        )

    def grid(self) -> ExperimentGrid:
        return ExperimentGrid(
            params=self.params(),
            sigmas=tuple(self.sigmas),
            sample_sizes=tuple(self.sample_sizes),
            n_reps=self.n_reps,
            master_seed=self.seed,
            shifter_low=self.shifter_low,
            shifter_high=self.shifter_high,
            instrument_noise_sd=self.instrument_noise_sd,
            demand_instruments=self.demand_instruments,
        )


_FIELD_TYPES = {
    "alpha0": float, "alpha1": float, "alpha2": float, "beta0": float, "beta1": float,
    "beta2": float, "theta": float, "sigma": float, "sample_size": int, "n_reps": int,
    "seed": int, "shifter_low": float, "shifter_high": float, "instrument_noise_sd": float,
    "demand_instruments": str, "format": str,
}


def _coerce(name, value):
    if name in ("sigmas", "sample_sizes"):
        if not isinstance(value, list) or not value:
            raise InvalidConfig(f"field '{name}': expected a non-empty list, got {value!r}")
        kind = float if name == "sigmas" else int
        return [_coerce_scalar(f"{name}[{i}]", v, kind) for i, v in enumerate(value)]
    return _coerce_scalar(name, value, _FIELD_TYPES[name])


def _coerce_scalar(name, value, kind):
    if kind is str:
        if not isinstance(value, str):
            raise InvalidConfig(f"field '{name}': expected a string, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidConfig(f"field '{name}': expected a number, got {value!r}")
    if kind is int and float(value) != int(value):
        raise InvalidConfig(f"field '{name}': expected an integer, got {value!r}")
    return kind(value)


def load_config_file(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise InvalidConfig(f"{path}: top level must be a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise InvalidConfig(f"{path}: unknown field(s) {', '.join(unknown)}")
    return {k: _coerce(k, v) for k, v in raw.items()}


def resolve_config(args) -> RunConfig:
    """Defaults, then the config file, then command-line flags."""
    values = {}
    if getattr(args, "config", None):
        values.update(load_config_file(args.config))
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    return RunConfig(**values)


# -- subcommands ---------------------------------------------------------------

def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_simulate(args) -> int:
    cfg = resolve_config(args)
    data = generate_dataset(cfg.dgp())
    _emit(data.to_csv(), args.out)
    return EXIT_OK


def cmd_estimate(args) -> int:
    data = MarketDataset.from_csv(args.dataset)
    est = ConductEstimator(demand_instruments=args.demand_instruments or "full").fit(data)
    _emit(json.dumps(est.report(), indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    cfg = resolve_config(args)
    summaries = run_grid(cfg.grid(), workers=args.workers, keep_estimates=args.dump is not None)
    _emit(render_table(summaries, cfg.format), args.out)
    if args.dump is not None:
        Path(args.dump).write_text(render_replications(summaries))
    return EXIT_OK


def cmd_check(args) -> int:
    cfg = resolve_config(args)
    params = cfg.params()
    verdict = check_separability(power_demand(params), args.q, (args.x1d, args.x2d))
    try:
        lau = lau_exception_check(params.alpha0, params.theta)
    except ConductLabError:
        lau = False  # theta = 0: no exponent -1/theta exists
    print(f"separable: {'yes' if verdict.separable else 'no'}; "
          f"Lau exceptional form: {'yes' if lau else 'no'}")
    print(f"  {verdict}")
    counterexample = verdict.separable and not lau
    print("identified despite separability: " + ("yes" if counterexample else "no"))
    return EXIT_OK if counterexample else EXIT_CHECK


def cmd_nonident(args) -> int:
    pair = build_equivalent_pair(
        args.theta_a, args.theta_b, args.a, LinearCost(args.c0, args.c1, args.c2)
    )
    if args.perturb:
        cost_b = LinearCost(pair.cost_b.c0, pair.cost_b.c1 + args.perturb, pair.cost_b.c2)
        pair = type(pair)(pair.demand, pair.theta_a, pair.cost_a, pair.theta_b, cost_b)
    report = demonstrate_nonidentification(pair, n_points=args.points, seed=args.seed or 0)
    print(report)
    return EXIT_OK if report.identical else EXIT_CHECK


def cmd_config(args) -> int:
    cfg = resolve_config(args)
    _emit(json.dumps(asdict(cfg), indent=2) + "\n", args.out)
    return EXIT_OK


# -- parser --------------------------------------------------------------------

def _add_model_flags(p, sigma=True):
    g = p.add_argument_group("model")
    names = ["alpha0", "alpha1", "alpha2", "beta0", "beta1", "beta2", "theta"]
    for name in names + (["sigma"] if sigma else []):
        g.add_argument(f"--{name}", type=float)
    g.add_argument("--shifter-low", dest="shifter_low", type=float)
    g.add_argument("--shifter-high", dest="shifter_high", type=float)
    g.add_argument("--instrument-noise-sd", dest="instrument_noise_sd", type=float)
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conductlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate one dataset as CSV")
    _add_model_flags(p)
    p.add_argument("-T", "--sample-size", dest="sample_size", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate demand, supply and conduct from a dataset CSV")
    p.add_argument("dataset")
    p.add_argument("--demand-instruments", choices=("full", "named"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("montecarlo", help="run the replication grid and print bias/RMSE tables")
    _add_model_flags(p, sigma=False)
    p.add_argument("--sigma", "--sigmas", dest="sigmas", type=float, nargs="+",
                   help="error scales of the grid")
    p.add_argument("--sample-sizes", dest="sample_sizes", type=int, nargs="+")
    p.add_argument("--reps", dest="n_reps", type=int)
    p.add_argument("--demand-instruments", dest="demand_instruments", choices=("full", "named"))
    p.add_argument("--format", choices=("csv", "markdown"))
    p.add_argument("--workers", type=int, help="worker processes (default: $CONDUCTLAB_WORKERS or 1)")
    p.add_argument("--dump", help="also write per-replication estimates to this CSV")
    p.add_argument("--out")
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("check", help="separability and exceptional-form verdicts for the power demand")
    _add_model_flags(p)
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--x1d", type=float, default=1.5)
    p.add_argument("--x2d", type=float, default=2.5)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("nonident", help="demonstrate two observationally equivalent models")
    p.add_argument("--theta-a", type=float, default=0.2)
    p.add_argument("--theta-b", type=float, default=0.5)
    p.add_argument("--a", type=float, default=1.0, help="demand slope")
    p.add_argument("--c0", type=float, default=1.0)
    p.add_argument("--c1", type=float, default=1.0)
    p.add_argument("--c2", type=float, default=1.0)
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--perturb", type=float, default=0.0,
                   help="add this to model B's cost slope (negative control)")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_nonident)

    p = sub.add_parser("config", help="write the resolved configuration as JSON")
    _add_model_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_config)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InvalidConfig, ConductLabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
