"""Replication grid over (sigma, T): bias and RMSE of every structural estimate."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal

import numpy as np

from .dgp import DgpConfig, generate_dataset
from .errors import ConductLabError, DomainError, EmptyInputError
from .estimation import estimate_demand, estimate_supply, recover_theta
from .model import StructuralParams

PARAMETERS = ("alpha0", "alpha1", "alpha2", "beta0", "beta1", "beta2", "theta")
LABELS = dict(zip(PARAMETERS, ("α₀", "α₁", "α₂", "β₀", "β₁", "β₂", "θ")))

WORKERS_ENV = "CONDUCTLAB_WORKERS"
_BLOCK = 250  # replications per worker task


@dataclass(frozen=True)
class ExperimentGrid:
    params: StructuralParams = field(default_factory=StructuralParams)
    sigmas: tuple[float, ...] = (0.001, 0.5, 1.0)
    sample_sizes: tuple[int, ...] = (50, 100, 200, 1000)
    n_reps: int = 1000
    master_seed: int = 0
    shifter_low: float = 1.0
    shifter_high: float = 3.0
    instrument_noise_sd: float = 1.0
    demand_instruments: str = "full"

    def __post_init__(self):
        object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))
        object.__setattr__(self, "sample_sizes", tuple(int(t) for t in self.sample_sizes))
        problems = []
        if not (isinstance(self.n_reps, (int, np.integer)) and self.n_reps >= 1):
            problems.append(f"n_reps must be a positive integer, got {self.n_reps!r}")
        if not self.sigmas:
            problems.append("sigmas must not be empty")
        if any(not (math.isfinite(s) and s >= 0) for s in self.sigmas):
            problems.append(f"sigmas must be non-negative, got {list(self.sigmas)}")
        if len(set(self.sigmas)) != len(self.sigmas):
            problems.append(f"sigmas must be distinct, got {list(self.sigmas)}")
        ts = self.sample_sizes
        if not ts or any(t < 1 for t in ts) or any(a >= b for a, b in zip(ts, ts[1:])):
            problems.append(
                f"sample_sizes must be positive and strictly increasing, got {list(ts)}"
            )
        if not (isinstance(self.master_seed, (int, np.integer)) and 0 <= self.master_seed < 2**64):
            problems.append(f"master_seed must be an unsigned 64-bit integer, got {self.master_seed!r}")
        if problems:
            raise DomainError("; ".join(problems))
        # surface bound and noise problems now rather than inside a worker
        self.dgp_config(self.sigmas[0], self.sample_sizes[0], 0)

    def dgp_config(self, sigma: float, sample_size: int, seed: int) -> DgpConfig:
        return DgpConfig(
            params=self.params.replace(sigma=sigma),
            sample_size=sample_size,
            seed=seed,
            shifter_low=self.shifter_low,
            shifter_high=self.shifter_high,
            instrument_noise_sd=self.instrument_noise_sd,
        )

    @property
    def truth(self) -> np.ndarray:
        p = self.params
        return np.array([p.alpha0, p.alpha1, p.alpha2, p.beta0, p.beta1, p.beta2, p.theta])


@dataclass(frozen=True)
class ParamStats:
    bias: float
    rmse: float


@dataclass(frozen=True, eq=False)
class McSummary:
    """Bias and RMSE of each parameter for one (sigma, T) cell.

    Moments are taken over valid replications only; ``n_invalid`` counts the
    rest. ``estimates`` holds the raw ``(n_reps, 7)`` estimates (``nan`` rows
    for failures) when the cell was run with ``keep_estimates=True``.
    """

    sigma: float
    sample_size: int
    stats: dict[str, ParamStats]
    n_valid: int
    n_invalid: int
    truth: tuple[float, ...]
    estimates: np.ndarray | None = None

    def __eq__(self, other):
        if not isinstance(other, McSummary):
            return NotImplemented
        return (
            (self.sigma, self.sample_size, self.stats, self.n_valid, self.n_invalid, self.truth)
            == (other.sigma, other.sample_size, other.stats, other.n_valid, other.n_invalid, other.truth)
        )

    def bias(self, name: str) -> float:
        return self.stats[name].bias

    def rmse(self, name: str) -> float:
        return self.stats[name].rmse


def replication_seed(master_seed: int, sigma_index: int, size_index: int, rep: int) -> int:
    """64-bit seed for one replication, a pure hash of its grid coordinates."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(sigma_index, size_index, rep))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def estimate_replication(config: DgpConfig, demand_instruments: str = "full") -> np.ndarray:
    """Generate one dataset and return the seven estimates, ``nan`` on failure."""
    data = generate_dataset(config)
    try:
        demand = estimate_demand(data, instruments=demand_instruments)
        supply, gamma_hat = estimate_supply(data)
    except ConductLabError:
        return np.full(len(PARAMETERS), np.nan)
    alpha = demand.coefficients[-3:]
    theta = recover_theta(gamma_hat, alpha[0])
    return np.array([*alpha, *supply.coefficients[1:], theta.theta_hat])


def _estimate_block(grid, sigma_index, size_index, reps):
    sigma = grid.sigmas[sigma_index]
    size = grid.sample_sizes[size_index]
    out = np.empty((len(reps), len(PARAMETERS)))
    for row, rep in enumerate(reps):
        seed = replication_seed(grid.master_seed, sigma_index, size_index, rep)
        out[row] = estimate_replication(grid.dgp_config(sigma, size, seed), grid.demand_instruments)
    return out


def summarize(estimates, truth, sigma=float("nan"), sample_size=0, keep_estimates=False) -> McSummary:
    """Aggregate an ``(n_reps, 7)`` estimate matrix against the true values.

    Rows with any non-finite entry count as invalid. Sums use ``math.fsum``,
    which is exactly rounded, so the result does not depend on row order.
    """
    estimates = np.atleast_2d(np.asarray(estimates, dtype=float))
    truth = np.asarray(truth, dtype=float)
    valid = np.all(np.isfinite(estimates), axis=1)
    n_valid = int(valid.sum())
    if n_valid == 0:
        raise EmptyInputError(f"no valid replications (sigma={sigma}, T={sample_size})")
    dev = estimates[valid] - truth
    stats = {}
    for j, name in enumerate(PARAMETERS):
        col = dev[:, j].tolist()
        bias = math.fsum(col) / n_valid
        rmse = math.sqrt(math.fsum(d * d for d in col) / n_valid)
        stats[name] = ParamStats(bias=bias, rmse=rmse)
    return McSummary(
        sigma=float(sigma),
        sample_size=int(sample_size),
        stats=stats,
        n_valid=n_valid,
        n_invalid=int(estimates.shape[0] - n_valid),
        truth=tuple(truth.tolist()),
        estimates=estimates if keep_estimates else None,
    )


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    if workers < 1:
        raise ValueError(f"worker count must be positive, got {workers}")
    return workers


def _run_cells(grid, cells, workers, keep_estimates):
    tasks = [
        (si, ti, range(start, min(start + _BLOCK, grid.n_reps)))
        for si, ti in cells
        for start in range(0, grid.n_reps, _BLOCK)
    ]
    if workers == 1:
        blocks = [_estimate_block(grid, si, ti, reps) for si, ti, reps in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_estimate_block, grid, si, ti, reps) for si, ti, reps in tasks]
            blocks = [f.result() for f in futures]

    summaries = []
    for si, ti in cells:
        mats = [b for (bsi, bti, _), b in zip(tasks, blocks) if (bsi, bti) == (si, ti)]
        summaries.append(
            summarize(
                np.vstack(mats),
                grid.truth,
                sigma=grid.sigmas[si],
                sample_size=grid.sample_sizes[ti],
                keep_estimates=keep_estimates,
            )
        )
    return summaries


def run_cell(grid: ExperimentGrid, sigma: float, sample_size: int, workers=None, keep_estimates=False) -> McSummary:
    """Run every replication of one grid cell.

    ``sigma`` and ``sample_size`` must be members of the grid, since their
    positions enter the replication seeds.
    """
    try:
        si = grid.sigmas.index(float(sigma))
        ti = grid.sample_sizes.index(int(sample_size))
    except ValueError:
        raise ValueError(f"cell (sigma={sigma}, T={sample_size}) is not part of the grid") from None
    return _run_cells(grid, [(si, ti)], resolve_workers(workers), keep_estimates)[0]


def run_grid(grid: ExperimentGrid, workers=None, keep_estimates=False) -> list[McSummary]:
    """One summary per cell, ordered by sigma then sample size (both ascending)."""
    sigma_order = sorted(range(len(grid.sigmas)), key=grid.sigmas.__getitem__)
    cells = [(si, ti) for si in sigma_order for ti in range(len(grid.sample_sizes))]
    return _run_cells(grid, cells, resolve_workers(workers), keep_estimates)


# -- rendering ---------------------------------------------------------------

def format_3dp(value: float) -> str:
    """Three decimals, half-to-even on the shortest decimal form of ``value``."""
    if not math.isfinite(value):
        return str(value)
    text = str(Decimal(repr(float(value))).quantize(Decimal("0.001"), rounding=ROUND_HALF_EVEN))
    return "0.000" if text == "-0.000" else text


def _check_summaries(summaries):
    summaries = list(summaries)
    if not summaries:
        raise EmptyInputError("no summaries to render")
    if len({s.truth for s in summaries}) != 1:
        raise ValueError("summaries were generated under different true parameters")
    return summaries


def _render_markdown(summaries) -> str:
    panels = {}
    for s in summaries:
        panels.setdefault(s.sigma, []).append(s)
    out = []
    for sigma in sorted(panels):
        cells = sorted(panels[sigma], key=lambda s: s.sample_size)
        out.append(f"σ = {sigma:g}")
        out.append("")
        out.append("|   |" + " Bias | RMSE |" * len(cells))
        out.append("|---|" + "---:|---:|" * len(cells))
        for name in PARAMETERS:
            vals = "".join(
                f" {format_3dp(c.bias(name))} | {format_3dp(c.rmse(name))} |" for c in cells
            )
            out.append(f"| {LABELS[name]} |{vals}")
        out.append("| Sample size (T) |" + "".join(f"  | {c.sample_size} |" for c in cells))
        out.append("| Valid replications |" + "".join(f"  | {c.n_valid} |" for c in cells))
        out.append("")
    return "\n".join(out)


def _render_csv(summaries) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["sigma", "T", "parameter", "bias", "rmse", "n_valid"])
    for s in summaries:
        for name in PARAMETERS:
            st = s.stats[name]
            writer.writerow(
                [format(s.sigma, ".17g"), s.sample_size, name,
                 format(st.bias, ".17g"), format(st.rmse, ".17g"), s.n_valid]
            )
    return buf.getvalue()


def render_table(summaries, format: str = "markdown") -> str:
    """Render summaries as per-sigma Markdown panels or a tidy CSV."""
    summaries = _check_summaries(summaries)
    if format == "markdown":
        return _render_markdown(summaries)
    if format == "csv":
        return _render_csv(summaries)
    raise ValueError(f"unknown format {format!r}; expected 'csv' or 'markdown'")


def render_replications(summaries) -> str:
    """Per-replication dump ``sigma,T,rep,parameter,estimate`` for cells that kept estimates."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["sigma", "T", "rep", "parameter", "estimate"])
    for s in summaries:
        if s.estimates is None:
            continue
        for rep, row in enumerate(s.estimates):
            for name, value in zip(PARAMETERS, row):
                writer.writerow([format(s.sigma, ".17g"), s.sample_size, rep, name, format(value, ".17g")])
    return buf.getvalue()
