import math

import numpy as np
import pytest

from conductlab.errors import DomainError, EmptyInputError
from conductlab.model import StructuralParams
from conductlab.montecarlo import (
    PARAMETERS,
    ExperimentGrid,
    format_3dp,
    render_replications,
    render_table,
    replication_seed,
    run_cell,
    run_grid,
    summarize,
)

TRUTH = ExperimentGrid().truth


def _estimates(theta_values):
    rows = np.tile(TRUTH, (len(theta_values), 1))
    rows[:, -1] = theta_values
    return rows


class TestSummarize:
    def test_three_point_arithmetic(self):
        s = summarize(_estimates([0.4, 0.5, 0.6]), TRUTH)
        assert s.bias("theta") == pytest.approx(0.0, abs=1e-16)
        assert s.rmse("theta") == pytest.approx(math.sqrt(0.02 / 3), rel=1e-14)
        assert s.rmse("alpha0") == 0.0

    def test_order_insensitive(self):
        rng = np.random.default_rng(0)
        est = TRUTH + rng.standard_cauchy(size=(500, 7))
        a = summarize(est, TRUTH)
        b = summarize(est[rng.permutation(500)], TRUTH)
        assert a == b

    def test_invalid_rows_counted(self):
        est = _estimates([0.4, np.nan, 0.6, 0.5])
        s = summarize(est, TRUTH)
        assert (s.n_valid, s.n_invalid) == (3, 1)

    def test_all_invalid(self):
        with pytest.raises(EmptyInputError):
            summarize(_estimates([np.nan, np.nan]), TRUTH)

    def test_rmse_bounds_bias(self):
        rng = np.random.default_rng(1)
        s = summarize(TRUTH + rng.normal(0.3, 1.0, size=(200, 7)), TRUTH)
        for name in PARAMETERS:
            assert s.rmse(name) >= abs(s.bias(name))


class TestGrid:
    def test_defaults(self):
        g = ExperimentGrid()
        assert g.sigmas == (0.001, 0.5, 1.0)
        assert g.sample_sizes == (50, 100, 200, 1000)
        assert g.n_reps == 1000

    @pytest.mark.parametrize("kwargs", [
        {"n_reps": 0}, {"sample_sizes": (100, 50)}, {"sample_sizes": (50, 50)},
        {"sigmas": (-1.0,)}, {"sigmas": ()}, {"shifter_low": 5.0}, {"master_seed": -3},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(DomainError):
            ExperimentGrid(**kwargs)

    def test_replication_seed_is_pure_and_distinct(self):
        assert replication_seed(0, 1, 2, 3) == replication_seed(0, 1, 2, 3)
        seeds = {replication_seed(0, s, t, r) for s in range(3) for t in range(4) for r in range(50)}
        assert len(seeds) == 600
        assert replication_seed(1, 0, 0, 0) != replication_seed(0, 0, 0, 0)


SMALL = ExperimentGrid(sigmas=(0.5, 1.0), sample_sizes=(50, 200), n_reps=40, master_seed=3)


class TestRunning:
    def test_default_cardinality(self):
        g = ExperimentGrid(n_reps=1, sample_sizes=(10, 20, 30, 40))
        assert len(run_grid(g)) == 12

    def test_single_cell_grid(self):
        g = ExperimentGrid(sigmas=(0.5,), sample_sizes=(100,), n_reps=5)
        out = run_grid(g)
        assert len(out) == 1 and out[0].sigma == 0.5 and out[0].sample_size == 100

    def test_order(self):
        g = ExperimentGrid(sigmas=(1.0, 0.001), sample_sizes=(20, 40), n_reps=2)
        keys = [(s.sigma, s.sample_size) for s in run_grid(g)]
        assert keys == [(0.001, 20), (0.001, 40), (1.0, 20), (1.0, 40)]

    def test_run_cell_matches_grid(self):
        grid = run_grid(SMALL)
        assert run_cell(SMALL, 1.0, 200) == grid[3]

    def test_cell_must_be_in_grid(self):
        with pytest.raises(ValueError):
            run_cell(SMALL, 0.7, 50)

    def test_counts_add_up(self):
        for s in run_grid(SMALL):
            assert s.n_valid + s.n_invalid == SMALL.n_reps

    def test_deterministic_across_workers(self):
        serial = run_grid(SMALL, workers=1)
        parallel = run_grid(SMALL, workers=3)
        assert serial == parallel
        assert render_table(serial, "csv") == render_table(parallel, "csv")

    def test_workers_from_environment(self, monkeypatch):
        monkeypatch.setenv("CONDUCTLAB_WORKERS", "2")
        assert run_grid(SMALL) == run_grid(SMALL, workers=1)

    def test_keep_estimates(self):
        s = run_cell(SMALL, 0.5, 50, keep_estimates=True)
        assert s.estimates.shape == (40, 7)
        devs = s.estimates[:, -1] - 0.5
        assert s.bias("theta") == pytest.approx(devs.mean(), rel=1e-12)

    def test_named_instruments_are_selectable(self):
        g = ExperimentGrid(sigmas=(0.5,), sample_sizes=(200,), n_reps=20, demand_instruments="named")
        assert run_grid(g)[0] != run_grid(ExperimentGrid(sigmas=(0.5,), sample_sizes=(200,), n_reps=20))[0]


@pytest.fixture(scope="module")
def summaries():
    return run_grid(SMALL)


class TestRendering:
    def test_three_decimals_half_even(self):
        assert format_3dp(0.00449) == "0.004"
        assert format_3dp(0.0125) == "0.012"
        assert format_3dp(0.0135) == "0.014"
        assert format_3dp(-0.0001) == "0.000"
        assert format_3dp(3.3166) == "3.317"

    def test_markdown_rows(self, summaries):
        text = render_table(summaries[:1], "markdown")
        labels = [line.split("|")[1].strip() for line in text.splitlines() if line.startswith("| ")]
        labels = [label for label in labels if label]
        assert labels[:7] == ["α₀", "α₁", "α₂", "β₀", "β₁", "β₂", "θ"]
        assert "Sample size (T)" in labels

    def test_markdown_one_panel_per_sigma(self, summaries):
        text = render_table(summaries, "markdown")
        assert text.count("σ = ") == 2

    def test_csv_cardinality(self):
        g = ExperimentGrid(n_reps=1, sample_sizes=(10, 20, 30, 40))
        lines = render_table(run_grid(g), "csv").strip().splitlines()
        assert lines[0] == "sigma,T,parameter,bias,rmse,n_valid"
        assert len(lines) - 1 == 84

    def test_csv_and_markdown_agree(self, summaries):
        rows = [l.split(",") for l in render_table(summaries, "csv").strip().splitlines()[1:]]
        md = render_table(summaries, "markdown")
        for sigma, t, name, bias, rmse, n in rows:
            assert format_3dp(float(bias)) in md and format_3dp(float(rmse)) in md

    def test_csv_is_lossless(self, summaries):
        rows = render_table(summaries, "csv").strip().splitlines()[1:]
        first = rows[0].split(",")
        assert float(first[3]) == summaries[0].bias("alpha0")

    def test_empty(self):
        with pytest.raises(EmptyInputError):
            render_table([], "csv")

    def test_mixed_parameters_rejected(self, summaries):
        other = run_grid(ExperimentGrid(params=StructuralParams(theta=0.3), sigmas=(0.5,), sample_sizes=(50,), n_reps=3))
        with pytest.raises(ValueError):
            render_table([summaries[0], other[0]])

    def test_unknown_format(self, summaries):
        with pytest.raises(ValueError):
            render_table(summaries, "html")

    def test_replication_dump(self):
        s = run_cell(SMALL, 0.5, 50, keep_estimates=True)
        lines = render_replications([s]).strip().splitlines()
        assert lines[0] == "sigma,T,rep,parameter,estimate"
        assert len(lines) - 1 == 40 * 7
