"""Conduct-parameter identification lab for a log-linear separable demand system."""

from .dgp import DgpConfig, MarketDataset, generate_dataset
from .estimation import IVFit, ThetaEstimate, estimate_demand, estimate_supply, fit_2sls, recover_theta
from .estimators import ConductEstimator, TwoStageLeastSquares
from .model import StructuralParams, check_separability, lau_exception_check, solve_equilibrium
from .montecarlo import ExperimentGrid, McSummary, render_table, run_cell, run_grid

__version__ = "0.1.0"

__all__ = [
    "ConductEstimator",
    "DgpConfig",
    "ExperimentGrid",
    "IVFit",
    "MarketDataset",
    "McSummary",
    "StructuralParams",
    "ThetaEstimate",
    "TwoStageLeastSquares",
    "check_separability",
    "estimate_demand",
    "estimate_supply",
    "fit_2sls",
    "generate_dataset",
    "lau_exception_check",
    "recover_theta",
    "render_table",
    "run_cell",
    "run_grid",
    "solve_equilibrium",
]
