"""Two-stage least squares and the structural demand/supply estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr, solve_triangular

from ._validation import check_design, check_min_obs
from .dgp import MarketDataset
from .errors import RankDeficientError

_RANK_RTOL = 1e-10

DEMAND_REGRESSORS = ("log_q", "log_x1d", "log_x2d")
# "full" uses every exogenous variable of the system; "named" only the noisy
# cost-side instruments plus the included demand shifters.
DEMAND_INSTRUMENT_SETS = {
    "full": ("z1s", "z2s", "log_x1s", "log_x2s", "log_x1d", "log_x2d"),
    "named": ("z1s", "z2s", "log_x1d", "log_x2d"),
}
SUPPLY_REGRESSORS = ("const", "log_q", "log_x1s", "log_x2s")
SUPPLY_INSTRUMENTS = ("const", "log_x1d", "log_x2d", "log_x1s", "log_x2s")

MIN_OBS_SUPPLY = 6


@dataclass(frozen=True, eq=False)
class IVFit:
    """Result of a 2SLS fit.

    ``residuals`` are structural, ``y - X @ coefficients``, evaluated at the
    original regressors. ``fitted_regressors`` holds the first-stage
    projections used as second-stage regressors.
    """

    coefficients: np.ndarray
    residuals: np.ndarray
    first_stage_r2: np.ndarray
    fitted_regressors: np.ndarray
    regressor_names: tuple[str, ...]
    instrument_names: tuple[str, ...]

    @property
    def n_obs(self) -> int:
        return self.residuals.shape[0]

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.regressor_names.index(name)])

    def to_dict(self) -> dict:
        return {
            "regressors": list(self.regressor_names),
            "instruments": list(self.instrument_names),
            "coefficients": dict(zip(self.regressor_names, self.coefficients.tolist())),
            "first_stage_r2": dict(zip(self.regressor_names, self.first_stage_r2.tolist())),
            "n_obs": self.n_obs,
        }


@dataclass(frozen=True)
class ThetaEstimate:
    gamma_hat: float
    theta_hat: float
    alpha0_hat: float
    valid: bool


def _check_rank(matrix: np.ndarray, what: str) -> None:
    s = np.linalg.svd(matrix, compute_uv=False)
    if s.size == 0 or s[0] == 0 or s[-1] <= _RANK_RTOL * s[0]:
        rank = int(np.sum(s > _RANK_RTOL * (s[0] if s.size else 0.0)))
        raise RankDeficientError(f"{what} has rank {rank} < {matrix.shape[1]} columns")


def _centered_r2(target: np.ndarray, fitted: np.ndarray) -> np.ndarray:
    ssr = np.sum((target - fitted) ** 2, axis=0)
    tss = np.sum((target - target.mean(axis=0)) ** 2, axis=0)
    scale = np.maximum(np.sum(target**2, axis=0), 1.0)
    out = np.empty(target.shape[1])
    for j in range(target.shape[1]):
        if tss[j] <= 1e-14 * scale[j]:
            # constant column: perfectly reproduced when it lies in the instrument span
            out[j] = 1.0 if ssr[j] <= 1e-14 * scale[j] else 0.0
        else:
            out[j] = 1.0 - ssr[j] / tss[j]
    return out


def fit_2sls(y, regressors, instruments, regressor_names=None, instrument_names=None) -> IVFit:
    """Two-stage least squares via two QR projections.

    The regressors are projected onto the column space of the instruments,
    ``X_hat = Q_Z Q_Z' X``, and ``y`` is then regressed on ``X_hat`` through a
    second QR factorization. No matrix is ever inverted.

    Parameters
    ----------
    y : array_like, shape (T,)
    regressors : array_like, shape (T, k)
    instruments : array_like, shape (T, m)
        Must include any exogenous regressors; ``m >= k`` and ``T > m``.

    Raises
    ------
    RankDeficientError
        If the instruments or the projected regressors are collinear
        (smallest singular value below ``1e-10`` times the largest).
    InsufficientDataError
        If ``T <= m``.
    """
    y, X, Z = check_design(y, regressors, instruments)
    k, m = X.shape[1], Z.shape[1]
    regressor_names = tuple(regressor_names or (f"x{j}" for j in range(k)))
    instrument_names = tuple(instrument_names or (f"z{j}" for j in range(m)))

    _check_rank(Z, "instrument matrix")
    qz, _ = qr(Z, mode="economic")
    x_hat = qz @ (qz.T @ X)
    _check_rank(x_hat, "projected regressor matrix")

    qx, rx = qr(x_hat, mode="economic")
    coefficients = solve_triangular(rx, qx.T @ y)
    residuals = y - X @ coefficients
    return IVFit(
        coefficients=coefficients,
        residuals=residuals,
        first_stage_r2=_centered_r2(X, x_hat),
        fitted_regressors=x_hat,
        regressor_names=regressor_names,
        instrument_names=instrument_names,
    )


def _columns(data: MarketDataset, names) -> np.ndarray:
    n = len(data)
    return np.column_stack([np.ones(n) if c == "const" else getattr(data, c) for c in names])


def estimate_demand(data: MarketDataset, intercept: bool = False, instruments: str = "full") -> IVFit:
    """Fit ``log P = a0 log Q + a1 log x1d + a2 log x2d (+ eps_d)`` by 2SLS.

    ``log Q`` is instrumented by cost-side variables: with ``instruments="full"``
    both the noisy instruments ``z1s, z2s`` and the cost shifters, with
    ``"named"`` the noisy instruments alone. The demand shifters instrument
    for themselves. Coefficients come back as ``(alpha0, alpha1, alpha2)``,
    preceded by a constant when ``intercept``.
    """
    try:
        insts = DEMAND_INSTRUMENT_SETS[instruments]
    except KeyError:
        raise ValueError(
            f"unknown demand instrument set {instruments!r}; "
            f"choose from {sorted(DEMAND_INSTRUMENT_SETS)}"
        ) from None
    regs = DEMAND_REGRESSORS
    if intercept:
        regs, insts = ("const",) + regs, ("const",) + insts
    check_min_obs(len(data), len(insts) + 1, "demand estimation")
    return fit_2sls(data.log_p, _columns(data, regs), _columns(data, insts), regs, insts)


def estimate_supply(data: MarketDataset) -> tuple[IVFit, float]:
    """Fit ``log P = gamma + b0 log Q + b1 log x1s + b2 log x2s`` by 2SLS.

    The demand shifters are the excluded instruments. Returns the fit, with
    coefficients ``(gamma, beta0, beta1, beta2)``, and ``gamma`` itself.
    """
    check_min_obs(len(data), MIN_OBS_SUPPLY, "supply estimation")
    fit = fit_2sls(
        data.log_p,
        _columns(data, SUPPLY_REGRESSORS),
        _columns(data, SUPPLY_INSTRUMENTS),
        SUPPLY_REGRESSORS,
        SUPPLY_INSTRUMENTS,
    )
    return fit, float(fit.coefficients[0])


def recover_theta(gamma_hat: float, alpha0_hat: float) -> ThetaEstimate:
    """Invert ``gamma = -log(1 + theta * alpha0)`` for the conduct parameter.

    A near-zero demand slope makes the inversion meaningless; the estimate is
    then flagged invalid with ``theta_hat = nan`` rather than dropped.
    """
    gamma_hat = float(gamma_hat)
    alpha0_hat = float(alpha0_hat)
    if abs(alpha0_hat) < 1e-8 or not (math.isfinite(gamma_hat) and math.isfinite(alpha0_hat)):
        return ThetaEstimate(gamma_hat, math.nan, alpha0_hat, valid=False)
    theta_hat = (math.exp(-gamma_hat) - 1.0) / alpha0_hat
    return ThetaEstimate(gamma_hat, theta_hat, alpha0_hat, valid=math.isfinite(theta_hat))
