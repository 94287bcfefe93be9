"""scikit-learn compatible wrappers around the 2SLS and conduct estimators."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_matrix
from .dgp import MarketDataset
from .estimation import estimate_demand, estimate_supply, fit_2sls, recover_theta


class TwoStageLeastSquares(RegressorMixin, BaseEstimator):
    """Linear IV regression.

    ``fit(X, y, Z)`` instruments the columns of ``X`` with the columns of
    ``Z``. Exogenous columns of ``X`` must also appear in ``Z``. Without
    ``Z`` the fit is ordinary least squares.

    Parameters
    ----------
    fit_intercept : bool, default=True
        Add a constant to both the regressors and the instruments.
    """

    def __init__(self, fit_intercept: bool = True):
        self.fit_intercept = fit_intercept

    def fit(self, X, y, Z=None):
        X = as_matrix(X, "X")
        Z = X if Z is None else as_matrix(Z, "Z")
        if self.fit_intercept:
            ones = np.ones((X.shape[0], 1))
            X, Z = np.hstack([ones, X]), np.hstack([ones, Z])
        fit = fit_2sls(y, X, Z)
        coef = fit.coefficients
        self.intercept_ = float(coef[0]) if self.fit_intercept else 0.0
        self.coef_ = coef[1:] if self.fit_intercept else coef
        self.first_stage_r2_ = fit.first_stage_r2[1:] if self.fit_intercept else fit.first_stage_r2
        self.residuals_ = fit.residuals
        self.n_features_in_ = self.coef_.shape[0]
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = as_matrix(X, "X")
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X @ self.coef_ + self.intercept_


class ConductEstimator(BaseEstimator):
    """Estimate demand, supply and the conduct parameter from market data.

    ``X`` is a :class:`~conductlab.dgp.MarketDataset` or a ``(T, 8)`` array
    with columns in :data:`conductlab.dgp.COLUMNS` order.

    Attributes
    ----------
    alpha_ : ndarray of shape (3,)
        Demand elasticity and shifter exponents.
    gamma_ : float
        Supply intercept.
    beta_ : ndarray of shape (3,)
        Cost elasticity and shifter exponents.
    theta_ : float
        Recovered conduct parameter, ``nan`` when ``theta_valid_`` is false.
    """

    def __init__(self, demand_intercept: bool = False, demand_instruments: str = "full"):
        self.demand_intercept = demand_intercept
        self.demand_instruments = demand_instruments

    def fit(self, X, y=None):
        data = X if isinstance(X, MarketDataset) else MarketDataset.from_array(X)
        self.demand_fit_ = estimate_demand(
            data, intercept=self.demand_intercept, instruments=self.demand_instruments
        )
        self.supply_fit_, self.gamma_ = estimate_supply(data)
        self.alpha_ = self.demand_fit_.coefficients[-3:]
        self.beta_ = self.supply_fit_.coefficients[1:]
        est = recover_theta(self.gamma_, self.alpha_[0])
        self.theta_ = est.theta_hat
        self.theta_valid_ = est.valid
        self.n_obs_ = len(data)
        return self

    def estimates(self) -> dict:
        """Flat mapping from parameter name to estimate."""
        check_is_fitted(self)
        names = ("alpha0", "alpha1", "alpha2", "beta0", "beta1", "beta2")
        out = dict(zip(names, [*self.alpha_.tolist(), *self.beta_.tolist()]))
        out["gamma"] = self.gamma_
        out["theta"] = self.theta_
        return out

    def report(self) -> dict:
        check_is_fitted(self)
        return {
            "n_obs": self.n_obs_,
            "demand": self.demand_fit_.to_dict(),
            "supply": self.supply_fit_.to_dict(),
            "gamma_hat": self.gamma_,
            "theta_hat": None if not self.theta_valid_ else self.theta_,
            "theta_valid": self.theta_valid_,
        }
