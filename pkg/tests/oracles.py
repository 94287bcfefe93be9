"""Reference computations that share no code with the package under test."""

import math

import mpmath
import numpy as np
from scipy.optimize import bisect


def bisection_log_q(params, x1d, x2d, x1s, x2s, eps_d=0.0, eps_s=0.0):
    """Equilibrium log-quantity by bisection on the level pricing rule.

    Solves ``P(Q) + theta * P'(Q) * Q - MC(Q) = 0`` with the demand slope
    taken from the level demand curve, not from its log form.
    """
    a0, a1, a2 = params.alpha0, params.alpha1, params.alpha2
    b0, b1, b2 = params.beta0, params.beta1, params.beta2

    def foc(u):
        q = math.exp(u)
        p = math.exp(eps_d) * q**a0 * x1d**a1 * x2d**a2
        dp = a0 * math.exp(eps_d) * q ** (a0 - 1) * x1d**a1 * x2d**a2
        mc = math.exp(eps_s) * q**b0 * x1s**b1 * x2s**b2
        # scaled by MC so the residual stays O(1) across the bracket
        return (p + params.theta * dp * q - mc) / mc

    return bisect(foc, -60.0, 60.0, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=400)


def normal_equations_2sls(y, X, Z, dps=50):
    """2SLS through explicit normal equations in extended precision."""
    mpmath.mp.dps = dps
    Xm, Zm, ym = mpmath.matrix(X.tolist()), mpmath.matrix(Z.tolist()), mpmath.matrix(y.tolist())
    zz_inv = (Zm.T * Zm) ** -1
    x_hat = Zm * (zz_inv * (Zm.T * Xm))
    coef = (x_hat.T * x_hat) ** -1 * (x_hat.T * ym)
    return np.array([float(c) for c in coef])


def direct_iv(y, X, Z):
    """Exactly identified IV, ``(Z'X)^-1 Z'y``."""
    return np.linalg.solve(Z.T @ X, Z.T @ y)


def ols(y, X):
    return np.linalg.lstsq(X, y, rcond=None)[0]
