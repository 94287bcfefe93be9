"""Structural model: log-linear inverse demand, marginal cost, and the supply relation.

The inverse demand and marginal cost are

    P  = exp(eps_d) * Q**alpha0 * x1d**alpha1 * x2d**alpha2
    MC = exp(eps_s) * Q**beta0  * x1s**beta1  * x2s**beta2

and firms price according to ``P + theta * dP/dQ * Q = MC``. Because
``dP/dQ * Q = alpha0 * P`` the supply relation collapses to
``(1 + theta * alpha0) * P = MC``, which is linear in logs.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateError, DomainError, NumericalError, SingularModelError

DemandFunction = Callable[[float, float, float], float]

_SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class StructuralParams:
    """Constants of the demand and marginal cost system.

    Defaults are the true values used in the simulation design, with the
    error scale set to the noisiest design point (``sigma = 1.0``).
    """

    alpha0: float = -1.0
    alpha1: float = 1.0
    alpha2: float = 1.0
    beta0: float = 1.0
    beta1: float = 1.0
    beta2: float = 1.0
    theta: float = 0.5
    sigma: float = 1.0

    def __post_init__(self):
        bad = [name for name, value in asdict(self).items() if not math.isfinite(value)]
        if bad:
            raise DomainError(f"non-finite parameter(s): {', '.join(bad)}")
        if not 0.0 <= self.theta <= 1.0:
            raise DomainError(f"theta must lie in [0, 1], got {self.theta}")
        if self.sigma < 0:
            raise DomainError(f"sigma must be non-negative, got {self.sigma}")

    @property
    def markup_factor(self) -> float:
        return 1.0 + self.theta * self.alpha0

    def check_admissible(self) -> None:
        """Raise if the supply relation or the equilibrium is undefined."""
        supply_intercept(self)
        if abs(self.alpha0 - self.beta0) < _SINGULAR_TOL:
            raise SingularModelError(
                f"alpha0 ({self.alpha0}) equals beta0 ({self.beta0}); equilibrium is not unique"
            )

    def replace(self, **changes) -> "StructuralParams":
        return StructuralParams(**{**asdict(self), **changes})

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ExogenousDraw:
    """Shifters, instruments and structural errors for one or many markets.

    Fields are scalars or equal-length 1-d arrays. Shifters are in levels;
    instruments and errors are on the log scale.
    """

    x1d: np.ndarray | float
    x2d: np.ndarray | float
    x1s: np.ndarray | float
    x2s: np.ndarray | float
    z1s: np.ndarray | float = 0.0
    z2s: np.ndarray | float = 0.0
    eps_d: np.ndarray | float = 0.0
    eps_s: np.ndarray | float = 0.0

    def __post_init__(self):
        for name in ("x1d", "x2d", "x1s", "x2s"):
            value = np.asarray(getattr(self, name), dtype=float)
            if not np.all(value > 0):
                raise DomainError(f"shifter {name} must be strictly positive")


@dataclass(frozen=True)
class EquilibriumPoint:
    log_q: np.ndarray | float
    log_p: np.ndarray | float


def supply_intercept(params: StructuralParams) -> float:
    """Intercept ``-log(1 + theta * alpha0)`` of the log-linear supply equation."""
    factor = params.markup_factor
    if not factor > 0:
        raise DomainError(
            f"1 + theta*alpha0 = {factor} is not positive (theta={params.theta}, "
            f"alpha0={params.alpha0}); the log supply relation does not exist"
        )
    return -math.log(factor)


def solve_equilibrium(params: StructuralParams, draw: ExogenousDraw) -> EquilibriumPoint:
    """Closed-form market equilibrium in logs.

    Works elementwise when the draw holds arrays.
    """
    gamma = supply_intercept(params)
    slope_gap = params.alpha0 - params.beta0
    if abs(slope_gap) < _SINGULAR_TOL:
        raise SingularModelError(
            f"alpha0 ({params.alpha0}) equals beta0 ({params.beta0}); equilibrium is not unique"
        )

    demand_index = (
        params.alpha1 * np.log(draw.x1d) + params.alpha2 * np.log(draw.x2d) + draw.eps_d
    )
    cost_index = (
        gamma + params.beta1 * np.log(draw.x1s) + params.beta2 * np.log(draw.x2s) + draw.eps_s
    )
    log_q = (cost_index - demand_index) / slope_gap
    log_p = params.alpha0 * log_q + demand_index
    return EquilibriumPoint(log_q=log_q, log_p=log_p)


def log_demand_residual(params, log_q, log_p, log_x1d, log_x2d):
    """``log P - (alpha0 log Q + alpha1 log x1d + alpha2 log x2d)``, which equals eps_d."""
    return log_p - (params.alpha0 * log_q + params.alpha1 * log_x1d + params.alpha2 * log_x2d)


def log_supply_residual(params, log_q, log_p, log_x1s, log_x2s):
    """``log P - (gamma + beta0 log Q + beta1 log x1s + beta2 log x2s)``, which equals eps_s."""
    gamma = supply_intercept(params)
    return log_p - (
        gamma + params.beta0 * log_q + params.beta1 * log_x1s + params.beta2 * log_x2s
    )


# -- demand function handles -------------------------------------------------

def power_demand(params: StructuralParams, eps_d: float = 0.0) -> DemandFunction:
    """Multiplicatively separable power demand ``exp(eps_d) Q^a0 x1^a1 x2^a2``."""
    a0, a1, a2 = params.alpha0, params.alpha1, params.alpha2

    def demand(q, x1d, x2d):
        return math.exp(eps_d) * q**a0 * x1d**a1 * x2d**a2

    return demand


def rotation_demand(a0: float = 10.0, a1: float = -2.0, a2: float = 1.0, a3: float = 1.0):
    """Linear demand with a rotation shifter, ``a0 + (a1 + a2 z) Q + a3 y``.

    The first shifter ``z`` rotates the demand curve, so the ratio of shifter
    partials is ``a2 Q / a3`` and depends on quantity.
    """

    def demand(q, z, y):
        return a0 + (a1 + a2 * z) * q + a3 * y

    return demand


def additive_demand(q, x1d, x2d):
    """``P = -Q + x1d + x2d``: additively separable with equal shifter partials."""
    return -q + x1d + x2d


@dataclass(frozen=True)
class SeparabilityVerdict:
    separable: bool
    derivative: float  # d/dQ of the partial ratio; the witness value
    ratio: float
    tolerance: float

    def __str__(self):
        word = "separable" if self.separable else "non-separable"
        return f"{word} (d ratio/dQ = {self.derivative:.3e}, ratio = {self.ratio:.6g})"


def _partial(fn, h):
    # central difference; fn takes the perturbation
    return (fn(h) - fn(-h)) / (2.0 * h)


def _shifter_ratio(demand, q, x1, x2):
    h1 = 1e-5 * max(1.0, abs(x1))
    h2 = 1e-5 * max(1.0, abs(x2))
    d1 = _partial(lambda e: demand(q, x1 + e, x2), h1)
    d2 = _partial(lambda e: demand(q, x1, x2 + e), h2)
    if not (math.isfinite(d1) and math.isfinite(d2)):
        raise NumericalError(f"non-finite shifter partial at q={q}, x=({x1}, {x2})")
    level = abs(demand(q, x1, x2))
    if abs(d2) <= 1e-10 * max(1.0, level, abs(d1)):
        raise DegenerateError(
            f"partial with respect to the second shifter vanishes at q={q}, x=({x1}, {x2})"
        )
    return d1 / d2


def check_separability(
    demand: DemandFunction,
    q: float,
    xd: tuple[float, float],
    step: float | None = None,
) -> SeparabilityVerdict:
    """Numerically test whether shifters enter demand through a single index.

    Demand is separable in its shifters exactly when the ratio of the two
    shifter partials does not move with quantity. The ratio is formed from
    central differences and then differentiated in ``q`` with a second
    central difference of half-width ``step``.

    Parameters
    ----------
    demand : callable
        ``demand(q, x1d, x2d) -> price``.
    q : float
        Quantity at which to test, ``q > 0``.
    xd : pair of float
        Shifter values, both positive.
    step : float, optional
        Outer step in quantity. Defaults to ``1e-4 * max(1, q)``.
    """
    x1, x2 = (float(v) for v in xd)
    if not q > 0:
        raise DomainError(f"q must be positive, got {q}")
    if not (x1 > 0 and x2 > 0):
        raise DomainError(f"shifters must be positive, got {xd}")
    if step is None:
        step = 1e-4 * max(1.0, q)
    if not step > 0:
        raise DomainError(f"step must be positive, got {step}")
    if step >= q:
        raise DomainError(f"step ({step}) must be smaller than q ({q})")

    ratio = _shifter_ratio(demand, q, x1, x2)
    upper = _shifter_ratio(demand, q + step, x1, x2)
    lower = _shifter_ratio(demand, q - step, x1, x2)
    derivative = (upper - lower) / (2.0 * step)
    if not math.isfinite(derivative):
        raise NumericalError(f"non-finite ratio derivative at q={q}")
    tolerance = 1e-6 * (1.0 + abs(ratio))
    return SeparabilityVerdict(
        separable=abs(derivative) <= tolerance,
        derivative=derivative,
        ratio=ratio,
        tolerance=tolerance,
    )


def lau_exception_check(alpha0: float, theta: float) -> bool:
    """Whether a pure power demand ``Q**alpha0 * r(x)`` has the exponent ``-1/theta``.

    That is the separable family under which identification was previously
    known to survive. Only the case with no additive ``s(Q)`` term is covered.
    """
    if theta == 0:
        raise DomainError("theta = 0 leaves the exponent -1/theta undefined")
    return abs(alpha0 + 1.0 / theta) <= 1e-12
