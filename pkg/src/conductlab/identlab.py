"""Executable non-identification: two conduct/cost pairs with identical reduced forms.

Under an additively separable linear demand ``P = d0 - a Q + d1 x1d + d2 x2d + eps_d``
the pricing rule ``P + theta * dP/dQ * Q = g(Q, x)`` only depends on ``theta``
through ``g(Q, x) + theta * a * Q``. Shifting ``theta`` and compensating in the
cost slope therefore leaves every equilibrium unchanged.

The power demand of the counterexample behaves differently: the compensating
term ``(theta' - theta) * alpha0 * P`` depends on price, so the compensated
cost function leaves the log-linear cost family. :func:`loglinear_contrast`
makes that concrete.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DegenerateError, DomainError
from .estimation import estimate_supply
from .dgp import DgpConfig, MarketDataset, draw_exogenous, make_rng
from .model import StructuralParams, supply_intercept


@dataclass(frozen=True)
class LinearDemand:
    """``P = intercept - slope * Q + d1 * x1d + d2 * x2d + eps_d`` with ``slope > 0``."""

    slope: float
    intercept: float = 10.0
    d1: float = 1.0
    d2: float = 1.0


@dataclass(frozen=True)
class LinearCost:
    """``MC = c0 + c1 * Q + c2 * x1s + eps_s``."""

    c0: float = 1.0
    c1: float = 1.0
    c2: float = 1.0


@dataclass(frozen=True)
class ModelPair:
    demand: LinearDemand
    theta_a: float
    cost_a: LinearCost
    theta_b: float
    cost_b: LinearCost

    def describe(self) -> str:
        d = self.demand
        return (
            f"demand P = {d.intercept:g} - {d.slope:g} Q + {d.d1:g} x1d + {d.d2:g} x2d; "
            f"model A: theta = {self.theta_a:g}, MC = {self.cost_a.c0:g} + {self.cost_a.c1:.6g} Q "
            f"+ {self.cost_a.c2:g} x1s; "
            f"model B: theta = {self.theta_b:g}, MC = {self.cost_b.c0:g} + {self.cost_b.c1:.6g} Q "
            f"+ {self.cost_b.c2:g} x1s"
        )


def _equilibrium_slope(demand: LinearDemand, theta: float, cost: LinearCost) -> float:
    # effective supply slope c1 + theta*a minus demand slope -a
    return cost.c1 + theta * demand.slope + demand.slope


def build_equivalent_pair(theta_a: float, theta_b: float, a: float, base_cost: LinearCost, demand: LinearDemand | None = None) -> ModelPair:
    """Construct model B so its pricing rule coincides with model A's.

    Subtracting the two pricing rules forces
    ``g_B(Q) = g_A(Q) + (theta_b - theta_a) * s'(Q) * Q`` with ``s(Q) = -a Q``,
    so only the cost slope changes: ``c1_B = c1_A - (theta_b - theta_a) * a``.
    """
    if theta_a == theta_b:
        raise DomainError("the two conduct parameters must differ")
    for name, value in (("theta_a", theta_a), ("theta_b", theta_b)):
        if not 0.0 <= value <= 1.0:
            raise DomainError(f"{name} must lie in [0, 1], got {value}")
    if not a > 0:
        raise DomainError(f"demand slope a must be positive, got {a}")
    if demand is None:
        demand = LinearDemand(slope=a)
    elif demand.slope != a:
        raise DomainError(f"demand slope {demand.slope} disagrees with a = {a}")
    for name, theta in (("A", theta_a), ("B", theta_b)):
        if not base_cost.c1 + theta * a > 0:
            raise DomainError(
                f"effective supply slope c1 + theta_{name} * a = {base_cost.c1 + theta * a} "
                "must be positive"
            )

    cost_b = LinearCost(base_cost.c0, base_cost.c1 - (theta_b - theta_a) * a, base_cost.c2)
    pair = ModelPair(demand, theta_a, base_cost, theta_b, cost_b)
    for name, theta, cost in (("A", theta_a, base_cost), ("B", theta_b, cost_b)):
        if not _equilibrium_slope(demand, theta, cost) > 0:
            raise DegenerateError(f"model {name} has a non-positive equilibrium slope")
    return pair


def solve_linear_equilibrium(demand: LinearDemand, theta: float, cost: LinearCost, x1d, x2d, x1s, eps_d, eps_s):
    """Equilibrium ``(Q, P)`` in levels from the 2x2 linear system.

    Rows are the demand curve ``P + a Q = d0 + d1 x1d + d2 x2d + eps_d`` and
    the pricing rule ``P - (theta a + c1) Q = c0 + c2 x1s + eps_s``.
    """
    if not _equilibrium_slope(demand, theta, cost) > 0:
        raise DegenerateError("non-positive equilibrium slope")
    matrix = np.array([[demand.slope, 1.0], [-(theta * demand.slope + cost.c1), 1.0]])
    rhs = np.vstack([
        demand.intercept + demand.d1 * np.asarray(x1d) + demand.d2 * np.asarray(x2d) + eps_d,
        cost.c0 + cost.c2 * np.asarray(x1s) + eps_s,
    ])
    q, p = np.linalg.solve(matrix, rhs)
    return q, p


@dataclass(frozen=True)
class NonidentificationReport:
    pair: ModelPair
    n_points: int
    max_abs_q: float
    max_abs_p: float
    max_rel_q: float
    max_rel_p: float
    tolerance: float = 1e-12

    @property
    def identical(self) -> bool:
        return max(self.max_rel_q, self.max_rel_p) <= self.tolerance

    def __str__(self):
        verdict = (
            f"reduced forms identical (max discrepancy <= {self.tolerance:g})"
            if self.identical
            else f"reduced forms differ (max discrepancy > {self.tolerance:g})"
        )
        return "\n".join([
            self.pair.describe(),
            f"points: {self.n_points}",
            f"max |Q_A - Q_B| = {self.max_abs_q:.3e} (relative {self.max_rel_q:.3e})",
            f"max |P_A - P_B| = {self.max_abs_p:.3e} (relative {self.max_rel_p:.3e})",
            verdict,
        ])


def demonstrate_nonidentification(pair: ModelPair, n_points: int = 1000, seed: int = 0, sigma: float = 0.1) -> NonidentificationReport:
    """Solve both models on random exogenous draws and compare equilibria."""
    if n_points < 1:
        raise DomainError(f"n_points must be positive, got {n_points}")
    rng = make_rng(seed)
    x1d, x2d, x1s = (rng.uniform(1.0, 3.0, n_points) for _ in range(3))
    eps_d, eps_s = (rng.normal(0.0, sigma, n_points) for _ in range(2))
    q_a, p_a = solve_linear_equilibrium(pair.demand, pair.theta_a, pair.cost_a, x1d, x2d, x1s, eps_d, eps_s)
    q_b, p_b = solve_linear_equilibrium(pair.demand, pair.theta_b, pair.cost_b, x1d, x2d, x1s, eps_d, eps_s)
    dq, dp = np.abs(q_a - q_b), np.abs(p_a - p_b)
    return NonidentificationReport(
        pair=pair,
        n_points=n_points,
        max_abs_q=float(dq.max()),
        max_abs_p=float(dp.max()),
        max_rel_q=float(np.max(dq / np.maximum(1.0, np.abs(q_a)))),
        max_rel_p=float(np.max(dp / np.maximum(1.0, np.abs(p_a)))),
    )


# -- the same construction applied to the power demand ------------------------

@dataclass(frozen=True)
class LoglinearContrast:
    gamma_hat: float
    gamma_a: float  # supply intercept of the generating conduct
    gamma_b: float  # intercept a log-linear model with theta_b would need
    theta_hat: float
    demand_dependence: float  # max relative change in g_B from swapping the demand side

    @property
    def distinguishable(self) -> bool:
        return abs(self.gamma_hat - self.gamma_b) > abs(self.gamma_hat - self.gamma_a)


def loglinear_contrast(params: StructuralParams, theta_b: float, sample_size: int = 2000, seed: int = 0) -> LoglinearContrast:
    """Apply the compensating-cost construction to the power demand.

    Model B has conduct ``theta_b`` and cost
    ``g_B = g_A + (theta_b - theta_a) * alpha0 * P``. Its equilibria are found
    by root-finding on the level pricing rule, then the log-linear supply
    equation is fitted to them. The recovered intercept sits at model A's
    value, not at the ``-log(1 + theta_b alpha0)`` a log-linear model B would
    imply. ``g_B`` also moves with the demand side, so it is not a function
    of quantity and cost shifters alone.
    """
    params.check_admissible()
    params.replace(theta=theta_b).check_admissible()
    p = params
    config = DgpConfig(params=p, sample_size=sample_size, seed=seed)
    draw = draw_exogenous(config, make_rng(seed))

    def price(q, i):
        return math.exp(draw.eps_d[i]) * q**p.alpha0 * draw.x1d[i] ** p.alpha1 * draw.x2d[i] ** p.alpha2

    def cost_a(q, i):
        return math.exp(draw.eps_s[i]) * q**p.beta0 * draw.x1s[i] ** p.beta1 * draw.x2s[i] ** p.beta2

    log_q = np.empty(sample_size)
    log_p = np.empty(sample_size)
    for i in range(sample_size):
        def foc_b(u):
            q = math.exp(u)
            pr = price(q, i)
            dpdq = p.alpha0 * pr / q
            g_b = cost_a(q, i) + (theta_b - p.theta) * dpdq * q
            return pr + theta_b * dpdq * q - g_b

        u = brentq(foc_b, -50.0, 50.0, xtol=1e-14, rtol=1e-15, maxiter=500)
        q = math.exp(u)
        log_q[i] = u
        log_p[i] = math.log(price(q, i))

    data = MarketDataset(
        log_p=log_p,
        log_q=log_q,
        log_x1d=np.log(draw.x1d),
        log_x2d=np.log(draw.x2d),
        log_x1s=np.log(draw.x1s),
        log_x2s=np.log(draw.x2s),
        z1s=draw.z1s,
        z2s=draw.z2s,
    )
    _, gamma_hat = estimate_supply(data)

    # On equilibrium rows g_B is proportional to g_A, so probe it off-equilibrium:
    # at a fixed quantity and cost side, swap in another market's demand side.
    # Any marginal cost of the form g(Q, x_s) would not move.
    probe_q = np.exp(make_rng(seed + 1).uniform(-1.0, 1.0, sample_size))
    shift = (theta_b - p.theta) * p.alpha0
    gaps = [
        abs(shift * (price(q, i) - price(q, (i + 1) % sample_size))) / cost_a(q, i)
        for i, q in enumerate(probe_q)
    ]
    return LoglinearContrast(
        gamma_hat=gamma_hat,
        gamma_a=supply_intercept(params),
        gamma_b=supply_intercept(params.replace(theta=theta_b)),
        theta_hat=(math.exp(-gamma_hat) - 1.0) / params.alpha0,
        demand_dependence=float(max(gaps)),
    )
