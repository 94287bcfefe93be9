import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conductlab.errors import DegenerateError, DomainError, NumericalError, SingularModelError
from conductlab.model import (
    ExogenousDraw,
    StructuralParams,
    additive_demand,
    check_separability,
    lau_exception_check,
    log_demand_residual,
    log_supply_residual,
    power_demand,
    rotation_demand,
    solve_equilibrium,
    supply_intercept,
)

from oracles import bisection_log_q

TABLE1 = StructuralParams()
UNIT = ExogenousDraw(1.0, 1.0, 1.0, 1.0)


def random_instances(n, seed):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        params = StructuralParams(
            alpha0=rng.uniform(-2.0, -0.1),
            alpha1=rng.uniform(-2, 2),
            alpha2=rng.uniform(-2, 2),
            beta0=rng.uniform(0.1, 2.0),
            beta1=rng.uniform(-2, 2),
            beta2=rng.uniform(-2, 2),
            theta=rng.uniform(0, 1),
            sigma=1.0,
        )
        if params.markup_factor <= 0.05:
            continue
        draw = ExogenousDraw(*rng.uniform(0.5, 4.0, 4), 0.0, 0.0, *rng.normal(0, 1, 2))
        out.append((params, draw))
    return out


class TestStructuralParams:
    def test_defaults_match_simulation_design(self):
        p = TABLE1
        assert (p.alpha0, p.alpha1, p.alpha2) == (-1.0, 1.0, 1.0)
        assert (p.beta0, p.beta1, p.beta2) == (1.0, 1.0, 1.0)
        assert p.theta == 0.5

    @pytest.mark.parametrize("theta", [-0.1, 1.01, math.nan])
    def test_theta_outside_unit_interval(self, theta):
        with pytest.raises(DomainError):
            StructuralParams(theta=theta)

    def test_negative_sigma(self):
        with pytest.raises(DomainError, match="sigma"):
            StructuralParams(sigma=-1)

    def test_singular_slopes(self):
        with pytest.raises(SingularModelError):
            StructuralParams(alpha0=1.0, beta0=1.0, theta=0.1).check_admissible()


class TestSupplyIntercept:
    def test_table1(self):
        assert supply_intercept(TABLE1) == pytest.approx(math.log(2), abs=1e-15)

    def test_perfect_competition(self):
        assert supply_intercept(TABLE1.replace(theta=0.0)) == 0.0
        assert supply_intercept(StructuralParams(alpha0=-7.3, theta=0.0)) == 0.0

    def test_collusion_with_inelastic_slope(self):
        assert supply_intercept(StructuralParams(alpha0=-0.5, theta=1.0)) == pytest.approx(
            0.693147, abs=1e-6
        )

    def test_nonpositive_markup_factor(self):
        with pytest.raises(DomainError):
            supply_intercept(StructuralParams(alpha0=-2.0, theta=0.5))
        with pytest.raises(DomainError):
            supply_intercept(StructuralParams(alpha0=-3.0, theta=0.5))


class TestSolveEquilibrium:
    # frozen from oracles.bisection_log_q
    def test_unit_shifters(self):
        eq = solve_equilibrium(TABLE1, UNIT)
        assert eq.log_q == pytest.approx(-0.3465735902799749, abs=1e-12)
        assert eq.log_p == pytest.approx(0.3465735902799749, abs=1e-12)
        # markup identity in levels: (1 + theta alpha0) P = MC = Q
        assert 0.5 * math.exp(eq.log_p) == pytest.approx(math.exp(eq.log_q), rel=1e-12)
        assert math.exp(eq.log_q) == pytest.approx(1 / math.sqrt(2), rel=1e-12)

    def test_perfect_competition_unit_shifters(self):
        eq = solve_equilibrium(TABLE1.replace(theta=0.0), UNIT)
        assert eq.log_q == 0.0
        assert eq.log_p == 0.0

    def test_demand_shift(self):
        eq = solve_equilibrium(TABLE1, ExogenousDraw(math.e, 1.0, 1.0, 1.0))
        assert eq.log_q == pytest.approx(0.1534264097200233, abs=1e-12)
        assert eq.log_p == pytest.approx(1 - 0.1534264097200233, abs=1e-12)

    def test_singular(self):
        with pytest.raises(SingularModelError):
            solve_equilibrium(StructuralParams(alpha0=0.5, beta0=0.5, theta=0.5), UNIT)

    def test_domain_error_propagates(self):
        with pytest.raises(DomainError):
            solve_equilibrium(StructuralParams(alpha0=-2.0, theta=1.0), UNIT)

    def test_nonpositive_shifter_rejected(self):
        with pytest.raises(DomainError, match="x1s"):
            ExogenousDraw(1.0, 1.0, 0.0, 1.0)

    def test_structural_equations_hold(self):
        for params, draw in random_instances(1000, seed=1):
            eq = solve_equilibrium(params, draw)
            ed = log_demand_residual(params, eq.log_q, eq.log_p, math.log(draw.x1d), math.log(draw.x2d))
            es = log_supply_residual(params, eq.log_q, eq.log_p, math.log(draw.x1s), math.log(draw.x2s))
            assert abs(ed - draw.eps_d) <= 1e-10
            assert abs(es - draw.eps_s) <= 1e-10

    def test_markup_identity(self):
        for params, draw in random_instances(1000, seed=2):
            eq = solve_equilibrium(params, draw)
            lhs = params.markup_factor * math.exp(eq.log_p)
            mc = (
                math.exp(draw.eps_s)
                * math.exp(eq.log_q) ** params.beta0
                * draw.x1s**params.beta1
                * draw.x2s**params.beta2
            )
            assert lhs == pytest.approx(mc, rel=1e-9)

    def test_vectorized_matches_scalar(self):
        instances = random_instances(20, seed=3)
        params = instances[0][0]
        draws = [d for _, d in instances]
        stacked = ExogenousDraw(*(np.array([getattr(d, f) for d in draws]) for f in
                                  ("x1d", "x2d", "x1s", "x2s", "z1s", "z2s", "eps_d", "eps_s")))
        eq = solve_equilibrium(params, stacked)
        for i, d in enumerate(draws):
            assert eq.log_q[i] == solve_equilibrium(params, d).log_q

    def test_monotone_in_conduct(self):
        log_q = [
            solve_equilibrium(TABLE1.replace(theta=t), ExogenousDraw(1.7, 2.2, 1.3, 2.9)).log_q
            for t in (0.0, 0.25, 0.5, 0.75, 1.0 - 1e-9)
        ]
        assert all(a > b for a, b in zip(log_q, log_q[1:]))

    def test_monotone_in_conduct_table1_grid(self):
        params = StructuralParams(alpha0=-0.8)
        log_q = [
            solve_equilibrium(params.replace(theta=t), UNIT).log_q
            for t in (0.0, 0.25, 0.5, 0.75, 1.0)
        ]
        assert all(a > b for a, b in zip(log_q, log_q[1:]))


def test_closed_form_matches_bisection_oracle():
    for params, d in random_instances(100, seed=4):
        eq = solve_equilibrium(params, d)
        ref = bisection_log_q(params, d.x1d, d.x2d, d.x1s, d.x2s, d.eps_d, d.eps_s)
        assert abs(eq.log_q - ref) <= 1e-8


class TestSeparability:
    def test_counterexample_is_separable(self):
        v = check_separability(power_demand(TABLE1), 2.0, (1.5, 2.5))
        assert v.separable
        assert abs(v.derivative) <= v.tolerance
        assert v.ratio == pytest.approx(2.5 / 1.5, rel=1e-8)

    def test_rotation_demand_is_not_separable(self):
        v = check_separability(rotation_demand(a2=1.0, a3=1.0), 2.0, (1.5, 2.5))
        assert not v.separable
        assert v.derivative == pytest.approx(1.0, abs=1e-3)

    def test_rotation_witness_scales_with_coefficients(self):
        v = check_separability(rotation_demand(a2=3.0, a3=2.0), 2.0, (1.5, 2.5))
        assert v.derivative == pytest.approx(1.5, abs=1e-3)

    def test_additive_demand_is_separable(self):
        v = check_separability(additive_demand, 2.0, (1.5, 2.5))
        assert v.separable
        assert v.ratio == pytest.approx(1.0, abs=1e-9)

    def test_zero_partial(self):
        with pytest.raises(DegenerateError):
            check_separability(lambda q, x1, x2: q * x1, 2.0, (1.0, 1.0))

    def test_non_finite(self):
        with pytest.raises(NumericalError):
            check_separability(lambda q, x1, x2: math.inf * x1 + x2, 2.0, (1.0, 1.0))

    @pytest.mark.parametrize("q, xd", [(0.0, (1, 1)), (1.0, (0, 1)), (1.0, (1, -2))])
    def test_domain(self, q, xd):
        with pytest.raises(DomainError):
            check_separability(additive_demand, q, xd)

    @settings(max_examples=50, deadline=None)
    @given(
        c=st.floats(0.01, 100.0),
        x1=st.floats(0.2, 5.0),
        x2=st.floats(0.2, 5.0),
    )
    def test_verdict_invariant_to_common_rescaling(self, c, x1, x2):
        demand = power_demand(TABLE1)
        base = check_separability(demand, 2.0, (x1, x2))
        scaled = check_separability(demand, 2.0, (c * x1, c * x2))
        assert base.separable and scaled.separable


class TestLauException:
    def test_simulation_design_is_outside(self):
        assert lau_exception_check(-1.0, 0.5) is False

    def test_matching_exponents(self):
        assert lau_exception_check(-2.0, 0.5) is True
        assert lau_exception_check(-1.0, 1.0) is True

    def test_zero_conduct(self):
        with pytest.raises(DomainError):
            lau_exception_check(-1.0, 0.0)
