"""Tests for the scalar line searches and the Armijo-to-bracketing switch."""

import numpy as np
import pytest
from numpy.polynomial import Polynomial

from snloc.linesearch import (
    ArmijoResult,
    LineSearchParams,
    SwitchState,
    approx_wolfe_check,
    armijo_backtrack,
    hz_search,
    initial_quartic_step,
    switch_update,
    wolfe_check,
)

PARAMS = LineSearchParams()


def test_params_validation():
    with pytest.raises(ValueError):
        LineSearchParams(c1=0.0)
    with pytest.raises(ValueError):
        LineSearchParams(c1=0.6)
    with pytest.raises(ValueError):
        LineSearchParams(c2=1.5)
    with pytest.raises(ValueError):
        LineSearchParams(c1=0.3, c2=0.2)
    with pytest.raises(ValueError):
        LineSearchParams(eps=-1e-16)
    with pytest.raises(ValueError):
        LineSearchParams(theta=1.0)
    LineSearchParams(c1=0.5, c2=0.5)  # boundary values are legal


def test_wolfe_predicate_truth_table():
    # phi0 = 0, dphi0 = -1, c1 = c2 = 0.1, alpha = 1:
    # decrease needs phi_a <= -0.1, curvature needs dphi_a >= -0.1.
    ok = dict(phi0=0.0, dphi0=-1.0, alpha=1.0, params=PARAMS)
    assert wolfe_check(phi_a=-0.15, dphi_a=-0.05, **ok)
    assert not wolfe_check(phi_a=-0.05, dphi_a=-0.05, **ok)  # decrease fails
    assert not wolfe_check(phi_a=-0.15, dphi_a=-0.50, **ok)  # curvature fails
    assert wolfe_check(phi_a=-0.1, dphi_a=-0.1, **ok)  # both boundaries
    with pytest.raises(ValueError):
        wolfe_check(1.0, 0.0, 1.0, 0.5, 0.0, PARAMS)


def test_approx_wolfe_predicate_truth_table():
    # dphi0 = -1, c1 = c2 = 0.1: the slope band is 0.8 >= dphi_a >= -0.1.
    assert approx_wolfe_check(-1.0, -0.05, 1.005, 1.0, eps_k=0.01, params=PARAMS)
    assert not approx_wolfe_check(-1.0, -0.2, 1.0, 1.0, eps_k=0.01, params=PARAMS)
    assert not approx_wolfe_check(-1.0, 0.9, 1.0, 1.0, eps_k=0.01, params=PARAMS)
    assert not approx_wolfe_check(-1.0, -0.05, 1.02, 1.0, eps_k=0.01, params=PARAMS)
    assert approx_wolfe_check(-1.0, 0.8, 0.5, 1.0, eps_k=0.0, params=PARAMS)
    with pytest.raises(ValueError):
        approx_wolfe_check(1.0, 0.0, 1.0, 1.0, 0.0, PARAMS)


def test_initial_step_single_positive_minimum():
    # f(a) = a^4 - 4a has f'(a) = 4a^3 - 4 with unique real root a = 1.
    alpha, exact = initial_quartic_step([0.0, -4.0, 0.0, 0.0, 1.0])
    assert exact
    assert alpha == pytest.approx(1.0, rel=1e-12)


def test_initial_step_picks_global_among_critical_points():
    # f'(a) = 4 (a - 0.5)(a - 1)(a - 2): minima at 0.5 and 2; f(2) < f(0.5).
    coeffs = [0.0, -4.0, 7.0, -14.0 / 3.0, 1.0]
    alpha, exact = initial_quartic_step(coeffs)
    assert exact
    assert alpha == pytest.approx(2.0, rel=1e-10)


def test_initial_step_quadratic():
    alpha, exact = initial_quartic_step([1.69, -2.6, 1.0])
    assert exact
    assert alpha == pytest.approx(1.3, rel=1e-12)


def test_initial_step_guarded_fallbacks():
    alpha, exact = initial_quartic_step([1.0, 1.0, 1.0])  # minimum at a < 0
    assert (alpha, exact) == (1.0, False)
    alpha, exact = initial_quartic_step([5.0, -1.0])  # pure linear descent
    assert (alpha, exact) == (1.0, False)
    with pytest.raises(ValueError):
        initial_quartic_step([0.0, 0.0])


def test_armijo_halving_count_on_parabola():
    poly = Polynomial([1.0, -2.0, 1.0])  # (a - 1)^2
    res = armijo_backtrack(poly, dphi0=-2.0, alpha0=4.0, c1=0.5)
    assert res.success
    assert res.halvings == 2
    assert res.alpha == pytest.approx(1.0)
    assert res.value == pytest.approx(0.0)


def test_armijo_reports_failure_on_flat_function():
    res = armijo_backtrack(lambda a: 1.0, dphi0=-1.0, alpha0=1.0, max_halvings=6)
    assert not res.success
    assert res.halvings == 6
    with pytest.raises(ValueError):
        armijo_backtrack(lambda a: a, dphi0=1.0, alpha0=1.0)
    with pytest.raises(ValueError):
        armijo_backtrack(lambda a: a, dphi0=-1.0, alpha0=0.0)


def test_hz_finds_parabola_minimum_both_modes():
    poly = Polynomial([1.69, -2.6, 1.0])  # (a - 1.3)^2
    for mode in ("standard", "approx"):
        res = hz_search(poly, poly.deriv(), PARAMS, f_ref=1.69, mode=mode)
        assert res.accepted
        assert res.alpha == pytest.approx(1.3, abs=1e-10)
        assert res.value <= 1e-18
        assert res.num_evals % 2 == 0 and res.num_evals >= 6


def test_hz_linear_descent_reports_no_opposite_slope():
    res = hz_search(lambda a: -a, lambda a: -1.0, PARAMS, f_ref=1.0)
    assert not res.accepted
    assert res.reason == "no opposite slope within alpha_max"
    assert res.alpha == PARAMS.alpha_max


def test_hz_handles_non_finite_evaluations():
    def phi(a):
        return float("nan") if a > 0 else 0.0

    res = hz_search(phi, lambda a: -1.0, PARAMS, f_ref=1.0)
    assert not res.accepted
    assert res.reason == "non-finite evaluation"
    assert res.alpha == 0.0


def test_hz_rejects_bad_inputs():
    poly = Polynomial([0.0, 1.0])  # ascending at 0
    with pytest.raises(ValueError):
        hz_search(poly, poly.deriv(), PARAMS, f_ref=1.0)
    good = Polynomial([0.0, -1.0, 1.0])
    with pytest.raises(ValueError):
        hz_search(good, good.deriv(), PARAMS, f_ref=1.0, mode="exact")


def random_descent_quartic(rng):
    """Random bounded-below quartic with a strict descent direction at 0."""
    c4 = rng.uniform(0.1, 2.0)
    c3 = rng.uniform(-2.0, 2.0)
    c2 = rng.uniform(-2.0, 2.0)
    c1 = -rng.uniform(0.1, 3.0)
    c0 = rng.uniform(-1.0, 1.0)
    return Polynomial([c0, c1, c2, c3, c4])


def run_audited_search(poly, params, mode, alpha_init):
    """Run hz_search while checking every certified bracket's conditions."""
    phi0 = poly(0.0)
    eps_k = params.eps * abs(phi0)
    brackets = []

    def audit(lo, hi):
        assert 0.0 <= lo[0] < hi[0]
        assert lo[1] <= phi0 + eps_k
        assert lo[2] < 0.0
        assert hi[2] >= 0.0
        brackets.append((lo, hi))

    res = hz_search(
        poly,
        poly.deriv(),
        params,
        f_ref=phi0,
        mode=mode,
        alpha_init=alpha_init,
        on_bracket=audit,
    )
    return res, brackets


def test_hz_randomized_predicates_and_brackets():
    rng = np.random.default_rng(2024)
    params = PARAMS
    accepted = 0
    for trial in range(200):
        poly = random_descent_quartic(rng)
        mode = "standard" if trial % 2 == 0 else "approx"
        alpha0, _ = initial_quartic_step(poly.coef)
        res, brackets = run_audited_search(poly, params, mode, alpha0)
        phi0, dphi0 = poly(0.0), poly.deriv()(0.0)
        if res.accepted:
            accepted += 1
            assert res.value == poly(res.alpha)
            assert res.slope == poly.deriv()(res.alpha)
            if mode == "standard":
                assert wolfe_check(
                    phi0, dphi0, res.alpha, res.value, res.slope, params
                )
            else:
                assert approx_wolfe_check(
                    dphi0,
                    res.slope,
                    res.value,
                    phi0,
                    params.eps * abs(phi0),
                    params,
                )
        for (lo, _), (lo2, hi2) in zip(brackets, brackets[1:]):
            assert hi2[0] - lo2[0] <= brackets[0][1][0] - brackets[0][0][0] + 1e-12
    assert accepted >= 190  # smooth bounded-below quartics almost always accept


def test_switch_recursion_hand_computed():
    state = SwitchState()
    state = switch_update(state, f_prev=10.0, f_new=9.9)
    q1 = 1.0
    c1 = 10.0
    assert state.Q == pytest.approx(q1)
    assert state.C == pytest.approx(c1)
    assert not state.use_hz  # |Δf| = 0.1 > 0.005 * 10

    state = switch_update(state, f_prev=9.9, f_new=9.85)
    q2 = 1.0 + q1 * 0.7
    c2 = c1 + (9.9 - c1) / q2
    assert state.Q == pytest.approx(q2)
    assert state.C == pytest.approx(c2)
    assert not state.use_hz  # |Δf| = 0.05 > 0.005 * 9.941...

    state = switch_update(state, f_prev=9.85, f_new=9.849)
    q3 = 1.0 + q2 * 0.7
    c3 = c2 + (9.85 - c2) / q3
    assert state.Q == pytest.approx(q3)
    assert state.C == pytest.approx(c3)
    assert state.use_hz  # |Δf| = 0.001 <= 0.005 * C_3


def test_switch_is_permanent_and_failure_forced():
    state = SwitchState(use_hz=True)
    state = switch_update(state, f_prev=100.0, f_new=1.0)  # huge progress
    assert state.use_hz

    fresh = switch_update(SwitchState(), f_prev=10.0, f_new=5.0, armijo_failed=True)
    assert fresh.use_hz
