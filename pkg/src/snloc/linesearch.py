"""Scalar line searches used by the Riemannian solvers.

Two searches cooperate in the conjugate-gradient driver:

- Armijo backtracking seeded by the exact minimizer of the quartic
  restriction of the cost to the search ray (cheap and aggressive, useful
  far from a minimizer).
- A bracketing/secant/bisection search accepting steps by either the
  standard Wolfe conditions or their approximate variant, which replaces
  the sufficient-decrease test by a two-sided slope band plus a small
  tolerance on the value.  The approximate form stays decidable when the
  cost differences fall below floating-point resolution, which is exactly
  when plain backtracking stagnates.

A running cost-average recursion decides when to abandon Armijo for the
bracketing search permanently; a failed backtracking also forces the
switch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial import Polynomial

__all__ = [
    "ArmijoResult",
    "HzResult",
    "LineSearchParams",
    "SwitchState",
    "approx_wolfe_check",
    "armijo_backtrack",
    "hz_search",
    "initial_quartic_step",
    "switch_update",
    "wolfe_check",
]


@dataclass(frozen=True)
class LineSearchParams:
    """Constants of the bracketing line search.

    ``c1``/``c2`` are the decrease and curvature constants, ``eps`` scales
    the nonmonotonicity allowance ``eps * |f_ref|``, ``alpha_max`` caps the
    step, ``theta`` is the bisection weight used when a trial leaves the
    bracket, ``gamma_bracket`` is the minimum relative bracket shrink per
    round before a plain bisection is forced, and ``max_bracket_iters``
    bounds the secant/bisection rounds.
    """

    c1: float = 0.1
    c2: float = 0.1
    eps: float = 1e-14
    alpha_max: float = 200.0
    theta: float = 0.5
    gamma_bracket: float = 0.66
    max_bracket_iters: int = 50
    expansion: float = 5.0

    def __post_init__(self) -> None:
        if not (0.0 < self.c1 <= 0.5):
            raise ValueError("c1 must lie in (0, 0.5]")
        if not (0.0 < self.c2 <= 1.0):
            raise ValueError("c2 must lie in (0, 1]")
        if self.c1 > self.c2:
            raise ValueError("c1 must not exceed c2")
        if self.eps < 0.0 or self.alpha_max <= 0.0:
            raise ValueError("eps must be >= 0 and alpha_max > 0")
        if not (0.0 < self.theta < 1.0) or not (0.0 < self.gamma_bracket < 1.0):
            raise ValueError("theta and gamma_bracket must lie in (0, 1)")


def wolfe_check(
    phi0: float,
    dphi0: float,
    alpha: float,
    phi_a: float,
    dphi_a: float,
    params: LineSearchParams,
) -> bool:
    """Standard Wolfe acceptance at ``alpha``.

    Sufficient decrease is written in the slope form
    ``c1 * alpha * phi'(0) >= phi(alpha) - phi(0)``; curvature is
    ``phi'(alpha) >= c2 * phi'(0)``.
    """
    if dphi0 >= 0.0:
        raise ValueError("line search requires a descent direction at 0")
    decrease = params.c1 * alpha * dphi0 >= phi_a - phi0
    curvature = dphi_a >= params.c2 * dphi0
    return bool(decrease and curvature)


def approx_wolfe_check(
    dphi0: float,
    dphi_a: float,
    phi_a: float,
    phi0: float,
    eps_k: float,
    params: LineSearchParams,
) -> bool:
    """Approximate Wolfe acceptance: slope band plus a small value gate.

    Requires ``(2*c1 - 1) * phi'(0) >= phi'(alpha) >= c2 * phi'(0)`` and
    ``phi(alpha) <= phi(0) + eps_k``.
    """
    if dphi0 >= 0.0:
        raise ValueError("line search requires a descent direction at 0")
    band = (2.0 * params.c1 - 1.0) * dphi0 >= dphi_a >= params.c2 * dphi0
    gate = phi_a <= phi0 + eps_k
    return bool(band and gate)


@dataclass(frozen=True)
class HzResult:
    """Outcome of the bracketing search."""

    alpha: float
    value: float
    slope: float
    accepted: bool
    num_evals: int
    reason: str


class _NonFiniteEval(Exception):
    """Internal signal: the objective returned NaN or infinity."""

    def __init__(self, alpha: float) -> None:
        super().__init__(f"non-finite evaluation at alpha={alpha}")
        self.alpha = alpha


def hz_search(
    phi: Callable[[float], float],
    dphi: Callable[[float], float],
    params: LineSearchParams,
    f_ref: float,
    mode: str = "standard",
    alpha_init: float = 1.0,
    on_bracket: Optional[Callable] = None,
) -> HzResult:
    """Find a Wolfe-acceptable step by bracketing, secant and bisection.

    The search keeps a bracket ``[a, b]`` with ``phi(a) <= phi(0) + eps_k``,
    ``phi'(a) < 0`` and ``phi'(b) >= 0``, refines it by pairs of secant
    steps (falling back to bisection when a trial leaves the bracket or the
    bracket shrinks too slowly), and accepts the first evaluated point that
    passes the ``mode`` acceptance test ("standard" or "approx").  When no
    acceptable point emerges within the iteration budget — or no opposite
    slope exists below ``alpha_max`` — the best evaluated point is returned
    with ``accepted=False`` and a reason.

    ``on_bracket``, when given, is called with each certified bracket as a
    pair of ``(alpha, value, slope)`` triples; tests use it to audit the
    bracket conditions above.
    """
    if mode not in ("standard", "approx"):
        raise ValueError(f"unknown acceptance mode {mode!r}")
    eps_k = params.eps * abs(f_ref)

    phi0 = float(phi(0.0))
    dphi0 = float(dphi(0.0))
    if not math.isfinite(phi0) or not math.isfinite(dphi0):
        return HzResult(0.0, phi0, dphi0, False, 2, "non-finite at origin")
    if dphi0 >= 0.0:
        raise ValueError("line search requires a descent direction at 0")

    evals = [2]
    best = {"alpha": 0.0, "value": phi0, "slope": dphi0}
    found: list[HzResult] = []

    def accepted(alpha: float, value: float, slope: float) -> bool:
        if alpha <= 0.0:
            return False
        if mode == "standard":
            return wolfe_check(phi0, dphi0, alpha, value, slope, params)
        return approx_wolfe_check(dphi0, slope, value, phi0, eps_k, params)

    def evaluate(alpha: float) -> tuple[float, float]:
        value = float(phi(alpha))
        slope = float(dphi(alpha))
        evals[0] += 2
        if not math.isfinite(value) or not math.isfinite(slope):
            raise _NonFiniteEval(alpha)
        if value < best["value"] and alpha > 0.0:
            best.update(alpha=alpha, value=value, slope=slope)
        if not found and accepted(alpha, value, slope):
            found.append(HzResult(alpha, value, slope, True, evals[0], "accepted"))
        return value, slope

    def fallback(reason: str) -> HzResult:
        return HzResult(
            best["alpha"], best["value"], best["slope"], False, evals[0], reason
        )

    # Point records are (alpha, value, slope).
    origin = (0.0, phi0, dphi0)

    def ok_low(pt: tuple[float, float, float]) -> bool:
        return pt[1] <= phi0 + eps_k and pt[2] < 0.0

    def bisect_to_bracket(lo, hi):
        """Recover a valid bracket inside [lo, hi] when phi(hi) is too big."""
        for _ in range(params.max_bracket_iters):
            if found:
                return None
            mid_alpha = (1.0 - params.theta) * lo[0] + params.theta * hi[0]
            mid = (mid_alpha, *evaluate(mid_alpha))
            if found:
                return None
            if mid[2] >= 0.0:
                return lo, mid
            if mid[1] <= phi0 + eps_k:
                lo = mid
            else:
                hi = mid
        return None

    try:
        # Expansion: walk right until an opposite slope or a high value.
        low = origin
        c_alpha = min(max(alpha_init, 1e-12), params.alpha_max)
        bracket = None
        for _ in range(params.max_bracket_iters):
            cur = (c_alpha, *evaluate(c_alpha))
            if found:
                return found[0]
            if cur[2] >= 0.0:
                bracket = (low, cur)
                break
            if cur[1] > phi0 + eps_k:
                bracket = bisect_to_bracket(low, cur)
                if found:
                    return found[0]
                if bracket is None:
                    return fallback("bracket recovery exhausted")
                break
            low = cur
            if c_alpha >= params.alpha_max:
                return fallback("no opposite slope within alpha_max")
            c_alpha = min(c_alpha * params.expansion, params.alpha_max)
        if bracket is None:
            return fallback("expansion exhausted")
        if on_bracket is not None:
            on_bracket(*bracket)

        def secant(p1, p2) -> float:
            denom = p2[2] - p1[2]
            if denom == 0.0:
                return 0.5 * (p1[0] + p2[0])
            return (p1[0] * p2[2] - p2[0] * p1[2]) / denom

        def update(a, b, c_alpha: float):
            """Shrink [a, b] using a trial abscissa, preserving the invariant."""
            if not (a[0] < c_alpha < b[0]):
                return a, b
            c = (c_alpha, *evaluate(c_alpha))
            if found:
                return None
            if c[2] >= 0.0:
                return a, c
            if c[1] <= phi0 + eps_k:
                return c, b
            return bisect_to_bracket(a, c)

        a, b = bracket
        for _ in range(params.max_bracket_iters):
            if found:
                return found[0]
            width = b[0] - a[0]
            # Two nested secant steps.
            c_alpha = secant(a, b)
            res = update(a, b, c_alpha)
            if res is None:
                return found[0] if found else fallback("bracket recovery exhausted")
            A, B = res
            if A[0] == c_alpha or B[0] == c_alpha:
                if B[0] == c_alpha:
                    c2_alpha = secant(b, B)
                else:
                    c2_alpha = secant(a, A)
                res = update(A, B, c2_alpha)
                if res is None:
                    return found[0] if found else fallback("bracket recovery exhausted")
                A, B = res
            if B[0] - A[0] > params.gamma_bracket * width:
                res = update(A, B, 0.5 * (A[0] + B[0]))
                if res is None:
                    return found[0] if found else fallback("bracket recovery exhausted")
                A, B = res
            if B[0] - A[0] <= 0.0:
                return fallback("bracket collapsed without acceptance")
            if on_bracket is not None:
                on_bracket(A, B)
            a, b = A, B
        return fallback("iteration budget exhausted")
    except _NonFiniteEval:
        return HzResult(0.0, phi0, dphi0, False, evals[0], "non-finite evaluation")


def initial_quartic_step(coeffs: Sequence[float]) -> tuple[float, bool]:
    """Global minimizer over positive steps of a quartic ray restriction.

    ``coeffs`` are ascending-power polynomial coefficients.  The minimizer
    is found among positive real roots of the derivative; when none exists
    the guarded default step 1 is returned with ``exact=False``.
    """
    coef = np.asarray(coeffs, dtype=float)
    if coef.size == 0 or not np.any(coef):
        raise ValueError("all-zero polynomial has no minimizer")
    poly = Polynomial(coef)
    deriv_coef = np.trim_zeros(poly.deriv().coef, "b")
    if deriv_coef.size <= 1:
        # Constant or everywhere-flat slope: no positive critical point.
        return 1.0, False
    roots = Polynomial(deriv_coef).roots()
    real = roots[np.abs(roots.imag) <= 1e-10 * (1.0 + np.abs(roots.real))].real
    positive = real[real > 0.0]
    if positive.size == 0:
        return 1.0, False
    values = poly(positive)
    return float(positive[np.argmin(values)]), True


@dataclass(frozen=True)
class ArmijoResult:
    """Outcome of Armijo backtracking."""

    alpha: float
    value: float
    halvings: int
    success: bool


def armijo_backtrack(
    phi: Callable[[float], float],
    dphi0: float,
    alpha0: float,
    c1: float = 0.5,
    max_halvings: int = 10,
) -> ArmijoResult:
    """Backtrack from ``alpha0`` by halving until sufficient decrease.

    Accepts the smallest halving count ``t`` with
    ``phi(0) - phi(0.5**t * alpha0) >= -c1 * 0.5**t * alpha0 * phi'(0)``;
    reports failure once ``t`` reaches ``max_halvings``.
    """
    if dphi0 >= 0.0:
        raise ValueError("line search requires a descent direction at 0")
    if alpha0 <= 0.0:
        raise ValueError("initial step must be positive")
    phi0 = float(phi(0.0))
    alpha = float(alpha0)
    for t in range(max_halvings):
        value = float(phi(alpha))
        if math.isfinite(value) and phi0 - value >= -c1 * alpha * dphi0:
            return ArmijoResult(alpha=alpha, value=value, halvings=t, success=True)
        alpha *= 0.5
    return ArmijoResult(alpha=alpha, value=phi0, halvings=max_halvings, success=False)


@dataclass(frozen=True)
class SwitchState:
    """Running state of the Armijo-to-bracketing switch rule.

    ``Q`` and ``C`` follow the recursion ``Q_k = 1 + Q_{k-1} * delta`` and
    ``C_k = C_{k-1} + (|f_k| - C_{k-1}) / Q_k`` from ``Q = C = 0``; the flag
    flips (permanently) once the cost progress falls below ``omega * C_k``
    or a backtracking failure is reported.
    """

    C: float = 0.0
    Q: float = 0.0
    use_hz: bool = False
    omega: float = 0.005
    delta: float = 0.7


def switch_update(
    state: SwitchState,
    f_prev: float,
    f_new: float,
    armijo_failed: bool = False,
) -> SwitchState:
    """Advance the cost-average recursion and maybe flip the flag."""
    Q_new = 1.0 + state.Q * state.delta
    C_new = state.C + (abs(f_prev) - state.C) / Q_new
    flip = state.use_hz or armijo_failed or abs(f_new - f_prev) <= state.omega * C_new
    return replace(state, C=C_new, Q=Q_new, use_hz=bool(flip))
