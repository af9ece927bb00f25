"""Riemannian first-order solvers for the completion objective.

Three drivers share one descent loop over the quotient geometry:

- ``rcg``: nonlinear conjugate gradient with a two-phase line search —
  Armijo backtracking seeded by the exact quartic ray minimizer while cost
  progress is healthy, switching permanently to the bracketing
  approximate-Wolfe search once a running cost average says progress has
  stalled (or a backtracking fails outright).
- ``gd``: the same loop restricted to steepest descent, with stricter
  stagnation stops; used for the phase-transition studies.
- ``rank_reduction``: spectral warm start two ranks above the target,
  scaled-metric descent at the lifted rank, shrinkage at the largest
  relative singular-value gap, then a flat-metric finish at the target
  rank.

All drivers accept any objective exposing ``cost(Y)``, ``egrad(Y)`` and
``ray_polynomial(Y, xi)``; the robust splitting solver reuses them on its
augmented objective.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .edm import centering_matrix
from .linesearch import (
    LineSearchParams,
    SwitchState,
    armijo_backtrack,
    hz_search,
    initial_quartic_step,
    switch_update,
)
from .manifold import (
    inner,
    norm,
    project_horizontal,
    retract,
    riemannian_gradient,
)
from .sampling import SampleMask

__all__ = [
    "InitDiagnostics",
    "SolverConfig",
    "TrialReport",
    "beta_hz_plus",
    "gd",
    "rank_reduction",
    "rcg",
    "svd_mds_init",
]


@dataclass(frozen=True)
class SolverConfig:
    """Knobs of the descent drivers.

    ``grad_tol``/``step_tol`` are the gradient-norm and step-size stops;
    ``n1``/``n2`` cap the lifted-rank and finishing phases of
    ``rank_reduction``; ``start_in_hz`` skips the Armijo phase entirely
    (used by the splitting solver's inner updates).  ``f_stall_tol`` and
    ``max_ascent_events`` only affect ``gd``.
    """

    imax: int = 600
    grad_tol: float = 1e-6
    step_tol: float = 1e-10
    metric: str = "flat"
    ls: LineSearchParams = field(default_factory=LineSearchParams)
    armijo_c1: float = 0.5
    armijo_max_halvings: int = 10
    switch_omega: float = 0.005
    switch_delta: float = 0.7
    beta_eta: float = 0.01
    start_in_hz: bool = False
    n1: int = 300
    n2: int = 300
    f_stall_tol: float = 1e-10
    max_ascent_events: int = 10

    @classmethod
    def noiseless(cls, **overrides) -> "SolverConfig":
        """Preset for exact data: drive the gradient all the way down."""
        overrides.setdefault("grad_tol", 1e-15)
        return cls(**overrides)


@dataclass(frozen=True)
class TrialReport:
    """Outcome of one solver invocation (error metrics filled by callers).

    ``status`` is ``"ok"`` for tolerance stops and iteration-cap exits, and
    a failure tag (``"linesearch_failure"``, ``"ascent_abort"``,
    ``"divergent"``) otherwise.  ``stop`` names the rule that fired.
    """

    solver: str
    y_hat: np.ndarray
    cost_trace: np.ndarray
    iters: int
    final_grad_norm: float
    wall_ms: float
    status: str = "ok"
    stop: str = "imax"
    re: Optional[float] = None
    msle: Optional[float] = None
    hessian_psd: Optional[bool] = None
    seed: Optional[int] = None
    diagnostics: dict = field(default_factory=dict)


def beta_hz_plus(
    Y_new: np.ndarray,
    grad_new: np.ndarray,
    grad_old_transported: np.ndarray,
    dir_transported: np.ndarray,
    metric: str,
    eta_bar: float = 0.01,
) -> float:
    """Truncated conjugate-direction coefficient.

    With ``y`` the transported gradient difference and ``dir`` the
    transported previous direction, the raw coefficient is
    ``<y - 2 dir <y,y>/<dir,y>, grad_new> / <dir,y>``, floored at
    ``-1/(||dir|| min(eta_bar, ||grad_old||))``.  All inner products and
    norms use the configured metric at the new point.  Degenerate
    denominators yield 0, i.e. a steepest-descent restart.
    """
    y = grad_new - grad_old_transported
    dy = inner(Y_new, dir_transported, y, metric)
    if dy == 0.0 or not math.isfinite(dy):
        return 0.0
    yy = inner(Y_new, y, y, metric)
    w = y - (2.0 * yy / dy) * dir_transported
    beta = inner(Y_new, w, grad_new, metric) / dy
    dir_norm = norm(Y_new, dir_transported, metric)
    grad_old_norm = norm(Y_new, grad_old_transported, metric)
    floor_denom = dir_norm * min(eta_bar, grad_old_norm)
    if floor_denom == 0.0 or not math.isfinite(beta):
        return 0.0
    eta_k = -1.0 / floor_denom
    return float(max(beta, eta_k))


def _ensure_full_rank(Y: np.ndarray, diagnostics: dict) -> np.ndarray:
    """Perturb a rank-deficient start slightly so the scaled metric exists."""
    s = np.linalg.svd(Y, compute_uv=False)
    if s.size and s[0] > 0.0 and s[-1] / s[0] >= 1e-10:
        return Y
    rng = np.random.default_rng(0)
    scale = np.linalg.norm(Y) / np.sqrt(Y.size) if np.any(Y) else 1.0
    diagnostics["rank_deficient_start"] = diagnostics.get("rank_deficient_start", 0) + 1
    return Y + 1e-10 * scale * rng.standard_normal(Y.shape)


def _descent_loop(problem, Y0: np.ndarray, cfg: SolverConfig, solver: str) -> TrialReport:
    """Shared CG/steepest-descent driver; ``solver`` is "rcg" or "gd"."""
    steepest = solver == "gd"
    t0 = time.perf_counter()
    metric = cfg.metric
    diagnostics: dict = {
        "armijo_failures": 0,
        "hz_fallbacks": 0,
        "rank_loss_events": 0,
        "quartic_fallbacks": 0,
        "restarts": 0,
    }
    Y = np.asarray(Y0, dtype=float)
    if metric == "scaled":
        Y = _ensure_full_rank(Y, diagnostics)

    f = problem.cost(Y)
    trace = [f]
    egrad = problem.egrad(Y)
    p = riemannian_gradient(Y, egrad, metric).dir
    xi = -p
    switch = SwitchState(
        omega=cfg.switch_omega, delta=cfg.switch_delta, use_hz=cfg.start_in_hz
    )
    status = "ok"
    stop = "imax"
    iters = 0
    ascent_events = 0

    for k in range(cfg.imax):
        gnorm = float(np.linalg.norm(p))
        if gnorm <= cfg.grad_tol:
            stop = "grad_tol"
            break
        slope0 = float(np.sum(egrad * xi))
        if slope0 >= 0.0:
            diagnostics["restarts"] += 1
            xi = -p
            slope0 = float(np.sum(egrad * xi))
            if slope0 >= 0.0:
                status = "linesearch_failure"
                stop = "no_descent"
                break

        poly = problem.ray_polynomial(Y, xi)
        # The searches consume the polynomial's slope, which can disagree
        # with the trace pairing in the last ulp at near-critical points;
        # make it authoritative so their descent precondition always holds.
        slope0 = float(poly.deriv()(0.0))
        if slope0 >= 0.0:
            diagnostics["restarts"] += 1
            xi = -p
            poly = problem.ray_polynomial(Y, xi)
            slope0 = float(poly.deriv()(0.0))
            if slope0 >= 0.0:
                status = "linesearch_failure"
                stop = "no_descent"
                break
        dpoly = poly.deriv()
        alpha0, exact_init = initial_quartic_step(poly.coef)
        if not exact_init:
            diagnostics["quartic_fallbacks"] += 1

        armijo_failed_now = False
        alpha = None
        f_new = None
        if not switch.use_hz:
            ares = armijo_backtrack(
                poly,
                slope0,
                alpha0,
                c1=cfg.armijo_c1,
                max_halvings=cfg.armijo_max_halvings,
            )
            if ares.success:
                alpha, f_new = ares.alpha, ares.value
            else:
                armijo_failed_now = True
                diagnostics["armijo_failures"] += 1
        if alpha is None:
            hres = hz_search(
                poly, dpoly, cfg.ls, f_ref=f, mode="approx", alpha_init=alpha0
            )
            if not hres.accepted:
                diagnostics["hz_fallbacks"] += 1
            usable = (
                hres.alpha > 0.0
                and math.isfinite(hres.value)
                and hres.value <= f + cfg.ls.eps * abs(f)
            )
            if not usable:
                status = "linesearch_failure"
                stop = "linesearch_failure"
                break
            alpha, f_new = hres.alpha, hres.value

        Y_new, full_rank = retract(Y, xi, alpha)
        if not full_rank:
            diagnostics["rank_loss_events"] += 1
        step_size = alpha * float(np.linalg.norm(xi))
        iters = k + 1
        trace.append(f_new)

        if steepest and f_new > f:
            ascent_events += 1
            if ascent_events >= cfg.max_ascent_events:
                status = "ascent_abort"
                stop = "ascent_abort"
                Y, f = Y_new, f_new
                egrad = problem.egrad(Y)
                p = riemannian_gradient(Y, egrad, metric).dir
                break

        egrad_new = problem.egrad(Y_new)
        p_new = riemannian_gradient(Y_new, egrad_new, metric).dir
        if steepest:
            xi_new = -p_new
        else:
            dir_t = project_horizontal(Y_new, xi, metric).dir
            grad_old_t = project_horizontal(Y_new, p, metric).dir
            beta = beta_hz_plus(
                Y_new, p_new, grad_old_t, dir_t, metric, eta_bar=cfg.beta_eta
            )
            xi_new = -p_new + beta * dir_t

        switch = switch_update(switch, f_prev=f, f_new=f_new, armijo_failed=armijo_failed_now)
        stalled = steepest and abs(f_new - f) <= cfg.f_stall_tol
        Y, f, egrad, p, xi = Y_new, f_new, egrad_new, p_new, xi_new
        if stalled:
            stop = "f_stall"
            break
        if step_size <= cfg.step_tol:
            stop = "step_tol"
            break

    wall_ms = (time.perf_counter() - t0) * 1e3
    diagnostics["switched_to_hz"] = bool(switch.use_hz)
    diagnostics["ascent_events"] = ascent_events
    return TrialReport(
        solver=solver,
        y_hat=Y,
        cost_trace=np.asarray(trace),
        iters=iters,
        final_grad_norm=float(np.linalg.norm(p)),
        wall_ms=wall_ms,
        status=status,
        stop=stop,
        diagnostics=diagnostics,
    )


def rcg(problem, Y0: np.ndarray, cfg: SolverConfig) -> TrialReport:
    """Conjugate-gradient descent from ``Y0`` under ``cfg.metric``."""
    return _descent_loop(problem, Y0, cfg, solver="rcg")


def gd(problem, Y0: np.ndarray, cfg: SolverConfig) -> TrialReport:
    """Steepest descent with stagnation stops (phase-transition studies)."""
    return _descent_loop(problem, Y0, cfg, solver="gd")


@dataclass(frozen=True)
class InitDiagnostics:
    """Side information from the spectral initializer."""

    padded: bool
    eigenvalues: np.ndarray
    density: float


def svd_mds_init(
    D_obs: np.ndarray,
    mask: SampleMask,
    k: int,
    trunc_rank: Optional[int] = None,
) -> tuple[np.ndarray, InitDiagnostics]:
    """Spectral embedding of density-corrected observed squared distances.

    The masked observations are rescaled by the inverse fill ratio
    ``2m / n^2`` (an unbiased completion of the squared-distance matrix
    under uniform sampling), truncated to their ``trunc_rank`` dominant
    eigenpairs (default ``k + 2``; the matrix being completed has rank at
    most ``d + 2`` for a rank-``d`` truth), double-centered, and embedded
    through the top-``k`` eigenpairs.  Eigenvalues at or below
    ``1e-12`` of the largest are zeroed, so spurious tail dimensions come
    out as exact zero columns.  When fewer than ``k`` nonnegative
    eigenvalues exist the missing columns are zero-padded and flagged.
    """
    n = mask.n
    D_obs = np.asarray(D_obs, dtype=float)
    if mask.num_pairs == 0:
        raise ValueError("cannot initialize from an empty mask")
    density = mask.fill_ratio
    scaled = mask.project(D_obs) / density

    r_t = min(trunc_rank if trunc_rank is not None else k + 2, n)
    w, V = np.linalg.eigh(scaled)
    order = np.argsort(np.abs(w))[::-1][:r_t]
    truncated = (V[:, order] * w[order]) @ V[:, order].T

    J = centering_matrix(n)
    G = -0.5 * J @ truncated @ J
    G = 0.5 * (G + G.T)
    w2, V2 = np.linalg.eigh(G)
    w2 = w2[::-1]
    V2 = V2[:, ::-1]
    lam = w2[:k].copy()
    lam_max = max(float(w2[0]), 0.0)
    tol = 1e-12 * lam_max
    padded = bool(np.any(lam < -tol))
    lam[lam <= tol] = 0.0
    Y0 = J @ (V2[:, :k] * np.sqrt(lam))
    return Y0, InitDiagnostics(padded=padded, eigenvalues=w2[:k], density=density)


def rank_reduction(
    problem,
    d: int,
    cfg: SolverConfig,
    Y0: Optional[np.ndarray] = None,
) -> TrialReport:
    """Lifted-rank warm start, gap-guided shrinkage, flat-metric finish.

    Starts at rank ``min(d + 2, n - 1)`` (a centered configuration of n
    points never needs more), descends under the scaled metric for at most
    ``cfg.n1`` iterations per rank, shrinks to the rank maximizing the
    relative singular-value gap (never below ``d``, always strictly below
    the current rank), and finishes at rank ``d`` under the flat metric for
    at most ``cfg.n2`` iterations.
    """
    t0 = time.perf_counter()
    n = problem.n
    if d < 1:
        raise ValueError("target dimension must be >= 1")
    k0 = min(d + 2, n - 1)
    if Y0 is None:
        Y, init_diag = svd_mds_init(problem.D_obs, problem.mask, k=k0, trunc_rank=k0)
        init_padded = init_diag.padded
    else:
        Y = np.asarray(Y0, dtype=float)
        if Y.shape != (n, k0):
            raise ValueError(f"override start must have shape {(n, k0)}")
        init_padded = False

    traces = []
    total_iters = 0
    rank_trace = [Y.shape[1]]
    diagnostics: dict = {"init_padded": init_padded}
    k = Y.shape[1]
    while k > d:
        rep = rcg(problem, Y, replace(cfg, metric="scaled", imax=cfg.n1))
        traces.append(rep.cost_trace)
        total_iters += rep.iters
        U, s, _ = np.linalg.svd(rep.y_hat, full_matrices=False)
        with np.errstate(invalid="ignore", divide="ignore"):
            gaps = np.where(s[:-1] > 0.0, (s[:-1] - s[1:]) / s[:-1], 0.0)
        r = int(np.argmax(gaps)) + 1
        r = max(r, d)
        Y = U[:, :r] * s[:r]
        k = r
        rank_trace.append(k)

    final = rcg(problem, Y, replace(cfg, metric="flat", imax=cfg.n2))
    traces.append(final.cost_trace)
    total_iters += final.iters
    diagnostics.update(final.diagnostics)
    diagnostics["rank_trace"] = rank_trace
    wall_ms = (time.perf_counter() - t0) * 1e3
    return TrialReport(
        solver="rank_reduction",
        y_hat=final.y_hat,
        cost_trace=np.concatenate(traces),
        iters=total_iters,
        final_grad_norm=final.final_grad_norm,
        wall_ms=wall_ms,
        status=final.status,
        stop=final.stop,
        diagnostics=diagnostics,
    )
