"""Robust completion by manifold ADMM with sparse-outlier splitting.

The robust formulation keeps a full squared-distance variable ``Z`` tied to
the factor variable through an augmented Lagrangian: observed entries of
``Z`` may deviate from the data only through a soft-thresholded (sparse)
correction, unobserved entries follow the factor model freely, and a small
ridge on the unobserved squared distances keeps the completion bounded.
One outer iteration updates ``Z`` in closed form, takes two Riemannian CG
steps on the factor under the flat metric (bracketing line search mode from
the start), then updates the scaled dual variable; the penalty follows a
geometric continuation schedule with the dual rescaled to keep ``rho * U``
continuous.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from numpy.polynomial import Polynomial

from .edm import g_adjoint, gram_to_edm
from .sampling import SampleMask
from .solvers import SolverConfig, TrialReport, rcg
from .sstress import SstressProblem

__all__ = ["AdmmConfig", "madmm", "soft_threshold"]


@dataclass(frozen=True)
class AdmmConfig:
    """Penalty, continuation and stopping knobs of the splitting solver."""

    rho0: float = 1e-3
    lam: float = 1e-6
    tau: float = 1.05
    rho_max: float = 100.0
    t_f: int = 2
    eps_tol: float = 0.02
    n_outer: int = 600


def soft_threshold(x: np.ndarray, threshold: float) -> np.ndarray:
    """Elementwise shrink-toward-zero by ``threshold``."""
    return np.sign(x) * np.maximum(np.abs(x) - threshold, 0.0)


@dataclass(frozen=True)
class _AugmentedObjective:
    """Y-subproblem objective: ridge off the mask plus penalty coupling.

    cost(Y) = lam/2 * ||offmask ⊙ g(Y Y^T)||_F^2
            + rho/2 * ||g(Y Y^T) - target||_F^2
    with ``target = Z - U``.  Shares the cost/egrad/ray_polynomial driver
    interface with the plain completion objective.
    """

    offmask: np.ndarray = field(repr=False)
    target: np.ndarray = field(repr=False)
    lam: float = 1e-6
    rho: float = 1e-3

    def cost(self, Y: np.ndarray) -> float:
        Dc = gram_to_edm(Y @ Y.T)
        E = Dc - self.target
        return 0.5 * self.lam * float(np.sum(self.offmask * Dc * Dc)) + 0.5 * self.rho * float(np.sum(E * E))

    def egrad(self, Y: np.ndarray) -> np.ndarray:
        Dc = gram_to_edm(Y @ Y.T)
        S = self.lam * (self.offmask * Dc) + self.rho * (Dc - self.target)
        return 2.0 * g_adjoint(S) @ Y

    def ray_polynomial(self, Y: np.ndarray, xi: np.ndarray) -> Polynomial:
        A = gram_to_edm(Y @ Y.T)
        B = gram_to_edm(Y @ xi.T + xi @ Y.T)
        C = gram_to_edm(xi @ xi.T)
        E = A - self.target
        lam, rho, off = self.lam, self.rho, self.offmask

        def ip_off(X: np.ndarray, Z: np.ndarray) -> float:
            return float(np.sum(off * X * Z))

        def ip_full(X: np.ndarray, Z: np.ndarray) -> float:
            return float(np.sum(X * Z))

        c0 = 0.5 * (lam * ip_off(A, A) + rho * ip_full(E, E))
        c1 = lam * ip_off(A, B) + rho * ip_full(E, B)
        c2 = (
            0.5 * (lam * ip_off(B, B) + rho * ip_full(B, B))
            + lam * ip_off(A, C)
            + rho * ip_full(E, C)
        )
        c3 = lam * ip_off(B, C) + rho * ip_full(B, C)
        c4 = 0.5 * (lam * ip_off(C, C) + rho * ip_full(C, C))
        return Polynomial([c0, c1, c2, c3, c4])


def madmm(
    problem: SstressProblem,
    Y0: np.ndarray,
    cfg: AdmmConfig,
    scfg: Optional[SolverConfig] = None,
) -> TrialReport:
    """Run the outlier-robust splitting solver from ``Y0``.

    Stops when both scaled residuals clear ``eps_tol`` — the coupling
    residual against ``max(||Z||, ||g(Y Y^T)||)`` and the dual movement
    against ``||rho * U||`` — or aborts with a ``"divergent"`` tag when the
    coupling residual has grown tenfold over 50 outer steps.
    """
    if scfg is None:
        scfg = SolverConfig()
    t0 = time.perf_counter()
    mask: SampleMask = problem.mask
    ind = mask.indicator()
    offmask = (~ind).astype(float)
    np.fill_diagonal(offmask, 0.0)
    D_obs = problem.D_obs

    Y = np.asarray(Y0, dtype=float)
    Dc = gram_to_edm(Y @ Y.T)
    rho = cfg.rho0
    U = np.where(ind, D_obs - Dc, 0.0) / rho
    Z = np.where(ind, D_obs, Dc)

    # The coordinate update is an inexact prox step: its budget (2 iterations)
    # is the stopping rule, so the outer problem's tolerances must not apply —
    # the augmented objective's gradient scale shrinks with rho.
    inner_cfg = replace(
        scfg, imax=2, metric="flat", start_in_hz=True, grad_tol=0.0, step_tol=0.0
    )
    trace = [problem.cost(Y)]
    r_history: list[float] = []
    status = "ok"
    stop = "n_outer"
    final_grad_norm = float("nan")
    iters = 0

    for k in range(cfg.n_outer):
        M = Dc + U
        Z = np.where(ind, D_obs + soft_threshold(M - D_obs, 1.0 / rho), M)
        objective = _AugmentedObjective(
            offmask=offmask, target=Z - U, lam=cfg.lam, rho=rho
        )
        rep = rcg(objective, Y, inner_cfg)
        Y_new = rep.y_hat
        final_grad_norm = rep.final_grad_norm
        Dc_new = gram_to_edm(Y_new @ Y_new.T)
        U = U + Dc_new - Z

        r_norm = float(np.linalg.norm(Dc_new - Z))
        d_norm = rho * float(np.linalg.norm(Dc - Dc_new))
        r_history.append(r_norm)
        iters = k + 1
        trace.append(problem.cost(Y_new))
        Y, Dc = Y_new, Dc_new

        r_threshold = cfg.eps_tol * max(
            float(np.linalg.norm(Z)), float(np.linalg.norm(Dc_new))
        )
        d_threshold = cfg.eps_tol * rho * float(np.linalg.norm(U))
        primal_ok = r_norm <= r_threshold
        dual_ok = d_norm <= d_threshold
        if primal_ok and dual_ok:
            stop = "residuals"
            break
        if k >= 50 and r_norm > 10.0 * r_history[k - 50]:
            status = "divergent"
            stop = "divergent"
            break
        if k % cfg.t_f == 0 and rho < cfg.rho_max:
            rho = min(rho * cfg.tau, cfg.rho_max)
            U = U / cfg.tau

    wall_ms = (time.perf_counter() - t0) * 1e3
    diagnostics = {"rho_final": rho, "outer_iters": iters}
    if iters:
        diagnostics.update(
            r_norm=r_norm,
            d_norm=d_norm,
            r_threshold=r_threshold,
            d_threshold=d_threshold,
        )
    return TrialReport(
        solver="madmm",
        y_hat=Y,
        cost_trace=np.asarray(trace),
        iters=iters,
        final_grad_norm=final_grad_norm,
        wall_ms=wall_ms,
        status=status,
        stop=stop,
        diagnostics=diagnostics,
    )
