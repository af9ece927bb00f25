"""Quotient geometry of full-rank factor matrices modulo right rotations.

A Gram matrix ``G = Y @ Y.T`` determines its factor ``Y`` (n, d) only up to
``Y -> Y @ Q`` for orthogonal ``Q``, so optimization over factors lives on
the quotient of the full-rank matrices by the orthogonal group acting on the
right.  This module supplies the pieces a Riemannian solver needs on that
quotient: two inner products on tangent vectors, the vertical/horizontal
splitting for each, conversion of a Euclidean gradient into a Riemannian
one, the affine retraction, and vector transport by horizontal projection.

Two metrics are supported, named by how they weight the trace pairing:

- ``"flat"``:   ``<Z1, Z2> = tr(Z1.T @ Z2)``
- ``"scaled"``: ``<Z1, Z2> = tr((Y.T @ Y) @ Z1.T @ Z2)``

The vertical space at ``Y`` (directions that do not move the Gram class) is
``{Y @ Omega : Omega skew}``.  Under the flat metric the horizontal
complement consists of ``Z`` with ``Y.T @ Z`` symmetric, and the vertical
projection requires solving a small Sylvester equation; under the scaled
metric the condition is symmetry of ``inv(Y.T @ Y) @ Y.T @ Z`` and the
projection is closed-form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Union

import numpy as np

__all__ = [
    "HorizontalVector",
    "Metric",
    "gram_matrix",
    "inner",
    "is_horizontal",
    "project_horizontal",
    "project_vertical",
    "retract",
    "riemannian_gradient",
    "solve_sylvester_skew",
    "transport",
]

Metric = Literal["flat", "scaled"]
METRICS: tuple[str, ...] = ("flat", "scaled")

# The Gram matrix's condition number is the SQUARE of Y's singular-value
# ratio, so the guard must fire well before that square reaches 1/eps
# (~4.5e15): at ratio 1e-7 the Gram's condition is 1e14, still solvable;
# at 1e-8 and below LU factorization starts hitting exact zero pivots.
_RANK_DEFICIENT_RATIO = 1e-7


def _check_metric(metric: str) -> None:
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")


@dataclass(frozen=True)
class HorizontalVector:
    """A tangent direction known to be horizontal at its base point.

    Attributes
    ----------
    base:
        The representative factor matrix the direction is attached to.
    dir:
        The (n, d) direction itself.
    metric:
        Which metric's horizontal space the direction lives in; operations
        refuse to mix metrics.
    """

    base: np.ndarray
    dir: np.ndarray
    metric: str

    def __post_init__(self) -> None:
        _check_metric(self.metric)
        if self.base.shape != self.dir.shape:
            raise ValueError("base and direction must share a shape")

    def validate(self, tol: float = 1e-10) -> bool:
        """True when the stored direction satisfies its horizontality test."""
        return is_horizontal(self.base, self.dir, self.metric, tol=tol)


def gram_matrix(Y: np.ndarray, regularize: bool = True) -> tuple[np.ndarray, bool]:
    """Gram matrix ``Y.T @ Y``, nudged to invertibility near rank loss.

    The Gram's condition number is the square of the singular-value ratio
    of ``Y``, so once that ratio drops below ``1e-7`` the Gram is at or
    beyond float64's solvable range; scaled-metric operations then add
    ``1e-12 * tr(Y.T @ Y) / d`` to the diagonal.  The boolean in the
    returned pair reports whether that happened, so drivers can count
    near-boundary events.
    """
    Y = np.asarray(Y, dtype=float)
    A = Y.T @ Y
    if not regularize:
        return A, False
    s = np.linalg.svd(Y, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return A, False
    if s[-1] / s[0] < _RANK_DEFICIENT_RATIO:
        d = A.shape[0]
        eps = 1e-12 * np.trace(A) / d
        return A + eps * np.eye(d), True
    return A, False


def inner(Y: np.ndarray, Z1: np.ndarray, Z2: np.ndarray, metric: str) -> float:
    """Inner product of two tangent directions at ``Y`` under ``metric``."""
    _check_metric(metric)
    if Z1.shape != Z2.shape:
        raise ValueError("tangent directions must share a shape")
    if metric == "flat":
        return float(np.sum(Z1 * Z2))
    A = Y.T @ Y
    return float(np.sum(Z1 * (Z2 @ A)))


def norm(Y: np.ndarray, Z: np.ndarray, metric: str) -> float:
    """Metric norm of a tangent direction at ``Y``."""
    return float(np.sqrt(max(inner(Y, Z, Z, metric), 0.0)))


def solve_sylvester_skew(Y: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Skew ``Omega`` with ``Omega @ A + A @ Omega = Y.T @ Z - Z.T @ Y``.

    Here ``A = Y.T @ Y``.  The right-hand side is skew and ``A`` is positive
    definite, so the solution exists, is unique, and is skew; the system is
    solved densely over the ``d*(d-1)/2``-dimensional skew basis.
    """
    Y = np.asarray(Y, dtype=float)
    Z = np.asarray(Z, dtype=float)
    A, _ = gram_matrix(Y)
    d = A.shape[0]
    if d == 1:
        return np.zeros((1, 1))
    C = Y.T @ Z - Z.T @ Y
    rows, cols = np.triu_indices(d, 1)
    k = rows.size
    M = np.empty((k, k))
    for col in range(k):
        p, q = rows[col], cols[col]
        B = np.zeros((d, d))
        B[p, q] = 1.0
        B[q, p] = -1.0
        L = B @ A + A @ B
        M[:, col] = L[rows, cols]
    x = np.linalg.solve(M, C[rows, cols])
    Omega = np.zeros((d, d))
    Omega[rows, cols] = x
    Omega -= Omega.T
    return Omega


def project_vertical(Y: np.ndarray, Z: np.ndarray, metric: str) -> np.ndarray:
    """Component of ``Z`` along the orbit directions ``{Y @ Omega}`` at ``Y``."""
    _check_metric(metric)
    Y = np.asarray(Y, dtype=float)
    Z = np.asarray(Z, dtype=float)
    if metric == "flat":
        Omega = solve_sylvester_skew(Y, Z)
    else:
        A, _ = gram_matrix(Y)
        W = np.linalg.solve(A, Y.T @ Z)
        Omega = 0.5 * (W - W.T)
    return Y @ Omega


def project_horizontal(Y: np.ndarray, Z: np.ndarray, metric: str) -> HorizontalVector:
    """Metric-orthogonal complement of the vertical component of ``Z``."""
    dir_ = np.asarray(Z, dtype=float) - project_vertical(Y, Z, metric)
    return HorizontalVector(base=np.asarray(Y, dtype=float), dir=dir_, metric=metric)


def is_horizontal(Y: np.ndarray, Z: np.ndarray, metric: str, tol: float = 1e-10) -> bool:
    """Check the horizontality condition of ``Z`` at ``Y`` under ``metric``."""
    _check_metric(metric)
    Y = np.asarray(Y, dtype=float)
    Z = np.asarray(Z, dtype=float)
    scale = np.linalg.norm(Y) * np.linalg.norm(Z)
    if scale == 0.0:
        return True
    if metric == "flat":
        resid = np.linalg.norm(Y.T @ Z - Z.T @ Y)
        return bool(resid <= tol * scale)
    A, _ = gram_matrix(Y)
    W = np.linalg.solve(A, Y.T @ Z)
    denom = max(np.linalg.norm(W), 1e-300)
    return bool(np.linalg.norm(W - W.T) <= tol * denom)


def riemannian_gradient(Y: np.ndarray, egrad: np.ndarray, metric: str) -> HorizontalVector:
    """Riemannian gradient for a rotation-invariant cost with gradient ``egrad``.

    Under the flat metric the Euclidean gradient of a cost invariant to
    right rotations is already horizontal and is returned unchanged.  Under
    the scaled metric the gradient is ``egrad @ inv(Y.T @ Y)``; the result
    is horizontally projected so the invariant holds even when roundoff (or
    a non-invariant caller) leaves a vertical residue.
    """
    _check_metric(metric)
    Y = np.asarray(Y, dtype=float)
    egrad = np.asarray(egrad, dtype=float)
    if metric == "flat":
        return HorizontalVector(base=Y, dir=egrad, metric=metric)
    A, _ = gram_matrix(Y)
    scaled = np.linalg.solve(A, egrad.T).T
    return project_horizontal(Y, scaled, metric)


def retract(
    Y: np.ndarray,
    eta: Union[np.ndarray, HorizontalVector],
    t: float = 1.0,
) -> tuple[np.ndarray, bool]:
    """Affine retraction ``Y + t * eta`` with a full-rank flag.

    Returns the new point plus True when it kept full column rank (smallest
    singular value above ``1e-12`` relative to the largest).
    """
    dir_ = eta.dir if isinstance(eta, HorizontalVector) else np.asarray(eta, dtype=float)
    Y_new = np.asarray(Y, dtype=float) + t * dir_
    s = np.linalg.svd(Y_new, compute_uv=False)
    full_rank = bool(s.size > 0 and s[0] > 0.0 and s[-1] > 1e-12 * s[0])
    return Y_new, full_rank


def transport(Y_to: np.ndarray, xi: HorizontalVector, metric: str) -> HorizontalVector:
    """Carry a horizontal vector to ``Y_to`` by horizontal projection there."""
    _check_metric(metric)
    if xi.metric != metric:
        raise ValueError(
            f"cannot transport a {xi.metric!r}-metric vector under {metric!r}"
        )
    return project_horizontal(Y_to, xi.dir, metric)
