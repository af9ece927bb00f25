"""Gauge alignment and recovery-error metrics.

Factor solutions are only determined up to an orthogonal transform (plus a
translation when the configuration is not anchored), so error metrics first
remove that freedom: ``procrustes`` finds the best orthogonal alignment of
two configurations sharing a centroid, and ``align_to_anchors`` fits the
rigid motion (rotation/reflection + translation) that carries estimated
anchor rows onto their known positions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .edm import gram_to_edm

__all__ = [
    "ProcrustesResult",
    "align_to_anchors",
    "procrustes",
    "recovery_metrics",
]


@dataclass(frozen=True)
class ProcrustesResult:
    """Best orthogonal alignment of ``Y`` onto the reference ``Y_star``.

    Attributes
    ----------
    psi:
        Orthogonal (d, d) matrix minimizing ``||Y - Y_star @ psi||_F``.
    delta:
        Residual ``Y - Y_star @ psi``.
    degenerate:
        True when the cross-Gram ``Y_star.T @ Y`` is rank deficient, in which
        case the minimizer is not unique (the returned factor is still a
        valid orthogonal minimizer).
    """

    psi: np.ndarray
    delta: np.ndarray
    degenerate: bool


def procrustes(Y: np.ndarray, Y_star: np.ndarray) -> ProcrustesResult:
    """Solve ``min_{psi orthogonal} ||Y - Y_star @ psi||_F``.

    The minimizer is ``psi = A @ B.T`` where ``Y_star.T @ Y = A S B.T`` is a
    singular value decomposition.  At the optimum ``Y.T @ Y_star @ psi`` is
    positive semidefinite and ``delta.T @ Y_star @ psi`` is symmetric.
    """
    Y = np.asarray(Y, dtype=float)
    Y_star = np.asarray(Y_star, dtype=float)
    if Y.shape != Y_star.shape:
        raise ValueError("configurations must share a shape")
    cross = Y_star.T @ Y
    A, s, Bt = np.linalg.svd(cross)
    psi = A @ Bt
    tol = 1e-12 * max(s[0], 1.0) if s.size else 0.0
    degenerate = bool(s.size and s.min() <= tol)
    delta = Y - Y_star @ psi
    return ProcrustesResult(psi=psi, delta=delta, degenerate=degenerate)


def align_to_anchors(
    Y_hat: np.ndarray, Y_true: np.ndarray, anchor_idx
) -> np.ndarray:
    """Rigidly map ``Y_hat`` so its anchor rows best match the true anchors.

    Fits rotation/reflection plus translation by orthogonal Procrustes on the
    centered anchor rows, then applies the transform to every row.
    """
    Y_hat = np.asarray(Y_hat, dtype=float)
    Y_true = np.asarray(Y_true, dtype=float)
    anchor_idx = np.asarray(anchor_idx, dtype=int)
    if anchor_idx.size < 2:
        raise ValueError("need at least two anchors to fit a rigid motion")
    A_hat = Y_hat[anchor_idx]
    A_true = Y_true[anchor_idx]
    mu_hat = A_hat.mean(axis=0)
    mu_true = A_true.mean(axis=0)
    res = procrustes(A_true - mu_true, A_hat - mu_hat)
    # rows transform as y -> (y - mu_hat) @ psi + mu_true
    return (Y_hat - mu_hat) @ res.psi + mu_true


def recovery_metrics(
    Y_hat: np.ndarray,
    Y_true: np.ndarray,
    anchor_idx,
    D_star: np.ndarray,
) -> tuple[float, float]:
    """Relative EDM error and per-sensor localization error of an estimate.

    Returns
    -------
    (re, msle):
        ``re`` is ``||g(Y Y^T) - D*||_F / ||D*||_F``, invariant to rigid
        motions of the estimate.  ``msle`` is the Frobenius distance between
        the anchor-aligned non-anchor rows and the truth, divided by the
        number of non-anchor nodes; it is NaN when no anchors are available.
    """
    Y_hat = np.asarray(Y_hat, dtype=float)
    D_star = np.asarray(D_star, dtype=float)
    denom = np.linalg.norm(D_star)
    if denom == 0:
        raise ValueError("reference EDM has zero norm")
    re = float(np.linalg.norm(gram_to_edm(Y_hat @ Y_hat.T) - D_star) / denom)

    anchor_idx = np.asarray(anchor_idx, dtype=int)
    n = Y_hat.shape[0]
    if anchor_idx.size < 2 or n - anchor_idx.size <= 0:
        return re, float("nan")
    aligned = align_to_anchors(Y_hat, Y_true, anchor_idx)
    sensor_rows = np.setdiff1d(np.arange(n), anchor_idx)
    err = np.linalg.norm(aligned[sensor_rows] - np.asarray(Y_true)[sensor_rows])
    msle = float(err / sensor_rows.size)
    return re, msle
