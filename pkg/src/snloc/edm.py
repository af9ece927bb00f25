"""Core operators on Euclidean distance matrices (EDMs) and Gram matrices.

Conventions used package-wide:

* An EDM ``D`` is an n-by-n hollow symmetric matrix of *squared* pairwise
  distances.
* A configuration (point set) ``Y`` is an n-by-d array whose rows are node
  positions; its Gram matrix is ``Y @ Y.T``.
* ``gram_to_edm`` is the linear map ``g(G) = diag(G) 1^T + 1 diag(G)^T - 2G``
  carrying Gram matrices to EDMs, and ``g_adjoint`` is its adjoint
  ``g*(D) = 2 (diag(D 1) - D)`` with respect to the trace inner product.
* ``edm_to_gram`` is double centering ``-1/2 J D J`` with
  ``J = I - (1/n) 1 1^T``, the left inverse of ``g`` on centered Gram
  matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MdsDiagnostics",
    "centering_matrix",
    "classical_mds",
    "edm_to_gram",
    "g_adjoint",
    "gram_to_edm",
    "pairwise_sq_dists",
]

_SYM_TOL = 1e-9


def _check_square(M: np.ndarray, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {M.shape}")
    return M


def _check_symmetric(M: np.ndarray, name: str, tol: float = _SYM_TOL) -> np.ndarray:
    M = _check_square(M, name)
    if M.size and np.max(np.abs(M - M.T)) > tol:
        raise ValueError(f"{name} must be symmetric within {tol:g}")
    return M


def pairwise_sq_dists(points: np.ndarray) -> np.ndarray:
    """Squared pairwise distances of an (n, d) configuration.

    Equivalent to ``gram_to_edm(points @ points.T)`` but computed directly,
    with the tiny negative values that cancellation can produce clipped to 0.
    """
    points = np.asarray(points, dtype=float)
    sq = np.sum(points * points, axis=1)
    D = sq[:, None] + sq[None, :] - 2.0 * (points @ points.T)
    np.fill_diagonal(D, 0.0)
    return np.maximum(D, 0.0)


def gram_to_edm(G: np.ndarray) -> np.ndarray:
    """Map a Gram matrix to the EDM of the underlying configuration.

    Computes ``diag(G) 1^T + 1 diag(G)^T - 2 G``.  The output is hollow and
    symmetric whenever ``G`` is symmetric.

    Raises
    ------
    ValueError
        If ``G`` is not square or not symmetric.
    """
    G = _check_symmetric(G, "G")
    dg = np.diag(G)
    D = dg[:, None] + dg[None, :] - 2.0 * G
    np.fill_diagonal(D, 0.0)
    return D


def g_adjoint(D: np.ndarray) -> np.ndarray:
    """Adjoint of :func:`gram_to_edm` under the trace inner product.

    Computes ``2 (diag(D 1) - D)``, so that
    ``<gram_to_edm(G), D> == <G, g_adjoint(D)>`` for symmetric ``G, D``.
    """
    D = _check_symmetric(D, "D")
    return 2.0 * (np.diag(D.sum(axis=1)) - D)


def centering_matrix(n: int) -> np.ndarray:
    """Geometric centering matrix ``J = I - (1/n) 1 1^T``."""
    return np.eye(n) - np.ones((n, n)) / n


def edm_to_gram(D: np.ndarray) -> np.ndarray:
    """Recover the centered Gram matrix from an EDM by double centering.

    Computes ``-1/2 J D J``.  For a valid EDM with embedding dimension d the
    result is positive semidefinite of rank d and has row sums zero.

    Raises
    ------
    ValueError
        If ``D`` is asymmetric, has a nonzero diagonal, or negative entries.
    """
    D = _check_symmetric(D, "D")
    if D.size:
        if np.max(np.abs(np.diag(D))) > _SYM_TOL:
            raise ValueError("D must be hollow (zero diagonal)")
        if D.min() < -_SYM_TOL:
            raise ValueError("D must have nonnegative entries")
    n = D.shape[0]
    J = centering_matrix(n)
    G = -0.5 * (J @ D @ J)
    return (G + G.T) / 2.0


@dataclass(frozen=True)
class MdsDiagnostics:
    """Spectral bookkeeping from :func:`classical_mds`.

    Attributes
    ----------
    embeddable:
        True when the requested dimension captures the spectrum: no
        significant negative eigenvalues and no significant positive mass
        beyond the kept block.
    eigenvalues:
        Full spectrum of the double-centered Gram matrix, descending.
    truncated_mass:
        Positive eigenvalue mass dropped beyond the requested dimension.
    negative_mass:
        Total magnitude of negative eigenvalues (a valid EDM has none).
    """

    embeddable: bool
    eigenvalues: np.ndarray
    truncated_mass: float
    negative_mass: float


def classical_mds(D: np.ndarray, d: int) -> tuple[np.ndarray, MdsDiagnostics]:
    """Embed an EDM into d dimensions by classical multidimensional scaling.

    Double-centers ``D``, takes the top-d eigenpairs of the resulting Gram
    matrix, and returns ``U sqrt(L)`` with negative eigenvalues clipped to
    zero.  The embedding is centered and recovers any exact EDM of embedding
    dimension d up to a rigid motion.

    Parameters
    ----------
    D:
        Hollow symmetric matrix of squared distances.
    d:
        Target embedding dimension, ``1 <= d < n``.

    Returns
    -------
    (Y, diagnostics):
        ``Y`` is an (n, d) centered configuration; ``diagnostics`` reports
        the spectral mass outside the kept block.
    """
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    if not 1 <= d < n:
        raise ValueError(f"need 1 <= d < n, got d={d}, n={n}")
    G = edm_to_gram(D)
    eigvals, eigvecs = np.linalg.eigh(G)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]

    kept = eigvals[:d]
    tail = eigvals[d:]
    scale = max(abs(eigvals[0]), 1e-30)
    truncated_mass = float(np.sum(np.maximum(tail, 0.0)))
    negative_mass = float(np.sum(np.maximum(-eigvals, 0.0)))
    embeddable = bool(
        negative_mass <= 1e-8 * scale * n and truncated_mass <= 1e-8 * scale * n
    )
    Y = eigvecs[:, :d] * np.sqrt(np.maximum(kept, 0.0))[None, :]
    diag = MdsDiagnostics(
        embeddable=embeddable,
        eigenvalues=eigvals,
        truncated_mass=truncated_mass,
        negative_mass=negative_mass,
    )
    return Y, diag
