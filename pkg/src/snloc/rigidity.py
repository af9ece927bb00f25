"""Randomized generic- and global-rigidity tests for measurement graphs.

Whether a partially observed distance matrix pins down the configuration is
a property of the measurement graph.  Both tests below are numerical: the
generic-rigidity test checks the rank of the rigidity matrix at a random
generic configuration, and the global-rigidity test checks the rank of a
stress matrix built from a random equilibrium stress (a vector in the left
null space of the rigidity matrix).  For a generic configuration in
dimension ``d`` the graph is rigid iff the rigidity matrix has rank
``n*d - d*(d+1)/2`` and globally rigid (with probability one over the
randomization) iff additionally the stress matrix has rank ``n - d - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sampling import SampleMask

__all__ = ["RigidityReport", "rigidity_matrix", "rigidity_probe"]

_GENERIC_SEED = 20240911
_RANK_RTOL = 1e-8


@dataclass(frozen=True)
class RigidityReport:
    """Outcome of the randomized rigidity probe."""

    generically_rigid: bool
    globally_rigid: bool
    rigidity_rank: int
    required_rank: int
    stress_rank: int
    required_stress_rank: int


def rigidity_matrix(pairs: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Rigidity matrix of the framework (pairs, Y), shape (m, n*d).

    Row e for edge (i, j) carries ``y_i - y_j`` in block i and its negative
    in block j; its kernel consists of the infinitesimal flexes.
    """
    Y = np.asarray(Y, dtype=float)
    n, d = Y.shape
    pairs = np.asarray(pairs, dtype=int)
    m = pairs.shape[0]
    R = np.zeros((m, n * d))
    diff = Y[pairs[:, 0]] - Y[pairs[:, 1]]
    rows = np.arange(m)[:, None]
    cols_i = pairs[:, 0, None] * d + np.arange(d)[None, :]
    cols_j = pairs[:, 1, None] * d + np.arange(d)[None, :]
    R[rows, cols_i] = diff
    R[rows, cols_j] = -diff
    return R


def _rank(sigma: np.ndarray) -> int:
    if sigma.size == 0 or sigma[0] == 0.0:
        return 0
    return int(np.count_nonzero(sigma > _RANK_RTOL * sigma[0]))


def rigidity_probe(mask: SampleMask, Y: np.ndarray) -> RigidityReport:
    """Test generic and generic-global rigidity of ``mask``'s graph.

    The configuration ``Y`` only fixes the ambient dimension and scale; the
    ranks are evaluated at a generically perturbed copy (fixed seed, so the
    probe is deterministic).  Graphs with fewer edges than the rigid rank
    are reported non-rigid without any linear algebra.
    """
    Y = np.asarray(Y, dtype=float)
    n, d = Y.shape
    if mask.n != n:
        raise ValueError("mask and configuration disagree on node count")
    required_rank = n * d - d * (d + 1) // 2
    required_stress_rank = max(n - d - 1, 0)
    if mask.num_pairs < required_rank:
        return RigidityReport(
            generically_rigid=False,
            globally_rigid=False,
            rigidity_rank=0,
            required_rank=required_rank,
            stress_rank=0,
            required_stress_rank=required_stress_rank,
        )

    rng = np.random.default_rng(_GENERIC_SEED)
    scale = float(np.linalg.norm(Y) / np.sqrt(Y.size))
    if scale == 0.0:
        scale = 1.0
    Y_gen = Y + 1e-3 * scale * rng.standard_normal(Y.shape)

    R = rigidity_matrix(mask.pairs, Y_gen)
    U, sigma, _ = np.linalg.svd(R, full_matrices=True)
    rank = _rank(sigma)
    rigid = rank == required_rank
    if not rigid:
        return RigidityReport(
            generically_rigid=False,
            globally_rigid=False,
            rigidity_rank=rank,
            required_rank=required_rank,
            stress_rank=0,
            required_stress_rank=required_stress_rank,
        )

    # Random equilibrium stress: a generic vector in the left null space of
    # the rigidity matrix.  No redundant edges means the zero stress, whose
    # stress matrix has rank 0 — the correct answer for simplices and the
    # correct failure for everything else.
    m = mask.num_pairs
    null_basis = U[:, rank:]
    if null_basis.shape[1] > 0:
        omega = null_basis @ rng.standard_normal(null_basis.shape[1])
    else:
        omega = np.zeros(m)
    S = np.zeros((n, n))
    i_idx, j_idx = mask.pairs[:, 0], mask.pairs[:, 1]
    S[i_idx, j_idx] = -omega
    S[j_idx, i_idx] = -omega
    np.fill_diagonal(S, 0.0)
    S[np.arange(n), np.arange(n)] = -S.sum(axis=1)
    stress_sigma = np.linalg.svd(S, compute_uv=False)
    stress_rank = _rank(stress_sigma)
    globally_rigid = rigid and stress_rank == required_stress_rank
    return RigidityReport(
        generically_rigid=rigid,
        globally_rigid=globally_rigid,
        rigidity_rank=rank,
        required_rank=required_rank,
        stress_rank=stress_rank,
        required_stress_rank=required_stress_rank,
    )
