"""Observation masks: which pairwise distances are measured.

A mask stores the observed pairs ``(i, j)`` with ``i < j`` (0-based); all
matrix-level operators mirror them symmetrically.  Two generating schemes are
provided: a unit-ball rule (a pair is observed when its true distance is
below a radius) and an independent Bernoulli rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["SampleMask", "sample_bernoulli", "sample_unit_ball"]


@dataclass(frozen=True)
class SampleMask:
    """Observed index set over the strict upper triangle.

    Attributes
    ----------
    n:
        Number of nodes.
    pairs:
        Integer array of shape (m, 2) with rows ``(i, j)``, ``0 <= i < j < n``,
        sorted lexicographically and free of duplicates.
    scheme:
        Generating rule: ``"unit_ball"``, ``"bernoulli"``, or ``"explicit"``.
    param:
        The radius r or the Bernoulli rate p (NaN for explicit masks).
    """

    n: int
    pairs: np.ndarray
    scheme: str = "explicit"
    param: float = float("nan")
    _indicator_cache: dict = field(
        default_factory=dict, repr=False, compare=False, hash=False
    )

    def __post_init__(self):
        pairs = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)
        if pairs.size:
            if pairs.min() < 0 or pairs.max() >= self.n:
                raise ValueError("pair indices out of range")
            if np.any(pairs[:, 0] >= pairs[:, 1]):
                raise ValueError("pairs must satisfy i < j")
            order = np.lexsort((pairs[:, 1], pairs[:, 0]))
            pairs = pairs[order]
            if np.any(np.all(np.diff(pairs, axis=0) == 0, axis=1)):
                raise ValueError("duplicate pairs in mask")
        object.__setattr__(self, "pairs", pairs)

    @property
    def num_pairs(self) -> int:
        return int(self.pairs.shape[0])

    @property
    def density(self) -> float:
        """Fraction of the n(n-1)/2 possible pairs that are observed."""
        total = self.n * (self.n - 1) // 2
        return self.num_pairs / total if total else 0.0

    @property
    def fill_ratio(self) -> float:
        """Observed fraction of all n^2 entries, counting the mirrored copy."""
        return 2.0 * self.num_pairs / float(self.n * self.n) if self.n else 0.0

    def indicator(self) -> np.ndarray:
        """Symmetric boolean (n, n) matrix with True on observed entries."""
        cached = self._indicator_cache.get("ind")
        if cached is not None:
            return cached
        ind = np.zeros((self.n, self.n), dtype=bool)
        if self.pairs.size:
            ind[self.pairs[:, 0], self.pairs[:, 1]] = True
            ind[self.pairs[:, 1], self.pairs[:, 0]] = True
        self._indicator_cache["ind"] = ind
        return ind

    def project(self, M: np.ndarray) -> np.ndarray:
        """Zero out the entries of ``M`` that are not observed."""
        return np.where(self.indicator(), M, 0.0)

    def union(self, other: "SampleMask") -> "SampleMask":
        """Mask observing the pairs of either operand."""
        if other.n != self.n:
            raise ValueError("masks must share n")
        merged = {tuple(p) for p in self.pairs} | {tuple(p) for p in other.pairs}
        pairs = np.array(sorted(merged), dtype=np.int64).reshape(-1, 2)
        return SampleMask(self.n, pairs, scheme="explicit")


def _clique_pairs(indices) -> list[tuple[int, int]]:
    idx = sorted(int(i) for i in indices)
    return [(a, b) for k, a in enumerate(idx) for b in idx[k + 1 :]]


def sample_unit_ball(
    D: np.ndarray,
    r: float,
    anchors=(),
    anchor_clique: bool = True,
) -> SampleMask:
    """Observe every pair whose true distance is strictly below ``r``.

    Parameters
    ----------
    D:
        Ground-truth EDM (squared distances).
    r:
        Connectivity radius, in the same length units as the scene.
    anchors:
        Node indices whose mutual distances are always known; their clique is
        added to the mask when ``anchor_clique`` is True regardless of range.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    within = D[iu, ju] < r * r
    observed = {(int(i), int(j)) for i, j in zip(iu[within], ju[within])}
    if anchor_clique:
        observed.update(_clique_pairs(anchors))
    pairs = np.array(sorted(observed), dtype=np.int64).reshape(-1, 2)
    return SampleMask(n, pairs, scheme="unit_ball", param=float(r))


def sample_bernoulli(n: int, p: float, rng: np.random.Generator) -> SampleMask:
    """Observe each pair independently with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.shape[0]) < p
    pairs = np.column_stack([iu[keep], ju[keep]]).astype(np.int64)
    return SampleMask(n, pairs, scheme="bernoulli", param=float(p))
