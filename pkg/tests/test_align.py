"""Tests for gauge alignment and the recovery-error metrics."""

import numpy as np
import pytest

from snloc.align import align_to_anchors, procrustes, recovery_metrics
from snloc.edm import pairwise_sq_dists


def random_orthogonal(d, rng, reflect=False):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q = q * np.sign(np.diag(r))
    if reflect:
        q[:, 0] = -q[:, 0]
    return q


def test_procrustes_recovers_applied_rotation():
    rng = np.random.default_rng(0)
    y_star = rng.standard_normal((12, 3))
    q = random_orthogonal(3, rng)
    res = procrustes(y_star @ q, y_star)
    assert np.allclose(res.psi, q, atol=1e-12)
    assert np.linalg.norm(res.delta) <= 1e-12
    assert not res.degenerate


def test_procrustes_recovers_applied_reflection():
    rng = np.random.default_rng(1)
    y_star = rng.standard_normal((9, 2))
    q = random_orthogonal(2, rng, reflect=True)
    res = procrustes(y_star @ q, y_star)
    assert np.allclose(res.psi, q, atol=1e-12)
    assert np.linalg.det(res.psi) < 0


def test_procrustes_factor_is_orthogonal():
    rng = np.random.default_rng(2)
    for d in (1, 2, 3, 5):
        y = rng.standard_normal((14, d))
        y_star = rng.standard_normal((14, d))
        res = procrustes(y, y_star)
        assert np.allclose(res.psi.T @ res.psi, np.eye(d), atol=1e-12)
        assert np.allclose(res.delta, y - y_star @ res.psi)


def test_procrustes_beats_random_orthogonal_candidates():
    rng = np.random.default_rng(3)
    y = rng.standard_normal((15, 3))
    y_star = rng.standard_normal((15, 3))
    best = np.linalg.norm(procrustes(y, y_star).delta)
    for trial in range(1000):
        q = random_orthogonal(3, rng, reflect=trial % 2 == 0)
        assert best <= np.linalg.norm(y - y_star @ q) + 1e-12


def test_procrustes_first_order_optimality():
    # At the optimum the cross term (Y_star @ psi).T @ Y is symmetric PSD.
    rng = np.random.default_rng(4)
    y = rng.standard_normal((20, 3))
    y_star = rng.standard_normal((20, 3))
    res = procrustes(y, y_star)
    m = (y_star @ res.psi).T @ y
    assert np.allclose(m, m.T, atol=1e-10)
    assert np.linalg.eigvalsh(0.5 * (m + m.T)).min() >= -1e-10


def test_procrustes_flags_rank_deficient_cross_gram():
    rng = np.random.default_rng(5)
    y = rng.standard_normal((10, 3))
    y[:, 2] = 0.0
    y_star = rng.standard_normal((10, 3))
    res = procrustes(y, y_star)
    assert res.degenerate
    assert np.allclose(res.psi.T @ res.psi, np.eye(3), atol=1e-12)


def test_procrustes_rejects_shape_mismatch():
    with pytest.raises(ValueError):
        procrustes(np.zeros((4, 2)), np.zeros((5, 2)))


def test_align_to_anchors_undoes_rigid_motion():
    rng = np.random.default_rng(6)
    y_true = rng.standard_normal((30, 2))
    q = random_orthogonal(2, rng, reflect=True)
    shift = rng.standard_normal(2)
    y_hat = y_true @ q + shift
    aligned = align_to_anchors(y_hat, y_true, np.arange(4))
    assert np.allclose(aligned, y_true, atol=1e-10)


def test_align_to_anchors_requires_two_anchors():
    y = np.zeros((5, 2))
    with pytest.raises(ValueError):
        align_to_anchors(y, y, [0])


def test_recovery_metrics_zero_for_rigid_motion():
    rng = np.random.default_rng(7)
    y_true = rng.standard_normal((25, 3))
    q = random_orthogonal(3, rng)
    y_hat = y_true @ q + rng.standard_normal(3)
    d_star = pairwise_sq_dists(y_true)
    re, msle = recovery_metrics(y_hat, y_true, np.arange(4), d_star)
    assert re <= 1e-12
    assert msle <= 1e-12


def test_relative_error_matches_definition():
    rng = np.random.default_rng(8)
    y_true = rng.standard_normal((10, 2))
    y_hat = rng.standard_normal((10, 2))
    d_star = pairwise_sq_dists(y_true)
    re, _ = recovery_metrics(y_hat, y_true, np.arange(2), d_star)
    expected = np.linalg.norm(pairwise_sq_dists(y_hat) - d_star) / np.linalg.norm(
        d_star
    )
    assert re == pytest.approx(expected, rel=1e-13)


def test_localization_error_of_single_sensor_bump():
    # Anchors stay exact, so the fitted motion is the identity and the
    # metric reduces to ||bump||_F / (number of non-anchor nodes).
    rng = np.random.default_rng(9)
    n, eps = 20, 1e-3
    y_true = rng.standard_normal((n, 2))
    bump = rng.standard_normal(2)
    bump *= eps / np.linalg.norm(bump)
    y_hat = y_true.copy()
    y_hat[10] += bump
    _, msle = recovery_metrics(y_hat, y_true, np.arange(4), pairwise_sq_dists(y_true))
    expected = eps / (n - 4)
    assert 0.9 * expected <= msle <= 1.1 * expected


def test_localization_error_nan_without_anchors():
    rng = np.random.default_rng(10)
    y_true = rng.standard_normal((8, 2))
    y_hat = rng.standard_normal((8, 2))
    re, msle = recovery_metrics(y_hat, y_true, [], pairwise_sq_dists(y_true))
    assert np.isfinite(re)
    assert np.isnan(msle)


def test_localization_error_nan_without_sensors():
    rng = np.random.default_rng(11)
    y_true = rng.standard_normal((4, 2))
    re, msle = recovery_metrics(
        y_true, y_true, np.arange(4), pairwise_sq_dists(y_true)
    )
    assert re == 0.0
    assert np.isnan(msle)


def test_recovery_metrics_rejects_zero_reference():
    y = np.zeros((4, 2))
    with pytest.raises(ValueError):
        recovery_metrics(y, y, np.arange(2), np.zeros((4, 4)))
