"""Measurement corruption models: RSSI path-loss noise, sparse outliers,
and the confidence weights derived from measurement error.

Distances are stored squared throughout; the RSSI model perturbs plain
distances and the result is squared again, while outliers are added directly
to the observed squared entries.
"""

from __future__ import annotations

import numpy as np

from .sampling import SampleMask

__all__ = ["apply_rssi_noise", "build_weights", "inject_outliers", "rssi_factor"]

#: dB-to-natural-log conversion constant of the path-loss model.
ETA = 10.0 / np.log(10.0)


def rssi_factor(
    sigma: float, gamma: float, rng: np.random.Generator, size=None
) -> np.ndarray:
    """Multiplicative distance perturbation of the log-normal shadowing model.

    Draws ``exp(-X / (eta * gamma) - sigma^2 / (2 eta^2 gamma^2))`` with
    ``X ~ N(0, sigma^2)``; the deterministic factor makes the perturbed
    distance unbiased.
    """
    x = rng.normal(0.0, sigma, size=size)
    return np.exp(-x / (ETA * gamma) - sigma**2 / (2.0 * ETA**2 * gamma**2))


def apply_rssi_noise(
    D: np.ndarray, sigma: float, gamma: float, rng: np.random.Generator
) -> np.ndarray:
    """Perturb every pairwise distance with independent RSSI shadowing noise.

    Each strict-upper-triangle distance is perturbed once and mirrored, so
    the output stays hollow symmetric.  ``sigma = 0`` returns the input
    unchanged.

    Parameters
    ----------
    D:
        EDM of squared distances.
    sigma:
        Shadowing standard deviation in dB.
    gamma:
        Path-loss exponent.
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    D = np.asarray(D, dtype=float)
    if sigma == 0:
        return D.copy()
    n = D.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    factors = rssi_factor(sigma, gamma, rng, size=iu.shape[0])
    noisy = np.zeros_like(D)
    # the square of a multiplicatively-perturbed distance is the squared
    # distance scaled by the squared factor
    noisy[iu, ju] = D[iu, ju] * factors**2
    return noisy + noisy.T


def inject_outliers(
    D_e: np.ndarray,
    mask: SampleMask,
    p_out: float,
    v_out: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Add sparse positive outliers to a fraction of the observed entries.

    Exactly ``floor(p_out * num_pairs)`` observed pairs, chosen uniformly
    without replacement, receive an additive value drawn uniformly from
    ``[1, 1 + v_out]``; the value is applied to the squared entry and
    mirrored.

    Returns
    -------
    (corrupted, outlier_pairs):
        The corrupted EDM and the (k, 2) array of pairs that were hit.
    """
    if not 0.0 <= p_out <= 1.0:
        raise ValueError("p_out must lie in [0, 1]")
    if p_out > 0 and v_out < 0:
        raise ValueError("v_out must be nonnegative")
    D_out = np.asarray(D_e, dtype=float).copy()
    k = int(np.floor(p_out * mask.num_pairs))
    if k == 0:
        return D_out, np.empty((0, 2), dtype=np.int64)
    chosen = rng.choice(mask.num_pairs, size=k, replace=False)
    chosen.sort()
    hit = mask.pairs[chosen]
    values = rng.uniform(1.0, 1.0 + v_out, size=k)
    D_out[hit[:, 0], hit[:, 1]] += values
    D_out[hit[:, 1], hit[:, 0]] += values
    return D_out, hit


def build_weights(D_e: np.ndarray, D_truth: np.ndarray) -> np.ndarray:
    """Confidence weights ``w_ij = exp(-|d^e_ij - d_ij|^(1/4))``.

    Both arguments hold squared distances; the formula consumes plain
    distances.  Exact measurements get weight 1, larger errors decay toward
    0, so the output lies in (0, 1] and is symmetric.
    """
    D_e = np.asarray(D_e, dtype=float)
    D_truth = np.asarray(D_truth, dtype=float)
    if D_e.shape != D_truth.shape:
        raise ValueError("shape mismatch between observed and true EDM")
    err = np.abs(np.sqrt(np.maximum(D_e, 0.0)) - np.sqrt(np.maximum(D_truth, 0.0)))
    W = np.exp(-(err**0.25))
    return (W + W.T) / 2.0
