"""Taylor-coefficient jump and its uncertainty."""
from __future__ import annotations

from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

__all__ = [
    "DeltaEstimate",
    "delta_taylor",
    "propagate_covariance",
    "significance",
    "two_sided_quantile",
]


@dataclass(frozen=True)
class DeltaEstimate:
    """Difference of the order-``n`` Maclaurin coefficients, left minus right."""

    delta_t: float
    variance: float
    order: int

    def __post_init__(self):
        if not self.variance >= 0:
            raise ValueError(f"variance must be >= 0, got {self.variance}")


def delta_taylor(fit, d):
    """Return ``d @ gamma``, i.e. ``alpha_n - beta_n``."""
    gamma = fit.gamma
    d = np.asarray(d, dtype=float)
    if d.shape != gamma.shape:
        raise ValueError(f"selector has shape {d.shape}, gamma has {gamma.shape}")
    return float(d @ gamma)


def _check_psd(Lambda_y, atol=1e-12):
    if not np.allclose(Lambda_y, Lambda_y.T, rtol=1e-10, atol=atol):
        raise ValueError("observation covariance is not symmetric")
    if np.any(np.diag(Lambda_y) < 0):
        raise ValueError("observation covariance has negative variances")
    scale = max(float(np.max(np.abs(Lambda_y))), atol)
    if np.linalg.eigvalsh(Lambda_y)[0] < -1e-10 * scale:
        raise ValueError("observation covariance is not positive semidefinite")


def propagate_covariance(K, Lambda_y, d):
    """
    Push the observation covariance through the linear estimator.

    Parameters
    ----------
    K : ndarray, shape (p, m)
        Estimator with ``gamma = K @ y``.
    Lambda_y : ndarray, shape (m, m)
        Covariance of the observations in the window.
    d : ndarray, shape (p,)
        Selector vector.

    Returns
    -------
    Lambda_gamma : ndarray, shape (p, p)
    lambda_delta : float
        Variance of ``d @ gamma``.
    """
    K = np.asarray(K, dtype=float)
    Lambda_y = np.asarray(Lambda_y, dtype=float)
    d = np.asarray(d, dtype=float)
    m = K.shape[1]
    if Lambda_y.shape != (m, m):
        raise ValueError(f"Lambda_y must be {m}x{m}, got {Lambda_y.shape}")
    if d.shape != (K.shape[0],):
        raise ValueError("selector length does not match the estimator")
    _check_psd(Lambda_y)
    Lambda_gamma = K @ Lambda_y @ K.T
    Lambda_gamma = 0.5 * (Lambda_gamma + Lambda_gamma.T)
    lambda_delta = max(float(d @ Lambda_gamma @ d), 0.0)
    return Lambda_gamma, lambda_delta


def two_sided_quantile(confidence):
    if not 0 < confidence < 1:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
    return NormalDist().inv_cdf(0.5 + 0.5 * confidence)


def significance(est, confidence=0.95):
    """
    Two-sided z-test of ``delta_t == 0``.

    Returns ``(significant, z)``.  A zero variance makes any nonzero jump
    trivially significant (``z = +-inf``) and a zero jump insignificant.
    """
    q = two_sided_quantile(confidence)
    if est.variance == 0:
        if est.delta_t == 0:
            return False, 0.0
        return True, float(np.copysign(np.inf, est.delta_t))
    z = est.delta_t / np.sqrt(est.variance)
    return bool(abs(z) > q), float(z)
