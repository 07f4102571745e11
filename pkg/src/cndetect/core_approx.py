"""
Constrained, coupled polynomial approximation at a single interstitial point.

Two polynomials are fitted simultaneously, one to the samples left of the
interstitial point and one to the samples right of it.  Both are expressed in
a local frame whose origin is the interstitial point, so their coefficients
are the Maclaurin (Taylor) coefficients at that point.  Equality constraints
on the coefficients of order ``0 .. n-1`` make the joint model C^(n-1)
continuous at the origin, leaving the order-``n`` coefficients free to differ.

All coefficient vectors use descending powers, matching ``numpy.polyval``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ApproxConfig",
    "CoupledFit",
    "ConfigError",
    "IllConditionedError",
    "RankDeficiencyError",
    "SampleSeries",
    "SampleWindow",
    "WindowOutOfBoundsError",
    "center_window",
    "coefficient_index",
    "constraint_matrix",
    "nullspace_basis",
    "selector_vector",
    "solve_coupled",
    "solve_coupled_batch",
    "vandermonde",
]


class ConfigError(ValueError):
    """Invalid approximation configuration."""


class WindowOutOfBoundsError(IndexError):
    """A support would extend past the ends of the series."""


class RankDeficiencyError(np.linalg.LinAlgError):
    """The constraint matrix does not have full row rank."""


class IllConditionedError(np.linalg.LinAlgError):
    """The reduced design matrix ``V N`` is too badly conditioned to solve."""

    def __init__(self, cond, threshold):
        super().__init__(
            f"condition number {cond:.3e} of the reduced design matrix exceeds "
            f"{threshold:.3e}; consider normalize_x=True or shorter supports"
        )
        self.cond = cond
        self.threshold = threshold


@dataclass(frozen=True)
class SampleSeries:
    """Observations ``y`` at strictly increasing abscissae ``x``."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 1 or y.ndim != 1:
            raise ValueError("x and y must be one-dimensional")
        if x.shape != y.shape:
            raise ValueError(f"x and y lengths differ ({x.size} != {y.size})")
        if x.size < 2:
            raise ValueError("a series needs at least two samples")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("x and y must be finite")
        if np.any(np.diff(x) <= 0):
            raise ValueError("x must be strictly increasing (no duplicates)")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.x.size


@dataclass(frozen=True)
class ApproxConfig:
    """
    Settings of the coupled approximation.

    Parameters
    ----------
    order : int
        Derivative order ``n`` whose discontinuity is sought.
    degree_left, degree_right : int, optional
        Polynomial degrees; default to ``order``.
    support_left, support_right : int, optional
        Number of samples on each side; default to ``max(8, 2 * (order + 1))``.
    normalize_x : bool
        Rescale each window's abscissae to ``[-1, 1]`` before solving.
    cond_threshold : float
        Largest acceptable condition number of ``V N``.
    """

    order: int = 2
    degree_left: int | None = None
    degree_right: int | None = None
    support_left: int | None = None
    support_right: int | None = None
    normalize_x: bool = False
    cond_threshold: float = 1e12

    def __post_init__(self):
        n = self.order
        if int(n) != n or n < 1:
            raise ConfigError(f"order must be an integer >= 1, got {n!r}")
        default_support = max(8, 2 * (n + 1))
        for name, default in (
            ("degree_left", n),
            ("degree_right", n),
            ("support_left", default_support),
            ("support_right", default_support),
        ):
            if getattr(self, name) is None:
                object.__setattr__(self, name, default)
        if self.degree_left < n or self.degree_right < n:
            raise ConfigError(
                f"degrees ({self.degree_left}, {self.degree_right}) must be >= order {n}"
            )
        if self.support_left < self.degree_left + 1:
            raise ConfigError("support_left must be at least degree_left + 1")
        if self.support_right < self.degree_right + 1:
            raise ConfigError("support_right must be at least degree_right + 1")
        if not self.cond_threshold > 1:
            raise ConfigError("cond_threshold must exceed 1")

    @property
    def n_coefficients(self):
        return self.degree_left + self.degree_right + 2

    @property
    def n_samples(self):
        return self.support_left + self.support_right

    def as_dict(self):
        return {
            "order": self.order,
            "degree_left": self.degree_left,
            "degree_right": self.degree_right,
            "support_left": self.support_left,
            "support_right": self.support_right,
            "normalize_x": self.normalize_x,
            "cond_threshold": self.cond_threshold,
        }


@dataclass(frozen=True)
class SampleWindow:
    """Left and right sample blocks in the local frame centred on ``zeta``."""

    x_left: np.ndarray
    y_left: np.ndarray
    x_right: np.ndarray
    y_right: np.ndarray
    zeta: float

    @property
    def x(self):
        return np.concatenate([self.x_left, self.x_right])

    @property
    def y(self):
        return np.concatenate([self.y_left, self.y_right])


@dataclass(frozen=True)
class CoupledFit:
    """Result of the constrained coupled solve.

    ``alpha`` and ``beta`` are in original x-units even when the solve was
    performed on normalized abscissae.
    """

    alpha: np.ndarray
    beta: np.ndarray
    K: np.ndarray
    order: int
    cond: float = field(default=np.nan)

    @property
    def gamma(self):
        return np.concatenate([self.alpha, self.beta])

    @property
    def degree_left(self):
        return self.alpha.size - 1

    @property
    def degree_right(self):
        return self.beta.size - 1


def center_window(series, i, cfg):
    """Cut the supports around the gap between samples ``i`` and ``i + 1``."""
    lo = i - cfg.support_left + 1
    hi = i + 1 + cfg.support_right
    if i < 0 or lo < 0 or hi > len(series):
        raise WindowOutOfBoundsError(
            f"gap {i} needs samples [{lo}, {hi}) but the series has {len(series)}"
        )
    x, y = series.x, series.y
    zeta = 0.5 * (x[i] + x[i + 1])
    return SampleWindow(
        x_left=x[lo : i + 1] - zeta,
        y_left=y[lo : i + 1].copy(),
        x_right=x[i + 1 : hi] - zeta,
        y_right=y[i + 1 : hi].copy(),
        zeta=float(zeta),
    )


def vandermonde(x, degree):
    """Rows ``[x**degree, ..., x, 1]``; works on stacked abscissae too."""
    if degree < 0:
        raise ValueError("degree must be >= 0")
    x = np.asarray(x, dtype=float)
    return x[..., None] ** np.arange(degree, -1, -1)


def coefficient_index(k, degree_left, degree_right, side):
    """Position of the power-``k`` coefficient of one side within ``gamma``."""
    if side == "left":
        return degree_left - k
    if side == "right":
        return degree_left + 1 + degree_right - k
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def constraint_matrix(n, d_L, d_R):
    """Rows tie ``alpha_k = beta_k`` for ``k = n-1, ..., 0`` (descending)."""
    if d_L < n or d_R < n:
        raise ConfigError("both degrees must be >= n")
    C = np.zeros((n, d_L + d_R + 2))
    for row, k in enumerate(range(n - 1, -1, -1)):
        C[row, coefficient_index(k, d_L, d_R, "left")] = 1.0
        C[row, coefficient_index(k, d_L, d_R, "right")] = -1.0
    return C


def selector_vector(n, d_L, d_R):
    """Vector ``d`` with ``d @ gamma == alpha_n - beta_n``."""
    if d_L < n or d_R < n:
        raise ConfigError("both degrees must be >= n")
    d = np.zeros(d_L + d_R + 2)
    d[coefficient_index(n, d_L, d_R, "left")] = 1.0
    d[coefficient_index(n, d_L, d_R, "right")] = -1.0
    return d


def nullspace_basis(C, rtol=None):
    """Orthonormal basis of the null space of ``C`` from its full SVD.

    Raises
    ------
    RankDeficiencyError
        If ``C`` does not have full row rank.
    """
    C = np.atleast_2d(np.asarray(C, dtype=float))
    rows, cols = C.shape
    if rows > cols:
        raise RankDeficiencyError(f"{rows} constraints on {cols} unknowns")
    _, s, vt = np.linalg.svd(C, full_matrices=True)
    if rtol is None:
        rtol = max(rows, cols) * np.finfo(float).eps
    if s.size and s[-1] <= rtol * s[0]:
        raise RankDeficiencyError("constraint matrix is rank deficient")
    return vt[rows:].T.copy()


def _reduced_pinv(A, cond_threshold):
    # SVD is the rank-revealing factorization; batched over leading axes.
    U, s, Wt = np.linalg.svd(A, full_matrices=False)
    cond = s[..., 0] / s[..., -1]
    worst = np.max(cond)
    if not np.isfinite(worst) or worst > cond_threshold:
        raise IllConditionedError(worst, cond_threshold)
    pinv = np.swapaxes(Wt, -1, -2) @ (np.swapaxes(U, -1, -2) / s[..., :, None])
    return pinv, cond


def solve_coupled_batch(x_left, x_right, cfg):
    """
    Estimator matrices for a stack of window geometries.

    Parameters
    ----------
    x_left : ndarray, shape (W, support_left)
    x_right : ndarray, shape (W, support_right)
    cfg : ApproxConfig

    Returns
    -------
    K : ndarray, shape (W, d_L + d_R + 2, support_left + support_right)
        ``gamma = K @ y`` for each window, in original x-units.
    cond : ndarray, shape (W,)
        Condition numbers of the reduced design matrices.
    """
    x_left = np.atleast_2d(np.asarray(x_left, dtype=float))
    x_right = np.atleast_2d(np.asarray(x_right, dtype=float))
    if x_left.shape[-1] != cfg.support_left or x_right.shape[-1] != cfg.support_right:
        raise ConfigError("window dimensions do not match the configured supports")
    if np.any(x_left >= 0) or np.any(x_right <= 0):
        raise ValueError("left abscissae must be < 0 and right abscissae > 0")
    d_L, d_R, n = cfg.degree_left, cfg.degree_right, cfg.order
    W = x_left.shape[0]

    if cfg.normalize_x:
        scale = np.maximum(np.abs(x_left[:, 0]), np.abs(x_right[:, -1]))
    else:
        scale = np.ones(W)
    u_left = x_left / scale[:, None]
    u_right = x_right / scale[:, None]

    V = np.zeros((W, cfg.n_samples, cfg.n_coefficients))
    V[:, : cfg.support_left, : d_L + 1] = vandermonde(u_left, d_L)
    V[:, cfg.support_left :, d_L + 1 :] = vandermonde(u_right, d_R)

    N = nullspace_basis(constraint_matrix(n, d_L, d_R))
    pinv, cond = _reduced_pinv(V @ N, cfg.cond_threshold)
    K = N @ pinv

    if cfg.normalize_x:
        # coefficient of u**k maps back to x**k through scale**-k
        powers = np.concatenate([np.arange(d_L, -1, -1), np.arange(d_R, -1, -1)])
        K = K * (scale[:, None] ** -powers)[:, :, None]
    return K, cond


def solve_coupled(window, cfg):
    """Fit the coupled pair of polynomials to one window."""
    if window.x_left.size != cfg.support_left or window.x_right.size != cfg.support_right:
        raise ConfigError("window dimensions do not match the configured supports")
    K, cond = solve_coupled_batch(window.x_left[None], window.x_right[None], cfg)
    K = K[0]
    gamma = K @ window.y
    return CoupledFit(
        alpha=gamma[: cfg.degree_left + 1],
        beta=gamma[cfg.degree_left + 1 :],
        K=K,
        order=cfg.order,
        cond=float(cond[0]),
    )
