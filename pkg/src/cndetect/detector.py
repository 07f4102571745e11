"""
Scanning a series over its interstitial points and picking discontinuities.

Every admissible gap between neighbouring samples gets one coupled fit.  The
resulting profiles of the Taylor jump and the three error measures are then
searched for isolated peaks of the squared jump that are statistically
significant and coincide with a peak of the extrapolation error.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core_approx import ApproxConfig, selector_vector, solve_coupled_batch, vandermonde
from .taylor import two_sided_quantile

__all__ = [
    "DetectionReport",
    "Knot",
    "PointDiagnostics",
    "SeriesTooShortError",
    "detect",
    "estimate_noise_sigma",
    "find_knots",
    "local_maxima",
    "profile_arrays",
    "scan",
]

PROFILE_FIELDS = ("zeta", "delta_t", "variance", "z_score", "e_approx", "e_combined", "e_extrap")


class SeriesTooShortError(ValueError):
    """The series cannot hold a single window of the requested supports."""


@dataclass(frozen=True)
class PointDiagnostics:
    zeta: float
    delta_t: float
    variance: float
    e_approx: float
    e_combined: float
    e_extrap: float
    z_score: float


@dataclass(frozen=True)
class Knot:
    zeta: float
    delta_t: float
    z_score: float
    sign: int
    index: int

    def as_dict(self):
        return {"zeta": self.zeta, "delta_t": self.delta_t, "z": self.z_score, "sign": self.sign}


@dataclass
class DetectionReport:
    profile: list
    knots: list
    config: dict = field(default_factory=dict)
    sigma: float | None = None

    @property
    def knot_locations(self):
        return np.array([k.zeta for k in self.knots])

    def to_dict(self, profile_path=None):
        return {
            "schema_version": 1,
            "config": dict(self.config),
            "sigma_hat": self.sigma,
            "knots": [k.as_dict() for k in self.knots],
            "profile_path": profile_path,
        }


def _windows(series, cfg):
    l_L, l_R = cfg.support_left, cfg.support_right
    gaps = np.arange(l_L - 1, len(series) - l_R)
    if gaps.size == 0:
        raise SeriesTooShortError(
            f"{len(series)} samples cannot hold supports of {l_L} + {l_R}"
        )
    idx = np.concatenate(
        [gaps[:, None] - l_L + 1 + np.arange(l_L), gaps[:, None] + 1 + np.arange(l_R)],
        axis=1,
    )
    x, y = series.x, series.y
    zeta = 0.5 * (x[gaps] + x[gaps + 1])
    X = x[idx] - zeta[:, None]
    return gaps, idx, zeta, X, y[idx]


def _fit_all(series, cfg):
    gaps, idx, zeta, X, Y = _windows(series, cfg)
    l_L, d_L = cfg.support_left, cfg.degree_left
    K, _ = solve_coupled_batch(X[:, :l_L], X[:, l_L:], cfg)
    gamma = np.einsum("wpm,wm->wp", K, Y)
    alpha, beta = gamma[:, : d_L + 1], gamma[:, d_L + 1 :]
    fit_left = np.einsum("wmp,wp->wm", vandermonde(X[:, :l_L], d_L), alpha)
    fit_right = np.einsum("wmp,wp->wm", vandermonde(X[:, l_L:], cfg.degree_right), beta)
    e_approx = np.sum((Y[:, :l_L] - fit_left) ** 2, axis=1) + np.sum(
        (Y[:, l_L:] - fit_right) ** 2, axis=1
    )
    return idx, zeta, X, Y, K, gamma, e_approx


def _sigma_from_residuals(e_approx, cfg):
    dof = cfg.n_coefficients - cfg.order
    return float(np.median(np.sqrt(e_approx / (cfg.n_samples - dof))))


def estimate_noise_sigma(series, cfg):
    """Median over windows of the residual standard deviation of the coupled fit."""
    return _sigma_from_residuals(_fit_all(series, cfg)[6], cfg)


def _window_variances(K, d, idx, sigma, covariance):
    w = np.einsum("wpm,p->wm", K, d)
    if covariance is not None:
        cov = np.asarray(covariance, dtype=float)
        blocks = cov[idx[:, :, None], idx[:, None, :]]
        var = np.einsum("wi,wij,wj->w", w, blocks, w)
    else:
        sig = np.asarray(sigma, dtype=float)
        s2 = sig**2 if sig.ndim == 0 else (sig**2)[idx]
        var = np.sum(w**2 * s2, axis=-1)
    return np.maximum(var, 0.0)


def _z_scores(delta, var):
    with np.errstate(divide="ignore", invalid="ignore"):
        z = delta / np.sqrt(var)
    zero = var == 0
    z[zero] = np.where(delta[zero] == 0, 0.0, np.copysign(np.inf, delta[zero]))
    return z


def scan(series, cfg=None, sigma=None, covariance=None):
    """
    Diagnostics at every interstitial point with full support on both sides.

    Parameters
    ----------
    series : SampleSeries
    cfg : ApproxConfig, optional
    sigma : float or ndarray, optional
        Noise standard deviation, scalar or one value per sample.  Estimated
        from the data when neither ``sigma`` nor ``covariance`` is given.
    covariance : ndarray, optional
        Full observation covariance of the series.

    Returns
    -------
    list of PointDiagnostics
        Ordered by increasing ``zeta``.
    """
    cfg = cfg or ApproxConfig()
    return _to_profile(_scan_arrays(series, cfg, sigma, covariance))


def _to_profile(arrays):
    fields = ("zeta", "delta_t", "variance", "e_approx", "e_combined", "e_extrap", "z_score")
    return [
        PointDiagnostics(*(float(arrays[f][j]) for f in fields))
        for j in range(arrays["zeta"].size)
    ]


def _scan_arrays(series, cfg, sigma=None, covariance=None):
    idx, zeta, X, Y, K, gamma, e_approx = _fit_all(series, cfg)
    d_L, n = cfg.degree_left, cfg.order
    if sigma is None and covariance is None:
        sigma = _sigma_from_residuals(e_approx, cfg)
    d = selector_vector(n, d_L, cfg.degree_right)
    delta = gamma @ d
    var = _window_variances(K, d, idx, sigma, covariance)

    alpha, beta = gamma[:, : d_L + 1], gamma[:, d_L + 1 :]
    size = max(alpha.shape[1], beta.shape[1])
    diff = np.zeros((gamma.shape[0], size))
    diff[:, size - alpha.shape[1] :] += alpha
    diff[:, size - beta.shape[1] :] -= beta
    e_combined = np.sum(np.einsum("wmp,wp->wm", vandermonde(X, size - 1), diff) ** 2, axis=1)

    l_L = cfg.support_left
    ext_left = np.einsum("wmp,wp->wm", vandermonde(X[:, :l_L], cfg.degree_right), beta)
    ext_right = np.einsum("wmp,wp->wm", vandermonde(X[:, l_L:], d_L), alpha)
    e_extrap = np.sum((Y[:, :l_L] - ext_left) ** 2, axis=1) + np.sum(
        (Y[:, l_L:] - ext_right) ** 2, axis=1
    )
    return {
        "zeta": zeta,
        "delta_t": delta,
        "variance": var,
        "z_score": _z_scores(delta, var),
        "e_approx": e_approx,
        "e_combined": e_combined,
        "e_extrap": e_extrap,
        "sigma": float(np.mean(sigma)) if covariance is None else None,
    }


def profile_arrays(profile):
    """Column arrays keyed by field name."""
    return {f: np.array([getattr(p, f) for p in profile], dtype=float) for f in PROFILE_FIELDS}


def local_maxima(values, radius=1, strict=True):
    """
    Indices whose value beats every other value within ``+-radius``.

    Near the ends the neighbourhood is truncated.  With ``strict=False``
    ties count as maxima.
    """
    v = np.asarray(values, dtype=float)
    out = []
    for j in range(v.size):
        lo, hi = max(0, j - radius), min(v.size, j + radius + 1)
        others = np.concatenate([v[lo:j], v[j + 1 : hi]])
        if others.size == 0:
            continue
        if (strict and np.all(v[j] > others)) or (not strict and np.all(v[j] >= others)):
            out.append(j)
    return np.array(out, dtype=int)


def find_knots(
    profile, confidence=0.95, min_separation=None, config=None, sigma=None, familywise=True
):
    """
    Accept peaks of the squared Taylor jump as discontinuities.

    A point ``j`` becomes a knot when ``delta_t**2`` is a strict maximum over
    ``j +- min_separation``, its z-score is significant at ``confidence``,
    and the extrapolation error has a local maximum within one index of
    ``j``.  Knots closer than ``min_separation`` keep the larger ``|z|``.

    With ``familywise`` the confidence holds for the whole profile: each
    point is tested at level ``(1 - confidence) / len(profile)``
    (Bonferroni), so pure noise yields no knot with probability of at least
    ``confidence``.  Otherwise every point is tested at ``confidence``.
    """
    cols = profile_arrays(profile)
    config = dict(config or {})
    if min_separation is None:
        min_separation = max(config.get("support_left", 1), config.get("support_right", 1))
    if min_separation < 1:
        raise ValueError("min_separation must be >= 1")
    if not 0 < confidence < 1:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
    point_confidence = confidence
    if familywise:
        point_confidence = 1.0 - (1.0 - confidence) / max(len(profile), 1)
    q = two_sided_quantile(point_confidence)
    config.update(
        confidence=confidence, min_separation=int(min_separation), familywise=bool(familywise)
    )

    dt2 = cols["delta_t"] ** 2
    ee_peaks = set(local_maxima(cols["e_extrap"], radius=1, strict=False).tolist())
    candidates = []
    for j in local_maxima(dt2, radius=min_separation):
        if not abs(cols["z_score"][j]) > q:
            continue
        if not ee_peaks.intersection((j - 1, j, j + 1)):
            continue
        candidates.append(int(j))

    kept = []
    for j in sorted(candidates, key=lambda j: -abs(cols["z_score"][j])):
        if all(abs(j - k) >= min_separation for k in kept):
            kept.append(j)
    knots = [
        Knot(
            zeta=float(cols["zeta"][j]),
            delta_t=float(cols["delta_t"][j]),
            z_score=float(cols["z_score"][j]),
            sign=int(np.sign(cols["delta_t"][j])),
            index=j,
        )
        for j in sorted(kept)
    ]
    return DetectionReport(profile=list(profile), knots=knots, config=config, sigma=sigma)


def detect(
    series,
    cfg=None,
    sigma=None,
    confidence=0.95,
    min_separation=None,
    covariance=None,
    familywise=True,
):
    """Scan ``series`` and return the gated knots with the full profile."""
    cfg = cfg or ApproxConfig()
    arrays = _scan_arrays(series, cfg, sigma, covariance)
    profile = _to_profile(arrays)
    if min_separation is None:
        min_separation = max(cfg.support_left, cfg.support_right)
    return find_knots(
        profile,
        confidence,
        min_separation,
        config=cfg.as_dict(),
        sigma=arrays["sigma"],
        familywise=familywise,
    )
