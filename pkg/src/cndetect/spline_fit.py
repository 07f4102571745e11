"""Least-squares B-splines on clamped knot vectors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

__all__ = [
    "InadmissibleKnotsError",
    "SplineModel",
    "basis_matrix",
    "clamped_knot_vector",
    "eval_spline",
    "fit_spline",
]


class InadmissibleKnotsError(ValueError):
    """Knot placement leaves a basis function without data support."""


@dataclass(frozen=True)
class SplineModel:
    degree: int
    interior_knots: np.ndarray
    knots: np.ndarray
    coefficients: np.ndarray
    rms_residual: float = np.nan

    def __post_init__(self):
        t = self.knots
        if np.any(np.diff(t) < 0):
            raise ValueError("knot vector must be non-decreasing")
        if t.size - self.degree - 1 != self.coefficients.size:
            raise ValueError("number of coefficients does not match the knot vector")

    @property
    def domain(self):
        return float(self.knots[self.degree]), float(self.knots[-self.degree - 1])

    def __call__(self, x):
        return eval_spline(self, x)

    def derivative(self):
        """The derivative as a spline of one degree lower."""
        p, t, c = self.degree, self.knots, self.coefficients
        if p == 0:
            raise ValueError("cannot differentiate a piecewise constant spline")
        denom = t[p + 1 : -1] - t[1:-p - 1]
        dc = p * np.diff(c) / np.where(denom > 0, denom, 1.0)
        return SplineModel(p - 1, self.interior_knots, t[1:-1], dc)


def clamped_knot_vector(a, b, interior, degree):
    interior = np.sort(np.asarray(interior, dtype=float))
    return np.concatenate([np.full(degree + 1, a), interior, np.full(degree + 1, b)])


def _find_span(t, degree, x):
    n_basis = t.size - degree - 1
    span = np.searchsorted(t, x, side="right") - 1
    # the right end of the domain belongs to the last non-empty interval
    return np.clip(span, degree, n_basis - 1)


def basis_matrix(t, degree, x):
    """
    Collocation matrix ``B[i, j] = B_j(x_i)`` by the Cox-de Boor recursion.

    Only the ``degree + 1`` functions that are nonzero on each span are
    computed; the rest of the row is zero.
    """
    t = np.asarray(t, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n_basis = t.size - degree - 1
    span = _find_span(t, degree, x)
    N = np.zeros((x.size, degree + 1))
    N[:, 0] = 1.0
    left = np.zeros((x.size, degree + 1))
    right = np.zeros((x.size, degree + 1))
    for j in range(1, degree + 1):
        left[:, j] = x - t[span + 1 - j]
        right[:, j] = t[span + j] - x
        saved = np.zeros(x.size)
        for r in range(j):
            temp = N[:, r] / (right[:, r + 1] + left[:, j - r])
            N[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        N[:, j] = saved
    B = np.zeros((x.size, n_basis))
    cols = span[:, None] - degree + np.arange(degree + 1)
    np.put_along_axis(B, cols, N, axis=1)
    return B


def _check_admissible(t, degree, x):
    # Schoenberg-Whitney: assign increasing, distinct sites to each basis
    # function inside the interior of its support (closed at domain ends).
    n_basis = t.size - degree - 1
    a, b = t[degree], t[-degree - 1]
    k = 0
    for j in range(n_basis):
        lo, hi = t[j], t[j + degree + 1]
        while k < x.size:
            xi = x[k]
            inside = (lo < xi or (xi == a and lo == a)) and (xi < hi or (xi == b and hi == b))
            k += 1
            if inside:
                break
        else:
            raise InadmissibleKnotsError(
                f"basis function {j} on [{lo}, {hi}] has no data site of its own"
            )


def fit_spline(series, interior_knots=(), degree=2):
    """
    Least-squares spline over the data range with the given interior knots.

    Solved through a QR factorization of the collocation matrix.
    """
    x, y = series.x, series.y
    a, b = float(x[0]), float(x[-1])
    interior = np.sort(np.asarray(interior_knots, dtype=float).ravel())
    if np.any(interior <= a) or np.any(interior >= b):
        raise InadmissibleKnotsError("interior knots must lie strictly inside the data range")
    if degree < 0:
        raise ValueError("degree must be >= 0")
    t = clamped_knot_vector(a, b, interior, degree)
    _check_admissible(t, degree, x)
    B = basis_matrix(t, degree, x)
    Q, R = np.linalg.qr(B)
    c = solve_triangular(R, Q.T @ y)
    rms = float(np.sqrt(np.mean((y - B @ c) ** 2)))
    return SplineModel(degree, interior, t, c, rms)


def eval_spline(model, x):
    """Evaluate with de Boor's algorithm; ``x`` must lie in the spline domain."""
    p, t, c = model.degree, model.knots, model.coefficients
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    a, b = model.domain
    if np.any(x < a) or np.any(x > b):
        raise ValueError(f"x outside the spline domain [{a}, {b}]")
    span = _find_span(t, p, x)
    d = c[span[:, None] - p + np.arange(p + 1)]
    for r in range(1, p + 1):
        for j in range(p, r - 1, -1):
            i = span - p + j
            denom = t[i + p + 1 - r] - t[i]
            w = (x - t[i]) / np.where(denom > 0, denom, 1.0)
            d[:, j] = (1.0 - w) * d[:, j - 1] + w * d[:, j]
    out = d[:, p]
    return out[0] if scalar else out
