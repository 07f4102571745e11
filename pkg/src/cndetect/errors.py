"""Approximation, combined and extrapolation errors of a coupled fit."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ErrorTriple",
    "analytic_combined_error",
    "approximation_error",
    "combined_error",
    "error_triple",
    "extrapolation_error",
    "integral_factor",
]


@dataclass(frozen=True)
class ErrorTriple:
    e_approx: float
    e_combined: float
    e_extrap: float

    def __post_init__(self):
        for name in ("e_approx", "e_combined", "e_extrap"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


def _sq(v):
    return float(v @ v)


def approximation_error(fit, window):
    """Squared residual of each polynomial on its own side."""
    r_left = window.y_left - np.polyval(fit.alpha, window.x_left)
    r_right = window.y_right - np.polyval(fit.beta, window.x_right)
    return _sq(r_left) + _sq(r_right)


def _padded_difference(alpha, beta):
    size = max(alpha.size, beta.size)
    diff = np.zeros(size)
    diff[size - alpha.size :] += alpha
    diff[size - beta.size :] -= beta
    return diff


def combined_error(fit, window):
    """
    ``||e_f - e_g||^2`` over every abscissa of the window.

    With the continuity constraints in force and both degrees equal to the
    order, this is ``(alpha_n - beta_n)**2 * sum(x**(2n))``.  Higher degrees
    contribute their extra coefficient differences as well.
    """
    diff = _padded_difference(fit.alpha, fit.beta)
    return _sq(np.polyval(diff, window.x))


def integral_factor(x_min, x_max, n):
    """``(x_max**(2n+1) - x_min**(2n+1)) / (2n+1)``."""
    if not x_min < x_max:
        raise ValueError("x_min must be smaller than x_max")
    p = 2 * n + 1
    return (x_max**p - x_min**p) / p


def analytic_combined_error(alpha_n, beta_n, x_min, x_max, n):
    """Integral of ``((alpha_n - beta_n) * x**n)**2`` over ``[x_min, x_max]``."""
    return (alpha_n - beta_n) ** 2 * integral_factor(x_min, x_max, n)


def extrapolation_error(fit, window):
    """Squared residual of each polynomial on the opposite side."""
    r_left = window.y_left - np.polyval(fit.beta, window.x_left)
    r_right = window.y_right - np.polyval(fit.alpha, window.x_right)
    return _sq(r_left) + _sq(r_right)


def error_triple(fit, window):
    return ErrorTriple(
        approximation_error(fit, window),
        combined_error(fit, window),
        extrapolation_error(fit, window),
    )
