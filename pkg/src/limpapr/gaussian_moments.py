"""Standard normal densities, tails and truncated second moments.

Every function accepts a scalar or an array. Thresholds ``a`` must be
nonnegative; ``a = inf`` is allowed and returns the analytic limit.
Scalars in give Python floats out.
"""

import numpy as np
from scipy import special

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _out(value, scalar):
    return float(value) if scalar else value


def _threshold(a):
    arr = np.asarray(a, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise ValueError("threshold must be nonnegative")
    return arr, arr.ndim == 0


def std_normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return _out(_INV_SQRT_2PI * np.exp(-0.5 * x * x), x.ndim == 0)


def q_function(x):
    """Upper tail P[H >= x] of the standard normal.

    Evaluated through ``erfc`` so the deep tail keeps full relative accuracy.
    """
    x = np.asarray(x, dtype=float)
    return _out(0.5 * special.erfc(x / np.sqrt(2.0)), x.ndim == 0)


def _a_pdf(a):
    # a * pdf(a), with the a = inf limit set to 0 instead of inf * 0
    with np.errstate(invalid="ignore"):
        val = a * _INV_SQRT_2PI * np.exp(-0.5 * a * a)
    return np.where(np.isinf(a), 0.0, val)


def upper_m1(a):
    """E[H 1{H >= a}] = pdf(a)."""
    a, scalar = _threshold(a)
    return _out(_INV_SQRT_2PI * np.exp(-0.5 * a * a), scalar)


def upper_m2(a):
    """E[H^2 1{H >= a}] = Q(a) + a pdf(a)."""
    a, scalar = _threshold(a)
    return _out(q_function(a) + _a_pdf(a), scalar)


def truncated_square_upper(a):
    """E[(H - a)^2 1{H >= a}] = (1 + a^2) Q(a) - a pdf(a).

    Lies in [0, 1/2]; equals 1/2 at a = 0.
    """
    a, scalar = _threshold(a)
    with np.errstate(invalid="ignore"):
        val = (1.0 + a * a) * q_function(a) - _a_pdf(a)
    val = np.where(np.isinf(a), 0.0, np.maximum(val, 0.0))
    return _out(val, scalar)


def central_square_band(a):
    """E[H^2 1{-a <= H <= a}].

    Equals P[X <= a^2] for X chi-square with 3 degrees of freedom, i.e. the
    regularized lower incomplete gamma P(3/2, a^2/2); unlike 1 - 2 E[H^2 1{H >= a}]
    this keeps full relative accuracy for small ``a``.
    """
    a, scalar = _threshold(a)
    with np.errstate(over="ignore"):
        val = special.gammainc(1.5, 0.5 * a * a)
    return _out(val, scalar)
