import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from limpapr import gaussian_moments as gm
from limpapr._quadrature import adaptive_simpson

# 40-digit mpmath evaluations, rounded
PDF_1 = 0.24197072451914335
Q_1_6449 = 0.049995217468346303
UPPER_M2_1 = 0.40062597845060040
TRUNC_2 = 0.0057687267145199321
BAND_1 = 0.19874804309879920

thresholds = st.floats(min_value=0.0, max_value=40.0, allow_nan=False)


def _simpson(f, lo, hi, panels=48):
    # fixed panels first: a single Simpson panel can sample a peaked integrand
    # only where it is ~0 and accept that as converged
    edges = np.linspace(lo, hi, panels + 1)
    total = 0.0
    for left, right in zip(edges[:-1], edges[1:]):
        value, ok = adaptive_simpson(f, left, right, tol=1e-12 / panels)
        assert ok
        total += value
    return total


def _simpson_moment(g, a):
    # the Gaussian weight beyond a + 12 is below 1e-30
    return _simpson(lambda h: g(h) * gm.std_normal_pdf(h), a, a + 12.0)


def test_pdf_values():
    assert gm.std_normal_pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-15)
    np.testing.assert_allclose(gm.std_normal_pdf(1.0), PDF_1, rtol=1e-14)
    assert gm.std_normal_pdf(-1.7) == gm.std_normal_pdf(1.7)


def test_q_function_values():
    assert gm.q_function(0.0) == 0.5
    assert gm.q_function(math.inf) == 0.0
    np.testing.assert_allclose(gm.q_function(1.6449), Q_1_6449, rtol=1e-12)
    # deep tail keeps relative accuracy where 1 - Phi would return 0
    np.testing.assert_allclose(gm.q_function(10.0), 7.619853024160527e-24, rtol=1e-12)


@given(st.floats(min_value=-30, max_value=30))
def test_q_symmetry(x):
    assert gm.q_function(x) + gm.q_function(-x) == pytest.approx(1.0, abs=1e-15)


def test_moment_examples():
    assert gm.upper_m1(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi))
    np.testing.assert_allclose(gm.upper_m1(1.0), PDF_1, rtol=1e-14)
    assert gm.upper_m2(0.0) == pytest.approx(0.5, abs=1e-15)
    np.testing.assert_allclose(gm.upper_m2(1.0), UPPER_M2_1, rtol=1e-13)
    assert gm.truncated_square_upper(0.0) == pytest.approx(0.5, abs=1e-15)
    np.testing.assert_allclose(gm.truncated_square_upper(2.0), TRUNC_2, rtol=1e-12)
    assert gm.central_square_band(0.0) == 0.0
    np.testing.assert_allclose(gm.central_square_band(1.0), BAND_1, rtol=1e-13)


def test_infinite_threshold():
    assert gm.upper_m1(math.inf) == 0.0
    assert gm.upper_m2(math.inf) == 0.0
    assert gm.truncated_square_upper(math.inf) == 0.0
    assert gm.central_square_band(math.inf) == 1.0


def test_negative_threshold_rejected():
    with pytest.raises(ValueError):
        gm.upper_m2(-0.1)
    with pytest.raises(ValueError):
        gm.central_square_band(np.array([0.5, -1.0]))


def test_vectorized_matches_scalar():
    a = np.linspace(0, 5, 11)
    for fn in (gm.upper_m1, gm.upper_m2, gm.truncated_square_upper, gm.central_square_band):
        out = fn(a)
        assert isinstance(out, np.ndarray)
        np.testing.assert_array_equal(out, [fn(float(v)) for v in a])
    assert isinstance(gm.q_function(1.0), float)


@pytest.mark.parametrize("a", np.round(np.arange(0, 61) * 0.1, 10))
def test_against_simpson(a):
    a = float(a)
    np.testing.assert_allclose(gm.q_function(a), _simpson_moment(lambda h: 1.0, a), atol=1e-10)
    np.testing.assert_allclose(gm.upper_m1(a), _simpson_moment(lambda h: h, a), atol=1e-10)
    np.testing.assert_allclose(gm.upper_m2(a), _simpson_moment(lambda h: h * h, a), atol=1e-10)
    np.testing.assert_allclose(gm.truncated_square_upper(a),
                               _simpson_moment(lambda h: (h - a) ** 2, a), atol=1e-10)
    band = _simpson(lambda h: h * h * gm.std_normal_pdf(h), -a, a) if a > 0 else 0.0
    np.testing.assert_allclose(gm.central_square_band(a), band, atol=1e-10)


@given(thresholds)
def test_band_plus_tails_is_one(a):
    assert gm.central_square_band(a) + 2 * gm.upper_m2(a) == pytest.approx(1.0, abs=1e-14)


@given(st.floats(min_value=0.0, max_value=8.0))
def test_truncated_square_expansion(a):
    expanded = gm.upper_m2(a) - 2 * a * gm.upper_m1(a) + a * a * gm.q_function(a)
    assert gm.truncated_square_upper(a) == pytest.approx(expanded, abs=1e-13)


@settings(max_examples=200)
@given(thresholds, thresholds)
def test_monotonicity(a, b):
    lo, hi = min(a, b), max(a, b)
    for fn in (gm.q_function, gm.upper_m1, gm.upper_m2, gm.truncated_square_upper):
        assert fn(hi) <= fn(lo)
    assert gm.central_square_band(hi) >= gm.central_square_band(lo)


@given(thresholds)
def test_ranges(a):
    assert 0.0 <= gm.truncated_square_upper(a) <= 0.5
    assert 0.0 <= gm.central_square_band(a) <= 1.0
