"""Map a saddle point to the limiting performance metrics and laws."""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import gaussian_moments as gm
from ._quadrature import adaptive_simpson, gauss_hermite_expectation
from .exceptions import DegenerateError, NegativePowerError, QuadratureError
from .saddle_point import SaddlePoint, SystemParams, solve_saddle

POWER_CLAMP = 1e-10


@dataclass(frozen=True)
class DistortionLaw:
    """Gaussian law of a distortion entry conditional on the sent symbol."""

    mean_given_s_plus: float
    mean_given_s_minus: float
    std: float

    def mean(self, s):
        return self.mean_given_s_plus if s > 0 else self.mean_given_s_minus

    @property
    def second_moment(self):
        return self.mean_given_s_plus ** 2 + self.std ** 2


@dataclass(frozen=True)
class AsymptoticReport:
    pb_star: float
    pd_star: float
    sinr_lb_star: float
    sinr_up_star: float
    pe_star: float
    distortion_std: float
    distortion_mean_mag: float
    saddle: SaddlePoint

    def as_dict(self):
        sp = self.saddle
        return {
            "beta_star": sp.beta_star,
            "tau_star": sp.tau_star,
            "alpha_star": sp.alpha_star,
            "phi_bar": sp.phi_bar,
            "residual": sp.residual,
            "pb_star": self.pb_star,
            "pd_star": self.pd_star,
            "sinr_lb_star": self.sinr_lb_star,
            "sinr_up_star": self.sinr_up_star,
            "pe_star": self.pe_star,
        }


def _power_gap(sp, params):
    # tau^2 delta - rho, the coefficient under the square root of the H term
    return params.delta * sp.tau_star ** 2 - params.rho


def per_antenna_power(sp, params):
    gap = _power_gap(sp, params)
    if gap < -POWER_CLAMP:
        raise NegativePowerError(f"delta tau*^2 - rho = {gap:.3e} < 0; corrupted saddle point")
    return max(gap, 0.0)


def distortion_power(sp, params):
    pd = sp.beta_star ** 2 / (4.0 * params.delta)
    assert pd <= params.rho + 1e-9, "distortion power exceeds rho"
    return pd


def sinr_lb(sp, params):
    return params.rho / (sp.beta_star ** 2 / (4.0 * params.delta) + params.sigma2)


def _distortion_coeffs(sp, params):
    # e = c_h * H - c_s * S
    denom = sp.tau_star * params.delta
    c_h = 0.5 * sp.beta_star * math.sqrt(per_antenna_power(sp, params)) / denom
    c_s = 0.5 * sp.beta_star * math.sqrt(params.rho) / denom
    return c_h, c_s


def sinr_up(sp, params):
    """E_{H,S}[rho / (e^2 + sigma^2)] under the limiting distortion law.

    The S average folds into S = +1 by the symmetry H -> -H. What is left is
    a Gaussian averaged against a Lorentzian centred at c_s / c_h, i.e. a
    Voigt profile, so with gamma = sigma / c_h

        E[1 / ((H - p)^2 + gamma^2)] = sqrt(pi/2) / gamma * Re w((p + i gamma) / sqrt(2))

    where w is the Faddeeva function. ``sinr_up_quadrature`` computes the same
    number by direct integration.
    """
    rho, s2 = params.rho, params.sigma2
    c_h, c_s = _distortion_coeffs(sp, params)
    if c_h == 0.0:
        if s2 == 0.0 and c_s == 0.0:
            return math.inf
        return rho / (c_s ** 2 + s2)
    if s2 == 0.0:
        # 1/(x - x0)^2 is not integrable at the pole
        return math.inf
    sigma = math.sqrt(s2)
    z = complex(c_s / c_h, sigma / c_h) / math.sqrt(2.0)
    return rho * math.sqrt(math.pi / 2.0) / (c_h * sigma) * float(special.wofz(z).real)


def sinr_up_quadrature(sp, params, tol=1e-10):
    """sinr_up by adaptive Simpson split at the pole of the integrand.

    Checked against 200-node Gauss-Hermite when the integrand is smooth
    enough for it. Raises QuadratureError when either scheme falls short.
    """
    rho, s2 = params.rho, params.sigma2
    c_h, c_s = _distortion_coeffs(sp, params)
    if c_h == 0.0:
        if s2 == 0.0 and c_s == 0.0:
            return math.inf
        return rho / (c_s ** 2 + s2)
    if s2 == 0.0:
        # 1/(x - x0)^2 is not integrable at the pole
        return math.inf

    def integrand(h):
        e = c_h * h - c_s
        return rho / (e * e + s2) * math.exp(-0.5 * h * h) / math.sqrt(2 * math.pi)

    pole = c_s / c_h
    # Gaussian weight beyond 12 is below 1e-32 and the integrand is bounded by rho/sigma^2
    lo, hi = -12.0, 12.0
    # the peak has width sigma / c_h; split there so Simpson sees it at a node
    width = math.sqrt(s2) / c_h
    # size of the answer: the larger of the Jensen lower bound and the mass of
    # the Lorentzian spike at the pole, so the tolerance stays relative
    jensen = rho / (c_h * c_h + c_s * c_s + s2)
    spike = rho * math.pi / (c_h * math.sqrt(s2)) * math.exp(-0.5 * pole * pole) / math.sqrt(2 * math.pi)
    scale = max(jensen, spike)
    base = np.linspace(lo, hi, 25).tolist()
    extra = [k for k in (pole - 10 * width, pole - width, pole, pole + width, pole + 10 * width)
             if lo < k < hi]
    knots = sorted(set(base + extra))
    value, ok = 0.0, True
    for a, b in zip(knots[:-1], knots[1:]):
        v, good = adaptive_simpson(integrand, a, b, tol=tol * scale / len(knots))
        value += v
        ok = ok and good
    if not ok:
        raise QuadratureError("adaptive Simpson did not reach tolerance for sinr_up")
    if width > 0.5:
        gh = gauss_hermite_expectation(lambda h: rho / ((c_h * h - c_s) ** 2 + s2))
        if abs(gh - value) > 1e-6 * abs(value):
            raise QuadratureError(
                f"sinr_up quadrature mismatch: simpson {value!r} vs gauss-hermite {gh!r}")
    return value


def bit_error_probability(sp, params):
    c_h, c_s = _distortion_coeffs(sp, params)
    var = c_h ** 2 + params.sigma2
    num = math.sqrt(params.rho) - c_s
    if var == 0.0:
        raise DegenerateError("zero noise and zero distortion spread: Q argument is 0/0")
    return gm.q_function(num / math.sqrt(var))


def theta_map(gamma, sp, params):
    """Clipping map giving the limiting law of the precoded entries: theta(H)."""
    root_p = math.sqrt(params.p_max)
    g = np.asarray(gamma, dtype=float)
    out = np.clip(g / sp.alpha_star, -root_p, root_p)
    return float(out) if g.ndim == 0 else out


def distortion_law(sp, params):
    c_h, c_s = _distortion_coeffs(sp, params)
    return DistortionLaw(mean_given_s_plus=-c_s, mean_given_s_minus=c_s, std=c_h)


def report_from_saddle(sp, params):
    c_h, c_s = _distortion_coeffs(sp, params)
    return AsymptoticReport(
        pb_star=per_antenna_power(sp, params),
        pd_star=distortion_power(sp, params),
        sinr_lb_star=sinr_lb(sp, params),
        sinr_up_star=sinr_up(sp, params),
        pe_star=bit_error_probability(sp, params),
        distortion_std=c_h,
        distortion_mean_mag=c_s,
        saddle=sp,
    )


def full_report(params: SystemParams) -> AsymptoticReport:
    return report_from_saddle(solve_saddle(params), params)
