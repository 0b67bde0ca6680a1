"""Closed-form limits: RZF/ZF (P -> inf) and the delta, rho -> 0 / inf regimes.

Every evaluator returns the limit or expansion terms as written, with no
attempt to estimate the unsigned remainders.
"""

import enum
import math
from dataclasses import dataclass
from typing import Optional

from .exceptions import DegenerateError, InfeasibleError
from .gaussian_moments import q_function

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class Regime(str, enum.Enum):
    RZF_LIMIT = "RzfLimit"
    ZF_LIMIT = "ZfLimit"
    SMALL_DELTA = "SmallDelta"
    LARGE_DELTA = "LargeDelta"
    SMALL_RHO = "SmallRho"
    LARGE_RHO = "LargeRho"


@dataclass(frozen=True)
class LimitReport:
    regime: Regime
    beta_limit: float
    tau_limit: float
    pb: float
    pd: float
    sinr_lb: float
    pe: float
    s_star: Optional[float] = None


def rzf_s_star(delta, lam):
    """Positive root of delta - 1/s - 1/(1 + lam*s) = 0."""
    if lam <= 0 or delta <= 0:
        raise ValueError("rzf_s_star needs delta > 0 and lam > 0")
    b = delta - lam - 1.0
    disc = math.sqrt(b * b + 4.0 * delta * lam)
    if b > 0:
        # conjugate form avoids cancelling disc against b
        return 2.0 / (disc + b)
    return (disc - b) / (2.0 * delta * lam)


def _rzf_terms(delta, lam, rho, sigma2):
    s = rzf_s_star(delta, lam)
    w = 1.0 + lam * s
    eff = delta - 1.0 / (w * w)
    tau = math.sqrt(rho) / math.sqrt(eff)
    beta = 2.0 * math.sqrt(rho) / (s * math.sqrt(eff))
    pb = rho / (delta * w * w - 1.0)
    pd = rho / (s * s * delta * eff)
    # Q argument of the general bit error formula evaluated at the RZF saddle point;
    # the power term is pb = rho / (delta (1 + lam s)^2 - 1)
    shift = math.sqrt(rho) * (delta * s - 1.0)
    spread = math.sqrt(sigma2 * delta * delta * s * s + pb)
    return s, tau, beta, pb, pd, shift, spread


def rzf_limit(params):
    p = params
    if p.lam <= 0:
        raise ValueError("rzf_limit needs lam > 0")
    s, tau, beta, pb, pd, shift, spread = _rzf_terms(p.delta, p.lam, p.rho, p.sigma2)
    gain = s * s * p.delta * (p.delta - 1.0 / (1.0 + p.lam * s) ** 2)
    sinr = gain / (1.0 + p.sigma2 / p.rho * gain)
    pe = q_function(shift / spread) if spread > 0 else 0.0
    return LimitReport(Regime.RZF_LIMIT, beta, tau, pb, pd, sinr, pe, s_star=s)


def _require_zf(params):
    if params.delta <= 1:
        raise InfeasibleError(f"zero-forcing limit needs delta > 1 (got {params.delta})")


def zf_limit(params):
    p = params
    _require_zf(p)
    tau = math.sqrt(p.rho / (p.delta - 1.0))
    beta = 2.0 * math.sqrt(p.rho * (p.delta - 1.0))
    pd = p.rho * (1.0 - 1.0 / p.delta)
    pe = q_function(math.sqrt(p.rho) / math.sqrt(p.rho * (p.delta - 1.0) + p.sigma2 * p.delta ** 2))
    return LimitReport(Regime.ZF_LIMIT, beta, tau, p.rho / (p.delta - 1.0), pd,
                       p.rho / (pd + p.sigma2), pe)


def small_delta_limit(params):
    """delta -> 0 with lam > 0; tau/beta fields carry the scaled equivalents at this delta."""
    p = params
    if p.lam <= 0:
        raise ValueError("small_delta_limit needs lam > 0")
    if p.sigma2 == 0:
        raise DegenerateError("small-delta bit error limit divides by sigma")
    gain = 1.0 + 1.0 / p.lam
    pd = p.rho / gain ** 2
    return LimitReport(
        Regime.SMALL_DELTA,
        beta_limit=2.0 * math.sqrt(p.rho * p.delta) / gain,
        tau_limit=math.sqrt(p.rho / p.delta),
        pb=0.0,
        pd=pd,
        sinr_lb=p.rho / (pd + p.sigma2),
        pe=q_function(math.sqrt(p.rho) / ((p.lam + 1.0) * p.sigma)),
    )


def large_delta_limit(params):
    p = params
    return LimitReport(
        Regime.LARGE_DELTA,
        beta_limit=2.0 * math.sqrt(p.rho * p.delta),
        tau_limit=math.sqrt(p.rho / p.delta),
        pb=0.0,
        pd=p.rho,
        sinr_lb=p.rho / (p.rho + p.sigma2),
        pe=0.5,
    )


def small_rho_limit(params):
    """Leading-order equivalents as rho -> 0.

    ``pe`` is the first-order expansion around 1/2 and is not clamped.
    """
    p = params
    if p.lam == 0:
        _require_zf(p)
    if p.sigma2 == 0:
        raise DegenerateError("small-rho equivalents divide by sigma^2")
    sinr = p.rho / p.sigma2
    if p.lam > 0:
        s, tau, beta, pb, pd, shift, spread = _rzf_terms(p.delta, p.lam, p.rho, p.sigma2)
        pe = 0.5 - _INV_SQRT_2PI * shift / spread
        return LimitReport(Regime.SMALL_RHO, beta, tau, pb, pd, sinr, pe, s_star=s)
    tau = math.sqrt(p.rho / (p.delta - 1.0))
    beta = 2.0 * math.sqrt(p.rho * (p.delta - 1.0))
    pe = 0.5 - _INV_SQRT_2PI * math.sqrt(p.rho) / math.sqrt(
        p.rho * (p.delta - 1.0) + p.sigma2 * p.delta ** 2)
    return LimitReport(Regime.SMALL_RHO, beta, tau, p.rho / (p.delta - 1.0),
                       p.rho * (p.delta - 1.0) / p.delta, sinr, pe)


def large_rho_expansion(params):
    """Leading plus first-order terms as rho -> inf.

    The distortion power expansion has an unspecified O(1) remainder, so
    ``pd`` is only meaningful relative to rho.
    """
    p = params
    P = p.p_max
    tau = math.sqrt(p.rho / p.delta) + P / (2.0 * math.sqrt(p.delta * p.rho))
    beta = 2.0 * math.sqrt(p.rho * p.delta) - 2.0 * math.sqrt(2.0 * P) / math.sqrt(math.pi)
    return LimitReport(
        Regime.LARGE_RHO,
        beta_limit=beta,
        tau_limit=tau,
        pb=P,
        pd=p.rho - 2.0 * math.sqrt(2.0 * P * p.rho / (math.pi * p.delta)),
        sinr_lb=1.0 + 2.0 * math.sqrt(2.0 * P / (math.pi * p.delta * p.rho)),
        pe=q_function(math.sqrt(2.0 * P / (math.pi * p.delta * (P + p.sigma2)))),
    )
