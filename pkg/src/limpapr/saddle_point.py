"""Deterministic max-min problem whose saddle point predicts the precoder.

The scalar objective is

    D(beta, tau) = tau*beta*delta/2 + rho*beta/(2*tau) - beta^2/4 + Y(beta, tau)
    Y(beta, tau) = (beta/alpha) * (E[(H - sqrt(P) alpha)^2 1{H >= sqrt(P) alpha}] - 1/2)
    alpha        = 1/tau + 2*lambda/beta

with H standard normal. D is strictly concave in beta and convex in tau, so
the saddle point is found by two nested one-dimensional root searches on the
partial derivatives, which are available in closed form.
"""

import dataclasses
import math
from dataclasses import dataclass
from typing import Optional

from scipy import optimize

from . import gaussian_moments as gm
from .exceptions import BracketError, ConvergenceError, InfeasibleError

MAX_ITER = 200
REL_TOL = 1e-10
_XTOL = 1e-15
_RTOL = 4 * 2.220446049250313e-16


@dataclass(frozen=True)
class SystemParams:
    """Scalar description of one problem instance.

    ``lam`` is the ridge weight (``lambda`` is reserved in Python), ``p_max``
    the per-antenna power cap and ``sigma2`` the noise variance.
    """

    delta: float
    rho: float
    lam: float
    p_max: float
    sigma2: float = 0.0
    n: Optional[int] = None
    m: Optional[int] = None

    def __post_init__(self):
        for name in ("delta", "rho", "lam", "p_max", "sigma2"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or math.isnan(value):
                raise ValueError(f"{name} must be a real number, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.p_max <= 0:
            raise ValueError("p_max must be positive")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")

    @classmethod
    def from_sigma(cls, delta, rho, lam, p_max, sigma, **kw):
        return cls(delta=delta, rho=rho, lam=lam, p_max=p_max, sigma2=float(sigma) ** 2, **kw)

    @property
    def sigma(self):
        return math.sqrt(self.sigma2)

    @property
    def feasible(self):
        return self.lam > 0 or self.delta > 1

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class SaddlePoint:
    beta_star: float
    tau_star: float
    alpha_star: float
    phi_bar: float
    residual: float
    solver_iterations: int


def _alpha(beta, tau, lam):
    return 1.0 / tau + 2.0 * lam / beta


def _g(alpha, p_max):
    # Y = beta * g(alpha)
    a = math.sqrt(p_max) * alpha
    return (gm.truncated_square_upper(a) - 0.5) / alpha


def _g_prime(alpha, p_max):
    # g'(alpha) = E[min(|H|/alpha, sqrt(P))^2] / 2, the clipped second moment
    a = math.sqrt(p_max) * alpha
    return p_max * gm.q_function(a) + gm.central_square_band(a) / (2.0 * alpha * alpha)


def y_term(beta, tau, params):
    alpha = _alpha(beta, tau, params.lam)
    return beta * _g(alpha, params.p_max)


def objective_d(beta, tau, params):
    p = params
    return (tau * beta * p.delta / 2 + p.rho * beta / (2 * tau) - beta * beta / 4
            + y_term(beta, tau, params))


def _tau_stationarity(beta, tau, params):
    """(2 tau^2 / beta) * dD/dtau: increasing in tau, zero at the inner minimizer."""
    alpha = _alpha(beta, tau, params.lam)
    return params.delta * tau * tau - params.rho - 2.0 * _g_prime(alpha, params.p_max)


def _beta_derivative(beta, tau, params):
    p = params
    alpha = _alpha(beta, tau, p.lam)
    return (tau * p.delta / 2 + p.rho / (2 * tau) - beta / 2 + _g(alpha, p.p_max)
            - (2.0 * p.lam / beta) * _g_prime(alpha, p.p_max))


def tau_bracket(params):
    """Interval that always holds the inner minimizer.

    The stationarity condition reads delta tau^2 - rho = E[theta(H)^2] and the
    clipped second moment lies in [0, P].
    """
    lo = math.sqrt(params.rho / params.delta) * (1.0 - 1e-9)
    hi = math.sqrt((params.rho + params.p_max) / params.delta) * (1.0 + 1e-9)
    return lo, hi


def _grow_upper(fun, lo, hi, what):
    f_lo = fun(lo)
    f_hi = fun(hi)
    if f_lo > 0:
        raise BracketError(f"{what}: stationarity already positive at the lower bracket")
    for _ in range(MAX_ITER):
        if f_hi >= 0:
            return hi
        hi *= 2.0
        if not math.isfinite(hi):
            break
        f_hi = fun(hi)
    raise BracketError(f"{what}: could not bracket the root")


def inner_min_tau(beta, params):
    """Minimize tau -> D(beta, tau); returns ``(tau, value)``."""
    if beta <= 0:
        raise ValueError("beta must be positive")

    def fun(tau):
        return _tau_stationarity(beta, tau, params)

    lo, hi = tau_bracket(params)
    hi = _grow_upper(fun, lo, hi, "inner tau search")
    tau = optimize.brentq(fun, lo, hi, xtol=_XTOL, rtol=_RTOL, maxiter=MAX_ITER)
    return tau, objective_d(beta, tau, params)


def _inner_tau_only(beta, params):
    return inner_min_tau(beta, params)[0]


def _outer_value_slope(beta, params):
    # envelope theorem: d/dbeta min_tau D = dD/dbeta at the inner minimizer
    return _beta_derivative(beta, _inner_tau_only(beta, params), params)


def _solve_generic(params):
    beta_lo = 1e-8

    def slope(beta):
        return _outer_value_slope(beta, params)

    if slope(beta_lo) <= 0:
        raise ConvergenceError("outer objective is not increasing near beta = 0")
    beta_hi = 4.0 * (math.sqrt(params.rho * params.delta) + params.lam + 1.0)
    for _ in range(MAX_ITER):
        if slope(beta_hi) < 0:
            break
        beta_hi *= 2.0
    else:
        raise BracketError("outer beta search: could not bracket the maximum")
    beta, info = optimize.brentq(slope, beta_lo, beta_hi, xtol=_XTOL, rtol=_RTOL,
                                 maxiter=MAX_ITER, full_output=True, disp=False)
    if not info.converged:
        raise ConvergenceError("outer beta search did not converge")
    tau = _inner_tau_only(beta, params)
    return beta, tau, info.iterations


def _zf_tau_equation(tau, params):
    # delta tau^2 - rho - 2P Q(sqrt(P)/tau) - tau^2 E[H^2 1{|H| <= sqrt(P)/tau}]
    a = math.sqrt(params.p_max) / tau
    return (tau * tau * (params.delta - gm.central_square_band(a)) - params.rho
            - 2.0 * params.p_max * gm.q_function(a))


def y_tilde(tau, params):
    return tau * (gm.truncated_square_upper(math.sqrt(params.p_max) / tau) - 0.5)


def _solve_lambda_zero(params):
    lo, hi = tau_bracket(params)

    def fun(tau):
        return _zf_tau_equation(tau, params)

    hi = _grow_upper(fun, lo, hi, "tau equation")
    tau, info = optimize.brentq(fun, lo, hi, xtol=_XTOL, rtol=_RTOL, maxiter=MAX_ITER,
                                full_output=True, disp=False)
    if not info.converged:
        raise ConvergenceError("tau equation did not converge")
    beta = tau * params.delta + params.rho / tau + 2.0 * y_tilde(tau, params)
    if beta <= 0:
        raise InfeasibleError(f"nonpositive beta* = {beta!r}; parameters or numerics are broken")
    return beta, tau, info.iterations


def fixed_point_residual(sp, params):
    """|tau^2 delta - rho - 2P Q(sqrt(P) alpha) - band(sqrt(P) alpha) / alpha^2|."""
    alpha = _alpha(sp.beta_star, sp.tau_star, params.lam)
    return abs(params.delta * sp.tau_star ** 2 - params.rho - 2.0 * _g_prime(alpha, params.p_max))


def solve_saddle(params):
    """Return the unique saddle point of D for feasible ``params``.

    Raises InfeasibleError when lambda = 0 and delta <= 1, where no finite
    saddle point exists.
    """
    if not params.feasible:
        raise InfeasibleError(
            f"no finite saddle point: lambda = 0 requires delta > 1 (got delta = {params.delta})")
    if params.lam == 0:
        beta, tau, iters = _solve_lambda_zero(params)
    else:
        beta, tau, iters = _solve_generic(params)
    alpha = _alpha(beta, tau, params.lam)
    sp = SaddlePoint(beta_star=beta, tau_star=tau, alpha_star=alpha,
                     phi_bar=objective_d(beta, tau, params), residual=0.0,
                     solver_iterations=iters)
    residual = fixed_point_residual(sp, params)
    scale = max(1.0, params.rho, params.p_max)
    if residual > 1e-8 * scale:
        raise ConvergenceError(f"fixed-point residual {residual:.3e} above tolerance")
    return dataclasses.replace(sp, residual=residual)
