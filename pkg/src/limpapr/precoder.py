"""Finite-dimensional precoders for y = H x + z with BPSK symbols s.

The limited-PAPR precoder solves

    min_x ||H x - sqrt(rho) s||^2 + lam ||x||^2   s.t.  |x_i| <= sqrt(P)

by accelerated projected gradient. RZF, ZF and one-bit baselines share the
same result type. Each precoder also comes as a scikit-learn style
transformer: ``fit`` takes the channel, ``transform`` maps symbol vectors
(one per row) to antenna signals.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import ConvergenceError, SingularError
from .saddle_point import SystemParams

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 20000
_POWER_ITERS = 100
_LIPSCHITZ_INFLATION = 1.01


class Method(str, enum.Enum):
    LIMITED_PAPR = "LimitedPapr"
    RZF = "Rzf"
    ZF = "Zf"
    ONE_BIT = "OneBit"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {"papr": cls.LIMITED_PAPR, "rzf": cls.RZF, "zf": cls.ZF, "onebit": cls.ONE_BIT}
        key = str(value).lower().replace("-", "").replace("_", "")
        for member in cls:
            if key == member.value.lower():
                return member
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown precoding method {value!r}") from None


@dataclass(frozen=True)
class ChannelInstance:
    h: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        h = check_array(self.h, dtype=np.float64)
        s = np.asarray(self.s, dtype=np.float64).ravel()
        if s.shape[0] != h.shape[0]:
            raise ValueError(f"channel has {h.shape[0]} rows but {s.shape[0]} symbols were given")
        check_symbols(s)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "s", s)

    @property
    def m(self):
        return self.h.shape[0]

    @property
    def n(self):
        return self.h.shape[1]


@dataclass(frozen=True)
class PrecoderSolution:
    x: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int
    method: Method


def check_symbols(s):
    s = np.asarray(s)
    if not np.all((s == 1) | (s == -1)):
        raise ValueError("BPSK symbols must be +1 or -1")
    return s


def sign_pm(v):
    """Sign with sign(0) = +1."""
    return np.where(np.asarray(v) >= 0, 1.0, -1.0)


def objective_value(x, inst, rho, lam):
    r = inst.h @ x - math.sqrt(rho) * inst.s
    return float(r @ r + lam * (x @ x))


def spectral_norm_sq(h, seed=0):
    """Largest eigenvalue of H^T H by power iteration (100 steps or 1e-8 relative change)."""
    v = np.random.default_rng(seed).standard_normal(h.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(_POWER_ITERS):
        w = h.T @ (h @ v)
        new = float(np.linalg.norm(w))
        if new == 0.0:
            return 0.0
        v = w / new
        if abs(new - est) <= 1e-8 * new:
            est = new
            break
        est = new
    return est


def lipschitz_constant(h, lam):
    return 2.0 * (spectral_norm_sq(h) + lam) * _LIPSCHITZ_INFLATION


def _gradient(x, gram, htx, rho, lam):
    return 2.0 * (gram @ x - math.sqrt(rho) * htx) + 2.0 * lam * x


def _mapping_norm(x, grad, step, root_p):
    return float(np.linalg.norm(x - np.clip(x - step * grad, -root_p, root_p)))


def kkt_residual(x, inst, params, lipschitz=None):
    """Scaled projected-gradient mapping norm; zero exactly at the box optimum."""
    x = np.asarray(x, dtype=float)
    root_p = math.sqrt(params.p_max)
    if lipschitz is None:
        lipschitz = lipschitz_constant(inst.h, params.lam)
    grad = 2.0 * inst.h.T @ (inst.h @ x - math.sqrt(params.rho) * inst.s) + 2.0 * params.lam * x
    return _mapping_norm(x, grad, 1.0 / lipschitz, root_p) / math.sqrt(inst.n)


def _warm_start(inst, params):
    root_p = math.sqrt(params.p_max)
    try:
        if params.lam > 0:
            x0 = _solve_ridge(inst, params.rho, params.lam)
        elif inst.m >= inst.n:
            x0 = _solve_ls(inst, params.rho)
        else:
            x0 = np.zeros(inst.n)
    except SingularError:
        x0 = np.zeros(inst.n)
    return np.clip(x0, -root_p, root_p)


def limited_papr_precode(inst, params, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
                         x0=None, lipschitz=None, history=None):
    """Box-constrained ridge precoder via FISTA with monotone restart.

    Stops when the projected-gradient mapping norm falls below ``tol * sqrt(n)``.
    On budget exhaustion raises ConvergenceError carrying the last iterate.
    ``history``, when a list, receives the objective after every iteration.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    h, rho, lam = inst.h, params.rho, params.lam
    root_p = math.sqrt(params.p_max)
    if lipschitz is None:
        lipschitz = lipschitz_constant(h, lam)
    step = 1.0 / lipschitz
    gram = h.T @ h
    htx = h.T @ inst.s
    const = rho * float(inst.s @ inst.s)
    sq_rho = math.sqrt(rho)

    def cost(v):
        # ||Hv - sqrt(rho)s||^2 + lam||v||^2 expanded through the Gram matrix
        return float(v @ (gram @ v) - 2.0 * sq_rho * (htx @ v) + const + lam * (v @ v))

    x = _warm_start(inst, params) if x0 is None else np.clip(np.asarray(x0, float), -root_p, root_p)
    fx = cost(x)
    y, t = x.copy(), 1.0
    threshold = tol * math.sqrt(inst.n)
    iterations = 0
    converged = _mapping_norm(x, _gradient(x, gram, htx, rho, lam), step, root_p) <= threshold
    while not converged and iterations < max_iter:
        iterations += 1
        x_new = np.clip(y - step * _gradient(y, gram, htx, rho, lam), -root_p, root_p)
        f_new = cost(x_new)
        if f_new > fx:
            # restart: drop momentum and take a plain projected step from x
            x_new = np.clip(x - step * _gradient(x, gram, htx, rho, lam), -root_p, root_p)
            f_new = cost(x_new)
            t_new = 1.0
            y = x_new.copy()
        else:
            t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        x, fx, t = x_new, min(f_new, fx), t_new
        if history is not None:
            history.append(fx)
        converged = _mapping_norm(x, _gradient(x, gram, htx, rho, lam), step, root_p) <= threshold

    sol = PrecoderSolution(
        x=x,
        objective=objective_value(x, inst, rho, lam),
        kkt_residual=kkt_residual(x, inst, params, lipschitz),
        iterations=iterations,
        method=Method.LIMITED_PAPR,
    )
    if not converged:
        raise ConvergenceError(
            f"limited-PAPR solver stopped after {iterations} iterations "
            f"with mapping norm {sol.kkt_residual:.3e}", solution=sol)
    return sol


def _solve_ridge(inst, rho, lam):
    a = inst.h.T @ inst.h + lam * np.eye(inst.n)
    try:
        factor = linalg.cho_factor(a)
    except linalg.LinAlgError:
        raise SingularError(f"H^T H + lam I is not numerically positive definite (lam={lam:g})") from None
    return linalg.cho_solve(factor, math.sqrt(rho) * (inst.h.T @ inst.s))


def _solve_ls(inst, rho):
    x, _, rank, sv = np.linalg.lstsq(inst.h, math.sqrt(rho) * inst.s, rcond=None)
    if rank < inst.n or sv[-1] <= 1e-10 * sv[0]:
        raise SingularError("H^T H is numerically singular; zero forcing needs full column rank")
    return x


def rzf_precode(inst, rho, lam):
    if lam <= 0:
        raise ValueError("RZF needs lam > 0")
    x = _solve_ridge(inst, rho, lam)
    res = inst.h.T @ (inst.h @ x) + lam * x - math.sqrt(rho) * (inst.h.T @ inst.s)
    return PrecoderSolution(x, objective_value(x, inst, rho, lam),
                            float(np.linalg.norm(res)) / math.sqrt(inst.n), 0, Method.RZF)


def zf_precode(inst, rho):
    if inst.m < inst.n:
        raise SingularError(f"zero forcing needs m >= n (got m={inst.m}, n={inst.n})")
    x = _solve_ls(inst, rho)
    res = inst.h.T @ (inst.h @ x - math.sqrt(rho) * inst.s)
    return PrecoderSolution(x, objective_value(x, inst, rho, 0.0),
                            float(np.linalg.norm(res)) / math.sqrt(inst.n), 0, Method.ZF)


def one_bit_precode(inst, p_max, rho=1.0, lam=0.0):
    """sqrt(P) sign(H^T s); ``rho`` and ``lam`` only enter the reported objective."""
    x = math.sqrt(p_max) * sign_pm(inst.h.T @ inst.s)
    params = SystemParams(delta=inst.m / inst.n, rho=rho, lam=lam, p_max=p_max)
    return PrecoderSolution(x, objective_value(x, inst, rho, lam),
                            kkt_residual(x, inst, params), 0, Method.ONE_BIT)


def precode(inst, params, method, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    method = Method.parse(method)
    if method is Method.LIMITED_PAPR:
        return limited_papr_precode(inst, params, tol=tol, max_iter=max_iter)
    if method is Method.RZF:
        return rzf_precode(inst, params.rho, params.lam)
    if method is Method.ZF:
        return zf_precode(inst, params.rho)
    return one_bit_precode(inst, params.p_max, params.rho, params.lam)


class _BasePrecoder(TransformerMixin, BaseEstimator):
    """Shared fit/transform plumbing; subclasses implement ``_precode_one``."""

    def fit(self, X, y=None):
        """Store the channel matrix ``X`` of shape (m, n)."""
        self.channel_ = check_array(X, dtype=np.float64)
        self.n_users_, self.n_features_in_ = self.channel_.shape
        return self

    def _symbols(self, S):
        check_is_fitted(self, "channel_")
        S = check_array(np.atleast_2d(S), dtype=np.float64)
        if S.shape[1] != self.n_users_:
            raise ValueError(f"expected {self.n_users_} symbols per row, got {S.shape[1]}")
        return check_symbols(S)

    def precode(self, s):
        """Return the full PrecoderSolution for a single symbol vector."""
        s = self._symbols(s)[0]
        return self._precode_one(ChannelInstance(self.channel_, s))

    def transform(self, S):
        """Precode each row of ``S``; returns an array of shape (n_rows, n)."""
        S = self._symbols(S)
        return np.vstack([self._precode_one(ChannelInstance(self.channel_, s)).x for s in S])


class LimitedPaprPrecoder(_BasePrecoder):
    def __init__(self, rho=1.0, lam=0.01, p_max=1.0, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
        self.rho = rho
        self.lam = lam
        self.p_max = p_max
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y=None):
        super().fit(X, y)
        self.lipschitz_ = lipschitz_constant(self.channel_, self.lam)
        return self

    def _precode_one(self, inst):
        params = SystemParams(delta=inst.m / inst.n, rho=self.rho, lam=self.lam, p_max=self.p_max)
        return limited_papr_precode(inst, params, tol=self.tol, max_iter=self.max_iter,
                                    lipschitz=self.lipschitz_)


class RzfPrecoder(_BasePrecoder):
    def __init__(self, rho=1.0, lam=0.01):
        self.rho = rho
        self.lam = lam

    def _precode_one(self, inst):
        return rzf_precode(inst, self.rho, self.lam)


class ZfPrecoder(_BasePrecoder):
    def __init__(self, rho=1.0):
        self.rho = rho

    def _precode_one(self, inst):
        return zf_precode(inst, self.rho)


class OneBitPrecoder(_BasePrecoder):
    def __init__(self, p_max=1.0):
        self.p_max = p_max

    def _precode_one(self, inst):
        return one_bit_precode(inst, self.p_max)
