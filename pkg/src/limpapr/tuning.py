"""Find the power control factor rho that yields a target per-antenna power."""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .asymptotics import per_antenna_power
from .exceptions import BracketError, NonMonotoneError, TargetUnreachableError
from .saddle_point import solve_saddle

DEFAULT_TOL = 1e-6
GROWTH = 4.0
MAX_GROWTH_STEPS = 60
MAX_BISECTIONS = 200
PROBE_POINTS = 10


@dataclass(frozen=True)
class TuneResult:
    rho: float
    achieved_pb: float
    iterations: int
    bracket: Tuple[float, float]


def pb_star(params, rho):
    p = params.replace(rho=rho)
    return per_antenna_power(solve_saddle(p), p)


def _audit_monotone(params, lo, hi):
    grid = np.geomspace(lo, hi, PROBE_POINTS)
    values = [pb_star(params, r) for r in grid]
    for (r0, v0), (r1, v1) in zip(zip(grid, values), zip(grid[1:], values[1:])):
        if not v1 > v0:
            raise NonMonotoneError(
                f"pb_star not increasing in rho: pb({r0:.6g}) = {v0:.12g} >= pb({r1:.6g}) = {v1:.12g}")


def rho_for_target_pb(target, params, tol=DEFAULT_TOL):
    """Bisect log(rho) until |pb_star(rho) - target| <= tol.

    ``params.rho`` is ignored. pb_star is assumed increasing in rho; this is
    checked on the final bracket before bisecting and violations raise
    NonMonotoneError.
    """
    if target >= params.p_max:
        raise TargetUnreachableError(
            f"target {target} is not below the per-antenna cap {params.p_max}; "
            "pb_star only approaches the cap as rho -> inf")
    if target <= 0:
        raise ValueError("target must be positive")
    lo, hi = 1e-6, 1.0
    f_lo, f_hi = pb_star(params, lo), pb_star(params, hi)
    steps = 0
    while f_lo > target:
        hi, f_hi = lo, f_lo
        lo /= GROWTH
        f_lo = pb_star(params, lo)
        steps += 1
        if steps > MAX_GROWTH_STEPS:
            raise BracketError("could not find rho small enough for the target")
    while f_hi < target:
        lo, f_lo = hi, f_hi
        hi *= GROWTH
        f_hi = pb_star(params, hi)
        steps += 1
        if steps > MAX_GROWTH_STEPS:
            raise BracketError("could not find rho large enough for the target")
    if f_lo > f_hi:
        raise NonMonotoneError(f"pb_star({lo}) = {f_lo} > pb_star({hi}) = {f_hi}")
    _audit_monotone(params, lo, hi)
    bracket = (lo, hi)

    for it in range(1, MAX_BISECTIONS + 1):
        mid = math.sqrt(lo * hi)
        f_mid = pb_star(params, mid)
        if abs(f_mid - target) <= tol:
            return TuneResult(mid, f_mid, it, bracket)
        if f_mid < target:
            lo = mid
        else:
            hi = mid
    raise BracketError(f"bisection did not reach tol {tol} in {MAX_BISECTIONS} steps")
