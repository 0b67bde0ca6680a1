"""Monte Carlo harness: random instances, per-trial metrics, theory comparison.

Randomness is keyed per trial: trial ``i`` of an experiment uses a Philox
counter-based generator keyed by ``base_seed + i`` for H, s and then z, so
results do not depend on how trials are scheduled across workers.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from scipy import stats

from . import asymptotics
from .exceptions import EmptyBranchError, InsufficientDataError
from .precoder import ChannelInstance, DEFAULT_MAX_ITER, DEFAULT_TOL, Method, precode, sign_pm

METRICS = ("pb", "pd", "ber", "sinr_lb_est", "sinr_up_est")
# empirical metric -> asymptotic counterpart
THEORY_OF = {"pb": "pb_star", "pd": "pd_star", "ber": "pe_star",
             "sinr_lb_est": "sinr_lb_star", "sinr_up_est": "sinr_up_star"}


def _rng(seed):
    if seed < 0:
        raise ValueError("seeds must be nonnegative")
    return np.random.Generator(np.random.Philox(key=seed))


def generate_instance(n, m, seed):
    """H with i.i.d. N(0, 1/n) entries and uniform BPSK s, reproducible from ``seed``."""
    return _generate(n, m, _rng(seed))


def _generate(n, m, rng):
    if n < 1 or m < 1:
        raise ValueError("n and m must be at least 1")
    h = rng.standard_normal((m, n)) / math.sqrt(n)
    s = 2.0 * rng.integers(0, 2, size=m) - 1.0
    return ChannelInstance(h, s)


def user_count(delta, n):
    m = int(round(delta * n))
    if m < 1:
        raise ValueError(f"delta * n rounds to {m} users")
    return m


def bit_error_rate(y, s):
    return float(np.mean(sign_pm(y) != np.asarray(s)))


@dataclass
class TrialRecord:
    pb: float
    pd: float
    ber: float
    sinr_lb_est: float
    sinr_up_est: float
    x_entries: np.ndarray
    distortion: np.ndarray
    symbols: np.ndarray
    seed: int

    @property
    def distortion_pairs(self):
        return np.column_stack([self.distortion, self.symbols])


def trial_metrics(inst, x, rho, sigma2, noise, seed):
    e = inst.h @ x - math.sqrt(rho) * inst.s
    y = math.sqrt(rho) * inst.s + e + noise
    pd = float(np.mean(e * e))
    return TrialRecord(
        pb=float(np.mean(x * x)),
        pd=pd,
        ber=bit_error_rate(y, inst.s),
        sinr_lb_est=rho / (pd + sigma2),
        sinr_up_est=float(np.mean(rho / (e * e + sigma2))),
        x_entries=np.asarray(x, dtype=float),
        distortion=e,
        symbols=inst.s.copy(),
        seed=seed,
    )


def run_trial(params, n, seed, method=Method.LIMITED_PAPR, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    m = user_count(params.delta, n)
    rng = _rng(seed)
    inst = _generate(n, m, rng)
    sol = precode(inst, params, method, tol=tol, max_iter=max_iter)
    noise = math.sqrt(params.sigma2) * rng.standard_normal(m)
    return trial_metrics(inst, sol.x, params.rho, params.sigma2, noise, seed)


@dataclass
class MetricSummary:
    mean: float
    se: float
    count: int
    theory: Optional[float] = None

    @property
    def z(self):
        if self.theory is None:
            return None
        diff = self.mean - self.theory
        if self.se == 0:
            return 0.0 if diff == 0 else math.copysign(math.inf, diff)
        return diff / self.se


@dataclass
class EmpiricalReport:
    metrics: Dict[str, MetricSummary]
    trials: int
    x_pool: np.ndarray = field(repr=False)
    distortion_pool: np.ndarray = field(repr=False)
    symbol_pool: np.ndarray = field(repr=False)
    wasserstein2_x: Optional[float] = None
    w2_self_distance: Optional[float] = None
    ks_distortion_plus: Optional[float] = None
    ks_distortion_minus: Optional[float] = None
    theory: Optional[asymptotics.AsymptoticReport] = None

    @property
    def ks_critical_plus(self):
        return 1.63 / math.sqrt(int(np.sum(self.symbol_pool > 0)))

    @property
    def ks_critical_minus(self):
        return 1.63 / math.sqrt(int(np.sum(self.symbol_pool < 0)))


def aggregate(trials: List[TrialRecord]) -> EmpiricalReport:
    """Per-metric mean and standard error (sample std / sqrt(trials)) plus pooled entries."""
    if len(trials) < 2:
        raise InsufficientDataError(f"need at least 2 trials, got {len(trials)}")
    count = len(trials)
    metrics = {}
    for name in METRICS:
        values = np.array([getattr(t, name) for t in trials], dtype=float)
        # np.sum reduces contiguous float arrays pairwise
        mean = float(np.sum(values) / count)
        var = float(np.sum((values - mean) ** 2) / (count - 1))
        metrics[name] = MetricSummary(mean, math.sqrt(var / count), count)
    return EmpiricalReport(
        metrics=metrics,
        trials=count,
        x_pool=np.concatenate([t.x_entries for t in trials]),
        distortion_pool=np.concatenate([t.distortion for t in trials]),
        symbol_pool=np.concatenate([t.symbols for t in trials]),
    )


def sample_theta(sp, params, size, seed=0):
    h = np.random.Generator(np.random.Philox(key=seed)).standard_normal(size)
    return asymptotics.theta_map(h, sp, params)


def _w2_sorted(a, b):
    if a.size == b.size:
        qa, qb = np.sort(a), np.sort(b)
    else:
        qa = np.sort(a)
        levels = (np.arange(a.size) + 0.5) / a.size
        qb = np.quantile(b, levels)
    return float(math.sqrt(np.mean((qa - qb) ** 2)))


def wasserstein2_solution(x_pool, sp, params, law_samples=None, seed=0):
    """1-D W2 between the pooled entries and an i.i.d. sample of theta(H).

    Quantiles are matched by rank; with a larger law sample its quantiles are
    read at the pool's midpoint levels.
    """
    x_pool = np.asarray(x_pool, dtype=float).ravel()
    law_samples = x_pool.size if law_samples is None else law_samples
    if law_samples < x_pool.size:
        raise ValueError("law_samples must be at least the pool size")
    return _w2_sorted(x_pool, sample_theta(sp, params, law_samples, seed))


def w2_self_distance(sp, params, size, seed=0, replicates=20):
    """Calibrated W2 between two independent theta(H) samples of ``size`` points.

    A single pair is too noisy to serve as a yardstick (the sample mean alone
    moves W2 by ~1/sqrt(size)), so this is the RMS over ``replicates`` pairs.
    """
    sq = []
    for r in range(replicates):
        a = sample_theta(sp, params, size, seed=seed + 2 * r)
        b = sample_theta(sp, params, size, seed=seed + 2 * r + 1)
        sq.append(_w2_sorted(a, b) ** 2)
    return math.sqrt(math.fsum(sq) / replicates)


def _ks_against(sample, mean, std):
    if std > 0:
        return float(stats.kstest(sample, "norm", args=(mean, std)).statistic)
    # point mass at ``mean``: the CDF is a unit step
    x = np.sort(sample)
    k = x.size
    below = np.searchsorted(x, mean, side="left") / k
    at_or_below = np.searchsorted(x, mean, side="right") / k
    return float(max(below, 1.0 - at_or_below))


def distortion_ks(distortion, symbols, law):
    """KS statistic of each symbol branch against its conditional Gaussian law."""
    e = np.asarray(distortion, dtype=float).ravel()
    s = np.asarray(symbols, dtype=float).ravel()
    plus, minus = e[s > 0], e[s < 0]
    if plus.size == 0 or minus.size == 0:
        raise EmptyBranchError("both symbol branches need samples")
    return (_ks_against(plus, law.mean_given_s_plus, law.std),
            _ks_against(minus, law.mean_given_s_minus, law.std))


def _trial_job(args):
    return run_trial(*args)


def run_experiment(params, n, trials, base_seed=0, method=Method.LIMITED_PAPR,
                   saddle=None, n_jobs=1, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
                   law_seed=None):
    """Run ``trials`` seeded trials and aggregate them.

    With ``saddle`` given, theory columns, the W2 distance of the pooled
    precoded entries and the distortion KS statistics are attached.
    """
    if trials < 2:
        raise InsufficientDataError(f"need at least 2 trials, got {trials}")
    method = Method.parse(method)
    jobs = [(params, n, base_seed + i, method, tol, max_iter) for i in range(trials)]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            records = list(pool.map(_trial_job, jobs))
    else:
        records = [_trial_job(j) for j in jobs]
    report = aggregate(records)
    if saddle is not None:
        attach_theory(report, saddle, params, law_seed=base_seed if law_seed is None else law_seed)
    return report


def attach_theory(report, saddle, params, law_seed=0):
    theory = asymptotics.report_from_saddle(saddle, params)
    report.theory = theory
    for name, summary in report.metrics.items():
        summary.theory = getattr(theory, THEORY_OF[name])
    # the law sample is keyed away from the trial seeds
    seed = law_seed + 1_000_003
    size = report.x_pool.size
    report.wasserstein2_x = wasserstein2_solution(report.x_pool, saddle, params, size, seed=seed)
    report.w2_self_distance = w2_self_distance(saddle, params, size, seed=seed + 1000)
    law = asymptotics.distortion_law(saddle, params)
    report.ks_distortion_plus, report.ks_distortion_minus = distortion_ks(
        report.distortion_pool, report.symbol_pool, law)
    return report
