"""Acceptance checks shared by ``limpapr validate`` and the test suite.

Each check returns a CriterionResult holding the measured quantities, the
wall time and a verdict. Checks never relax their stated tolerance; a check
that cannot be met reports FAIL with the measurements that show by how much.
"""

import dataclasses
import math
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List

import numpy as np
from scipy import integrate, special

from . import gaussian_moments as gm
from . import special_cases as sc
from .asymptotics import report_from_saddle
from .exceptions import ConvergenceError
from .monte_carlo import run_experiment
from .precoder import ChannelInstance, limited_papr_precode, objective_value
from .saddle_point import SystemParams, fixed_point_residual, solve_saddle
from .tuning import rho_for_target_pb

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    seconds: float = 0.0
    limit_seconds: float = math.inf
    measured: Dict[str, object] = field(default_factory=dict)
    failures: List[str] = field(default_factory=list)

    def line(self):
        verdict = "PASS" if self.passed else "FAIL"
        parts = [f"[{verdict}] criterion {self.number}: {self.name}",
                 f"time={self.seconds:.2f}s (limit {self.limit_seconds:g}s)"]
        parts += [f"{k}={_fmt(v)}" for k, v in self.measured.items()]
        if self.failures:
            parts.append("failed: " + "; ".join(self.failures))
        return " | ".join(parts)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


class _Check:
    """Collects sub-check outcomes for one criterion."""

    def __init__(self, number, name, limit_seconds):
        self.result = CriterionResult(number, name, True, limit_seconds=limit_seconds)
        self._t0 = time.perf_counter()

    def record(self, key, value):
        self.result.measured[key] = value

    def expect(self, ok, label):
        if not ok:
            self.result.passed = False
            self.result.failures.append(label)

    def done(self):
        r = self.result
        r.seconds = time.perf_counter() - self._t0
        if r.seconds >= r.limit_seconds:
            r.passed = False
            r.failures.append(f"runtime {r.seconds:.2f}s over {r.limit_seconds:g}s")
        return r


class Solver:
    """solve_saddle with an optional multiplicative error injected into beta*.

    The perturbation exists only to confirm that the checks notice a wrong
    saddle point.
    """

    def __init__(self, beta_perturbation=0.0):
        self.beta_perturbation = beta_perturbation

    def __call__(self, params):
        sp = solve_saddle(params)
        if self.beta_perturbation:
            beta = sp.beta_star * (1.0 + self.beta_perturbation)
            alpha = 1.0 / sp.tau_star + 2.0 * params.lam / beta
            sp = dataclasses.replace(sp, beta_star=beta, alpha_star=alpha)
            sp = dataclasses.replace(sp, residual=fixed_point_residual(sp, params))
        return sp


# criterion 1 ---------------------------------------------------------------

def _moment_oracles(a):
    def phi(h):
        return math.exp(-0.5 * h * h) / math.sqrt(2.0 * math.pi)

    quad = lambda f, lo, hi: integrate.quad(f, lo, hi, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    return {
        "q_function": quad(phi, a, math.inf),
        "upper_m1": quad(lambda h: h * phi(h), a, math.inf),
        "upper_m2": quad(lambda h: h * h * phi(h), a, math.inf),
        "truncated_square_upper": quad(lambda h: (h - a) ** 2 * phi(h), a, math.inf),
        "central_square_band": 2.0 * quad(lambda h: h * h * phi(h), 0.0, a),
    }


def criterion_moments():
    chk = _Check(1, "Gaussian moment identities vs quadrature (tol 1e-10)", 1.0)
    grid = np.round(np.arange(0, 61) * 0.1, 10)
    worst = {}
    for a in grid:
        oracle = _moment_oracles(float(a))
        for name, ref in oracle.items():
            err = abs(getattr(gm, name)(float(a)) - ref)
            worst[name] = max(worst.get(name, 0.0), err)
    for name, err in worst.items():
        chk.record(f"max_err_{name}", err)
        chk.expect(err <= 1e-10, f"{name} error {err:.2e}")
    return chk.done()


# criterion 2 ---------------------------------------------------------------

def oracle_objective(beta, tau, params):
    """D(beta, tau) via the alternative expectation form of Y, written with the normal CDF."""
    p = params
    beta, tau = np.asarray(beta, dtype=float), np.asarray(tau, dtype=float)
    alpha = 1.0 / tau + 2.0 * p.lam / beta
    c = math.sqrt(p.p_max) * alpha
    sf, cdf = special.ndtr(-c), special.ndtr(c)
    pdf = np.exp(-0.5 * c * c) / math.sqrt(2.0 * math.pi)
    tail = c * sf - 2.0 * pdf                  # E[(c - 2H) 1{H >= c}]
    band = (cdf - sf) - 2.0 * c * pdf          # E[H^2 1{|H| <= c}]
    y = beta * math.sqrt(p.p_max) * tail - beta / (2.0 * alpha) * band
    return tau * beta * p.delta / 2 + p.rho * beta / (2 * tau) - beta * beta / 4 + y


def _golden(f, lo, hi, tol=1e-11, maximize=False):
    sign = -1.0 if maximize else 1.0
    a, b = lo, hi
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = sign * f(c), sign * f(d)
    while b - a > tol * max(1.0, abs(a) + abs(b)):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = sign * f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = sign * f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def brute_force_saddle(params, grid=400):
    """Grid search on (beta, tau) followed by nested golden-section refinement.

    beta lives in (0, 2 sqrt(rho delta)] because the distortion power beta^2/(4 delta)
    never exceeds rho. The tau window is grown until the inner minimum is interior.
    """
    p = params
    b_hi = 2.0 * math.sqrt(p.rho * p.delta) * 1.05
    t_lo = 1e-3 * math.sqrt(p.rho / p.delta)
    t_hi = 4.0 * math.sqrt((p.rho + p.p_max) / p.delta) + 1.0
    betas = np.linspace(b_hi / grid, b_hi, grid)
    taus = np.geomspace(t_lo, t_hi, grid)
    values = oracle_objective(betas[:, None], taus[None, :], p)
    inner = values.min(axis=1)
    i = int(np.argmax(inner))
    j = int(np.argmin(values[i]))
    if j in (0, grid - 1):
        raise RuntimeError("brute-force tau window does not contain the inner minimum")
    b_lo, b_up = betas[max(i - 2, 0)], betas[min(i + 2, grid - 1)]

    def inner_min(beta):
        k = int(np.argmin(oracle_objective(beta, taus, p)))
        return _golden(lambda t: float(oracle_objective(beta, t, p)),
                       taus[max(k - 1, 0)], taus[min(k + 1, grid - 1)])

    beta, _ = _golden(lambda b: inner_min(b)[1], b_lo, b_up, maximize=True)
    tau, _ = inner_min(beta)
    return beta, tau


def random_feasible_params(rng):
    while True:
        p = SystemParams(delta=rng.uniform(0.5, 3.0), rho=rng.uniform(0.1, 10.0),
                         lam=rng.uniform(0.0, 1.0), p_max=rng.uniform(0.5, 50.0))
        if p.feasible:
            return p


def criterion_oracle(solver, instances=10, seed=2024):
    chk = _Check(2, "saddle point vs grid + golden-section oracle", 30.0)
    rng = np.random.default_rng(seed)
    d_beta = d_tau = worst_res = 0.0
    for _ in range(instances):
        p = random_feasible_params(rng)
        sp = solver(p)
        beta, tau = brute_force_saddle(p)
        d_beta = max(d_beta, abs(sp.beta_star - beta))
        d_tau = max(d_tau, abs(sp.tau_star - tau))
        worst_res = max(worst_res, fixed_point_residual(sp, p))
    chk.record("max_dbeta", d_beta)
    chk.record("max_dtau", d_tau)
    chk.record("max_residual", worst_res)
    chk.expect(d_beta < 1e-4, f"|dbeta| {d_beta:.2e} >= 1e-4")
    chk.expect(d_tau < 1e-4, f"|dtau| {d_tau:.2e} >= 1e-4")
    chk.expect(worst_res < 1e-8, f"residual {worst_res:.2e} >= 1e-8")
    return chk.done()


# criteria 3 and 4 ------------------------------------------------------------

def criterion_rzf(solver):
    chk = _Check(3, "RZF limit at P = 1e5", 5.0)
    p = SystemParams(delta=2.0, rho=1.0, lam=1.0, p_max=1e5)
    sp = solver(p)
    closed = sc.rzf_limit(p)
    chk.record("tau_star", sp.tau_star)
    chk.record("beta_star", sp.beta_star)
    chk.record("tau_closed_form", closed.tau_limit)
    chk.record("beta_closed_form", closed.beta_limit)
    chk.expect(abs(sp.tau_star - 0.77689) <= 1e-3, "tau* off 0.77689")
    chk.expect(abs(sp.beta_star - 2.19737) <= 1e-3, "beta* off 2.19737")
    return chk.done()


def criterion_zf(solver):
    chk = _Check(4, "ZF limit at P = 100", 5.0)
    p = SystemParams.from_sigma(delta=2.0, rho=1.0, lam=0.0, p_max=100.0, sigma=0.1)
    rep = report_from_saddle(solver(p), p)
    chk.record("pb_star", rep.pb_star)
    chk.record("pd_star", rep.pd_star)
    chk.record("pe_star", rep.pe_star)
    chk.expect(abs(rep.pb_star - 1.0) <= 1e-6, "pb* not 1 +- 1e-6")
    chk.expect(abs(rep.pd_star - 0.5) <= 1e-6, "pd* not 0.5 +- 1e-6")
    chk.expect(abs(rep.pe_star - 0.16339) <= 1e-4, "pe* not 0.16339 +- 1e-4")
    return chk.done()


# criterion 5 -----------------------------------------------------------------

def _rel(a, b):
    return abs(a - b) / abs(b)


def criterion_regimes(solver):
    """Limiting regimes at sigma = 0.1; unspecified parameters are rho = 1, lam = 0.01, P = 1."""
    chk = _Check(5, "limiting regimes (small/large delta, small/large rho)", 60.0)

    p = SystemParams.from_sigma(delta=1e-3, rho=1.0, lam=1.0, p_max=1.0, sigma=0.1)
    rep, lim = report_from_saddle(solver(p), p), sc.small_delta_limit(p)
    e_pd, e_pe = _rel(rep.pd_star, lim.pd), _rel(rep.pe_star, lim.pe)
    chk.record("small_delta_pd_relerr", e_pd)
    chk.record("small_delta_pe_relerr", e_pe)
    chk.expect(e_pd <= 0.02, f"small delta pd rel err {e_pd:.3g}")
    chk.expect(e_pe <= 0.02, f"small delta pe rel err {e_pe:.3g}")

    p = SystemParams.from_sigma(delta=100.0, rho=1.0, lam=0.01, p_max=1.0, sigma=0.1)
    rep = report_from_saddle(solver(p), p)
    e_pd, d_pe = _rel(rep.pd_star, p.rho), abs(rep.pe_star - 0.5)
    chk.record("large_delta_pd_relerr", e_pd)
    chk.record("large_delta_pe_abserr", d_pe)
    chk.expect(e_pd <= 0.02, f"large delta pd rel err {e_pd:.3g}")
    chk.expect(d_pe <= 1e-3, f"large delta pe abs err {d_pe:.3g}")

    p = SystemParams.from_sigma(delta=1.5, rho=1e-6, lam=0.01, p_max=1.0, sigma=0.1)
    sp = solver(p)
    rep, lim = report_from_saddle(sp, p), sc.small_rho_limit(p)
    pairs = {
        "beta": (sp.beta_star, lim.beta_limit),
        "tau": (sp.tau_star, lim.tau_limit),
        "pb": (rep.pb_star, lim.pb),
        "pd": (rep.pd_star, lim.pd),
        "sinr_lb": (rep.sinr_lb_star, lim.sinr_lb),
        "half_minus_pe": (0.5 - rep.pe_star, 0.5 - lim.pe),
    }
    worst = max(_rel(a, b) for a, b in pairs.values())
    chk.record("small_rho_max_coeff_relerr", worst)
    chk.expect(worst <= 0.01, f"small rho coefficient rel err {worst:.3g}")

    p = SystemParams.from_sigma(delta=1.2, rho=1e6, lam=0.01, p_max=25.0, sigma=0.1)
    rep = report_from_saddle(solver(p), p)
    target_pe = gm.q_function(math.sqrt(2 * p.p_max / (math.pi * p.delta * (p.p_max + p.sigma2))))
    e_pb, d_pe = _rel(rep.pb_star, p.p_max), abs(rep.pe_star - target_pe)
    chk.record("large_rho_pb_relerr", e_pb)
    chk.record("large_rho_pe_abserr", d_pe)
    chk.expect(e_pb <= 0.005, f"large rho pb rel err {e_pb:.3g}")
    chk.expect(d_pe <= 1e-3, f"large rho pe abs err {d_pe:.3g}")
    return chk.done()


# criterion 6 -----------------------------------------------------------------

def coordinate_descent(inst, rho, lam, p_max, tol=1e-15, max_sweeps=200000):
    """Exact cyclic coordinate minimization of the box-constrained ridge objective."""
    h, s = inst.h, inst.s
    root_p = math.sqrt(p_max)
    x = np.zeros(inst.n)
    r = math.sqrt(rho) * s - h @ x
    col_sq = np.sum(h * h, axis=0) + lam
    for _ in range(max_sweeps):
        biggest = 0.0
        for j in range(inst.n):
            hj = h[:, j]
            if col_sq[j] == 0.0:
                continue
            new = min(max((hj @ r + (col_sq[j] - lam) * x[j]) / col_sq[j], -root_p), root_p)
            step = new - x[j]
            if step:
                r -= step * hj
                x[j] = new
                biggest = max(biggest, abs(step))
        if biggest <= tol:
            break
    return x


def criterion_precoder(instances=20, seed=7):
    chk = _Check(6, "precoder vs coordinate-descent oracle", 10.0)
    rng = np.random.default_rng(seed)
    worst_gap = worst_kkt = 0.0
    for _ in range(instances):
        n, m = int(rng.integers(1, 9)), int(rng.integers(1, 13))
        h = rng.standard_normal((m, n)) / math.sqrt(n)
        s = rng.choice([-1.0, 1.0], size=m)
        inst = ChannelInstance(h, s)
        p = SystemParams(delta=m / n, rho=rng.uniform(0.1, 10.0),
                         lam=rng.uniform(0.0, 1.0), p_max=rng.uniform(0.05, 5.0))
        try:
            sol = limited_papr_precode(inst, p)
        except ConvergenceError as exc:
            chk.expect(False, f"no convergence on n={n}, m={m}")
            sol = exc.solution
        else:
            worst_kkt = max(worst_kkt, sol.kkt_residual)
        ref = objective_value(coordinate_descent(inst, p.rho, p.lam, p.p_max), inst, p.rho, p.lam)
        worst_gap = max(worst_gap, abs(sol.objective - ref))
    chk.record("max_objective_gap", worst_gap)
    chk.record("max_kkt", worst_kkt)
    chk.expect(worst_gap <= 1e-8, f"objective gap {worst_gap:.2e}")
    chk.expect(worst_kkt <= 1e-8, f"KKT mapping norm {worst_kkt:.2e}")
    return chk.done()


# criteria 7 and 8 ------------------------------------------------------------

BASE = dict(delta=1.5, lam=0.01, p_max=1.0, sigma=0.1)
MC_RHOS = (0.5, 1.0, 2.0)
_COMPARED = ("pb", "pd", "sinr_lb_est", "ber")


def criterion_monte_carlo(solver, n=256, trials=50, n_jobs=1):
    """Runs the desk-scale simulation once and scores both criterion 7 and 8."""
    chk7 = _Check(7, "Monte Carlo vs theory (n=256, 50 trials)", 300.0 if n_jobs == 1 else 60.0)
    w2_rows, ks_rows = [], []
    for rho in MC_RHOS:
        p = SystemParams.from_sigma(rho=rho, **BASE)
        rep = run_experiment(p, n, trials, base_seed=0, saddle=solver(p), n_jobs=n_jobs)
        for name in _COMPARED:
            ms = rep.metrics[name]
            gap = abs(ms.mean - ms.theory)
            allowed = max(3.0 * ms.se, 0.02 * abs(ms.theory))
            chk7.record(f"rho{rho:g}_{name}_z", ms.z)
            chk7.expect(gap <= allowed, f"rho={rho:g} {name}: |diff| {gap:.3g} > {allowed:.3g}")
        w2_rows.append((rho, rep.wasserstein2_x, rep.w2_self_distance))
        ks_rows.append((rho, rep.ks_distortion_plus, rep.ks_critical_plus,
                        rep.ks_distortion_minus, rep.ks_critical_minus))
    r7 = chk7.done()

    chk8 = _Check(8, "distributional laws: W2 of x entries, KS of distortion", math.inf)
    for rho, w2, self_d in w2_rows:
        chk8.record(f"rho{rho:g}_w2_ratio", w2 / self_d)
        chk8.expect(w2 < 2.0 * self_d, f"rho={rho:g} W2 {w2:.3g} >= 2 x {self_d:.3g}")
    for rho, kp, cp, km, cm in ks_rows:
        chk8.record(f"rho{rho:g}_ks", (kp, km))
        chk8.expect(kp < cp and km < cm, f"rho={rho:g} KS ({kp:.3g}, {km:.3g}) vs ({cp:.3g}, {cm:.3g})")
    r8 = chk8.done()
    r8.seconds = r7.seconds
    return r7, r8


# criterion 9 -----------------------------------------------------------------

def criterion_tuning(solver, tol=1e-6):
    """Tuned grid at sigma = 0.1, the noise level used for the tuned-rho experiments."""
    chk = _Check(9, "rho tuning round trip and interior SINR maximum", 30.0)
    base = SystemParams.from_sigma(delta=1.2, rho=1.0, lam=0.02, p_max=50.0, sigma=0.1)
    fractions = [k / 10 for k in range(1, 10)]
    worst, sinrs = 0.0, []
    for f in fractions:
        res = rho_for_target_pb(f * base.p_max, base, tol=tol)
        p = base.replace(rho=res.rho)
        rep = report_from_saddle(solver(p), p)
        worst = max(worst, abs(rep.pb_star - f * base.p_max))
        sinrs.append(rep.sinr_lb_star)
    k = int(np.argmax(sinrs))
    chk.record("max_pb_error", worst)
    chk.record("argmax_pb_fraction", fractions[k])
    chk.record("sinr_lb_star", [float(v) for v in sinrs])
    chk.expect(worst <= tol, f"round-trip error {worst:.2e} > {tol:g}")
    chk.expect(0 < k < len(fractions) - 1,
               f"grid maximum at {fractions[k]:g} P is an endpoint of the tuned grid")
    return chk.done()


# criterion 10 ----------------------------------------------------------------

def criterion_determinism(n=64, trials=6):
    from .cli import main

    chk = _Check(10, "byte-identical simulate output (serial and parallel)", 120.0)
    flags = ["simulate", "--delta", "1.5", "--rho", "1", "--lambda", "0.01", "--p-max", "1",
             "--sigma", "0.1", "--n", str(n), "--trials", str(trials), "--seed", "11",
             "--format", "csv"]
    with tempfile.TemporaryDirectory() as tmp:
        outputs = []
        for k, jobs in enumerate(("1", "1", "2", "2")):
            path = Path(tmp) / f"run{k}.csv"
            code = main(flags + ["--jobs", jobs, "--out", str(path)])
            chk.expect(code == 0, f"run {k} exited with {code}")
            outputs.append(path.read_bytes() if path.exists() else b"")
    chk.record("serial_identical", outputs[0] == outputs[1])
    chk.record("parallel_identical", outputs[2] == outputs[3])
    chk.record("serial_equals_parallel", outputs[0] == outputs[2])
    chk.expect(outputs[0] == outputs[1], "serial runs differ")
    chk.expect(outputs[2] == outputs[3], "parallel runs differ")
    chk.expect(outputs[0] == outputs[2], "serial and parallel runs differ")
    return chk.done()


# driver ----------------------------------------------------------------------

QUICK = (1, 2, 3, 4, 5, 6, 9)


def run_all(quick=False, beta_perturbation=0.0, n_jobs=1, report: Callable = None):
    """Run every criterion (or the sub-minute subset) and return the results in order."""
    solver = Solver(beta_perturbation)
    plan = [
        (1, lambda: [criterion_moments()]),
        (2, lambda: [criterion_oracle(solver)]),
        (3, lambda: [criterion_rzf(solver)]),
        (4, lambda: [criterion_zf(solver)]),
        (5, lambda: [criterion_regimes(solver)]),
        (6, lambda: [criterion_precoder()]),
        (7, lambda: list(criterion_monte_carlo(solver, n_jobs=n_jobs))),
        (9, lambda: [criterion_tuning(solver)]),
        (10, lambda: [criterion_determinism()]),
    ]
    results = []
    for number, job in plan:
        if quick and number not in QUICK:
            continue
        try:
            batch = job()
        except Exception as exc:  # a crash inside a check is a failed check
            numbers = (7, 8) if number == 7 else (number,)
            batch = [CriterionResult(k, "check raised", False, failures=[f"{type(exc).__name__}: {exc}"])
                     for k in numbers]
        for res in batch:
            results.append(res)
            if report is not None:
                report(res)
    return results
