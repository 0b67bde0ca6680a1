"""Command-line front end: analyze, simulate, sweep, tune-rho, validate.

Exit codes: 0 ok, 1 validation failure, 2 infeasible or unreachable input,
3 solver convergence failure, 4 insufficient data, 5 monotonicity violation.
"""

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .asymptotics import report_from_saddle
from .exceptions import (ConvergenceError, InfeasibleError, InsufficientDataError,
                         NonMonotoneError, SingularError, TargetUnreachableError)
from .monte_carlo import METRICS, run_experiment
from .precoder import DEFAULT_MAX_ITER, DEFAULT_TOL, Method
from .saddle_point import SystemParams, solve_saddle
from .tuning import rho_for_target_pb

EXIT_OK, EXIT_VALIDATION, EXIT_INFEASIBLE, EXIT_CONVERGENCE, EXIT_DATA, EXIT_MONOTONE = range(6)

PARAM_COLUMNS = ("delta", "rho", "lambda", "p_max", "sigma")
THEORY_COLUMNS = ("beta_star", "tau_star", "pb_star", "pd_star", "sinr_lb_star",
                  "sinr_up_star", "pe_star", "alpha_star", "phi_bar", "residual",
                  "sinr_lb_star_db", "sinr_up_star_db")
EMPIRICAL_COLUMNS = tuple(
    col for name in METRICS for col in (f"{name}_emp", f"{name}_se", f"{name}_z")
) + ("sinr_lb_est_emp_db", "w2_x", "w2_self", "ks_plus", "ks_plus_crit", "ks_minus", "ks_minus_crit")
SWEEPABLE = {"delta": "delta", "rho": "rho", "lambda": "lam", "p_max": "p_max", "sigma": "sigma"}


def _num(v):
    """Round to 12 significant digits; None stays None."""
    if v is None:
        return None
    v = float(v)
    if not math.isfinite(v):
        return v
    return float(f"{v:.12g}")


def _db(v):
    if v is None:
        return None
    return 10.0 * math.log10(v) if v > 0 else -math.inf


def _param_row(params):
    return {"delta": params.delta, "rho": params.rho, "lambda": params.lam,
            "p_max": params.p_max, "sigma": params.sigma}


def _theory_row(params, saddle=None):
    sp = saddle if saddle is not None else solve_saddle(params)
    row = report_from_saddle(sp, params).as_dict()
    row["sinr_lb_star_db"] = _db(row["sinr_lb_star"])
    row["sinr_up_star_db"] = _db(row["sinr_up_star"])
    return row


def _empirical_row(report, with_theory):
    row = {}
    for name in METRICS:
        ms = report.metrics[name]
        row[f"{name}_emp"] = ms.mean
        row[f"{name}_se"] = ms.se
        row[f"{name}_z"] = ms.z if with_theory else None
    row["sinr_lb_est_emp_db"] = _db(report.metrics["sinr_lb_est"].mean)
    if with_theory:
        row.update(w2_x=report.wasserstein2_x, w2_self=report.w2_self_distance,
                   ks_plus=report.ks_distortion_plus, ks_plus_crit=report.ks_critical_plus,
                   ks_minus=report.ks_distortion_minus, ks_minus_crit=report.ks_critical_minus)
    return row


def _columns(rows):
    cols = list(PARAM_COLUMNS) + list(THEORY_COLUMNS)
    if any(k in r for r in rows for k in EMPIRICAL_COLUMNS):
        cols += list(EMPIRICAL_COLUMNS)
    extra = []
    for r in rows:
        for k in r:
            if k not in cols and k not in extra and k != "status":
                extra.append(k)
    return cols + extra + ["status"]


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(_num(v)) if math.isfinite(v) else ("inf" if v > 0 else "-inf")
    return str(v)


def render(rows, fmt, columns=None):
    columns = columns or _columns(rows)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for r in rows:
            writer.writerow([_csv_cell(r.get(c)) for c in columns])
        return buf.getvalue()
    clean = [{c: (_num(r.get(c)) if isinstance(r.get(c), float) else r.get(c)) for c in columns}
             for r in rows]
    return json.dumps(clean[0] if len(clean) == 1 else clean, indent=2) + "\n"


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def params_from_args(args):
    return SystemParams.from_sigma(delta=args.delta, rho=args.rho, lam=args.lam,
                                   p_max=args.p_max, sigma=args.sigma)


def cmd_analyze(args):
    params = params_from_args(args)
    row = _param_row(params)
    row.update(_theory_row(params))
    row["status"] = "ok"
    _emit(render([row], args.format), args.out)
    return EXIT_OK


def _simulate_row(params, args, n_jobs):
    method = Method.parse(args.method)
    saddle = solve_saddle(params) if params.feasible else None
    with_theory = method is Method.LIMITED_PAPR and saddle is not None
    report = run_experiment(params, args.n, args.trials, base_seed=args.seed, method=method,
                            saddle=saddle if with_theory else None, n_jobs=n_jobs,
                            tol=args.tol, max_iter=args.max_iter)
    row = _param_row(params)
    if saddle is not None:
        row.update(_theory_row(params, saddle))
    row.update(_empirical_row(report, with_theory))
    row["method"] = args.method
    row["n"] = args.n
    row["trials"] = args.trials
    row["seed"] = args.seed
    row["status"] = "ok"
    return row


def cmd_simulate(args):
    if args.n < 8:
        raise ValueError("--n must be at least 8")
    params = params_from_args(args)
    if Method.parse(args.method) is Method.LIMITED_PAPR and not params.feasible:
        raise InfeasibleError("lambda = 0 requires delta > 1")
    row = _simulate_row(params, args, args.jobs)
    _emit(render([row], args.format), args.out)
    return EXIT_OK


def sweep_values(args):
    if args.values:
        return [float(v) for v in args.values.split(",") if v.strip()]
    if args.start is None or args.stop is None or args.steps is None:
        raise ValueError("--sweep needs --values or --from/--to/--steps")
    if args.steps < 1:
        raise ValueError("--steps must be at least 1")
    if args.log:
        return np.geomspace(args.start, args.stop, args.steps).tolist()
    return np.linspace(args.start, args.stop, args.steps).tolist()


def _sweep_point(job):
    args, name, value = job
    fields = {k: getattr(args, k) for k in ("delta", "rho", "lam", "p_max", "sigma")}
    fields[SWEEPABLE[name]] = value
    try:
        params = SystemParams.from_sigma(**fields)
        if args.target_pb is not None:
            params = params.replace(rho=rho_for_target_pb(args.target_pb, params, tol=args.tol_pb).rho)
        row = _param_row(params)
        if not params.feasible:
            row["status"] = "infeasible"
            return row
        row.update(_theory_row(params))
        if args.trials:
            row.update({k: v for k, v in _simulate_row(params, args, 1).items()
                        if k not in row})
        row["status"] = "ok"
    except (InfeasibleError, SingularError):
        row = {**_safe_params(fields), "status": "infeasible"}
    except TargetUnreachableError:
        row = {**_safe_params(fields), "status": "unreachable"}
    except ConvergenceError:
        row = {**_safe_params(fields), "status": "convergence_failure"}
    except NonMonotoneError:
        row = {**_safe_params(fields), "status": "non_monotone"}
    return row


def _safe_params(fields):
    return {"delta": fields["delta"], "rho": fields["rho"], "lambda": fields["lam"],
            "p_max": fields["p_max"], "sigma": fields["sigma"]}


def cmd_sweep(args):
    name = args.sweep
    values = sweep_values(args)
    jobs = [(args, name, v) for v in values]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    _emit(render(rows, args.format), args.out)
    if all(r["status"] in ("infeasible", "unreachable") for r in rows):
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_tune_rho(args):
    if args.target_pb is None:
        raise ValueError("tune-rho needs --target-pb")
    params = params_from_args(args)
    res = rho_for_target_pb(args.target_pb, params, tol=args.tol_pb)
    row = _param_row(params.replace(rho=res.rho))
    row.update(target_pb=args.target_pb, achieved_pb=res.achieved_pb,
               iterations=res.iterations, bracket_lo=res.bracket[0], bracket_hi=res.bracket[1],
               status="ok")
    columns = list(PARAM_COLUMNS) + ["target_pb", "achieved_pb", "iterations",
                                     "bracket_lo", "bracket_hi", "status"]
    _emit(render([row], args.format, columns), args.out)
    return EXIT_OK


def cmd_validate(args):
    from .validation import run_all

    lines = []

    def report(res):
        line = res.line()
        lines.append(line)
        print(line, flush=True)

    results = run_all(quick=args.quick, beta_perturbation=args.perturb_beta,
                      n_jobs=args.jobs, report=report)
    passed = sum(r.passed for r in results)
    summary = f"{passed}/{len(results)} criteria passed"
    print(summary)
    if args.out:
        _emit("\n".join(lines + [summary]) + "\n", args.out)
    return EXIT_OK if passed == len(results) else EXIT_VALIDATION


def build_parser():
    parser = argparse.ArgumentParser(prog="limpapr",
                                     description="Limited-PAPR precoding: theory, simulation, tuning.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--delta", type=float, default=1.5, help="users per antenna, m/n")
    common.add_argument("--rho", type=float, default=1.0, help="power control factor")
    common.add_argument("--lambda", dest="lam", type=float, default=0.01, help="ridge weight")
    common.add_argument("--p-max", dest="p_max", type=float, default=1.0, help="per-antenna cap P")
    common.add_argument("--sigma", type=float, default=0.1, help="noise standard deviation")
    common.add_argument("--n", type=int, default=256, help="antennas per Monte Carlo trial")
    common.add_argument("--trials", type=int, default=None,
                        help="Monte Carlo trials (simulate: 50, sweep: 0)")
    common.add_argument("--seed", type=int, default=0, help="base seed; trial i uses seed + i")
    common.add_argument("--method", default="papr", choices=["papr", "rzf", "zf", "onebit"])
    common.add_argument("--format", default="json", choices=["json", "csv"])
    common.add_argument("--out", default=None, help="output path (default: stdout)")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="precoder stopping tolerance")
    common.add_argument("--max-iter", dest="max_iter", type=int, default=DEFAULT_MAX_ITER)
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    common.add_argument("--target-pb", dest="target_pb", type=float, default=None)
    common.add_argument("--tol-pb", dest="tol_pb", type=float, default=1e-6,
                        help="tolerance on pb* when tuning rho")

    sub.add_parser("analyze", parents=[common], help="asymptotic metrics for one setting")
    sub.add_parser("simulate", parents=[common], help="Monte Carlo run with theory columns")
    sw = sub.add_parser("sweep", parents=[common], help="theory (and optional empirical) table")
    sw.add_argument("--sweep", required=True, choices=sorted(SWEEPABLE))
    sw.add_argument("--values", default=None, help="comma-separated grid")
    sw.add_argument("--from", dest="start", type=float, default=None)
    sw.add_argument("--to", dest="stop", type=float, default=None)
    sw.add_argument("--steps", type=int, default=None)
    sw.add_argument("--log", action="store_true", help="geometric grid")
    sub.add_parser("tune-rho", parents=[common], help="rho giving pb* = --target-pb")
    val = sub.add_parser("validate", parents=[common], help="run the acceptance checks")
    val.add_argument("--quick", action="store_true", help="skip the Monte Carlo criteria")
    val.add_argument("--perturb-beta", dest="perturb_beta", type=float, default=0.0,
                     help=argparse.SUPPRESS)
    return parser


COMMANDS = {"analyze": cmd_analyze, "simulate": cmd_simulate, "sweep": cmd_sweep,
            "tune-rho": cmd_tune_rho, "validate": cmd_validate}


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.trials is None:
        args.trials = 50 if args.command == "simulate" else 0
    try:
        return COMMANDS[args.command](args)
    except (InfeasibleError, TargetUnreachableError, SingularError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except InsufficientDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NonMonotoneError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MONOTONE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
