"""Command line driver: runs one experiment, prints a table, optionally writes JSON or CSV.

Exit codes: 0 all verdicts pass, 1 a verdict failed, 2 usage error, 3 numeric error.
Options may also come from a flat ``key = value`` file given by ``--config``;
flags on the command line take precedence.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .acceptance import CRITERIA, run_criterion
from .astat import INDEX_SETS, a_density, get_matrix, regularity_check, theorem10_demo
from .errors import ContractError, NumericError, RhoBaskakovError, UsageError
from .functions import get_function
from .moments import (
    central_moment_closed,
    central_moment_series,
    fourth_moment_order_check,
    raw_moment_closed,
    raw_moment_series,
)
from .operators import FAMILIES, OperatorSpec, TruncationPolicy, apply_many, evaluate_function
from .report import ExperimentReport
from .rho import get_rho
from .weighted import (
    VARIANTS,
    FunctionInSpace,
    SupGrid,
    holhos_delta,
    measure_abcd,
    theorem3_check,
    voronovskaya_check,
)

THREADS_ENV = "RHOBASKAKOV_THREADS"
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text: str) -> List[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _grid(text: str) -> List[float]:
    """``start:stop:count`` into an evenly spaced list."""
    try:
        start, stop, count = text.split(":")
        return np.linspace(float(start), float(stop), int(count)).tolist()
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:count, got {text!r}") from None


def _params(pairs: Optional[Sequence[str]]) -> Dict[str, float]:
    out = {}
    for item in pairs or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"parameter {item!r} is not of the form key=value")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise UsageError(f"parameter {item!r} needs a numeric value") from None
    return out


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        count = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if count < 1:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return count


def _map_ordered(fn: Callable, jobs: list) -> list:
    """Run independent jobs, possibly on a thread pool; results keep job order."""
    threads = _threads()
    if threads == 1 or len(jobs) < 2:
        return [fn(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, jobs))


def _rho(args):
    return get_rho(args.rho, **_params(args.rho_param))


# ---- commands -------------------------------------------------------------

def cmd_evaluate(args) -> ExperimentReport:
    rho = _rho(args)
    named = get_function(args.f)
    spec = OperatorSpec(args.family, args.n, rho)
    rho = spec.rho
    xs = args.grid if args.grid is not None else args.x
    growth = args.growth if args.growth is not None else named.growth
    policy = TruncationPolicy(mass_tol=args.mass_tol, growth_bound=growth)
    f = named.f(rho)
    results = apply_many(spec, f, xs, policy)
    fx = evaluate_function(f, np.asarray(xs, dtype=float))
    values = [r.value for r in results]
    report = ExperimentReport(
        command="evaluate",
        inputs={"family": args.family, "rho": rho.label(), "n": args.n, "f": args.f, "x": list(xs),
                "mass_tol": args.mass_tol, "growth_bound": growth},
        measured={"value": values, "error_bound": [r.error_bound for r in results],
                  "tail_bound": [r.tail_bound for r in results], "terms": [r.K + 1 for r in results],
                  "f_x": fx.tolist()},
        verdicts={"finite": bool(np.all(np.isfinite(values))), "certified": all(r.certified for r in results)},
        series={"value": list(zip(xs, values)), "f": list(zip(xs, fx.tolist()))},
    )
    at0 = [i for i, x in enumerate(xs) if x == 0.0]
    if at0:
        i = at0[0]
        report.verdicts["interpolates_at_0"] = abs(values[i] - fx[i]) <= results[i].error_bound + 4e-16 * abs(fx[i])
    return report


def cmd_moments(args) -> ExperimentReport:
    rho = _rho(args)
    rows, worst = [], 0.0
    for x in args.x:
        for kind, m, closed_fn, series_fn in (
            [("raw", m, raw_moment_closed, raw_moment_series) for m in range(0, 4)]
            + [("central", 2, central_moment_closed, central_moment_series)]
        ):
            closed = closed_fn(m, args.n, x, rho)
            got = series_fn(m, args.n, x, rho)
            dev = abs(got.value - closed) / (1.0 + abs(closed))
            worst = max(worst, dev)
            rows.append({"x": x, "kind": kind, "order": m, "closed": closed, "series": got.value,
                         "series_error_bound": got.error_bound})
    report = ExperimentReport(
        command="moments",
        inputs={"rho": rho.label(), "n": args.n, "x": list(args.x), "tol": args.tol},
        measured={"rows": rows, "worst_deviation": worst},
        verdicts={"series_matches_closed": worst <= args.tol},
        series={f"raw{m}": [(r["x"], r["series"]) for r in rows if r["kind"] == "raw" and r["order"] == m]
                for m in range(4)},
    )
    if args.n_list:
        for x in args.x:
            sub = fourth_moment_order_check(x, rho, args.n_list, tol=args.ratio_tol)
            report.measured[f"n2_mu4_x={x:g}"] = sub.measured["n2_mu4"]
            report.measured[f"ratios_x={x:g}"] = sub.measured["ratios"]
            report.verdicts[f"fourth_order_x={x:g}"] = sub.passed
            report.series[f"n2_mu4_x={x:g}"] = sub.series["n2_mu4"]
    return report


def cmd_bound(args) -> ExperimentReport:
    rho = _rho(args)
    grid = SupGrid.build(rho)
    members = {lab: FunctionInSpace.from_named(get_function(lab), rho, grid) for lab in args.f}
    report = ExperimentReport(
        command="bound",
        inputs={"rho": rho.label(), "n_list": list(args.n_list), "f": list(args.f), "variant": args.variant},
    )
    for n in args.n_list:
        abcd = measure_abcd(n, rho, grid, check=False)
        report.measured[f"abcd_n={n}"] = [abcd.a, abcd.b, abcd.c, abcd.d]
        report.bounds[f"c_d_bounds_n={n}"] = [2.0 / n, 10.0 / n]
        report.bounds[f"delta_measured_n={n}"] = holhos_delta(abcd)
        report.verdicts[f"c_le_2_over_n_n={n}"] = abcd.c <= 2.0 / n
        report.verdicts[f"d_le_10_over_n_n={n}"] = abcd.d <= 10.0 / n

    jobs = [(n, lab) for n in args.n_list for lab in args.f]
    reps = _map_ordered(lambda job: theorem3_check(members[job[1]], job[0], rho, grid, variant=args.variant), jobs)
    for (n, lab), rep in zip(jobs, reps):
        key = f"{lab}_n={n}"
        report.measured[f"lhs_{key}"] = rep.measured["lhs"]
        report.bounds[f"rhs_{key}"] = rep.bounds["rhs"]
        report.verdicts[f"lhs_le_rhs_{key}"] = rep.passed
    for lab in args.f:
        report.series[f"lhs_{lab}"] = [(n, report.measured[f"lhs_{lab}_n={n}"]) for n in args.n_list]
        report.series[f"rhs_{lab}"] = [(n, report.bounds[f"rhs_{lab}_n={n}"]) for n in args.n_list]
    return report


def cmd_voronovskaya(args) -> ExperimentReport:
    rho = _rho(args)
    fis = FunctionInSpace.from_named(get_function(args.f), rho)
    if len(args.x) != 1:
        raise UsageError("voronovskaya takes a single --x value")
    policy = TruncationPolicy(mass_tol=args.mass_tol, growth_bound=fis.growth_constant)
    return voronovskaya_check(fis, args.x[0], args.n_list, rho, rel_tol=args.rel_tol, policy=policy)


def cmd_astat(args) -> ExperimentReport:
    A = get_matrix(args.matrix, **_params(args.matrix_param))
    if args.set not in INDEX_SETS:
        raise UsageError(f"unknown index set {args.set!r}; choose from {sorted(INDEX_SETS)}")
    reg = regularity_check(A)
    dens = a_density(A, INDEX_SETS[args.set], args.j_list)
    demo = theorem10_demo(_rho(args), n_max=args.n_max, A=A, epsilons=args.eps)
    report = ExperimentReport(
        command="astat",
        inputs={"matrix": A.name, "set": args.set, "j_list": list(args.j_list), "n_max": args.n_max,
                "eps": list(args.eps)},
        measured={"density": dens, "regularity": reg.measured, "demo": demo.measured},
        verdicts={**{f"regularity_{k}": v for k, v in reg.verdicts.items()},
                  **{f"demo_{k}": v for k, v in demo.verdicts.items()}},
        series={"density": list(zip(args.j_list, dens)), **demo.series},
    )
    return report


def cmd_suite(args) -> ExperimentReport:
    unknown = [k for k in args.criteria if k not in CRITERIA]
    if unknown:
        raise UsageError(f"unknown criteria {unknown}; choose from {sorted(CRITERIA)}")
    reps = _map_ordered(run_criterion, list(args.criteria))
    merged = ExperimentReport(command="suite", inputs={"criteria": list(args.criteria)})
    for k, rep in zip(args.criteria, reps):
        merged.measured[f"criterion_{k}"] = rep.measured
        merged.verdicts[f"criterion_{k}"] = rep.passed
        for v, ok in rep.verdicts.items():
            if not ok:
                merged.notes.append(f"criterion {k}: {v} failed")
    return merged


# ---- parser ---------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="flat key = value file; flags override it")
    p.add_argument("--out", type=Path, help="write the report to a .json or .csv file")
    return p


def _rho_opts(p):
    p.add_argument("--rho", default="identity", help="catalog map: identity, quadratic, exponential, sinh")
    p.add_argument("--rho-param", action="append", metavar="KEY=VALUE", help="map parameter, e.g. a=2")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rhobaskakov", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()

    p = sub.add_parser("evaluate", parents=[common], help="evaluate the operator on a set of points")
    _rho_opts(p)
    p.add_argument("--family", default="rho-baskakov", choices=FAMILIES)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--f", default="rho2", help="function label")
    p.add_argument("--x", type=_float_list, default=[0.0, 1.0, 2.0])
    p.add_argument("--grid", type=_grid, help="start:stop:count, overrides --x")
    p.add_argument("--mass-tol", type=float, default=1e-12)
    p.add_argument("--growth", type=float, help="growth constant of f against 1 + rho^2")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("moments", parents=[common], help="closed-form vs series moments")
    _rho_opts(p)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--x", type=_float_list, default=[0.5, 1.0, 2.0])
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--n-list", type=_int_list, help="also run the fourth-moment order check over these n")
    p.add_argument("--ratio-tol", type=float, default=0.1)
    p.set_defaults(handler=cmd_moments)

    p = sub.add_parser("bound", parents=[common], help="weighted error sequences and the quantitative estimate")
    _rho_opts(p)
    p.add_argument("--n-list", type=_int_list, default=[4, 16, 64, 256])
    p.add_argument("--f", type=_str_list, default=["e0", "rho", "rho2", "sin_rho", "exp_neg_rho"])
    p.add_argument("--variant", choices=VARIANTS, default="sum")
    p.set_defaults(handler=cmd_bound)

    p = sub.add_parser("voronovskaya", parents=[common], help="asymptotic formula by extrapolation")
    _rho_opts(p)
    p.add_argument("--f", default="exp_neg_rho")
    p.add_argument("--x", type=_float_list, default=[1.0])
    p.add_argument("--n-list", type=_int_list, default=[50, 100, 200, 400, 800])
    p.add_argument("--rel-tol", type=float, default=0.01)
    p.add_argument("--mass-tol", type=float, default=1e-15)
    p.set_defaults(handler=cmd_voronovskaya)

    p = sub.add_parser("astat", parents=[common], help="summability and A-statistical checks")
    _rho_opts(p)
    p.add_argument("--matrix", default="cesaro")
    p.add_argument("--matrix-param", action="append", metavar="KEY=VALUE", help="e.g. width=10 for banded")
    p.add_argument("--set", default="squares")
    p.add_argument("--j-list", type=_int_list, default=[100, 1000, 10000, 100000])
    p.add_argument("--n-max", type=int, default=100000)
    p.add_argument("--eps", type=_float_list, default=[0.1, 0.01])
    p.set_defaults(handler=cmd_astat)

    p = sub.add_parser("suite", parents=[common], help="run the acceptance criteria")
    p.add_argument("--criteria", type=_int_list, default=sorted(CRITERIA))
    p.set_defaults(handler=cmd_suite)
    return parser


def _subparser(parser, command):
    for action in parser._subparsers._group_actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise UsageError(f"no subcommand {command!r}")


def load_config(path: Path, sub: argparse.ArgumentParser) -> dict:
    """Convert a ``key = value`` file into defaults for ``sub``.

    Keys are long option names without the dashes; ``_`` and ``-`` are
    interchangeable. Repeatable options take whitespace-separated values.
    """
    try:
        text = path.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    by_flag = {opt: act for act in sub._actions for opt in act.option_strings}
    defaults = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip().replace("_", "-"), value.strip()
        if not sep or not key:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        act = by_flag.get(f"--{key}")
        if act is None or act.dest in ("config", "help"):
            raise UsageError(f"{path}:{lineno}: unknown key {key!r} for this command")
        try:
            if isinstance(act, argparse._AppendAction):
                defaults[act.dest] = value.split()
            elif act.type is not None:
                defaults[act.dest] = act.type(value)
            else:
                defaults[act.dest] = value
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from None
        if act.choices is not None and defaults[act.dest] not in act.choices:
            raise UsageError(f"{path}:{lineno}: {key} must be one of {list(act.choices)}")
    return defaults


def _write(report: ExperimentReport, out: Path):
    if out.suffix == ".json":
        out.write_text(report.to_json())
    else:
        out.write_text(report.to_csv())


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config is not None:
            sub = _subparser(parser, args.command)
            sub.set_defaults(**load_config(args.config, sub))
            args = parser.parse_args(argv)
        if args.out is not None and args.out.suffix not in (".json", ".csv"):
            raise UsageError("--out must end in .json or .csv")
        _threads()
        start = time.perf_counter()
        report = args.handler(args)
        report.runtime = time.perf_counter() - start
    except (UsageError, ContractError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except RhoBaskakovError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(report.to_table())
    if args.out is not None:
        try:
            _write(report, args.out)
        except OSError as exc:
            print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
            return EXIT_USAGE
    return EXIT_OK if report.passed else EXIT_FAIL
