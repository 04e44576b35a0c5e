"""Acceptance criteria as callable checks.

Each ``criterion_k`` returns an :class:`ExperimentReport` whose verdicts are
the pass/fail conditions at the pinned tolerances. ``run_suite`` runs all
nine and merges them into one report.
"""

from __future__ import annotations

import math
import time
from typing import Callable, Dict, Optional

import numpy as np

from .astat import a_density, cesaro, perfect_squares, regularity_check, theorem10_demo
from .functions import FUNCTIONS, get_function
from .moments import (
    central_moment_closed,
    central_moment_series,
    fourth_moment_order_check,
    raw_moment_closed,
    raw_moment_series,
)
from .operators import OperatorSpec, TruncationPolicy, apply_many
from .report import ExperimentReport
from .rho import builtin_catalog, get_rho
from .weighted import (
    AbcdSequence,
    FunctionInSpace,
    SupGrid,
    holhos_delta,
    measure_abcd,
    monotone_nondecreasing_check,
    theorem3_check,
    closed_delta_n,
    voronovskaya_check,
)

__all__ = ["CRITERIA", "run_criterion", "run_suite", "DEFAULT_SEED"] + [f"criterion_{k}" for k in range(1, 10)]

DEFAULT_SEED = 20240607
MOMENT_NS = (1, 5, 10, 100)
MOMENT_TOL = 1e-9
_EPS = np.finfo(float).eps


def _x_grid(rho, count=20):
    return np.linspace(0.0, rho.domain_hint, count)


def _finish(report: ExperimentReport, start: float, limit: Optional[float] = None) -> ExperimentReport:
    report.runtime = time.perf_counter() - start
    if limit is not None:
        report.bounds["runtime_limit_s"] = limit
        report.verdicts["within_runtime"] = report.runtime < limit
    return report


def _moment_sweep(orders):
    worst, worst_at = 0.0, None
    for rho in builtin_catalog():
        for n in MOMENT_NS:
            for x in _x_grid(rho):
                for m in orders:
                    closed = raw_moment_closed(m, n, x, rho)
                    got = raw_moment_series(m, n, x, rho).value
                    dev = abs(got - closed) / (1.0 + abs(closed))
                    if dev > worst:
                        worst, worst_at = dev, (rho.name, n, float(x), f"raw{m}")
                if 3 not in orders:
                    for m in (1, 2):
                        closed = central_moment_closed(m, n, x, rho)
                        got = central_moment_series(m, n, x, rho).value
                        dev = abs(got - closed) / (1.0 + abs(closed))
                        if dev > worst:
                            worst, worst_at = dev, (rho.name, n, float(x), f"central{m}")
    return worst, worst_at


def criterion_1() -> ExperimentReport:
    """Moment identities of orders 0..2 (raw) and 1..2 (central)."""
    start = time.perf_counter()
    worst, at = _moment_sweep((0, 1, 2))
    example = raw_moment_series(2, 10, 2.0, get_rho("identity")).value
    report = ExperimentReport(
        command="criterion_1",
        inputs={"rhos": [r.label() for r in builtin_catalog()], "n": list(MOMENT_NS), "x_per_rho": 20, "tol": MOMENT_TOL},
        measured={"worst_deviation": worst, "worst_at": list(at) if at else [], "V_rho2_n10_x2": example},
        bounds={"V_rho2_n10_x2_expected": 4.6},
        verdicts={"series_matches_closed": worst <= MOMENT_TOL, "example_4_6": abs(example - 4.6) <= MOMENT_TOL * 5.6},
    )
    return _finish(report, start, 5.0)


def criterion_2() -> ExperimentReport:
    """Third raw moment against its closed form on the same sweep."""
    start = time.perf_counter()
    worst, at = _moment_sweep((3,))
    report = ExperimentReport(
        command="criterion_2",
        inputs={"rhos": [r.label() for r in builtin_catalog()], "n": list(MOMENT_NS), "x_per_rho": 20, "tol": MOMENT_TOL},
        measured={"worst_deviation": worst, "worst_at": list(at) if at else []},
        verdicts={"third_moment_matches": worst <= MOMENT_TOL},
    )
    return _finish(report, start)


def criterion_3(ns=tuple(2**k for k in range(2, 11))) -> ExperimentReport:
    """Weighted errors on ``rho^2`` and ``rho^3`` against ``2/n`` and ``10/n``."""
    start = time.perf_counter()
    target = (1.0 + math.sqrt(2.0)) / 2.0
    c_ok, d_ok, worst_c_ratio, worst_d_ratio, dev_ident = True, True, 0.0, 0.0, 0.0
    for rho in builtin_catalog():
        grid = SupGrid.build(rho)
        for n in ns:
            abcd = measure_abcd(n, rho, grid, check=False)
            c_ok &= abcd.c <= 2.0 / n
            d_ok &= abcd.d <= 10.0 / n
            worst_c_ratio = max(worst_c_ratio, abcd.c * n / 2.0)
            worst_d_ratio = max(worst_d_ratio, abcd.d * n / 10.0)
            if rho.name == "identity":
                dev_ident = max(dev_ident, abs(n * abcd.c - target))
    report = ExperimentReport(
        command="criterion_3",
        inputs={"rhos": [r.label() for r in builtin_catalog()], "n": list(ns)},
        measured={"max_c_over_bound": worst_c_ratio, "max_d_over_bound": worst_d_ratio,
                  "identity_n_c_deviation": dev_ident},
        bounds={"n_c_target": target, "tolerance": 1e-6},
        verdicts={"c_le_2_over_n": bool(c_ok), "d_le_10_over_n": bool(d_ok), "n_c_matches": dev_ident <= 1e-6},
    )
    return _finish(report, start)


def criterion_4() -> ExperimentReport:
    """Consistency of the general ``delta_n`` formula with its specialised form."""
    start = time.perf_counter()
    worst = 0.0
    for n in range(1, 1001):
        general = holhos_delta(AbcdSequence(0.0, 0.0, 2.0 / n, 10.0 / n))
        special = closed_delta_n(n)
        worst = max(worst, float(abs(general - special) / (_EPS * special)))
    at8 = holhos_delta(AbcdSequence(0.0, 0.0, 0.25, 1.25))
    report = ExperimentReport(
        command="criterion_4",
        inputs={"n_range": [1, 1000]},
        measured={"worst_deviation_ulps": worst, "delta_8": at8},
        bounds={"max_ulps": 4.0, "delta_8_expected": 3.0},
        verdicts={"formulas_agree": bool(worst <= 4.0), "delta_8_is_3": at8 == 3.0},
    )
    return _finish(report, start)


THEOREM3_FUNCTIONS = ("e0", "rho", "rho2", "sin_rho", "exp_neg_rho")


def criterion_5(ns=(4, 16, 64, 256)) -> ExperimentReport:
    """Quantitative weighted estimate over functions, maps and ``n``."""
    start = time.perf_counter()
    violations, worst_ratio, checks = [], 0.0, 0
    for rho in builtin_catalog():
        grid = SupGrid.build(rho)
        members = {lab: FunctionInSpace.from_named(get_function(lab), rho, grid) for lab in THEOREM3_FUNCTIONS}
        # n outermost so the weight tables cached for one n serve every function
        for n in ns:
            for label, fis in members.items():
                rep = theorem3_check(fis, n, rho, grid)
                checks += 1
                lhs, rhs = rep.measured["lhs"], rep.bounds["rhs"]
                if rhs > 0:
                    worst_ratio = max(worst_ratio, lhs / rhs)
                if not rep.passed:
                    violations.append(f"{rho.name}/{label}/n={n}")
    report = ExperimentReport(
        command="criterion_5",
        inputs={"rhos": [r.label() for r in builtin_catalog()], "functions": list(THEOREM3_FUNCTIONS), "n": list(ns),
                "variant": "sum"},
        measured={"checks": checks, "violations": violations, "max_lhs_over_rhs": worst_ratio},
        verdicts={"zero_violations": not violations},
    )
    return _finish(report, start, 60.0)


def criterion_6() -> ExperimentReport:
    """Asymptotic formula: exact on ``rho^2``, extrapolated on ``exp(-rho)``, and the fourth-moment order."""
    start = time.perf_counter()
    rho2 = get_function("rho2")
    worst_exact = 0.0
    for rho in builtin_catalog():
        xs = _x_grid(rho, 8)
        f = rho2.f(rho)
        fx = np.asarray(f(xs), dtype=float)
        r = np.asarray(rho(xs), dtype=float)
        for n in (1, 3, 10, 100, 1000):
            res = apply_many(OperatorSpec("rho-baskakov", n, rho), f, xs, TruncationPolicy(mass_tol=1e-16))
            g = n * (np.array([q.value for q in res]) - fx)
            allowed = n * (np.array([q.error_bound for q in res]) + 4 * _EPS * fx) + 1e-9 * (1 + r * (1 + r))
            worst_exact = max(worst_exact, float(np.max(np.abs(g - r * (1 + r)) / allowed)))

    ident = get_rho("identity")
    fis = FunctionInSpace.from_named(get_function("exp_neg_rho"), ident)
    vor = voronovskaya_check(fis, 1.0, (50, 100, 200, 400, 800), ident, rel_tol=0.01)
    order_ok, ratio_dev = True, 0.0
    for rho in builtin_catalog():
        for x in (1.0, 0.5 * rho.domain_hint):
            rep = fourth_moment_order_check(x, rho, (50, 100, 200, 400, 800), tol=0.1)
            order_ok &= rep.passed
            ratio_dev = max([ratio_dev] + [abs(q - 1) for q in rep.measured["ratios"]])
    report = ExperimentReport(
        command="criterion_6",
        inputs={"exact_n": [1, 3, 10, 100, 1000], "vor_x": 1.0, "vor_n": [50, 100, 200, 400, 800],
                "order_n": [50, 100, 200, 400, 800]},
        measured={"rho2_worst_over_allowed": worst_exact, "exp_limit": vor.measured["limit"],
                  "exp_rel_dev": abs(vor.measured["limit"] - math.exp(-1)) / math.exp(-1),
                  "mu4_max_ratio_dev": ratio_dev},
        bounds={"exp_target": math.exp(-1), "exp_rel_tol": 0.01, "mu4_ratio_tol": 0.1},
        verdicts={"rho2_exact": worst_exact <= 1.0, "exp_extrapolates": vor.passed, "mu4_order": bool(order_ok)},
    )
    return _finish(report, start)


def criterion_7(probes: int = 1000, seed: int = DEFAULT_SEED) -> ExperimentReport:
    """rho-Baskakov with the identity map against the classical operator on random probes."""
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    labels = sorted(FUNCTIONS)
    ident = get_rho("identity")
    worst = 0.0
    for _ in range(probes):
        n = int(rng.integers(1, 201))
        x = float(rng.uniform(0.0, 20.0))
        f = FUNCTIONS[labels[int(rng.integers(len(labels)))]].f(ident)
        a = apply_many(OperatorSpec("rho-baskakov", n, ident), f, [x])[0].value
        b = apply_many(OperatorSpec("classical-baskakov", n), f, [x])[0].value
        worst = max(worst, abs(a - b))
    report = ExperimentReport(
        command="criterion_7",
        inputs={"probes": probes, "seed": seed, "n_range": [1, 200], "x_range": [0.0, 20.0], "functions": labels},
        measured={"max_abs_difference": worst},
        bounds={"tolerance": 1e-12},
        verdicts={"identical": worst <= 1e-12},
    )
    return _finish(report, start)


def criterion_8() -> ExperimentReport:
    """Summability checks and the A-statistical demonstration."""
    start = time.perf_counter()
    C1 = cesaro()
    reg = regularity_check(C1)
    js = [10**k for k in range(2, 7)]
    dens = a_density(C1, perfect_squares, js)
    demo = theorem10_demo()
    report = ExperimentReport(
        command="criterion_8",
        inputs={"density_rows": js},
        measured={"squares_density": dens, "regularity": reg.verdicts, "demo": demo.verdicts},
        bounds={"density_at_1e4": 0.01, "tolerance": 1e-12},
        verdicts={
            "cesaro_regular": reg.passed,
            "density_1e4": abs(dens[js.index(10**4)] - 0.01) <= 1e-12,
            "density_trends_to_zero": all(b < a for a, b in zip(dens, dens[1:])) and dens[-1] < 2e-3,
            "demo": demo.passed,
        },
    )
    return _finish(report, start, 10.0)


def _random_function(rng, rho, terms=3):
    """Random sine mix plus a quadratic-growth term; returns ``(f, growth constant)``."""
    coeffs = rng.uniform(-2.0, 2.0, terms)
    freqs = rng.uniform(0.1, 3.0, terms)
    quad = float(rng.uniform(-1.0, 1.0))

    def f(x):
        u = np.asarray(rho(x), dtype=float)
        out = quad * u * u / (1.0 + u)
        for c, w in zip(coeffs, freqs):
            out = out + c * np.sin(w * u)
        return out

    return f, float(np.sum(np.abs(coeffs)) + abs(quad))


def criterion_9(probes: int = 150, seed: int = DEFAULT_SEED) -> ExperimentReport:
    """Randomized positivity, linearity, monotonicity, normalization, interpolation at 0, modulus monotonicity."""
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    rhos = list(builtin_catalog())
    failures: Dict[str, int] = {k: 0 for k in
                                ("positivity", "linearity", "monotonicity", "normalization", "interpolation_at_0",
                                 "omega_monotone")}
    for _ in range(probes):
        rho = rhos[int(rng.integers(len(rhos)))]
        n = int(rng.integers(1, 150))
        x = float(rng.uniform(0.0, rho.domain_hint / 2))
        spec = OperatorSpec("rho-baskakov", n, rho)
        f, Mf = _random_function(rng, rho)
        g, Mg = _random_function(rng, rho)
        a, b = rng.uniform(-3, 3, 2)

        def run(h, M, at=x):
            return apply_many(spec, h, [at], TruncationPolicy(growth_bound=M))[0]

        pos = run(lambda t: np.abs(f(t)), Mf)
        if pos.value < -pos.error_bound:
            failures["positivity"] += 1

        vf, vg = run(f, Mf), run(g, Mg)
        vlin = run(lambda t: a * f(t) + b * g(t), abs(a) * Mf + abs(b) * Mg)
        slack = vlin.error_bound + abs(a) * vf.error_bound + abs(b) * vg.error_bound
        if abs(vlin.value - (a * vf.value + b * vg.value)) > slack:
            failures["linearity"] += 1

        upper = run(lambda t: f(t) + np.abs(g(t)), Mf + Mg)
        if upper.value < vf.value - (upper.error_bound + vf.error_bound):
            failures["monotonicity"] += 1

        one = run(lambda t: np.ones_like(np.asarray(t, dtype=float)), 1.0)
        if abs(one.value - 1.0) > one.error_bound:
            failures["normalization"] += 1

        at0 = run(f, Mf, 0.0)
        if abs(at0.value - float(f(np.array([0.0]))[0])) > at0.error_bound + 4 * _EPS * Mf:
            failures["interpolation_at_0"] += 1

    for rho in rhos:
        grid = SupGrid.build(rho, points=121)
        for _ in range(3):
            f, _m = _random_function(rng, rho)
            deltas = np.sort(rng.uniform(0.01, 3.0, 5))
            ok, _vals = monotone_nondecreasing_check(f, deltas, grid)
            failures["omega_monotone"] += 0 if ok else 1

    report = ExperimentReport(
        command="criterion_9",
        inputs={"seed": seed, "operator_probes": probes, "omega_probes": 3 * len(rhos)},
        measured={"failures": failures},
        verdicts={f"{k}_no_failures": v == 0 for k, v in failures.items()},
    )
    return _finish(report, start)


CRITERIA: Dict[int, Callable[[], ExperimentReport]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9,
}


def run_criterion(k: int) -> ExperimentReport:
    return CRITERIA[k]()


def run_suite(which=None) -> ExperimentReport:
    """Run the selected criteria (all by default) and merge their verdicts."""
    start = time.perf_counter()
    which = sorted(which or CRITERIA)
    merged = ExperimentReport(command="suite", inputs={"criteria": which, "seed": DEFAULT_SEED})
    for k in which:
        rep = run_criterion(k)
        merged.measured[f"criterion_{k}"] = rep.measured
        merged.bounds[f"criterion_{k}"] = rep.bounds
        merged.verdicts[f"criterion_{k}"] = rep.passed
    merged.runtime = time.perf_counter() - start
    return merged
