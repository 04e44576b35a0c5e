"""Weighted spaces, weighted sup-norms, the weighted modulus and the bound checks.

Weights are powers of ``w(x) = 1 + rho(x)^2``: the space with exponent ``s``
measures ``|f(x)| / w(x)^s``. Exponent 1 is the space of functions bounded
by ``M_f (1 + rho^2)`` (which contains the test set ``1, rho, rho^2``), and
exponent 3/2 is the space in which the quantitative estimate is stated.

Suprema over ``[0, inf)`` are estimated on finite grids that are uniform in
``rho``-space. Because of that uniformity, the pairs admitted by the modulus
constraint ``|rho(x) - rho(t)| <= delta`` form a band of index offsets.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import BoundViolation, ContractError, NumericError, UsageError
from .functions import NamedFunction
from .moments import richardson_limit
from .operators import OperatorSpec, TruncationPolicy, apply_many, evaluate_function
from .report import ExperimentReport
from .rho import DOMAIN_TARGET, RhoMap

__all__ = [
    "WeightedSpace",
    "FunctionInSpace",
    "SupGrid",
    "NormEstimate",
    "OmegaEstimate",
    "AbcdSequence",
    "weighted_norm",
    "omega_rho",
    "omega_rho_details",
    "monotone_nondecreasing_check",
    "holhos_delta",
    "holhos_bound",
    "closed_delta_n",
    "measure_abcd",
    "theorem3_check",
    "lemma1_Kn",
    "voronovskaya_check",
]

_EPS = np.finfo(float).eps
VARIANTS = ("sum", "paper-literal")


@dataclass(frozen=True)
class WeightedSpace:
    rho: RhoMap
    s: float = 1.0

    def __post_init__(self):
        if self.s < 0:
            raise UsageError("weight exponent must be nonnegative")

    def weight(self, x):
        r = np.asarray(self.rho(x), dtype=float)
        return (1.0 + r * r) ** self.s


@dataclass(frozen=True)
class FunctionInSpace:
    """A function with a declared growth constant ``|f| <= M_f (1 + rho^2)``."""

    f: Callable
    growth_constant: float
    label: str
    g2: Optional[Callable] = None

    @classmethod
    def register(cls, f, growth_constant, label, rho, grid=None, g2=None):
        """Spot-check the growth constant on ``grid`` and wrap ``f``.

        Raises:
            ContractError: if ``|f| > M_f (1 + rho^2)`` at a grid node.
        """
        grid = grid if grid is not None else SupGrid.build(rho)
        nodes = grid.nodes
        vals = evaluate_function(f, nodes)
        if not np.all(np.isfinite(vals)):
            raise NumericError(f"{label} is not finite on the grid")
        cap = growth_constant * WeightedSpace(rho, 1.0).weight(nodes)
        bad = np.flatnonzero(np.abs(vals) > cap * (1.0 + 1e-12))
        if bad.size:
            raise ContractError(f"{label}: |f| exceeds {growth_constant} (1 + rho^2) at x={nodes[bad[0]]:.6g}")
        return cls(f, float(growth_constant), label, g2)

    @classmethod
    def from_named(cls, named: NamedFunction, rho: RhoMap, grid=None):
        return cls.register(named.f(rho), named.growth, named.label, rho, grid, named.second(rho))


@dataclass(frozen=True)
class SupGrid:
    """Nodes ``rho^{-1}(r_i)`` for ``r_i`` uniform on ``[0, r_max]``."""

    nodes: np.ndarray
    r_nodes: np.ndarray
    x_max: float
    mesh: float
    refine_rounds: int = 3

    @classmethod
    def build(cls, rho: RhoMap, r_max: float = DOMAIN_TARGET, points: int = 401, refine_rounds: int = 3):
        if points < 3:
            raise UsageError("a sup grid needs at least 3 points")
        r = np.linspace(0.0, r_max, points)
        x = np.asarray(rho.inverse(r), dtype=float)
        x[0] = 0.0
        return cls(x, np.asarray(rho(x), dtype=float), float(x[-1]), r_max / (points - 1), refine_rounds)


@dataclass(frozen=True)
class NormEstimate:
    """Grid estimate of a weighted sup-norm.

    ``value`` is a lower bound on the true supremum; ``tail_decreasing``
    records whether the weighted profile was nonincreasing over the last
    decade of the grid (in rho-space), the condition under which the grid
    max is trusted.
    """

    value: float
    argmax: float
    grid_value: float
    tail_decreasing: bool


def _profile(f, space, xs):
    vals = evaluate_function(f, xs)
    if not np.all(np.isfinite(vals)):
        raise NumericError("function is not finite on the grid")
    return np.abs(vals) / space.weight(xs)


def weighted_norm(f: Callable, space: WeightedSpace, grid: SupGrid, refine_rounds: Optional[int] = None) -> NormEstimate:
    """``max |f(x)| / w(x)^s`` on the grid, zoomed in around the argmax."""
    rounds = grid.refine_rounds if refine_rounds is None else refine_rounds
    xs = grid.nodes
    prof = _profile(f, space, xs)
    i = int(np.argmax(prof))
    grid_value = float(prof[i])
    best, best_x = grid_value, float(xs[i])
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, xs.size - 1)]
    for _ in range(rounds):
        if hi <= lo:
            break
        zoom = np.linspace(lo, hi, 65)
        pz = _profile(f, space, zoom)
        j = int(np.argmax(pz))
        if pz[j] > best:
            best, best_x = float(pz[j]), float(zoom[j])
        lo, hi = zoom[max(j - 1, 0)], zoom[min(j + 1, zoom.size - 1)]

    decade = grid.r_nodes >= grid.r_nodes[-1] / 10.0
    tail = prof[decade]
    tail_ok = bool(np.all(np.diff(tail) <= 1e-12 * max(1.0, float(tail.max(initial=0.0)))))
    return NormEstimate(best, best_x, grid_value, tail_ok)


@dataclass(frozen=True)
class OmegaEstimate:
    value: float
    pairs: int
    skipped: int
    argpair: tuple = field(default=(math.nan, math.nan))


def omega_rho_details(f, delta: float, grid: SupGrid, variant: str = "sum") -> OmegaEstimate:
    """Weighted modulus over grid pairs with ``|rho(x) - rho(t)| <= delta``.

    ``variant="sum"`` divides by ``w(t) + w(x)``; ``variant="paper-literal"``
    divides by ``|w(t) - w(x)|`` and skips pairs where that is below 1e-12.
    """
    if variant not in VARIANTS:
        raise UsageError(f"unknown modulus variant {variant!r}; choose from {VARIANTS}")
    if delta < 0:
        raise UsageError("delta must be nonnegative")
    if delta == 0:
        return OmegaEstimate(0.0, 0, 0)
    func = f.f if isinstance(f, FunctionInSpace) else f
    fv = evaluate_function(func, grid.nodes)
    r = grid.r_nodes
    w = 1.0 + r * r
    slack = 1e-12 * max(1.0, float(r[-1]))
    reach = np.searchsorted(r, r + delta + slack, side="right") - 1 - np.arange(r.size)
    band = int(reach.max(initial=0))

    best, arg, pairs, skipped = 0.0, (math.nan, math.nan), 0, 0
    for d in range(1, band + 1):
        ok = (r[d:] - r[:-d]) <= delta + slack
        if not ok.any():
            continue
        num = np.abs(fv[d:] - fv[:-d])[ok]
        if variant == "sum":
            den = (w[d:] + w[:-d])[ok]
            ratio = num / den
        else:
            den = np.abs(w[d:] - w[:-d])[ok]
            keep = den >= 1e-12
            skipped += int((~keep).sum())
            ratio = num[keep] / den[keep]
        pairs += int(ok.sum())
        if ratio.size:
            j = int(np.argmax(ratio))
            if ratio[j] > best:
                idx = np.flatnonzero(ok)[j] if variant == "sum" else np.flatnonzero(ok)[np.flatnonzero(keep)[j]]
                best, arg = float(ratio[j]), (float(grid.nodes[idx]), float(grid.nodes[idx + d]))
    return OmegaEstimate(best, pairs, skipped, arg)


def omega_rho(f, delta: float, grid: SupGrid, variant: str = "sum") -> float:
    """Value of :func:`omega_rho_details`."""
    return omega_rho_details(f, delta, grid, variant).value


def monotone_nondecreasing_check(f, deltas: Sequence[float], grid: SupGrid, variant: str = "sum"):
    """Whether the modulus is nondecreasing along ``deltas``; returns ``(passed, values)``."""
    deltas = list(deltas)
    if any(b <= a for a, b in zip(deltas, deltas[1:])):
        raise UsageError("deltas must be increasing")
    values = [omega_rho(f, d, grid, variant) for d in deltas]
    ok = all(a <= b + 1e-12 for a, b in zip(values, values[1:]))
    return ok and min(values, default=0.0) >= 0.0, values


@dataclass(frozen=True)
class AbcdSequence:
    """Errors on the test functions ``rho^0..rho^3`` in spaces with exponents 0, 1/2, 1, 3/2."""

    a: float
    b: float
    c: float
    d: float
    n: Optional[int] = None

    def __post_init__(self):
        if min(self.a, self.b, self.c, self.d) < 0:
            raise UsageError("a_n, b_n, c_n, d_n must be nonnegative")


def holhos_delta(abcd: AbcdSequence) -> float:
    a, b, c, d = abcd.a, abcd.b, abcd.c, abcd.d
    return 2.0 * math.sqrt((a + 2.0 * b + c) * (1.0 + a)) + a + 3.0 * b + 3.0 * c + d


def holhos_bound(abcd: AbcdSequence, omega_value: float, f_norm_phi: float) -> float:
    if omega_value < 0 or f_norm_phi < 0:
        raise UsageError("modulus and norm must be nonnegative")
    return (7.0 + 4.0 * abcd.a + 2.0 * abcd.c) * omega_value + abcd.a * f_norm_phi


def closed_delta_n(n: int) -> float:
    return 2.0 * math.sqrt(2.0) / math.sqrt(n) + 16.0 / n


def _err2(n):
    return lambda r: (r * r + r) / n


def _err3(n):
    return lambda r: r / n**2 + 3.0 * (1 + n) * r**2 / n**2 + (2.0 + 3.0 * n) * r**3 / n**2


def _sup_in_r(g, s, rho, grid):
    """Sup over x of ``|g(rho(x))| / w^s``: grid estimate plus samples past the grid.

    The closed-form error profiles depend on x only through rho(x), so the
    region beyond the grid is probed directly in rho-space out to 1e8.
    """
    est = weighted_norm(lambda x: g(np.asarray(rho(x), dtype=float)), WeightedSpace(rho, s), grid)
    r_far = np.geomspace(max(grid.r_nodes[-1], 1.0), 1e8, 400)
    far = float(np.max(np.abs(g(r_far)) / (1.0 + r_far**2) ** s))
    return max(est.value, far)


def measure_abcd(n: int, rho: RhoMap, grid: Optional[SupGrid] = None, check: bool = True) -> AbcdSequence:
    """Measured weighted errors of the operator on ``1, rho, rho^2, rho^3``.

    Uses the closed-form moments, so ``a_n = b_n = 0`` exactly.

    Raises:
        BoundViolation: when ``check`` and ``c_n > 2/n`` or ``d_n > 10/n``.
    """
    grid = grid or SupGrid.build(rho)
    zero = lambda x: np.zeros_like(np.asarray(x, dtype=float))  # noqa: E731
    a = weighted_norm(zero, WeightedSpace(rho, 0.0), grid).value
    b = weighted_norm(zero, WeightedSpace(rho, 0.5), grid).value
    c = _sup_in_r(_err2(n), 1.0, rho, grid)
    d = _sup_in_r(_err3(n), 1.5, rho, grid)
    if check and (c > 2.0 / n or d > 10.0 / n):
        raise BoundViolation(f"n={n}: c_n={c:.6g} (<= {2 / n:.6g}?) d_n={d:.6g} (<= {10 / n:.6g}?)")
    return AbcdSequence(a, b, c, d, n)


def theorem3_check(f: FunctionInSpace, n: int, rho: RhoMap, grid: Optional[SupGrid] = None,
                   policy: Optional[TruncationPolicy] = None, variant: str = "sum") -> ExperimentReport:
    """Grid check of the quantitative weighted estimate for one function and one ``n``.

    The left side is the weighted distance of the operator from ``f`` in the
    exponent-3/2 space; pointwise it is reduced by the certified tail plus
    estimated rounding before comparison, so floating-point noise cannot
    register as a violation when the right side is exactly 0.
    """
    start = time.perf_counter()
    grid = grid or SupGrid.build(rho)
    policy = policy or TruncationPolicy(growth_bound=f.growth_constant)
    spec = OperatorSpec("rho-baskakov", n, rho)
    results = apply_many(spec, f.f, grid.nodes, policy)
    fx = evaluate_function(f.f, grid.nodes)
    vals = np.array([res.value for res in results])
    slack = np.array([res.error_bound for res in results]) + 4.0 * _EPS * np.abs(fx)
    w32 = WeightedSpace(rho, 1.5).weight(grid.nodes)
    diff = np.abs(vals - fx)
    lhs_raw = float(np.max(diff / w32))
    lhs = float(np.max(np.maximum(diff - slack, 0.0) / w32))

    bound_abcd = AbcdSequence(0.0, 0.0, 2.0 / n, 10.0 / n, n)
    delta = holhos_delta(bound_abcd)
    om = omega_rho_details(f, delta, grid, variant)
    rhs = holhos_bound(bound_abcd, om.value, 0.0)
    report = ExperimentReport(
        command="theorem3_check",
        inputs={"f": f.label, "n": n, "rho": rho.label(), "grid_points": int(grid.nodes.size),
                "r_max": float(grid.r_nodes[-1]), "variant": variant},
        measured={"lhs": lhs, "lhs_raw": lhs_raw, "omega": om.value, "omega_pairs": om.pairs,
                  "max_error_bound": float(slack.max())},
        bounds={"delta_n": delta, "rhs": rhs, "coefficient": 7.0 + 4.0 / n},
        verdicts={"lhs_le_rhs": lhs <= rhs},
    )
    report.runtime = time.perf_counter() - start
    return report


def lemma1_Kn(n: int, rho: RhoMap, grid: Optional[SupGrid] = None, s: float = 0.5, check: bool = True) -> float:
    """``sup_x V_n(w^s; x) / w(x)^s`` on the grid.

    With ``s = 1/2`` the weight is ``sqrt(1 + rho^2)``. By Jensen and the
    closed-form second moment the value never exceeds ``(1 + 2/n)^s``.

    Raises:
        BoundViolation: when ``check`` and the grid value exceeds that bound.
    """
    if not 0 < s <= 1:
        raise UsageError("lemma1_Kn supports exponents in (0, 1]")
    grid = grid or SupGrid.build(rho)
    space = WeightedSpace(rho, s)
    results = apply_many(OperatorSpec("rho-baskakov", n, rho), space.weight, grid.nodes,
                         TruncationPolicy(growth_bound=1.0))
    ratios = np.array([(res.value - res.error_bound) for res in results]) / space.weight(grid.nodes)
    value = float(np.max(ratios))
    if check and value > (1.0 + 2.0 / n) ** s + 1e-12:
        raise BoundViolation(f"K_n={value:.12g} exceeds (1+2/n)^s={(1 + 2 / n) ** s:.12g}")
    return value


def voronovskaya_check(f: FunctionInSpace, x: float, n_list: Sequence[int], rho: RhoMap,
                       second_derivative: Optional[Callable] = None, rel_tol: float = 0.01,
                       abs_tol: float = 1e-4, policy: Optional[TruncationPolicy] = None) -> ExperimentReport:
    """Extrapolate ``g_n = n (V_n f(x) - f(x))`` and compare with the asymptotic formula.

    The target is ``r (1 + r) (f o rho^{-1})''(r) / 2`` with ``r = rho(x)``.
    ``g_n = L + C/n`` is fitted by least squares; the check passes when
    ``|L - target| <= max(rel_tol |target|, abs_tol)``. If the operator
    error bounds, scaled by ``n``, exceed a tenth of that tolerance the
    verdict is inconclusive (reported as a failure with a note).
    """
    start = time.perf_counter()
    n_list = [int(v) for v in n_list]
    if len(n_list) < 4 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise UsageError("n_list needs at least 4 increasing entries")
    d2 = second_derivative or f.g2
    if d2 is None:
        raise UsageError("a second derivative of f o rho^{-1} is required")
    r = float(rho(x))
    target = 0.5 * r * (1.0 + r) * float(np.asarray(d2(r)))
    policy = policy or TruncationPolicy(mass_tol=1e-15, growth_bound=f.growth_constant)
    fx = float(evaluate_function(f.f, np.array([x]))[0])

    g, g_err = [], []
    for n in n_list:
        res = apply_many(OperatorSpec("rho-baskakov", n, rho), f.f, [x], policy)[0]
        g.append(n * (res.value - fx))
        g_err.append(n * (res.error_bound + 4.0 * _EPS * abs(fx)))
    L, C, resid = richardson_limit(n_list, g)
    tol = max(rel_tol * abs(target), abs_tol)
    conclusive = max(g_err) <= 0.1 * tol
    report = ExperimentReport(
        command="voronovskaya_check",
        inputs={"f": f.label, "x": x, "rho": rho.label(), "rho_x": r, "n_list": n_list,
                "rel_tol": rel_tol, "abs_tol": abs_tol},
        measured={"g_n": g, "g_n_error_bound": g_err, "limit": L, "slope": C, "fit_residual": resid,
                  "max_dev_from_target": float(np.max(np.abs(np.asarray(g) - target)))},
        bounds={"target": target, "tolerance": tol},
        verdicts={"conclusive": conclusive, "limit_matches": abs(L - target) <= tol},
        series={"g_n": list(zip(n_list, g))},
    )
    if not conclusive:
        report.notes.append("inconclusive: operator error bound dominates g_n; tighten the policy")
    report.runtime = time.perf_counter() - start
    return report
