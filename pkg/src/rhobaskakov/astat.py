"""Summability matrices, A-transforms, A-density and A-statistical limits.

Limits in ``j`` are not finitely decidable, so every verdict here is
evidence gathered at a finite horizon: a trend test over a list of rows,
reported together with the horizon that was used.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import NumericError, UsageError
from .report import ExperimentReport
from .rho import RhoMap, get_rho
from .weighted import measure_abcd

__all__ = [
    "SummabilityMatrix",
    "IndexSet",
    "AstatVerdict",
    "cesaro",
    "identity_matrix",
    "banded",
    "unnormalized_lower",
    "MATRICES",
    "get_matrix",
    "all_naturals",
    "evens",
    "perfect_squares",
    "INDEX_SETS",
    "a_transform",
    "a_density",
    "regularity_check",
    "astat_limit",
    "theorem10_demo",
]


@dataclass(frozen=True)
class SummabilityMatrix:
    """Nonnegative infinite matrix given by an entry rule.

    ``entries(j, ns)`` evaluates row ``j`` on an integer array of columns;
    ``row_support(j)`` returns the inclusive column range ``(lo, hi)``
    outside which the row vanishes, with ``hi=None`` for infinite rows.
    ``row_tail(j, h)``, when given, bounds ``sum_{n>h} a(j, n)``.
    """

    name: str
    entries: Callable[[int, np.ndarray], np.ndarray]
    row_support: Callable[[int], tuple]
    row_tail: Optional[Callable[[int, int], float]] = None

    def row(self, j: int, horizon: int):
        lo, hi = self.row_support(j)
        top = horizon if hi is None else min(hi, horizon)
        ns = np.arange(lo, top + 1)
        vals = np.asarray(self.entries(j, ns), dtype=float)
        if vals.size and (not np.all(np.isfinite(vals)) or vals.min() < 0):
            raise NumericError(f"{self.name}: row {j} has negative or non-finite entries")
        if hi is not None and hi <= horizon:
            omitted = 0.0
        elif self.row_tail is not None:
            omitted = float(self.row_tail(j, horizon))
        else:
            omitted = math.inf
        return ns, vals, omitted


def cesaro() -> SummabilityMatrix:
    return SummabilityMatrix("cesaro", lambda j, ns: np.full(ns.shape, 1.0 / j), lambda j: (1, j))


def identity_matrix() -> SummabilityMatrix:
    return SummabilityMatrix("identity", lambda j, ns: np.ones(ns.shape), lambda j: (j, j))


def banded(width: int) -> SummabilityMatrix:
    """Moving average over the last ``width`` columns up to ``j``."""
    if width < 1:
        raise UsageError("band width must be positive")

    def support(j):
        return (max(1, j - width + 1), j)

    def entries(j, ns):
        lo, hi = support(j)
        return np.full(ns.shape, 1.0 / (hi - lo + 1))

    return SummabilityMatrix(f"banded({width})", entries, support)


def unnormalized_lower() -> SummabilityMatrix:
    """``a(j, n) = 1`` for ``n <= j``; not regular (row sums grow like j)."""
    return SummabilityMatrix("unnormalized-lower", lambda j, ns: np.ones(ns.shape), lambda j: (1, j))


def _abel_like(t: float = 0.5) -> SummabilityMatrix:
    """Geometric rows ``a(j, n) = (1 - q) q^(n-1)`` with ``q = 1 - 1/j^t``; infinite support."""

    def q_of(j):
        return 1.0 - 1.0 / j**t

    def entries(j, ns):
        q = q_of(j)
        return (1.0 - q) * q ** (ns - 1.0)

    return SummabilityMatrix(f"geometric({t:g})", entries, lambda j: (1, None),
                             row_tail=lambda j, h: q_of(j) ** h)


MATRICES = {
    "cesaro": lambda **kw: cesaro(),
    "identity": lambda **kw: identity_matrix(),
    "banded": lambda width=10, **kw: banded(int(width)),
    "unnormalized-lower": lambda **kw: unnormalized_lower(),
    "geometric": lambda t=0.5, **kw: _abel_like(float(t)),
}


def get_matrix(name: str, **params) -> SummabilityMatrix:
    if name not in MATRICES:
        raise UsageError(f"unknown matrix {name!r}; choose from {sorted(MATRICES)}")
    return MATRICES[name](**params)


@dataclass(frozen=True)
class IndexSet:
    name: str
    contains: Callable[[np.ndarray], np.ndarray]

    def indicator(self, ns) -> np.ndarray:
        return np.asarray(self.contains(np.asarray(ns)), dtype=bool)

    def complement(self) -> "IndexSet":
        inner = self.contains
        return IndexSet(f"not {self.name}", lambda ns: ~np.asarray(inner(ns), dtype=bool))


def _is_square(ns):
    ns = np.asarray(ns, dtype=np.int64)
    root = np.floor(np.sqrt(ns.astype(float))).astype(np.int64)
    # correct the float root by one step either way
    root = np.where((root + 1) ** 2 <= ns, root + 1, root)
    root = np.where(root**2 > ns, root - 1, root)
    return root * root == ns


all_naturals = IndexSet("naturals", lambda ns: np.ones(np.shape(ns), dtype=bool))
evens = IndexSet("evens", lambda ns: np.asarray(ns) % 2 == 0)
perfect_squares = IndexSet("squares", _is_square)
INDEX_SETS = {"naturals": all_naturals, "evens": evens, "squares": perfect_squares}


def a_transform(A: SummabilityMatrix, x: Callable, j: int, horizon: int, x_bound: Optional[float] = None):
    """``(Ax)_j`` summed up to ``horizon``; returns ``(value, omitted_tail_bound)``.

    The omitted-tail bound is ``row_tail * sup|x|``, with ``sup|x|`` taken
    from ``x_bound`` or, failing that, from the sampled terms.

    Raises:
        NumericError: when the row mass diverges or the sum is not finite.
    """
    ns, a, omitted = A.row(j, horizon)
    xs = np.asarray(x(ns), dtype=float)
    terms = a * xs
    value = float(np.sum(terms))
    if not math.isfinite(value) or not math.isfinite(float(np.sum(a))):
        raise NumericError(f"{A.name}: row {j} does not sum")
    if omitted == 0.0:
        return value, 0.0
    if math.isinf(omitted):
        raise NumericError(f"{A.name}: row {j} extends past the horizon with no tail certificate")
    sup = x_bound if x_bound is not None else float(np.max(np.abs(xs), initial=0.0))
    return value, omitted * sup


@dataclass(frozen=True)
class AstatVerdict:
    target: float
    epsilon: float
    j_list: tuple
    tail_masses: tuple
    verdict: str
    horizon: int
    threshold: float

    @property
    def converges(self) -> bool:
        return self.verdict == "converges"


def _trend_verdict(values: Sequence[float], threshold: float, slack: float) -> str:
    t = np.asarray(values, dtype=float)
    half = t[len(t) // 2:]
    settled = bool(np.all(np.diff(half) <= slack))
    if t[-1] <= threshold and settled:
        return "converges"
    head = t[: max(1, len(t) // 2)]
    if half.max() > threshold and half.max() >= 0.5 * head.max():
        return "diverges"
    return "inconclusive"


def a_density(A: SummabilityMatrix, K: IndexSet, j_list: Sequence[int], horizon: Optional[int] = None):
    """Row masses ``sum_n a(j, n) chi_K(n)`` for each ``j``; returns a list of floats."""
    out = []
    for j in j_list:
        h = horizon if horizon is not None else int(j)
        ns, a, _ = A.row(int(j), h)
        out.append(float(np.sum(a[K.indicator(ns)])))
    return out


def regularity_check(A: SummabilityMatrix, j_max: int = 10**4, horizon: Optional[int] = None,
                     tol: float = 1e-3, columns: Sequence[int] = (1, 2, 5, 10)) -> ExperimentReport:
    """Numerical Silverman-Toeplitz conditions on sampled rows.

    (i) row sums approach 1 (checked at ``j_max``), (ii) each sampled column
    entry at ``j_max`` is below ``tol``, (iii) absolute row sums do not grow
    over the final decade of sampled rows.
    """
    start = time.perf_counter()
    horizon = horizon or 100 * j_max
    js = np.unique(np.geomspace(1, j_max, 25).astype(int))
    sums, tails = [], []
    for j in js:
        ns, a, omitted = A.row(int(j), horizon)
        sums.append(float(np.sum(np.abs(a))))
        tails.append(omitted)
    sums_arr = np.asarray(sums)
    row_dev = abs(sums_arr[-1] - 1.0) + tails[-1]
    col_vals = []
    for c in columns:
        lo, hi = A.row_support(int(j_max))
        inside = lo <= c and (hi is None or c <= hi)
        col_vals.append(float(A.entries(int(j_max), np.array([c]))[0]) if inside else 0.0)
    last = js >= j_max / 10.0
    growth = float(sums_arr[last].max() - sums_arr[last][0])
    report = ExperimentReport(
        command="regularity_check",
        inputs={"matrix": A.name, "j_max": int(j_max), "horizon": int(horizon), "tol": tol,
                "columns": list(columns)},
        measured={"row_sum_at_j_max": float(sums_arr[-1]), "row_sum_deviation": row_dev,
                  "column_entries_at_j_max": col_vals, "row_sum_growth_last_decade": growth,
                  "max_row_abs_sum": float(sums_arr.max())},
        verdicts={
            "row_sums_to_one": bool(row_dev <= tol),
            "columns_to_zero": bool(max(col_vals) <= tol),
            "rows_bounded": bool(growth <= tol * max(1.0, float(sums_arr[last][0]))),
        },
    )
    report.runtime = time.perf_counter() - start
    return report


def astat_limit(A: SummabilityMatrix, x: Callable, L: float, epsilon: float, j_list: Sequence[int],
                horizon: Optional[int] = None, threshold: float = 1e-2, slack: float = 1e-12) -> AstatVerdict:
    """Tail masses ``t_j = sum_{n : |x_n - L| >= eps} a(j, n)`` and a trend verdict.

    ``converges`` needs ``t_j <= threshold`` at the last row and a
    nonincreasing final half; ``diverges`` means the final half still carries
    mass above the threshold with no decay from the first half.
    """
    if epsilon <= 0:
        raise UsageError("epsilon must be positive")
    j_list = [int(j) for j in j_list]
    horizon = horizon or max(j_list)
    masses = []
    for j in j_list:
        ns, a, omitted = A.row(j, horizon)
        far = np.abs(np.asarray(x(ns), dtype=float) - L) >= epsilon
        masses.append(float(np.sum(a[far])) + (omitted if math.isfinite(omitted) else 0.0))
    verdict = _trend_verdict(masses, threshold, slack)
    return AstatVerdict(L, epsilon, tuple(j_list), tuple(masses), verdict, int(horizon), threshold)


def _square_witnesses(limit: int, count: int = 5):
    k_top = math.isqrt(limit)
    return [k * k for k in range(max(1, k_top - count + 1), k_top + 1)]


def theorem10_demo(rho: Optional[RhoMap] = None, n_max: int = 10**5, A: Optional[SummabilityMatrix] = None,
                   j_list: Optional[Sequence[int]] = None, epsilons: Sequence[float] = (0.1, 0.01)) -> ExperimentReport:
    """A-statistical convergence of the weighted error sequence on ``rho^2``.

    ``s_n`` is the exponent-1 weighted error of the operator on ``rho^2``;
    it equals ``c_1 / n`` exactly because the error profile is
    ``(rho^2 + rho)/n``, so ``c_1`` is measured once. The perturbed sequence
    adds 1 on the perfect squares, a set of Cesaro density zero: it still
    A-statistically converges to 0 under Cesaro means but not under the
    identity matrix (ordinary convergence).
    """
    start = time.perf_counter()
    rho = rho or get_rho("identity")
    A = A or cesaro()
    if n_max < 10**3:
        raise UsageError("n_max must be at least 1000")
    if j_list is None:
        j_list = sorted(set(np.geomspace(10, n_max, 13).astype(int).tolist()))
    j_list = [int(j) for j in j_list]
    if max(j_list) > n_max:
        raise UsageError("rows beyond n_max are not available")
    c1 = measure_abcd(1, rho).c

    def s(ns):
        return c1 / np.asarray(ns, dtype=float)

    def s_pert(ns):
        return s(ns) + perfect_squares.indicator(ns)

    report = ExperimentReport(
        command="theorem10_demo",
        inputs={"rho": rho.label(), "n_max": int(n_max), "matrix": A.name, "j_list": j_list,
                "epsilons": list(epsilons)},
        measured={"c_1": c1, "s_n_max": float(s(np.array([n_max]))[0])},
        bounds={"two_over_n_max": 2.0 / n_max},
    )
    ns_all = np.arange(1, n_max + 1)
    report.verdicts["s_n_le_2_over_n"] = bool(np.all(s(ns_all) <= 2.0 / ns_all))

    for eps in epsilons:
        v = astat_limit(A, s, 0.0, eps, j_list, n_max)
        report.measured[f"tail_masses_eps_{eps:g}"] = list(v.tail_masses)
        report.verdicts[f"unperturbed_converges_eps_{eps:g}"] = v.converges

    v_c = astat_limit(A, s_pert, 0.0, 0.5, j_list, n_max)
    report.measured["perturbed_tail_masses"] = list(v_c.tail_masses)
    report.verdicts["perturbed_converges_under_matrix"] = v_c.converges

    # the identity matrix reads x_j directly; probe rows at squares and their neighbours
    id_rows = sorted(set(j_list) | {k * k for k in (math.isqrt(j) for j in j_list) if k * k >= 4}
                     | {k * k + 1 for k in (math.isqrt(j) for j in j_list) if k >= 2})
    id_rows = [j for j in id_rows if j <= n_max]
    v_i = astat_limit(identity_matrix(), s_pert, 0.0, 0.5, id_rows, n_max)
    report.measured["identity_tail_masses"] = list(v_i.tail_masses)
    report.verdicts["perturbed_diverges_under_identity"] = v_i.verdict == "diverges"

    witnesses = _square_witnesses(n_max)
    report.measured["witness_indices"] = witnesses
    report.verdicts["witnesses_ge_one"] = bool(np.all(s_pert(np.array(witnesses)) >= 1.0))
    report.series = {"s_n": [(int(n), float(s(np.array([n]))[0])) for n in j_list],
                     "perturbed_tail_mass": list(zip(j_list, v_c.tail_masses))}
    report.runtime = time.perf_counter() - start
    return report
