"""Raw and central rho-moments of the rho-Baskakov operators.

Closed forms cover raw moments up to order 3 and central moments up to
order 2. Series evaluation over a certified weight table is the independent
route; it is the only route for the fourth central moment, where just the
order ``O(1/n^2)`` is claimed and no formula is hardcoded here.

Everything depends on ``x`` only through ``r = rho(x)``, so two maps with
matching ``rho(x)`` produce identical moments (and share cached tables).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import UsageError
from .operators import OperatorSpec, TruncationPolicy, build_weight_table
from .report import ExperimentReport
from .rho import RhoMap, get_rho

__all__ = [
    "MOMENT_POLICY",
    "SeriesValue",
    "raw_moment_closed",
    "central_moment_closed",
    "raw_moment_series",
    "central_moment_series",
    "fourth_moment_order_check",
    "richardson_limit",
]

# Moment series need a lighter tail than plain operator values: the cut-off
# must keep (k/n)^m w_k negligible, not just w_k.
MOMENT_POLICY = TruncationPolicy(mass_tol=1e-22)

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SeriesValue:
    value: float
    error_bound: float
    K: int


def _r(x: float, rho: Optional[RhoMap]) -> float:
    rho = rho or get_rho("identity")
    return float(rho(x))


def raw_moment_closed(m: int, n: int, x: float, rho: Optional[RhoMap] = None) -> float:
    """``V_n^rho(rho^m; x)`` for ``m`` in 0..3."""
    r = _r(x, rho)
    if m == 0:
        return 1.0
    if m == 1:
        return r
    if m == 2:
        return r * r + (r * r + r) / n
    if m == 3:
        return r / n**2 + 3.0 * (1 + n) * r**2 / n**2 + (2.0 + 3.0 * n + n * n) * r**3 / n**2
    raise UsageError(f"closed-form raw moments exist for orders 0..3, not {m}")


def central_moment_closed(m: int, n: int, x: float, rho: Optional[RhoMap] = None) -> float:
    """``V_n^rho((rho(t) - rho(x))^m; x)`` for ``m`` in 1..2."""
    r = _r(x, rho)
    if m == 1:
        return 0.0
    if m == 2:
        return (r * r + r) / n
    raise UsageError(f"closed-form central moments exist for orders 1..2, not {m}")


def _series(m, n, x, rho, policy, center):
    if not 0 <= m <= 4:
        raise UsageError(f"series moments are supported for orders 0..4, not {m}")
    spec = OperatorSpec("rho-baskakov", n, rho or get_rho("identity"))
    table = build_weight_table(spec, x, policy or MOMENT_POLICY)
    u = np.arange(table.K + 1, dtype=float) / n
    d = u - table.r if center else u
    terms = d**m * table.weights
    value = float(np.sum(terms))
    # |u - r| <= u beyond the cut-off since K/n >= r
    tail = table.power_tail(m)
    rounding = 8.0 * _EPS * (math.sqrt(table.K + 1.0) + 8.0) * float(np.sum(np.abs(terms)))
    return SeriesValue(value, tail + rounding, table.K)


def raw_moment_series(m: int, n: int, x: float, rho: Optional[RhoMap] = None,
                      policy: Optional[TruncationPolicy] = None) -> SeriesValue:
    """``sum_k (k/n)^m w_k`` over a certified weight table."""
    return _series(m, n, x, rho, policy, center=False)


def central_moment_series(m: int, n: int, x: float, rho: Optional[RhoMap] = None,
                          policy: Optional[TruncationPolicy] = None) -> SeriesValue:
    """``sum_k (k/n - rho(x))^m w_k`` over a certified weight table."""
    return _series(m, n, x, rho, policy, center=True)


def richardson_limit(ns: Sequence[float], values: Sequence[float]):
    """Least-squares fit ``g_n = L + C/n``; returns ``(L, C, max residual)``."""
    ns = np.asarray(ns, dtype=float)
    g = np.asarray(values, dtype=float)
    design = np.column_stack([np.ones_like(ns), 1.0 / ns])
    (L, C), *_ = np.linalg.lstsq(design, g, rcond=None)
    resid = g - (L + C / ns)
    return float(L), float(C), float(np.max(np.abs(resid)))


def fourth_moment_order_check(x: float, rho: Optional[RhoMap] = None, n_list: Sequence[int] = (50, 100, 200, 400),
                              tol: float = 0.1, policy: Optional[TruncationPolicy] = None) -> ExperimentReport:
    """Evidence that the fourth central moment is exactly of order ``1/n^2``.

    Computes ``s_n = n^2 mu_4(n)`` from the series. Passes when every value
    is finite and every successive ratio ``s_{n'}/s_n`` is within ``tol`` of
    1; identically zero sequences (``x = 0``) pass trivially.
    """
    start = time.perf_counter()
    rho = rho or get_rho("identity")
    n_list = [int(v) for v in n_list]
    if len(n_list) < 3 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise UsageError("n_list needs at least 3 increasing entries")
    if n_list[-1] < 8 * n_list[0]:
        raise UsageError("n_list must span at least three doublings")

    scaled, bounds = [], []
    for n in n_list:
        mu4 = central_moment_series(4, n, x, rho, policy)
        scaled.append(n * n * mu4.value)
        bounds.append(n * n * mu4.error_bound)
    scaled_arr = np.asarray(scaled)
    finite = bool(np.all(np.isfinite(scaled_arr)))
    if finite and np.all(scaled_arr == 0.0):
        ratios, ratios_ok, limit = [], True, 0.0
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = (scaled_arr[1:] / scaled_arr[:-1]).tolist()
        ratios_ok = finite and all(abs(q - 1.0) <= tol for q in ratios)
        limit = richardson_limit(n_list, scaled)[0]
    report = ExperimentReport(
        command="fourth_moment_order_check",
        inputs={"x": x, "rho": rho.label(), "rho_x": float(rho(x)), "n_list": n_list, "tol": tol},
        measured={"n2_mu4": scaled, "n2_error_bound": bounds, "ratios": ratios, "limit_estimate": limit},
        verdicts={"bounded": finite, "ratios_near_one": ratios_ok},
        series={"n2_mu4": list(zip(n_list, scaled))},
    )
    report.runtime = time.perf_counter() - start
    return report
