"""Catalog of admissible rho maps.

Every operator in the package is parameterized by a map ``rho`` on
``[0, inf)`` that is continuously differentiable, vanishes at 0 and has
derivative bounded below by 1. Such maps are strictly increasing and
unbounded, which is what makes the numeric inverse below well posed.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, NumericError, UsageError

__all__ = [
    "RhoMap",
    "CheckResult",
    "ValidationReport",
    "validate_rho",
    "invert_numeric",
    "default_grid",
    "builtin_catalog",
    "get_rho",
    "MAX_EXP_RATE",
]

ArrayFn = Callable[[np.ndarray], np.ndarray]

# Fast-growing maps push series truncation indices up; beyond this rate the
# exponential family is untested.
MAX_EXP_RATE = 4.0

DOMAIN_TARGET = 50.0


def invert_numeric(rho, y, tol=1e-12, max_doublings=1100, max_bisections=2000):
    """Solve ``rho(x) = y`` for ``x >= 0`` by bracketing and bisection.

    The upper end of the bracket is doubled until ``rho(upper) >= y``; the
    bracket is then halved until ``|rho(x) - y| <= tol`` or it cannot be
    split any further in floating point. Works elementwise on arrays.

    Args:
        rho: a ``RhoMap`` or any increasing callable with ``rho(0) = 0``.
        y: target value(s), all nonnegative.
        tol: absolute tolerance on the residual ``rho(x) - y``.
        max_doublings: cap on bracket expansions.
        max_bisections: cap on bisection steps.

    Returns:
        ``x`` as a float for scalar input, else an array.

    Raises:
        DomainError: if any ``y`` is negative or NaN.
        NumericError: if bracketing exceeds ``max_doublings``.
    """
    fn = rho.rho if isinstance(rho, RhoMap) else rho
    y_arr = np.asarray(y, dtype=float)
    scalar = y_arr.ndim == 0
    y_arr = np.atleast_1d(y_arr)
    if np.any(np.isnan(y_arr)) or np.any(y_arr < 0):
        raise DomainError("invert_numeric needs y >= 0")

    lo = np.zeros_like(y_arr)
    hi = np.ones_like(y_arr)
    for _ in range(max_doublings):
        with np.errstate(over="ignore", invalid="ignore"):
            short = ~(np.asarray(fn(hi), dtype=float) >= y_arr)
        if not short.any():
            break
        lo = np.where(short, hi, lo)
        hi = np.where(short, 2.0 * hi, hi)
    else:
        raise NumericError("bracketing did not terminate; is rho unbounded and increasing?")

    x = 0.5 * (lo + hi)
    for _ in range(max_bisections):
        x = 0.5 * (lo + hi)
        fx = np.asarray(fn(x), dtype=float)
        if not np.all(np.isfinite(fx)):
            raise NumericError("rho is not finite inside the bracket")
        resid = fx - y_arr
        done = (np.abs(resid) <= tol) | (x <= lo) | (x >= hi)
        if done.all():
            break
        below = resid < 0
        lo = np.where(below & ~done, x, lo)
        hi = np.where(~below & ~done, x, hi)
    x = np.where(y_arr == 0, 0.0, x)
    return float(x[0]) if scalar else x


@dataclass(frozen=True)
class RhoMap:
    """A validated-by-construction-or-check map rho with derivative and inverse.

    ``rho_inverse`` is ``None`` when no closed form is known; :meth:`inverse`
    then falls back to :func:`invert_numeric`.
    """

    name: str
    rho: ArrayFn
    rho_prime: ArrayFn
    rho_inverse: Optional[ArrayFn] = None
    domain_hint: Optional[float] = None
    params: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.domain_hint is None:
            object.__setattr__(self, "domain_hint", float(invert_numeric(self.rho, DOMAIN_TARGET, tol=1e-9)))

    def __call__(self, x):
        return self.rho(x)

    @property
    def inverse_kind(self) -> str:
        return "closed" if self.rho_inverse is not None else "numeric"

    def derivative(self, x):
        return self.rho_prime(x)

    def inverse(self, y):
        if self.rho_inverse is not None:
            return self.rho_inverse(y)
        return invert_numeric(self.rho, y, tol=1e-13 * max(1.0, float(np.max(y, initial=0.0))))

    def label(self) -> str:
        if not self.params:
            return self.name
        inner = ",".join(f"{k}={v:g}" for k, v in self.params)
        return f"{self.name}({inner})"


@dataclass(frozen=True)
class CheckResult:
    name: str
    points: int
    worst: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.worst <= self.tol)


@dataclass(frozen=True)
class ValidationReport:
    rho_name: str
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self):
        return [c.name for c in self.checks if not c.passed]


def default_grid(rho: RhoMap, points: int = 512) -> np.ndarray:
    """0 plus geometrically spaced points on ``(0, domain_hint]``."""
    top = rho.domain_hint
    return np.concatenate(([0.0], np.geomspace(top * 1e-6, top, points - 1)))


def _worst(values) -> float:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0.0
    if not np.all(np.isfinite(values)):
        return math.inf
    return float(max(0.0, values.max()))


def _monotone_violation(steps) -> float:
    if steps.size == 0:
        return 0.0
    if not np.all(np.isfinite(steps)):
        return math.inf
    low = float(steps.min())
    # a flat step is a strict-monotonicity failure even though its size is 0
    return math.inf if low == 0.0 else max(0.0, -low)


def validate_rho(rho: RhoMap, grid=None, tol: float = 1e-10, fd_tol: float = 1e-6) -> ValidationReport:
    """Sample the admissibility conditions of ``rho`` on ``grid``.

    Checks run: finiteness, ``rho(0) = 0``, ``rho' >= 1``, strict
    monotonicity, the expansion property ``|x - t| <= |rho(x) - rho(t)|``
    (consecutive pairs suffice by telescoping), inverse round trip, and
    agreement of ``rho'`` with a central finite difference of ``rho``.
    Non-finite values are reported as failures, never raised.

    Raises:
        UsageError: if the grid is empty, negative, unsorted or misses 0.
    """
    g = default_grid(rho) if grid is None else np.asarray(grid, dtype=float)
    if g.size == 0:
        raise UsageError("validation grid is empty")
    if np.any(g < 0) or np.any(np.diff(g) <= 0):
        raise UsageError("validation grid must be increasing and inside [0, inf)")
    if g[0] != 0.0:
        raise UsageError("validation grid must include 0")

    with np.errstate(all="ignore"):
        r = np.asarray(rho.rho(g), dtype=float)
        rp = np.asarray(rho.rho_prime(g), dtype=float)
    checks = []
    finite = np.isfinite(r) & np.isfinite(rp)
    checks.append(CheckResult("finite", g.size, 0.0 if finite.all() else math.inf, tol))
    checks.append(CheckResult("rho_zero", 1, abs(float(r[0])) if np.isfinite(r[0]) else math.inf, 0.0))
    checks.append(CheckResult("derivative_lower_bound", g.size, _worst(1.0 - rp), tol))

    with np.errstate(all="ignore"):
        dg, dr = np.diff(g), np.diff(r)
        checks.append(CheckResult("strictly_increasing", g.size - 1, _monotone_violation(dr), tol))
        checks.append(CheckResult("expansion", g.size - 1, _worst((dg - dr) / dg), tol))

    try:
        if not finite.all():
            raise NumericError("non-finite rho")
        back = np.asarray(rho.inverse(r), dtype=float)
        inv_worst = _worst(np.abs(back - g) / np.maximum(g, 1.0))
    except (NumericError, DomainError):
        inv_worst = math.inf
    checks.append(CheckResult("inverse_roundtrip", g.size, inv_worst, tol))

    interior = g[1:]
    if interior.size:
        h = np.minimum(1e-5 * np.maximum(interior, 1.0), interior)
        with np.errstate(all="ignore"):
            fd = (np.asarray(rho.rho(interior + h)) - np.asarray(rho.rho(interior - h))) / (2.0 * h)
            rel = np.abs(fd - rp[1:]) / np.maximum(np.abs(rp[1:]), 1e-300)
        checks.append(CheckResult("derivative_fd", interior.size, _worst(rel), fd_tol))
    return ValidationReport(rho.label(), tuple(checks))


def _identity() -> RhoMap:
    return RhoMap(
        "identity",
        rho=lambda x: np.asarray(x, dtype=float) * 1.0,
        rho_prime=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        rho_inverse=lambda y: np.asarray(y, dtype=float) * 1.0,
    )


def _quadratic() -> RhoMap:
    def inv(y):
        y = np.asarray(y, dtype=float)
        # rationalized root of t^2 + t - y = 0, no cancellation near 0
        return 2.0 * y / (1.0 + np.sqrt(1.0 + 4.0 * y))

    return RhoMap(
        "quadratic",
        rho=lambda x: np.asarray(x, dtype=float) * (1.0 + np.asarray(x, dtype=float)),
        rho_prime=lambda x: 1.0 + 2.0 * np.asarray(x, dtype=float),
        rho_inverse=inv,
    )


def _exponential(a: float) -> RhoMap:
    if not (0.0 < a <= MAX_EXP_RATE):
        raise DomainError(f"exponential rate must lie in (0, {MAX_EXP_RATE}], got {a}")
    return RhoMap(
        "exponential",
        rho=lambda x: np.expm1(a * np.asarray(x, dtype=float)) / a,
        rho_prime=lambda x: np.exp(a * np.asarray(x, dtype=float)),
        rho_inverse=lambda y: np.log1p(a * np.asarray(y, dtype=float)) / a,
        params=(("a", float(a)),),
    )


def _sinh() -> RhoMap:
    return RhoMap(
        "sinh",
        rho=lambda x: np.sinh(np.asarray(x, dtype=float)),
        rho_prime=lambda x: np.cosh(np.asarray(x, dtype=float)),
        rho_inverse=lambda y: np.arcsinh(np.asarray(y, dtype=float)),
    )


_FACTORIES = {
    "identity": lambda **kw: _identity(),
    "quadratic": lambda **kw: _quadratic(),
    "exponential": lambda a=1.0, **kw: _exponential(float(a)),
    "sinh": lambda **kw: _sinh(),
}


@functools.lru_cache(maxsize=64)
def _cached(name: str, params: tuple) -> RhoMap:
    rho = _FACTORIES[name](**dict(params))
    report = validate_rho(rho)
    if not report.passed:
        raise NumericError(f"catalog entry {rho.label()} failed validation: {report.failed()}")
    return rho


def get_rho(name: str, **params) -> RhoMap:
    """Look up a validated catalog entry by name, e.g. ``get_rho("exponential", a=2)``."""
    if name not in _FACTORIES:
        raise UsageError(f"unknown rho {name!r}; choose from {sorted(_FACTORIES)}")
    unknown = set(params) - ({"a"} if name == "exponential" else set())
    if unknown:
        raise UsageError(f"rho {name!r} takes no parameters {sorted(unknown)}")
    return _cached(name, tuple(sorted((k, float(v)) for k, v in params.items())))


def builtin_catalog(a: float = 1.0) -> list:
    """Identity, quadratic, scaled exponential with rate ``a``, and sinh."""
    return [get_rho("identity"), get_rho("quadratic"), get_rho("exponential", a=a), get_rho("sinh")]
