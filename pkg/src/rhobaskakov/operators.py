"""Evaluation of the rho-Baskakov, classical Baskakov and rho-Szasz operators.

All three families are weighted sums ``sum_k f(rho^{-1}(k/n)) w_k(x)`` whose
weights depend on ``x`` only through ``r = rho(x)``:

* Baskakov: ``w_k = C(n+k-1, k) r^k / (1+r)^(n+k)`` (negative binomial),
* Szasz:    ``w_k = exp(-n r) (n r)^k / k!`` (Poisson).

Weight tables are generated by the ratio recurrence, seeded at the mode
with an accurate log-space value so that neither underflow at ``k = 0`` nor
cancellation in log-gamma differences can spoil them for large ``n``.
The series is cut once the index is past the mean and a geometric
majorant of the remaining weights falls below the policy's mass tolerance.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ContractError, DomainError, NumericError, TruncationError, UsageError
from .rho import RhoMap, get_rho

__all__ = [
    "FAMILIES",
    "OperatorSpec",
    "TruncationPolicy",
    "WeightTable",
    "ApplyResult",
    "log_weight",
    "weight",
    "build_weight_table",
    "apply",
    "apply_many",
    "classical_equivalence_check",
    "evaluate_function",
]

FAMILIES = ("classical-baskakov", "rho-baskakov", "rho-szasz")

_LN_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_EPS = np.finfo(float).eps


def _stirlerr(n):
    """``log(n!) - log(sqrt(2 pi n) (n/e)^n)`` for n > 0, elementwise."""
    n = np.asarray(n, dtype=float)
    out = np.empty_like(n)
    small = n <= 15.0
    if small.any():
        ns = n[small]
        lg = np.array([math.lgamma(v + 1.0) for v in ns.ravel()]).reshape(ns.shape)
        out[small] = lg - (ns + 0.5) * np.log(ns) + ns - _LN_SQRT_2PI
    big = ~small
    if big.any():
        nb = n[big]
        nn = nb * nb
        s0, s1, s2, s3, s4 = 1 / 12, 1 / 360, 1 / 1260, 1 / 1680, 1 / 1188
        val = np.where(
            nb > 500, (s0 - s1 / nn) / nb,
            np.where(
                nb > 80, (s0 - (s1 - s2 / nn) / nn) / nb,
                np.where(
                    nb > 35, (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / nb,
                    (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / nb,
                ),
            ),
        )
        out[big] = val
    return out


def _bd0(x, mu):
    """Deviance term ``x log(x/mu) + mu - x`` without cancellation."""
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    x, mu = np.broadcast_arrays(x, mu)
    out = np.empty(x.shape)
    # The series has no cancellation and covers x/mu in (1/3, 3); outside that
    # range the direct form loses only a few ulps relative to its size.
    close = np.abs(x - mu) < 0.5 * (x + mu)
    if close.any():
        xc, mc = x[close], mu[close]
        v = (xc - mc) / (xc + mc)
        s = (xc - mc) * v
        ej = 2.0 * xc * v
        v2 = v * v
        for j in range(1, 60):
            ej = ej * v2
            term = ej / (2 * j + 1)
            s = s + term
            if np.all(np.abs(term) <= 1e-17 * np.abs(s)):
                break
        out[close] = s
    far = ~close
    if far.any():
        xf, mf = x[far], mu[far]
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out[far] = np.where(xf == 0, mf, xf * np.log(xf / mf) + mf - xf)
    return out


def log_weight(family: str, n: int, k, r: float):
    """Log of the basis weight at index ``k`` for ``r = rho(x) > 0``.

    Uses the Stirling-error/deviance decomposition of the log-gamma
    differences, which stays accurate to a few ulps where naive
    ``lgamma(n+k) - lgamma(k+1) - lgamma(n)`` loses ~1e-10 relative.
    """
    k = np.asarray(k, dtype=float)
    if family == "rho-szasz":
        lam = n * r
        with np.errstate(divide="ignore"):
            body = -_stirlerr(np.maximum(k, 1.0)) - _bd0(k, lam) - 0.5 * np.log(2.0 * math.pi * np.maximum(k, 1.0))
        return np.where(k == 0, -lam, body)
    # negative binomial via the binomial density: w_k = n/(n+k) b(n; n+k, q)
    q = 1.0 / (1.0 + r)
    p = r / (1.0 + r)
    total = n + k
    lc = (
        _stirlerr(total) - _stirlerr(float(n)) - _stirlerr(np.maximum(k, 1.0))
        - _bd0(float(n), total * q) - _bd0(k, total * p)
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        lf = np.log(2.0 * math.pi) + np.log(float(n)) + np.log1p(-n / total)
    body = np.log(n / total) + lc - 0.5 * lf
    return np.where(k == 0, -n * math.log1p(r), body)


def weight(n: int, k: int, x: float, rho: Optional[RhoMap] = None, family: str = "rho-baskakov") -> float:
    """Single basis weight ``v_{rho,n,k}(x)`` (or the Szasz weight), from log space."""
    if x < 0:
        raise DomainError("weights are defined for x >= 0")
    if k < 0 or n < 1:
        raise UsageError("need n >= 1 and k >= 0")
    r = float(x) if family == "classical-baskakov" or rho is None else float(rho(x))
    if not math.isfinite(r):
        raise NumericError(f"rho({x}) is not finite")
    if r == 0.0:
        return 1.0 if k == 0 else 0.0
    return float(np.exp(log_weight(family, n, k, r)))


@dataclass(frozen=True)
class OperatorSpec:
    """Which operator to evaluate: family, index ``n`` and the rho map.

    The classical family always uses the identity map.
    """

    family: str
    n: int
    rho: RhoMap = field(default_factory=lambda: get_rho("identity"))

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UsageError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if int(self.n) != self.n or self.n < 1:
            raise UsageError(f"operator index must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if self.family == "classical-baskakov" and self.rho.name != "identity":
            object.__setattr__(self, "rho", get_rho("identity"))

    @property
    def kind(self) -> str:
        return "szasz" if self.family == "rho-szasz" else "baskakov"

    def r(self, x) -> float:
        r = float(np.asarray(self.rho(x)))
        if not math.isfinite(r):
            raise NumericError(f"rho({x}) is not finite")
        return r

    def nodes(self, count: int) -> np.ndarray:
        """Evaluation points ``rho^{-1}(k/n)`` for ``k < count``."""
        u = np.arange(count, dtype=float) / self.n
        return np.asarray(self.rho.inverse(u), dtype=float)


@dataclass(frozen=True)
class TruncationPolicy:
    """How much of the infinite weight series to sum.

    ``growth_bound`` is the constant ``M_f`` in ``|f| <= M_f (1 + rho^2)``;
    when ``None`` it is inferred from the evaluated nodes and the resulting
    tail bound is not certified. ``k_max=None`` means
    ``max(10**6, 64 n (1 + rho(x)))``.
    """

    mass_tol: float = 1e-12
    growth_bound: Optional[float] = None
    k_max: Optional[int] = None

    def __post_init__(self):
        if not (0.0 < self.mass_tol < 1.0):
            raise UsageError("mass_tol must lie in (0, 1)")
        if self.growth_bound is not None and not self.growth_bound > 0:
            raise UsageError("growth_bound must be positive")

    def cap(self, n: int, r: float) -> int:
        if self.k_max is not None:
            if self.k_max < n:
                raise UsageError("k_max must be at least n")
            return int(self.k_max)
        return int(max(10**6, 64 * n * (1.0 + r)))


def _eulerian_row(m: int):
    return [
        sum((-1) ** j * math.comb(m + 1, j) * (k + 1 - j) ** m for j in range(k + 1))
        for k in range(max(m, 1))
    ]


def _polylog_neg(i: int, q: float) -> float:
    """``sum_{j>=1} j^i q^j`` for 0 <= q < 1."""
    num = sum(c * q**k for k, c in enumerate(_eulerian_row(i)))
    return q * num / (1.0 - q) ** (i + 1)


@dataclass(frozen=True)
class WeightTable:
    """Weights ``w_0..w_K`` at one point plus a certified tail bound.

    ``tail_ratio`` bounds ``w_{k+1}/w_k`` for every ``k >= K`` (the ratio is
    nonincreasing past the mean), so ``w_{K+j} <= w_K tail_ratio**j``.
    """

    family: str
    n: int
    x: float
    r: float
    weights: np.ndarray
    tail_mass_bound: float
    tail_ratio: float

    @property
    def K(self) -> int:
        return self.weights.size - 1

    @property
    def mass(self) -> float:
        return float(np.sum(self.weights))

    def power_tail(self, m: int) -> float:
        """Upper bound on ``sum_{k>K} (k/n)^m w_k`` from the geometric majorant."""
        q = self.tail_ratio
        if q <= 0.0 or self.weights[-1] == 0.0:
            return 0.0
        K = self.K
        total = sum(math.comb(m, i) * float(K) ** (m - i) * _polylog_neg(i, q) for i in range(m + 1))
        return float(self.weights[-1]) * total / float(self.n) ** m


def _ratios(kind: str, n: int, r: float, ks: np.ndarray) -> np.ndarray:
    """``w_{k+1} / w_k`` for each k in ``ks``."""
    if kind == "szasz":
        return (n * r) / (ks + 1.0)
    p = r / (1.0 + r)
    return (n + ks) * p / (ks + 1.0)


_ANCHOR_EVERY = 1024


def _reanchor(family, n, r, w, mode):
    """Rescale runs of ``_ANCHOR_EVERY`` weights to direct log-space values.

    Long cumulative products drift by about one ulp per step. Runs are laid
    out outward from the mode and each is anchored at its end nearest the
    mode, where the direct evaluation is most accurate; the mode's own run
    keeps its seed. Anchors in the denormal range are left alone.
    """
    if w.size <= _ANCHOR_EVERY:
        return w
    ks = np.arange(w.size)
    off = ks - mode
    anchor = mode + np.sign(off) * _ANCHOR_EVERY * (np.abs(off) // _ANCHOR_EVERY)
    starts = np.unique(anchor)
    direct = np.exp(log_weight(family, n, starts, r))
    good = (direct > 1e-280) & (w[starts] > 1e-280) & (starts != mode)
    factor = np.where(good, direct / np.where(good, w[starts], 1.0), 1.0)
    return w * factor[np.searchsorted(starts, anchor)]


@functools.lru_cache(maxsize=512)
def _table_core(kind: str, n: int, r: float, mass_tol: float, k_max: int):
    if r == 0.0:
        w = np.ones(1)
        w.flags.writeable = False
        return w, 0.0, 0.0
    family = "rho-szasz" if kind == "szasz" else "rho-baskakov"
    mode = int(math.floor(n * r)) if kind == "szasz" else int(math.floor((n - 1) * r))
    if mode > k_max:
        raise TruncationError(f"mode {mode} already exceeds k_max={k_max}", 0.0, k_max)
    w_mode = float(np.exp(log_weight(family, n, mode, r)))

    if mode > 0:
        ks = np.arange(mode - 1, -1, -1, dtype=float)
        down = w_mode * np.cumprod(1.0 / _ratios(kind, n, r, ks))
        lower = down[::-1]
    else:
        lower = np.empty(0)

    var = n * r * (1.0 + r) if kind == "baskakov" else n * r
    k_min = max(mode, int(math.ceil(n * r)))
    chunk = int(max(256, 12.0 * math.sqrt(var) + (k_min - mode)))

    blocks = [np.array([w_mode])]
    k0, w_last = mode, w_mode
    collected = float(lower.sum()) + w_mode
    while True:
        ks = np.arange(k0, k0 + chunk, dtype=float)
        q = _ratios(kind, n, r, ks)
        # w at indices k0..k0+chunk-1, the first one already stored
        w_here = np.concatenate(([w_last], w_last * np.cumprod(q[:-1])))
        with np.errstate(divide="ignore", invalid="ignore"):
            geo = np.where(q < 1.0, w_here * q / (1.0 - q), np.inf)
        ok = (ks >= k_min) & (geo <= mass_tol)
        hit = np.flatnonzero(ok)
        if hit.size:
            i = int(hit[0])
            if k0 + i > k_max:
                raise TruncationError(f"series needs more than k_max={k_max} terms", collected, k_max)
            blocks.append(w_here[1 : i + 1])
            tail, ratio = float(geo[i]), float(q[i])
            break
        if k0 + chunk > k_max:
            raise TruncationError(f"series needs more than k_max={k_max} terms", collected, k_max)
        blocks.append(w_here[1:])
        collected += float(w_here[1:].sum())
        w_last = float(w_here[-1])
        k0 += chunk - 1
    w = _reanchor(family, n, r, np.concatenate([lower] + blocks), mode)
    if not np.all(np.isfinite(w)):
        raise NumericError("non-finite weights")
    w.flags.writeable = False
    return w, tail, ratio


def build_weight_table(spec: OperatorSpec, x: float, policy: Optional[TruncationPolicy] = None) -> WeightTable:
    """Weights of ``spec`` at ``x`` truncated according to ``policy``.

    Raises:
        DomainError: for negative ``x``.
        TruncationError: if the cut-off index would exceed the cap.
    """
    policy = policy or TruncationPolicy()
    if x < 0:
        raise DomainError("operators are evaluated on [0, inf)")
    r = spec.r(x)
    w, tail, ratio = _table_core(spec.kind, spec.n, r, policy.mass_tol, policy.cap(spec.n, r))
    return WeightTable(spec.family, spec.n, float(x), r, w, tail, ratio)


def evaluate_function(f: Callable, xs: np.ndarray) -> np.ndarray:
    """Call ``f`` on an array, falling back to elementwise calls."""
    xs = np.asarray(xs, dtype=float)
    try:
        out = np.asarray(f(xs), dtype=float)
        if out.shape != xs.shape:
            out = np.broadcast_to(out, xs.shape).astype(float)
    except (TypeError, ValueError):
        out = np.array([float(f(v)) for v in xs.ravel()]).reshape(xs.shape)
    return out


@dataclass(frozen=True)
class ApplyResult:
    """Operator value with its error budget.

    ``tail_bound`` bounds the discarded series terms (certified when the
    growth constant was declared); ``rounding`` is an estimate of floating
    point error in the weights and the summation.
    """

    x: float
    value: float
    tail_bound: float
    rounding: float
    K: int
    growth_constant: float
    certified: bool

    @property
    def error_bound(self) -> float:
        return self.tail_bound + self.rounding


def _node_values(spec, f, count, policy):
    u = np.arange(count, dtype=float) / spec.n
    fx = evaluate_function(f, spec.nodes(count))
    if not np.all(np.isfinite(fx)):
        raise NumericError("f is not finite on the operator nodes")
    scale = 1.0 + u * u
    if policy.growth_bound is not None:
        excess = np.abs(fx) - policy.growth_bound * scale * (1.0 + 1e-12)
        if np.any(excess > 0):
            bad = int(np.argmax(excess))
            raise ContractError(
                f"|f| exceeds {policy.growth_bound} (1 + rho^2) at node rho^-1({bad}/{spec.n})"
            )
        growth = policy.growth_bound
    else:
        growth = float(np.max(np.abs(fx) / scale))
    return fx, growth


def apply_many(spec: OperatorSpec, f: Callable, xs, policy: Optional[TruncationPolicy] = None) -> list:
    """Evaluate the operator at several points sharing one set of node values."""
    policy = policy or TruncationPolicy()
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    tables = [build_weight_table(spec, x, policy) for x in xs]
    count = max(t.K for t in tables) + 1
    fx, growth = _node_values(spec, f, count, policy)
    certified = policy.growth_bound is not None
    out = []
    for t in tables:
        terms = fx[: t.K + 1] * t.weights
        value = float(np.sum(terms))
        abs_sum = float(np.sum(np.abs(terms)))
        tail = growth * (t.power_tail(0) + t.power_tail(2))
        rounding = 8.0 * _EPS * (math.sqrt(t.K + 1.0) + 8.0) * abs_sum
        out.append(ApplyResult(t.x, value, tail, rounding, t.K, growth, certified))
    return out


def apply(spec: OperatorSpec, f: Callable, x: float, policy: Optional[TruncationPolicy] = None) -> ApplyResult:
    """``sum_k f(rho^{-1}(k/n)) w_k(x)`` with a bound on the discarded tail.

    ``f`` is a function of the original variable on ``[0, inf)``. The tail is
    bounded by ``M_f sum_{k>K} (1 + (k/n)^2) w_k`` evaluated with the
    geometric majorant of the weights.
    """
    return apply_many(spec, f, [x], policy)[0]


def classical_equivalence_check(n: int, x, f: Callable, policy: Optional[TruncationPolicy] = None) -> float:
    """Max |rho-Baskakov(identity) - classical Baskakov| over the points ``x``."""
    ident = get_rho("identity")
    a = apply_many(OperatorSpec("rho-baskakov", n, ident), f, x, policy)
    b = apply_many(OperatorSpec("classical-baskakov", n), f, x, policy)
    return max(abs(p.value - q.value) for p, q in zip(a, b))
