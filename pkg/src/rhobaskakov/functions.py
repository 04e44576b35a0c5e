"""Named test functions used by the checks and the command line.

Each entry is defined through ``g = f o rho^{-1}`` where that is natural, so
``f(x) = g(rho(x))`` and the second derivative needed by the asymptotic
formula is available in closed form. Functions of the original variable
(``e1``, ``e2``, ``inv1p``) fall back to finite differences.

Growth constants are with respect to ``1 + rho^2``; they hold for every
admissible rho because ``x <= rho(x)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import UsageError
from .rho import RhoMap

__all__ = ["NamedFunction", "FUNCTIONS", "get_function", "second_derivative_fd"]


@dataclass(frozen=True)
class NamedFunction:
    label: str
    growth: float
    g: Optional[Callable] = None  # f o rho^{-1}, a function of u = rho(x)
    g2: Optional[Callable] = None  # (f o rho^{-1})''
    fx: Optional[Callable] = None  # f as a function of x, when not given via g

    def f(self, rho: RhoMap) -> Callable:
        if self.fx is not None:
            return self.fx
        g = self.g
        return lambda x: g(np.asarray(rho(x), dtype=float))

    def composed(self, rho: RhoMap) -> Callable:
        if self.g is not None:
            return self.g
        fx = self.fx
        return lambda u: fx(rho.inverse(np.asarray(u, dtype=float)))

    def second(self, rho: RhoMap) -> Callable:
        if self.g2 is not None:
            return self.g2
        comp = self.composed(rho)
        return lambda u: second_derivative_fd(comp, float(u))


def second_derivative_fd(g: Callable, u: float, h: Optional[float] = None) -> float:
    """Second derivative of ``g`` at ``u >= 0`` by a fourth-order stencil.

    Near 0 (where ``g`` may be undefined for negative arguments) a
    one-sided second-order stencil is used instead.
    """
    h = h if h is not None else 1e-3 * max(1.0, abs(u))
    if u >= 2 * h:
        pts = u + h * np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
        v = np.asarray(g(pts), dtype=float)
        return float((-v[0] + 16 * v[1] - 30 * v[2] + 16 * v[3] - v[4]) / (12 * h * h))
    pts = u + h * np.arange(4.0)
    v = np.asarray(g(pts), dtype=float)
    return float((2 * v[0] - 5 * v[1] + 4 * v[2] - v[3]) / (h * h))


def _const(c):
    return lambda u: np.full_like(np.asarray(u, dtype=float), c)


FUNCTIONS = {
    "e0": NamedFunction("e0", 1.0, g=_const(1.0), g2=_const(0.0)),
    "rho": NamedFunction("rho", 1.0, g=lambda u: np.asarray(u, dtype=float) * 1.0, g2=_const(0.0)),
    "rho2": NamedFunction("rho2", 1.0, g=lambda u: np.asarray(u, dtype=float) ** 2, g2=_const(2.0)),
    "sin_rho": NamedFunction("sin_rho", 1.0, g=np.sin, g2=lambda u: -np.sin(u)),
    "exp_neg_rho": NamedFunction("exp_neg_rho", 1.0, g=lambda u: np.exp(-np.asarray(u, dtype=float)),
                                 g2=lambda u: np.exp(-np.asarray(u, dtype=float))),
    "e1": NamedFunction("e1", 1.0, fx=lambda x: np.asarray(x, dtype=float) * 1.0),
    "e2": NamedFunction("e2", 1.0, fx=lambda x: np.asarray(x, dtype=float) ** 2),
    "inv1p": NamedFunction("inv1p", 1.0, fx=lambda x: 1.0 / (1.0 + np.asarray(x, dtype=float))),
}


def get_function(label: str) -> NamedFunction:
    try:
        return FUNCTIONS[label]
    except KeyError:
        raise UsageError(f"unknown function label {label!r}; choose from {sorted(FUNCTIONS)}") from None
