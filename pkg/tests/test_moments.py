from fractions import Fraction

import pytest
import sympy as sp
from sympy.functions.combinatorial.numbers import stirling

from rhobaskakov import UsageError, get_rho
from rhobaskakov.moments import (
    central_moment_closed,
    central_moment_series,
    fourth_moment_order_check,
    raw_moment_closed,
    raw_moment_series,
    richardson_limit,
)


def exact_raw(m, n, r):
    """E[(K/n)^m] for K negative binomial with factorial moments n^(j rising) r^j."""
    r = sp.Rational(r)
    total = sum(stirling(m, j) * sp.rf(n, j) * r**j for j in range(m + 1))
    return total / sp.Integer(n) ** m


def exact_central(m, n, r):
    r = sp.Rational(r)
    return sum(sp.binomial(m, i) * exact_raw(i, n, r) * (-r) ** (m - i) for i in range(m + 1))


def test_closed_form_examples():
    ident = get_rho("identity")
    assert raw_moment_closed(0, 7, 3.3, ident) == 1.0
    assert raw_moment_closed(2, 10, 2.0, ident) == pytest.approx(4.6, rel=1e-15)
    assert raw_moment_closed(3, 2, 1.0, ident) == pytest.approx(5.5, rel=1e-15)
    assert central_moment_closed(1, 9, 4.0, ident) == 0.0
    assert central_moment_closed(2, 4, 1.0, ident) == 0.5


def test_closed_forms_against_exact_oracle():
    for n in (1, 2, 5, 37):
        for r in ("0", "1/3", "2", "17/2"):
            for m in range(4):
                want = float(exact_raw(m, n, r))
                assert raw_moment_closed(m, n, float(Fraction(r))) == pytest.approx(want, rel=1e-14, abs=1e-300)
            assert central_moment_closed(2, n, float(Fraction(r))) == pytest.approx(float(exact_central(2, n, r)),
                                                                                    rel=1e-14, abs=1e-300)


def test_orders_out_of_range():
    with pytest.raises(UsageError):
        raw_moment_closed(4, 3, 1.0)
    with pytest.raises(UsageError):
        central_moment_closed(3, 3, 1.0)
    with pytest.raises(UsageError):
        raw_moment_series(5, 3, 1.0)


def test_series_matches_closed_on_examples():
    got = central_moment_series(2, 4, 1.0)
    assert abs(got.value - 0.5) <= 1e-9
    assert abs(raw_moment_series(0, 8, 3.0).value - 1.0) <= raw_moment_series(0, 8, 3.0).error_bound + 1e-15


@pytest.mark.parametrize("n,r", [(1, "1/2"), (6, "3"), (100, "1"), (40, "25")])
def test_fourth_central_series_against_exact(n, r):
    got = central_moment_series(4, n, float(Fraction(r)))
    want = float(exact_central(4, n, r))
    assert abs(got.value - want) <= 1e-9 * want + got.error_bound


def test_fourth_central_near_leading_term():
    value = central_moment_series(4, 100, 1.0).value
    assert value == pytest.approx(12.0 / 100**2, rel=0.25)


def test_central_second_equals_raw_combination():
    for rho in (get_rho("identity"), get_rho("sinh")):
        for x in (0.2, 1.0, 2.5):
            r = float(rho(x))
            m0, m1, m2 = (raw_moment_closed(m, 6, x, rho) for m in range(3))
            assert central_moment_closed(2, 6, x, rho) == pytest.approx(m2 - 2 * r * m1 + r * r * m0, abs=1e-12)


def test_series_depends_only_on_rho_of_x():
    quad, ident = get_rho("quadratic"), get_rho("identity")
    for m in range(5):
        a = central_moment_series(m, 9, 1.0, quad).value  # rho = 2
        b = central_moment_series(m, 9, 2.0, ident).value
        assert a == pytest.approx(b, rel=1e-13, abs=1e-15)


def test_fourth_moment_order_examples():
    rep = fourth_moment_order_check(1.0, n_list=(50, 100, 200, 400))
    assert rep.passed
    assert rep.measured["limit_estimate"] == pytest.approx(12.0, rel=0.1)
    zero = fourth_moment_order_check(0.0)
    assert zero.passed and all(v == 0.0 for v in zero.measured["n2_mu4"])
    quad = fourth_moment_order_check(1.0, get_rho("quadratic"), (50, 100, 200, 400))
    assert quad.passed and max(quad.measured["n2_mu4"]) < 200


def test_fourth_moment_order_input_checks():
    with pytest.raises(UsageError):
        fourth_moment_order_check(1.0, n_list=(50, 100))
    with pytest.raises(UsageError):
        fourth_moment_order_check(1.0, n_list=(50, 60, 70))


def test_richardson_recovers_exact_line():
    ns = [10, 20, 40, 80]
    L, C, resid = richardson_limit(ns, [3.0 + 5.0 / n for n in ns])
    assert L == pytest.approx(3.0) and C == pytest.approx(5.0) and resid < 1e-12
