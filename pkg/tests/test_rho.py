import math

import numpy as np
import pytest

from rhobaskakov import DomainError, NumericError, RhoMap, UsageError, builtin_catalog, get_rho, invert_numeric, validate_rho
from rhobaskakov.rho import default_grid


def test_identity_passes_on_integer_grid():
    report = validate_rho(get_rho("identity"), grid=np.arange(11.0))
    assert report.passed, report.failed()


def test_quadratic_passes_and_inverts_six():
    rho = get_rho("quadratic")
    assert validate_rho(rho, grid=np.arange(11.0)).passed
    assert rho.inverse(6.0) == pytest.approx(2.0, abs=1e-12)


def test_non_expanding_map_fails_derivative_check():
    bad = RhoMap("x-x^2", lambda x: np.asarray(x) - np.asarray(x) ** 2,
                 lambda x: 1 - 2 * np.asarray(x), domain_hint=2.0)
    report = validate_rho(bad, grid=np.linspace(0.0, 2.0, 21))
    assert not report.passed
    assert "derivative_lower_bound" in report.failed()


def test_nonfinite_values_fail_rather_than_crash():
    bad = RhoMap("blowup", lambda x: np.where(np.asarray(x) > 1, np.inf, np.asarray(x, dtype=float)),
                 lambda x: np.ones_like(np.asarray(x, dtype=float)), domain_hint=2.0)
    report = validate_rho(bad, grid=np.linspace(0.0, 2.0, 9))
    assert "finite" in report.failed()


@pytest.mark.parametrize("grid", [np.array([]), np.array([0.0, 2.0, 1.0]), np.array([1.0, 2.0])])
def test_bad_grids_are_usage_errors(grid):
    with pytest.raises(UsageError):
        validate_rho(get_rho("identity"), grid=grid)


def test_invert_numeric_examples():
    quad = get_rho("quadratic")
    assert invert_numeric(quad.rho, 6.0) == pytest.approx(2.0, abs=1e-11)
    assert invert_numeric(get_rho("sinh").rho, 0.0) == 0.0
    exp2 = get_rho("exponential", a=2.0)
    assert invert_numeric(exp2.rho, 3.0) == pytest.approx(math.log(7.0) / 2.0, abs=1e-11)
    assert exp2.inverse(3.0) == pytest.approx(0.9729550745276566, abs=1e-12)


def test_invert_numeric_rejects_negative():
    with pytest.raises(DomainError):
        invert_numeric(get_rho("identity").rho, -1.0)


def test_invert_numeric_reports_bracketing_failure():
    bounded = lambda x: 1.0 - np.exp(-np.asarray(x, dtype=float))  # noqa: E731
    with pytest.raises(NumericError):
        invert_numeric(bounded, 2.0, max_doublings=50)


def test_catalog_entries_validate():
    for rho in builtin_catalog():
        assert validate_rho(rho).passed, (rho.name, validate_rho(rho).failed())
        assert rho(0.0) == 0.0
        assert rho(rho.domain_hint) == pytest.approx(50.0, rel=1e-8)


def test_catalog_roundtrip_and_numeric_inverse_agree():
    rng = np.random.default_rng(7)
    for rho in builtin_catalog():
        xs = default_grid(rho)
        back = rho.inverse(rho(xs))
        assert np.all(np.abs(back - xs) <= 1e-10 * np.maximum(xs, 1.0))
        ys = rng.uniform(0.0, float(rho(rho.domain_hint)), 100)
        assert np.allclose(invert_numeric(rho.rho, ys), rho.inverse(ys), rtol=1e-10, atol=1e-12)


def test_exponential_rate_is_capped():
    with pytest.raises(UsageError):
        get_rho("exponential", a=5.0)
    with pytest.raises(UsageError):
        get_rho("no-such-map")


def test_labels():
    assert get_rho("exponential", a=1.0).label() == "exponential(a=1)"
    assert get_rho("sinh").inverse_kind == "closed"
