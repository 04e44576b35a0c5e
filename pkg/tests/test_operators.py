import math

import mpmath as mp
import numpy as np
import pytest

from rhobaskakov import (
    ContractError,
    DomainError,
    OperatorSpec,
    TruncationError,
    TruncationPolicy,
    UsageError,
    apply,
    build_weight_table,
    get_rho,
    weight,
)
from rhobaskakov.operators import classical_equivalence_check, log_weight

mp.mp.dps = 40


def nb_oracle(n, k, r):
    r = mp.mpf(r)
    return mp.binomial(n + k - 1, k) * r**k / (1 + r) ** (n + k)


def poisson_oracle(n, k, r):
    lam = n * mp.mpf(r)
    return mp.e ** (-lam) * lam**k / mp.factorial(k)


def test_weight_examples():
    ident = get_rho("identity")
    assert weight(2, 3, 1.0, ident) == pytest.approx(0.125, rel=1e-14)
    for k in range(12):
        assert weight(1, k, 1.0, ident) == pytest.approx(0.5 ** (k + 1), rel=1e-14)
    for n in (1, 7, 300):
        assert weight(n, 0, 0.0) == 1.0
        assert weight(n, 4, 0.0) == 0.0


def test_weight_errors():
    with pytest.raises(DomainError):
        weight(3, 1, -0.5)
    with pytest.raises(UsageError):
        OperatorSpec("rho-baskakov", 0)
    with pytest.raises(UsageError):
        OperatorSpec("no-such-family", 3)


@pytest.mark.parametrize("n,r", [(1, 0.3), (5, 2.0), (50, 0.01), (400, 7.5), (3, 1e-9), (10_000, 50.0)])
def test_log_weights_match_mpmath(n, r):
    mode = int((n - 1) * r)
    ks = sorted({0, 1, 2, mode, mode + 1, 2 * mode + 5, 3 * mode + 40})
    got = np.exp(log_weight("rho-baskakov", n, np.array(ks), r))
    want = np.array([float(nb_oracle(n, k, r)) for k in ks])
    mask = want > 1e-300
    assert np.allclose(got[mask], want[mask], rtol=1e-12, atol=0)


@pytest.mark.parametrize("n,r", [(1, 0.5), (20, 3.0), (1000, 40.0)])
def test_szasz_weights_match_mpmath(n, r):
    ks = np.array([0, 1, int(n * r), int(n * r) + 17])
    got = np.exp(log_weight("rho-szasz", n, ks, r))
    want = np.array([float(poisson_oracle(n, int(k), r)) for k in ks])
    mask = want > 1e-300
    assert np.allclose(got[mask], want[mask], rtol=1e-12, atol=0)


def test_table_at_zero_is_single_term():
    t = build_weight_table(OperatorSpec("rho-baskakov", 9), 0.0)
    assert t.K == 0 and t.weights[0] == 1.0 and t.tail_mass_bound == 0.0


def test_table_normalization_and_first_moment():
    t = build_weight_table(OperatorSpec("rho-baskakov", 10), 2.0, TruncationPolicy(mass_tol=1e-12))
    assert 1 - 1e-12 <= t.mass <= 1 + 1e-12
    ks = np.arange(t.K + 1)
    assert abs(float(np.sum(ks / 10 * t.weights)) - 2.0) <= 1e-9
    assert not t.weights.flags.writeable


@pytest.mark.parametrize("family", ["rho-baskakov", "rho-szasz"])
@pytest.mark.parametrize("n,x", [(1, 0.7), (12, 3.0), (250, 20.0)])
def test_recurrence_matches_direct(family, n, x):
    spec = OperatorSpec(family, n, get_rho("quadratic"))
    t = build_weight_table(spec, x)
    direct = np.exp(log_weight(family, n, np.arange(t.K + 1), t.r))
    keep = direct > 1e-250
    assert np.allclose(t.weights[keep], direct[keep], rtol=1e-12, atol=0)


def test_table_cap_raises_with_collected_mass():
    spec = OperatorSpec("rho-baskakov", 1)
    with pytest.raises(TruncationError) as info:
        build_weight_table(spec, 40.0, TruncationPolicy(mass_tol=1e-12, k_max=100))
    assert 0 < info.value.collected_mass < 1 and info.value.k_max == 100


def test_tail_bound_is_honest():
    # Compare the certified tail with a long high-precision sum.
    n, x = 3, 4.0
    t = build_weight_table(OperatorSpec("rho-baskakov", n), x, TruncationPolicy(mass_tol=1e-8))
    exact_tail = 1 - mp.fsum(nb_oracle(n, k, x) for k in range(t.K + 1))
    assert float(exact_tail) <= t.tail_mass_bound
    second = mp.fsum((mp.mpf(k) / n) ** 2 * nb_oracle(n, k, x) for k in range(t.K + 1, t.K + 4000))
    assert float(second) <= t.power_tail(2)


def test_apply_examples():
    ident = get_rho("identity")
    one = lambda x: np.ones_like(np.asarray(x, dtype=float))  # noqa: E731
    for x in (0.0, 0.3, 5.0):
        res = apply(OperatorSpec("rho-baskakov", 6, ident), one, x, TruncationPolicy(growth_bound=1.0))
        assert abs(res.value - 1.0) <= res.error_bound + 1e-15
    sq = apply(OperatorSpec("rho-baskakov", 10, ident), lambda x: np.asarray(x) ** 2, 2.0,
               TruncationPolicy(mass_tol=1e-14, growth_bound=1.0))
    assert sq.value == pytest.approx(4.6, abs=1e-9)
    quad = get_rho("quadratic")
    lin = apply(OperatorSpec("rho-baskakov", 7, quad), quad.rho, 1.0, TruncationPolicy(mass_tol=1e-14, growth_bound=1.0))
    assert lin.value == pytest.approx(2.0, abs=1e-9)


def test_apply_interpolates_at_zero_exactly():
    f = lambda x: np.cos(np.asarray(x)) + 3  # noqa: E731
    assert apply(OperatorSpec("rho-baskakov", 13, get_rho("sinh")), f, 0.0).value == 4.0


def test_growth_contract_violation():
    with pytest.raises(ContractError):
        apply(OperatorSpec("rho-baskakov", 5), lambda x: np.exp(np.asarray(x)), 3.0,
              TruncationPolicy(growth_bound=1.0))


def test_uncertified_without_growth_bound():
    res = apply(OperatorSpec("rho-baskakov", 5), lambda x: np.asarray(x, dtype=float), 1.0)
    assert not res.certified and res.value == pytest.approx(1.0, abs=1e-9)


def test_szasz_first_moment():
    rho = get_rho("exponential", a=1.0)
    res = apply(OperatorSpec("rho-szasz", 30, rho), rho.rho, 1.2, TruncationPolicy(mass_tol=1e-14, growth_bound=1.0))
    assert res.value == pytest.approx(float(rho(1.2)), abs=1e-9)


def test_classical_equivalence_examples():
    assert classical_equivalence_check(5, [1.5], lambda t: 1 / (1 + np.asarray(t))) <= 1e-12
    assert classical_equivalence_check(1, [0.0], np.sin) == 0.0
    assert classical_equivalence_check(20, [3.0], lambda t: np.asarray(t) ** 2) <= 1e-12


def test_classical_family_forces_identity():
    spec = OperatorSpec("classical-baskakov", 4, get_rho("sinh"))
    assert spec.rho.name == "identity"


def test_large_n_is_fast_and_normalized():
    t = build_weight_table(OperatorSpec("rho-baskakov", 10_000), 50.0)
    assert math.isclose(t.mass, 1.0, abs_tol=1e-11)
