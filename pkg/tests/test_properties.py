import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from rhobaskakov import OperatorSpec, TruncationPolicy, apply_many, build_weight_table, builtin_catalog
from rhobaskakov.astat import a_transform, identity_matrix
from rhobaskakov.operators import log_weight
from rhobaskakov.weighted import SupGrid, omega_rho

RHOS = builtin_catalog()
FAST = settings(deadline=None, max_examples=40)

rho_st = st.sampled_from(RHOS)
n_st = st.integers(1, 300)
frac_st = st.floats(0.0, 0.5)  # x as a fraction of the map's domain hint
coef_st = st.floats(-3.0, 3.0)
freq_st = st.floats(0.05, 4.0)


def wave(rho, a, w, c):
    """``a sin(w rho) + c rho / (1 + rho)``: bounded, growth constant |a| + |c|."""

    def f(x):
        u = np.asarray(rho(x), dtype=float)
        return a * np.sin(w * u) + c * u / (1.0 + u)

    return f, abs(a) + abs(c)


def one_point(spec, f, x, M):
    return apply_many(spec, f, [x], TruncationPolicy(growth_bound=max(M, 1e-300)))[0]


@FAST
@given(rho_st, n_st, frac_st, coef_st, freq_st, coef_st)
def test_positivity(rho, n, frac, a, w, c):
    f, M = wave(rho, a, w, c)
    res = one_point(OperatorSpec("rho-baskakov", n, rho), lambda t: np.abs(f(t)), frac * rho.domain_hint, M)
    assert res.value >= -res.error_bound


@FAST
@given(rho_st, n_st, frac_st, coef_st, freq_st, coef_st, coef_st, coef_st)
def test_linearity(rho, n, frac, a, w, c, alpha, beta):
    spec = OperatorSpec("rho-baskakov", n, rho)
    x = frac * rho.domain_hint
    f, Mf = wave(rho, a, w, c)
    g, Mg = wave(rho, c, 2 * w, a)
    vf, vg = one_point(spec, f, x, Mf), one_point(spec, g, x, Mg)
    vh = one_point(spec, lambda t: alpha * f(t) + beta * g(t), x, abs(alpha) * Mf + abs(beta) * Mg)
    scale = abs(alpha) * Mf + abs(beta) * Mg + 1.0
    assert abs(vh.value - (alpha * vf.value + beta * vg.value)) <= 1e-12 * scale


@FAST
@given(rho_st, n_st, frac_st, coef_st, freq_st, coef_st)
def test_monotonicity(rho, n, frac, a, w, c):
    spec = OperatorSpec("rho-baskakov", n, rho)
    x = frac * rho.domain_hint
    f, M = wave(rho, a, w, c)
    lo = one_point(spec, f, x, M)
    hi = one_point(spec, lambda t: f(t) + np.abs(np.cos(np.asarray(rho(t)))), x, M + 1)
    assert hi.value >= lo.value - (hi.error_bound + lo.error_bound)


@FAST
@given(rho_st, n_st, frac_st, st.sampled_from([1e-8, 1e-12, 1e-15]), st.sampled_from(["rho-baskakov", "rho-szasz"]))
def test_normalization(rho, n, frac, mass_tol, family):
    t = build_weight_table(OperatorSpec(family, n, rho), frac * rho.domain_hint, TruncationPolicy(mass_tol=mass_tol))
    assert 1.0 - mass_tol - 1e-13 <= t.mass <= 1.0 + 1e-12


@FAST
@given(rho_st, n_st, coef_st, freq_st, coef_st)
def test_interpolation_at_zero(rho, n, a, w, c):
    f, M = wave(rho, a, w, c)
    g = lambda t: f(t) + 1.5  # noqa: E731
    assert one_point(OperatorSpec("rho-baskakov", n, rho), g, 0.0, M + 1.5).value == float(g(np.array([0.0]))[0])


@FAST
@given(rho_st, n_st, frac_st, st.sampled_from(["rho-baskakov", "rho-szasz"]))
def test_recurrence_matches_direct(rho, n, frac, family):
    t = build_weight_table(OperatorSpec(family, n, rho), frac * rho.domain_hint)
    ks = np.arange(t.K + 1)
    direct = np.exp(log_weight(family, n, ks, t.r))
    keep = direct > 1e-250
    assert np.all(np.abs(t.weights[keep] - direct[keep]) <= 1e-12 * direct[keep])


GRIDS = {rho.name: SupGrid.build(rho, points=161) for rho in RHOS}


@settings(deadline=None, max_examples=30)
@given(rho_st, coef_st, freq_st, coef_st, st.lists(st.floats(0.0, 10.0), min_size=2, max_size=5, unique=True))
def test_omega_monotone_nonnegative(rho, a, w, c, deltas):
    f, _ = wave(rho, a, w, c)
    grid = GRIDS[rho.name]
    values = [omega_rho(f, d, grid) for d in sorted(deltas)]
    assert min(values) >= 0.0
    assert all(p <= q + 1e-15 for p, q in zip(values, values[1:]))
    assert omega_rho(f, 0.0, grid) == 0.0


@settings(deadline=None, max_examples=50)
@given(st.integers(1, 10**6), st.floats(-1e6, 1e6))
def test_identity_transform_reproduces_sequence(j, shift):
    seq = lambda ns: np.asarray(ns, dtype=float) * 0.5 + shift  # noqa: E731
    value, tail = a_transform(identity_matrix(), seq, j, j)
    assert value == j * 0.5 + shift and tail == 0.0
