"""One test per acceptance criterion; each prints a PASS/FAIL line with its measurement.

Run directly (``python tests/test_acceptance.py``) for just the summary lines.
"""

import math
import sys

import pytest

from rhobaskakov.acceptance import DEFAULT_SEED, run_criterion

# criterion -> (description, check on the report returning (passed, detail))
PINNED = {
    1: ("moment identities within 1e-9, V(rho^2)(2)=4.6, < 5 s",
        lambda r: (r.measured["worst_deviation"] <= 1e-9 and abs(r.measured["V_rho2_n10_x2"] - 4.6) <= 1e-9
                   and r.runtime < 5.0, f"worst={r.measured['worst_deviation']:.3g} t={r.runtime:.2f}s")),
    2: ("third moment within 1e-9",
        lambda r: (r.measured["worst_deviation"] <= 1e-9, f"worst={r.measured['worst_deviation']:.3g}")),
    3: ("c_n <= 2/n, d_n <= 10/n, n c_n = (1+sqrt2)/2 +- 1e-6",
        lambda r: (r.measured["max_c_over_bound"] <= 1 and r.measured["max_d_over_bound"] <= 1
                   and r.measured["identity_n_c_deviation"] <= 1e-6,
                   f"dev={r.measured['identity_n_c_deviation']:.3g}")),
    4: ("delta_n formulas agree to machine precision, delta_8 = 3",
        lambda r: (r.measured["worst_deviation_ulps"] <= 4 and r.measured["delta_8"] == 3.0,
                   f"ulps={r.measured['worst_deviation_ulps']:.2f}")),
    5: ("weighted estimate: zero violations, < 60 s",
        lambda r: (not r.measured["violations"] and r.runtime < 60.0,
                   f"checks={r.measured['checks']} max lhs/rhs={r.measured['max_lhs_over_rhs']:.3g} t={r.runtime:.1f}s")),
    6: ("asymptotic formula: rho^2 exact, exp(-rho) within 1%, n^2 mu4 ratios within 10%",
        lambda r: (r.measured["rho2_worst_over_allowed"] <= 1 and r.measured["exp_rel_dev"] <= 0.01
                   and r.measured["mu4_max_ratio_dev"] <= 0.1,
                   f"exp dev={r.measured['exp_rel_dev']:.3g} ratio dev={r.measured['mu4_max_ratio_dev']:.3g}")),
    7: ("classical reduction within 1e-12 on 1000 probes",
        lambda r: (r.measured["max_abs_difference"] <= 1e-12 and r.inputs["probes"] == 1000,
                   f"max diff={r.measured['max_abs_difference']:.3g}")),
    8: ("A-statistical suite, < 10 s",
        lambda r: (r.passed and abs(r.measured["squares_density"][2] - 0.01) <= 1e-12 and r.runtime < 10.0,
                   f"density(1e4)={r.measured['squares_density'][2]!r} t={r.runtime:.2f}s")),
    9: ("property suites: 0 failures",
        lambda r: (sum(r.measured["failures"].values()) == 0 and r.inputs["seed"] == DEFAULT_SEED,
                   f"seed={r.inputs['seed']} failures={sum(r.measured['failures'].values())}")),
}


def evaluate(k):
    report = run_criterion(k)
    ok, detail = PINNED[k][1](report)
    ok = bool(ok and report.passed)
    line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {PINNED[k][0]} [{detail}]"
    return ok, line, report


@pytest.mark.parametrize("k", sorted(PINNED))
def test_criterion(k, capsys):
    ok, line, report = evaluate(k)
    with capsys.disabled():
        print("\n" + line)
    assert ok, report.to_table()


if __name__ == "__main__":
    results = [evaluate(k) for k in sorted(PINNED)]
    for _, line, _ in results:
        print(line)
    sys.exit(0 if all(ok for ok, _, _ in results) else 1)
