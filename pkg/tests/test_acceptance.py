"""Acceptance suite: every headline criterion runs end-to-end at its stated
tolerance and prints one pass/fail line.

Two sub-assertions are reproducibly unattainable as stated and are kept as
strict xfails with the blocking analysis in their reason strings; everything
they assert is exactly the stated criterion, unmodified.
"""

import math

import numpy as np
import pytest

from hardylab import scenarios


def _run(name, exclude=()):
    res = scenarios.run_scenario(name)
    for line in res.lines():
        print(line)
    failed = [c for c in res.checks if not c.passed and c.name not in exclude]
    assert not failed, "; ".join(f"{c.name}: {c.detail}" for c in failed)
    return res


def test_01_legendre_closed_form_matches_numeric_conjugate():
    # closed three-branch conjugate vs brute force on 401 t-points, 1e-4;
    # branch continuity at |t| in {2, r'} to 1e-12
    _run("legendre-closed-form")


def test_02_legendre_lower_bound():
    # conjugate >= (1/4) min(t^2, |t|^r) - 1e-12 on the same grids
    _run("legendre-lower-bound")


def test_03_poincare_bracket_coherence():
    # rayleigh <= 1/gap <= 4 S_bp on the corpus; exponential 1/gap = 4 +- 0.05
    # with S_bp = 1 +- 0.01; gaussian 1/gap = 1 +- 0.02
    _run("poincare-bracket")


def test_04_threshold_reproduction_alpha2():
    # blo bounded at r = 1.15, divergent at r = 1.30 with slope within 50% of
    # 2(alpha/r' - (alpha-1)/3) ~ 0.256; bmls verdicts agree at both r
    _run("threshold-alpha2")


def test_05_counterexample_reproduction():
    # growth-ratio tail max <= 0.05; weighted ratio increasing along
    # x = k pi - pi/4; weighted criterion divergent while two-level bounded
    _run("counterexample-weighted", exclude=("weighted ratio grows >= 10x over k=10..40",))


@pytest.mark.xfail(
    strict=True,
    reason="unattainable as stated: along x_k = k pi - pi/4 the weighted ratio "
    "V/(x^(2-r) V'^2) of the counterexample potential grows like x^(2r+1-2*beta) "
    "= x^0.2 (r=1.5, beta=1.9), i.e. by a factor (x_40/x_10)^0.2 ~ 1.45 over "
    "k = 10..40; a 10x increase would need k to span five decades.  The scan "
    "is exact (it matches the hand-evaluated ratio at every x_k); only the "
    "10x magnitude claim fails.",
)
def test_05b_counterexample_weighted_ratio_tenfold():
    res = scenarios.run_scenario("counterexample-weighted")
    check = next(c for c in res.checks if c.name == "weighted ratio grows >= 10x over k=10..40")
    print(f"[{'PASS' if check.passed else 'FAIL'}] counterexample-weighted: {check.name} ({check.detail})")
    assert check.passed, check.detail


def test_06_poincare_failure_for_lambda_two():
    # partial sup grows >= 10x from x_3 to x_10, verdict divergent, and the
    # spectral gap collapses monotonically as X doubles over {20, 40, 80}
    _run("poincare-failure-lambda2")


def test_07_floor_potential_split():
    # bp bounded; blo divergent for r in {1.2, 1.5, 1.8}
    _run("floor-split")


def test_08_concentration_monte_carlo():
    # mean_scaled on mu_{1.5}^(x64), 1e6 samples, C from the constructive
    # bracket: empirical two-sided tail + 99% radius <= bound at t in {1,2,3};
    # enlargement margins >= 0 at t in {2,4,8} with n=16, 2e5 samples
    _run("concentration-deviation")


def test_09_gradient_ae_bounds():
    # exact gradients of the clipped two-level cost: budget ratios <= 1 + 1e-9
    # for r in {1.2, 1.5, 1.8}, t in {0.5, 2, 10}, 1e5 points, n = 8
    _run("gradient-bounds")


def test_10_transport_quantile_condition():
    # pairwise profile-increment infimum positive on the default grid and
    # N(t)/V(t) in [0.9, 1.5] for t in [10, 40]
    _run("transport-quantile")


def test_11_criteria_ordering_property():
    # S_bp <= S_blo / log^(2/r')(2) at every horizon, full corpus, three r
    _run("criteria-ordering", exclude=("lo_lhs(r=1.01, f=x) within 5% of variance",))


@pytest.mark.xfail(
    strict=True,
    reason="unattainable as stated: for the sign-changing f(x) = x the theta -> 1+ "
    "endpoint of the interpolation supremum is int f^2 - (int |f|)^2 = 1 (the "
    "variance of |x|), not Var(x) = 2, and the dyadic theta-grid mandated for "
    "lo_lhs starts at theta = 1.5 where the exponential-measure value is "
    "2 - Gamma(5/2)^(4/3) scaled ~ 0.546.  Both facts keep lo_lhs near 0.55, "
    "never within 5% of 2.",
)
def test_11b_lo_endpoint_matches_variance():
    res = scenarios.run_scenario("criteria-ordering")
    check = next(c for c in res.checks if c.name == "lo_lhs(r=1.01, f=x) within 5% of variance")
    print(f"[{'PASS' if check.passed else 'FAIL'}] criteria-ordering: {check.name} ({check.detail})")
    assert check.passed, check.detail


def test_12_luxemburg_phi_machinery():
    # homogeneity to 1e-8, fixed-point residual <= 1e-8, L^2 >= int f^2 for
    # five corpus test functions
    _run("luxemburg-Phi")
