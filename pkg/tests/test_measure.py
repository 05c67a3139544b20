import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardylab import measure as msr
from hardylab.errors import DomainValidationError, ParseError

# ---------------------------------------------------------------------------
# potential construction
# ---------------------------------------------------------------------------


def test_builtin_values():
    p = msr.make_potential(msr.PotentialSpec.builtin("exp"))
    assert p.value(1.0) == 1.0
    assert p.value(-3.0) == 3.0
    s = msr.make_potential(msr.PotentialSpec.builtin("sinpower", 2, 1))
    assert s.value(math.pi) == pytest.approx(math.pi**2, rel=1e-14)
    g = msr.make_potential(msr.PotentialSpec.builtin("gaussian"))
    assert g.value(2.0) == 2.0


def test_expression_potential():
    p = msr.make_potential(msr.PotentialSpec.from_expression("abs(x + sin(x))^2"))
    assert p.value(math.pi / 2) == pytest.approx((math.pi / 2 + 1) ** 2, rel=1e-14)


@pytest.mark.parametrize(
    "family,params",
    [
        ("power", (0.5,)),  # r < 1
        ("sinpower", (1.0, 1.0)),  # alpha must exceed 1
        ("sinpower", (2.0, -0.1)),  # negative lambda
        ("cattiaux", (2.5, 3.0)),  # r outside (1,2)
        ("cattiaux", (1.5, 1.5)),  # beta - 1 below max(r/2, r - 1/r)
        ("cattiaux", (1.5, 2.2)),  # beta - 1 above r - 1/2
        ("power", ()),  # missing parameter
        ("nosuch", ()),
    ],
)
def test_builtin_parameter_validation(family, params):
    with pytest.raises(DomainValidationError):
        msr.PotentialSpec.builtin(family, *params)


def test_expression_parse_error_carries_position():
    with pytest.raises(ParseError) as exc:
        msr.PotentialSpec.from_expression("abs(x")
    assert exc.value.position == 5


def test_potential_must_be_locally_bounded():
    with np.errstate(invalid="ignore", divide="ignore"):
        with pytest.raises(DomainValidationError):
            msr.make_potential(msr.PotentialSpec.from_expression("log(x)"))


@pytest.mark.parametrize(
    "spec",
    [
        msr.PotentialSpec.builtin("exp"),
        msr.PotentialSpec.builtin("gaussian"),
        msr.PotentialSpec.builtin("power", 1.5),
        msr.PotentialSpec.builtin("sinpower", 2, 1),
        msr.PotentialSpec.builtin("sinpower", 2, 2),
        msr.PotentialSpec.builtin("cattiaux", 1.5, 1.9),
        msr.PotentialSpec.from_expression("x^2/2 + cos(x)", even=False),
    ],
)
def test_analytic_derivatives_match_finite_differences(spec):
    pot = msr.make_potential(spec)
    assert msr.check_derivative(pot) <= 1e-5


def test_floor_has_no_derivative():
    pot = msr.make_potential(msr.PotentialSpec.builtin("floor"))
    assert pot.derivative is None
    assert pot.value(2.7) == 2.0
    assert pot.value(-2.7) == 2.0


def test_sinpower_zero_lambda_equals_power():
    a = msr.make_potential(msr.PotentialSpec.builtin("sinpower", 1.7, 0.0))
    b = msr.make_potential(msr.PotentialSpec.builtin("power", 1.7))
    xs = np.linspace(-20, 20, 101)
    assert np.allclose(a.value(xs), b.value(xs), rtol=1e-14)


def test_tabulated_interpolation_and_extrapolation_flag():
    xs = [0.0, 1.0, 2.0, 4.0]
    vs = [0.0, 1.0, 1.5, 3.5]
    pot = msr.make_potential(msr.PotentialSpec.tabulated(xs, vs, even=True))
    assert pot.value(0.5) == pytest.approx(0.5)
    assert pot.value(3.0) == pytest.approx(2.5)
    assert pot.value(-1.0) == pytest.approx(1.0)  # evenness
    # last-slope extrapolation: slope (3.5-1.5)/2 = 1 beyond x=4
    assert pot.value(6.0) == pytest.approx(5.5)
    flags = pot.extrapolated(np.array([0.5, 3.9, 6.0, -7.0]))
    assert list(flags) == [False, False, True, True]
    vals, fl = pot.value_with_flag(np.array([1.0, 9.0]))
    assert fl[1] and not fl[0]


def test_from_string_cli_syntax():
    spec = msr.PotentialSpec.from_string("sinpower:2,1")
    assert spec.family == "sinpower" and spec.params == (2.0, 1.0)
    spec = msr.PotentialSpec.from_string("expr:x^2/2")
    assert spec.kind == "expression"
    with pytest.raises(DomainValidationError):
        msr.PotentialSpec.from_string("power:0.5")


# ---------------------------------------------------------------------------
# normalization
# ---------------------------------------------------------------------------


def test_normalize_exponential(exp_measure):
    assert math.exp(exp_measure.log_z) == pytest.approx(2.0, rel=1e-9)
    assert exp_measure.median == 0.0


def test_normalize_power_r2_matches_gamma():
    m = msr.normalize(msr.make_potential(msr.PotentialSpec.builtin("power", 2)))
    assert math.exp(m.log_z) == pytest.approx(2.0 * math.gamma(1.5), rel=1e-9)
    assert math.exp(m.log_z) == pytest.approx(math.sqrt(math.pi), rel=1e-9)


def test_even_measure_median_zero(nu2_measure):
    assert nu2_measure.median == 0.0


def test_truncation_defect_bound(exp_measure, gauss_measure):
    for m in (exp_measure, gauss_measure):
        inside = 1.0 - msr.tail(m, m.truncation) - (1.0 - msr.tail(m, -m.truncation))
        assert 1.0 - inside <= 2.0 * m.eps_trunc


def test_asymmetric_median():
    # V = |x| + 0.3 x: closed-form CDF gives median log(0.35 * Z * 0.7) / 0.7
    m = msr.normalize(msr.make_potential(msr.PotentialSpec.from_expression("abs(x) + 0.3*x")))
    z = 1.0 / 1.3 + 1.0 / 0.7
    median_true = math.log(0.5 * 0.7 * z) / 0.7
    assert m.median == pytest.approx(median_true, abs=1e-9)
    assert abs(math.exp(m.log_z) - z) <= 1e-9 * z


# ---------------------------------------------------------------------------
# tail / quantile
# ---------------------------------------------------------------------------


def test_tail_exponential_values(exp_measure):
    assert msr.tail(exp_measure, 0.0) == pytest.approx(0.5, abs=1e-10)
    assert msr.tail(exp_measure, 1.0) == pytest.approx(math.exp(-1) / 2, rel=1e-9)
    assert msr.tail(exp_measure, -1.0) == pytest.approx(1 - math.exp(-1) / 2, rel=1e-9)


def test_tail_gaussian_matches_erfc(gauss_measure):
    for x in (0.5, 1.0, 2.0, 5.0):
        oracle = 0.5 * math.erfc(x / math.sqrt(2.0))
        assert msr.tail(gauss_measure, x) == pytest.approx(oracle, rel=1e-8)


def test_tail_monotone_and_even_complement(nu2_measure):
    xs = np.linspace(-6, 6, 25)
    tails = [msr.tail(nu2_measure, float(x)) for x in xs]
    assert all(a >= b - 1e-12 for a, b in zip(tails, tails[1:]))
    for x in (0.5, 1.5, 3.0):
        assert msr.tail(nu2_measure, -x) == pytest.approx(1.0 - msr.tail(nu2_measure, x), abs=1e-10)


def test_log_tail_reaches_deep_underflow(gauss_measure):
    # V(60) = 1800: far below the 1e-300 underflow floor, still exact in log space
    lt = msr.log_tail(gauss_measure, 60.0)
    oracle = -1800.0 - math.log(60.0) - 0.5 * math.log(2 * math.pi)  # Mills ratio
    assert lt == pytest.approx(oracle, abs=0.01)
    assert msr.tail(gauss_measure, 60.0) == 0.0  # documented underflow floor


def test_quantile_exponential(exp_measure):
    assert msr.quantile(exp_measure, 0.75) == pytest.approx(math.log(2.0), abs=1e-9)
    assert msr.quantile(exp_measure, 0.5) == 0.0


def test_quantile_domain(exp_measure):
    with pytest.raises(DomainValidationError):
        msr.quantile(exp_measure, 0.0)
    with pytest.raises(DomainValidationError):
        msr.quantile(exp_measure, 1.2)


def test_quantile_roundtrip_grid(exp_measure, gauss_measure):
    ps = np.linspace(0.01, 0.99, 99)
    for m in (exp_measure, gauss_measure):
        for p in ps:
            x = msr.quantile(m, float(p))
            assert msr.cdf(m, x) == pytest.approx(p, abs=1e-8)


@settings(deadline=None, max_examples=25)
@given(st.floats(min_value=1e-6, max_value=1 - 1e-6))
def test_quantile_inverse_property(p):
    m = _cached_exp()
    x = msr.quantile(m, p)
    assert msr.cdf(m, x) == pytest.approx(p, abs=1e-9)


_EXP_CACHE = []


def _cached_exp():
    if not _EXP_CACHE:
        _EXP_CACHE.append(msr.normalize(msr.make_potential(msr.PotentialSpec.builtin("exp"))))
    return _EXP_CACHE[0]


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def test_sample_deterministic(exp_measure):
    a = msr.sample(exp_measure, seed=42, count=1000)
    b = msr.sample(exp_measure, seed=42, count=1000)
    assert np.array_equal(a, b)
    c = msr.sample(exp_measure, seed=43, count=1000)
    assert not np.array_equal(a, c)


def test_sample_moments(exp_measure):
    xs = msr.sample(exp_measure, seed=7, count=1_000_000)
    assert abs(xs.mean()) <= 0.005
    assert xs.var() == pytest.approx(2.0, abs=0.02)


def test_sample_count_validation(exp_measure):
    with pytest.raises(DomainValidationError):
        msr.sample(exp_measure, seed=1, count=0)


@pytest.mark.parametrize("name", ["exp", "gaussian"])
def test_sample_kolmogorov_smirnov(name, exp_measure, gauss_measure):
    m = exp_measure if name == "exp" else gauss_measure
    n = 100_000
    s = np.sort(msr.sample(m, seed=3, count=n))
    if name == "exp":
        cdf_true = np.where(s < 0, 0.5 * np.exp(s), 1.0 - 0.5 * np.exp(-s))
    else:
        from math import sqrt

        cdf_true = 0.5 * (1.0 + np.vectorize(math.erf)(s / sqrt(2.0)))
    grid = np.arange(1, n + 1) / n
    ks = max(np.max(np.abs(cdf_true - grid)), np.max(np.abs(cdf_true - (grid - 1.0 / n))))
    assert ks <= 1.63 / math.sqrt(n)  # 99% band


# ---------------------------------------------------------------------------
# profile N(t)
# ---------------------------------------------------------------------------


def test_n_profile_exponential(exp_measure):
    assert msr.n_profile(exp_measure, 0.0) == pytest.approx(0.0, abs=1e-10)
    assert msr.n_profile(exp_measure, 1.0) == pytest.approx(1.0, rel=1e-9)
    ts = np.linspace(0, 20, 41)
    vals = [msr.n_profile(exp_measure, float(t)) for t in ts]
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))


def test_n_profile_dominates_potential(nu2_measure):
    v = float(nu2_measure.potential.value(np.array([20.0]))[0])
    assert msr.n_profile(nu2_measure, 20.0) >= 0.9 * v


def test_n_profile_requires_even():
    m = msr.normalize(msr.make_potential(msr.PotentialSpec.from_expression("abs(x) + 0.3*x")))
    with pytest.raises(DomainValidationError):
        msr.n_profile(m, 1.0)


def test_tabulated_potential_full_pipeline():
    # |x| tabulated on a coarse grid is globally exact thanks to last-slope
    # extrapolation, so normalization must reproduce the closed form Z = 2
    xs = np.linspace(0.0, 10.0, 21)
    pot = msr.make_potential(msr.PotentialSpec.tabulated(xs, xs, even=True))
    m = msr.normalize(pot)
    assert math.exp(m.log_z) == pytest.approx(2.0, rel=1e-9)
    assert msr.tail(m, 1.0) == pytest.approx(math.exp(-1.0) / 2.0, rel=1e-9)
