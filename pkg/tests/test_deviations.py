from math import factorial, log

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from kacmax.deviations import (
    FValue,
    auto_nodes,
    direct_mc_prob,
    divisor_sigma,
    eval_F,
    frak_S,
    ldp_estimator,
    limit_cdf,
    mc_moment,
    moment_formula,
    quadrature_J,
    sign_factor,
)
from kacmax.errors import DomainError, InvalidInputError, SizeError
from kacmax.streams import RngStream
from kacmax.symfunc import cauchy_series_J


def j2_exact(y):
    # one free angle difference: int |1 - y^2 e^{i t}|^-2 = 1/(1 - y^4)
    return 1.0 / ((1 - y * y) ** 2 * (1 - y**4))


# -- fluctuation regime ---------------------------------------------------------


def test_limit_cdf_examples():
    assert limit_cdf(1.0) == 0.0
    assert limit_cdf(0.4) == 0.0
    assert limit_cdf(np.inf) == 1.0
    assert limit_cdf(1e8) == pytest.approx(1.0, abs=1e-15)


def test_limit_cdf_binary_constant():
    direct = np.prod([1 - 2.0**-k for k in range(1, 61)])
    assert limit_cdf(2**0.5) == pytest.approx(direct, abs=1e-15)
    assert limit_cdf(2**0.5) == pytest.approx(0.2887880950866029, rel=1e-14)


def test_limit_cdf_frozen():
    assert limit_cdf(1.5) == pytest.approx(0.37872710893832234, rel=1e-14)
    assert limit_cdf(3.0) == pytest.approx(0.8765603540359648, rel=1e-14)


def test_limit_cdf_increasing():
    ys = np.linspace(1.01, 6, 200)
    g = [limit_cdf(y) for y in ys]
    assert all(a < b for a, b in zip(g, g[1:]))
    assert g[-1] < 1.0


def test_limit_cdf_rejects_negative():
    with pytest.raises(InvalidInputError):
        limit_cdf(-1.0)


def test_divisor_sigma():
    assert [divisor_sigma(d) for d in (1, 6, 28, 12, 97)] == [1, 12, 56, 28, 98]
    with pytest.raises(InvalidInputError):
        divisor_sigma(0)


def test_frak_s_values():
    partial = 2 * sum(divisor_sigma(d) * 10.0 ** (-2 * d) for d in range(1, 30))
    assert frak_S(10) == pytest.approx(partial, rel=1e-14)
    assert frak_S(10) == pytest.approx(0.020608141224163, rel=1e-13)
    assert frak_S(1e9) == pytest.approx(2e-18, rel=1e-6)
    assert frak_S(np.inf) == 0.0
    with pytest.raises(DomainError):
        frak_S(1.0)


@pytest.mark.parametrize("y", [1.5, 2.0, 3.0])
def test_frak_s_integrates_to_log_limit_cdf(y):
    integral, _ = quad(lambda s: frak_S(s) / s, y, np.inf, epsabs=1e-14, epsrel=1e-12, limit=200)
    assert abs(-np.log(limit_cdf(y)) - integral) <= 1e-8


# -- J_k and F -----------------------------------------------------------------


def test_quadrature_j_examples():
    assert quadrature_J(0, 0.7) == 1.0
    assert quadrature_J(1, 0.6) == pytest.approx(1.5625, rel=1e-15)
    assert quadrature_J(2, 0.5) == pytest.approx(j2_exact(0.5), rel=1e-14)
    assert quadrature_J(4, 0.0) == 1.0


@pytest.mark.parametrize("y", [0.3, 0.6, 0.8])
def test_quadrature_j2_closed_form(y):
    assert quadrature_J(2, y, auto_nodes(2, y)) == pytest.approx(j2_exact(y), rel=1e-13)


def test_quadrature_j_frozen():
    assert quadrature_J(3, 0.6, 34) == pytest.approx(6.351228836437558, rel=1e-13)
    assert quadrature_J(4, 0.5, 32) == pytest.approx(5.376873356412935, rel=1e-13)


def test_quadrature_matches_series_k2():
    assert abs(quadrature_J(2, 0.5, 64) - cauchy_series_J(2, 0.5, 40).value) <= 1e-8


def test_quadrature_errors():
    with pytest.raises(DomainError):
        quadrature_J(2, 1.0)
    with pytest.raises(SizeError):
        quadrature_J(9, 0.5)
    with pytest.raises(SizeError):
        quadrature_J(6, 0.5, 64)  # 64^5 grid points
    with pytest.raises(InvalidInputError):
        quadrature_J(-1, 0.5)


def test_auto_nodes_grows_with_y():
    assert auto_nodes(3, 0.3) <= auto_nodes(3, 0.6) <= auto_nodes(3, 0.8)
    assert auto_nodes(3, 0.6) % 2 == 0


def test_sign_pattern():
    assert [sign_factor(k) for k in range(8)] == [1, -1, -1, 1, 1, -1, -1, 1]


def test_parity_identities():
    for k in range(101):
        # k(7k+1)/2 and k(k+1)/2 differ by 3k^2, so the two signs agree only for even k
        assert (-1) ** (k * (7 * k + 1) // 2) == (-1) ** (k * (k + 1) // 2) * (-1) ** k
        # the sign that survives once the duality factor (-1)^(k(k-1)/2) is used
        assert (-1) ** (k * (3 * k + 3) // 2) == sign_factor(k)


def test_f_at_zero():
    direct = sum(sign_factor(k) / (factorial(k) * factorial(k + 1)) for k in range(9))
    f = eval_F(0.0, 8)
    assert f.value == pytest.approx(direct, abs=1e-15)
    assert f.value == pytest.approx(0.4239464886753634, abs=1e-10)


def test_f_zero_truncation():
    assert eval_F(0.4, 0).value == 1.0


def test_f_frozen_at_06():
    f = eval_F(0.6)
    assert isinstance(f, FValue)
    assert f.value == pytest.approx(0.03457296828314987, rel=1e-11)
    assert f.contributions[1] == pytest.approx(-0.78125, rel=1e-15)
    assert f.truncation_k == 6
    assert 0 < f.tail_estimate < 1e-3


def test_f_methods_agree():
    a = eval_F(0.3, 3, "quadrature")
    b = eval_F(0.3, 3, "series")
    assert a.value == pytest.approx(b.value, abs=1e-10)
    both = eval_F(0.3, 3, "both")
    assert both.cross_checked == (0, 1, 2, 3)
    assert both.value == a.value


def test_f_rejects_bad_arguments():
    with pytest.raises(DomainError):
        eval_F(1.0)
    with pytest.raises(InvalidInputError):
        eval_F(0.5, method="montecarlo")


def test_f_terms_grow_for_large_y():
    # J_k(y) grows like (1 - y^2)^(-k^2), so the factorials stop winning once y is large
    f = eval_F(0.8)
    assert abs(f.contributions[6]) > abs(f.contributions[5])


# -- Monte Carlo estimators ----------------------------------------------------


def test_ldp_n1_exact():
    for y in (0.5, 0.95):
        e = ldp_estimator(1, y, 10**5, RngStream(1))
        exact = y * y / (1 + y * y)
        assert abs(e.p_hat - exact) <= 3 * e.std_error


def test_ldp_n1_integral_closed_form():
    # E[1/(1 + y^2 |L|^2)^2] for L uniform on the disk equals 1/(1 + y^2)
    for y in (0.2, 0.7, 0.999):
        val, _ = quad(lambda s: 1 / (1 + y * y * s) ** 2, 0, 1)
        assert val == pytest.approx(1 / (1 + y * y), rel=1e-12)
        assert y * y * val == pytest.approx(y * y / (1 + y * y), rel=1e-12)


def test_ldp_frozen_and_logs_consistent():
    e = ldp_estimator(3, 0.5, 2000, RngStream(5))
    assert e.p_hat == pytest.approx(0.00013195514411669572, rel=1e-10)
    assert e.log_p_hat == pytest.approx(log(e.p_hat), rel=1e-12)
    assert e.log_rescaled == pytest.approx(e.log_p_hat + 4 * log(3) - 12 * log(0.5), rel=1e-12)


def test_ldp_large_n_stays_finite():
    e = ldp_estimator(40, 0.6, 200, RngStream(6))
    assert np.isfinite(e.log_p_hat) and np.isfinite(e.log_rescaled)
    assert e.log_p_hat < 40 * 41 * log(0.6) + 1e-9


def test_ldp_input_validation():
    with pytest.raises(InvalidInputError):
        ldp_estimator(0, 0.5, 1000, RngStream(1))
    with pytest.raises(DomainError):
        ldp_estimator(2, 1.0, 1000, RngStream(1))
    with pytest.raises(InvalidInputError):
        ldp_estimator(2, 0.5, 10, RngStream(1))
    with pytest.raises(InvalidInputError):
        ldp_estimator(2, 0.5, 1000, RngStream(1), sampler="exact")


@pytest.mark.slow
@pytest.mark.parametrize("n,y", [(2, 0.5), (3, 0.7)])
def test_ldp_matches_direct_mc(n, y):
    e = ldp_estimator(n, y, 10**5, RngStream(7, n))
    p, se = direct_mc_prob(n, y, 10**6, RngStream(8, n))
    assert abs(e.p_hat - p) <= 3 * np.hypot(e.std_error, se)


def test_direct_mc_limits_and_budget():
    assert direct_mc_prob(3, 0.0, 1000, RngStream(1)) == (0.0, 0.0)
    assert direct_mc_prob(3, 1e9, 1000, RngStream(1))[0] == 1.0
    with pytest.raises(SizeError):
        direct_mc_prob(100, 0.5, 10**6, RngStream(1))


@pytest.mark.slow
def test_direct_mc_n1():
    p, se = direct_mc_prob(1, 0.5, 10**6, RngStream(9))
    assert abs(p - 0.2) <= 3 * se


def test_moment_formula_exact_cases():
    for x in (0.0, 0.3, 2.0):
        u = np.sqrt(x) * np.exp(1.1j)
        assert moment_formula(1, [u]) == pytest.approx((1 + 2 * x) / 2, rel=1e-12)
    assert moment_formula(3, [0.0]) == pytest.approx(0.25, rel=1e-13)


def test_moment_formula_frozen():
    assert moment_formula(5, [1.3]) == pytest.approx(25.9595278599, rel=1e-12)
    assert moment_formula(5, [1.3, 1.6j]) == pytest.approx(3700.162594338929, rel=1e-11)


def test_moment_formula_rejects_coincident_points():
    with pytest.raises(InvalidInputError):
        moment_formula(3, [0.5, 0.5])
    with pytest.raises(InvalidInputError):
        moment_formula(3, [])


def test_moment_formula_symmetric_in_points():
    a = moment_formula(4, [1.2, -0.3 + 1.5j, 2.0j])
    b = moment_formula(4, [2.0j, 1.2, -0.3 + 1.5j])
    assert a == pytest.approx(b, rel=1e-12)


@pytest.mark.parametrize("u", [[0.0], [0.7j], [1.1]])
def test_moment_mc_n3_single_point(u):
    exact = moment_formula(3, u)
    mc, se = mc_moment(3, u, 40000, RngStream(10))
    assert abs(mc - exact) <= 3 * se


@pytest.mark.slow
def test_moment_mc_two_points():
    exact = moment_formula(4, [1.5, 1.5j])
    mc, se = mc_moment(4, [1.5, 1.5j], 10**5, RngStream(6))
    assert abs(mc - exact) <= 3 * se


@settings(max_examples=15, deadline=None)
@given(st.floats(min_value=1.05, max_value=8.0), st.floats(min_value=1.05, max_value=8.0))
def test_limit_cdf_monotone_property(a, b):
    lo, hi = sorted((a, b))
    assert limit_cdf(lo) <= limit_cdf(hi)
