import math

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from submax.errors import DomainError, InvalidArgumentError, NoRootError
from submax.thresholds import (
    DEFAULT_LOWER_CONSTANT,
    ThresholdQuery,
    anova_threshold,
    asymptotic_s,
    chi2_left_right_check,
    chi2_upper_tail_bound,
    h_of_tau,
    lemma_bracket,
    log_phi,
    log_prob_bound_avg,
    prob_bound_anova,
    prob_bound_avg,
    rect_anova_bound,
    rect_anova_threshold,
    rect_avg_bound,
    rect_avg_threshold,
    solve_s,
    solve_s_detailed,
    theorem1_interval,
)

# roots of the unsimplified Stirling surrogate, 50-digit mpmath
FROZEN_ROOTS = {
    (200, 1.0): 13.892561517541207119,
    (1000, 1.0): 19.263474441814666775,
    (10_000, 2.0): 7.8963721475494128374,
    (1_000_000, 1.0): 43.879999136564279938,
    (100, 3.0): 1.9121303555487426958,
    (500, 0.5): 50.841335263820107007,
    (50, 2.0): 3.247053933988803043,
}


def _mp_log_phi(n, tau, s):
    n, tau, s = mp.mpf(n), mp.mpf(tau), mp.mpf(s)
    half = mp.mpf(1) / 2
    return ((n + half) * mp.log(n) - (s + half) * mp.log(s) - (n - s + half) * mp.log(n - s)
            - mp.log(2 * mp.pi) / 2 - tau ** 2 * s ** 2 / 4)


@pytest.mark.parametrize("key", sorted(FROZEN_ROOTS))
def test_solve_s_frozen(key):
    n, tau = key
    assert solve_s(n, tau) == pytest.approx(FROZEN_ROOTS[key], rel=1e-13)
    assert solve_s(n, tau, method="bisect") == pytest.approx(FROZEN_ROOTS[key], rel=1e-13)


@settings(max_examples=60, deadline=None)
@given(st.integers(10, 10 ** 7), st.floats(0.3, 4.0), st.floats(0.01, 0.99))
def test_log_phi_matches_mpmath(n, tau, frac):
    s = frac * min(n - 1, 60)
    mp.mp.dps = 40
    assert log_phi(n, tau, s) == pytest.approx(float(_mp_log_phi(n, tau, s)), rel=1e-9, abs=1e-9)


def test_log_phi_domain():
    with pytest.raises(DomainError):
        log_phi(10, 1, 0)
    with pytest.raises(DomainError):
        log_phi(10, 1, 10)
    with pytest.raises(DomainError):
        log_phi(10, 0, 1)


def test_strict_mode_raises_below_large_n_regime():
    with pytest.raises(NoRootError) as info:
        solve_s(50, 0.5)
    err = info.value
    assert err.regime == "bracket"
    lo, hi = lemma_bracket(50, 0.5)
    assert err.lower == pytest.approx(lo) and err.upper < 50 < hi  # bracket clipped to (0, n)
    wide = solve_s_detailed(50, 0.5, widen=True)
    assert wide.regime == "widened"
    assert abs(wide.residual) <= 1e-10
    assert 0 < wide.s < err.lower


def test_bracket_regime_reported():
    r = solve_s_detailed(1000, 1.0)
    assert r.regime == "bracket" and r.lower < r.s < r.upper


def test_asymptotic_values():
    a = 4 * math.log(200)
    assert asymptotic_s(200, 1) == pytest.approx(a - 4 * math.log(a) + 4, rel=1e-15)
    assert asymptotic_s(200, 1) == pytest.approx(12.978534853, abs=1e-8)
    assert asymptotic_s(10_000, 2) == pytest.approx(7.990013566, abs=1e-8)
    with pytest.raises(DomainError):
        asymptotic_s(2, 10)


def test_interval():
    iv = theorem1_interval(1000, 1.0)
    s = solve_s(1000, 1.0)
    assert iv.upper == s + 2
    assert iv.lower == pytest.approx(s - 8 - DEFAULT_LOWER_CONSTANT)
    assert iv.contains(s) and iv.width == pytest.approx(10 + DEFAULT_LOWER_CONSTANT)
    with pytest.raises(DomainError):
        theorem1_interval(1000, 1.0, lower_constant=8 * math.log(2))


def test_average_bound_formula():
    q = ThresholdQuery(n=1000, tau=1.5, r=2, epsilon=0.05)
    expected = 4 / 2.25 * 1000 ** -4 * (math.log(1000) / 2.25) ** 4.05
    assert prob_bound_avg(q) == pytest.approx(expected, rel=1e-12)
    assert prob_bound_avg(ThresholdQuery(n=10, tau=0.1)) == 1.0
    assert log_prob_bound_avg(ThresholdQuery(n=10, tau=0.1)) > 0


def test_bound_decreases_in_r_and_n():
    vals = [prob_bound_avg(ThresholdQuery(n=10 ** 4, tau=1, r=r)) for r in (1, 2, 3)]
    assert vals[0] > vals[1] > vals[2]
    vals = [prob_bound_avg(ThresholdQuery(n=n, tau=1)) for n in (10 ** 3, 10 ** 4, 10 ** 5)]
    assert vals[0] > vals[1] > vals[2]


def test_anova_formulas():
    tau = 0.3
    h = 1 - tau - math.log(2 - tau)
    assert h_of_tau(tau) == pytest.approx(h, rel=1e-15)
    a = 4 / h * math.log(10 ** 5)
    assert anova_threshold(10 ** 5, tau) == pytest.approx(a - 4 / h * math.log(a) + 4 / h + 2)
    q = ThresholdQuery(n=10 ** 5, tau=tau, r=3)
    expected = 4 / h * (math.log(1e5) / h) ** (6 + 2 + 0.01) * 1e5 ** -6
    assert prob_bound_anova(q) == pytest.approx(min(1.0, expected), rel=1e-12)
    for bad in (0, 1, 1.5):
        with pytest.raises(DomainError):
            h_of_tau(bad)


def test_rect_formulas():
    q = ThresholdQuery(n=100, tau=1.2, alpha=20, beta=5, r=2)
    t2 = 1.44
    a = 2 * (1 + 1 / 5) / t2
    inner = a * math.log(100)
    assert rect_avg_threshold(q, 0.7) == pytest.approx(
        inner - a * math.log(inner) + 2 / t2 * math.log(20) + 0.7, rel=1e-14)
    expected = 100 ** (-6 * 2) * (math.log(100) / t2) ** ((6 + 0.01) * 2)
    assert rect_avg_bound(q) == pytest.approx(expected, rel=1e-12)

    qa = ThresholdQuery(n=100, tau=0.2, alpha=20, beta=5, r=2)
    h = h_of_tau(0.2)
    a = 2 * (1 + 1 / 5) / h
    inner = a * math.log(100)
    assert rect_anova_threshold(qa, 1.0) == pytest.approx(
        inner - a * math.log(inner) + math.log(20) / h + 1.0, rel=1e-14)
    assert rect_anova_bound(qa) == pytest.approx(
        min(1.0, 100 ** -12 * (math.log(100) / h) ** (6.01 * 2)), rel=1e-12)


def test_rect_reduces_to_square_leading_term():
    # with alpha = beta = 1 the leading coefficient matches 4/tau^2
    q = ThresholdQuery(n=10 ** 6, tau=1.0)
    assert rect_avg_threshold(q) == pytest.approx(asymptotic_s(10 ** 6, 1.0) - 4.0, rel=1e-14)


@pytest.mark.parametrize("kwargs", [dict(n=1, tau=1), dict(n=10, tau=-1), dict(n=10, tau=1, beta=0.5),
                                    dict(n=10, tau=1, r=0), dict(n=10, tau=1, epsilon=0),
                                    dict(n=10, tau=1, alpha=0)])
def test_query_validation(kwargs):
    with pytest.raises((InvalidArgumentError, DomainError)):
        ThresholdQuery(**kwargs)


def test_chi2_helpers():
    left, right = chi2_left_right_check(4, 1.0)
    assert left == pytest.approx(0.09020, abs=1e-4)
    assert right == pytest.approx(0.55783, abs=1e-4)
    ell, r = 9, 20.0
    assert chi2_upper_tail_bound(ell, r) == pytest.approx(((ell / r) * math.exp(r / ell - 1)) ** (-ell / 2))
    with pytest.raises(DomainError):
        chi2_upper_tail_bound(9, 9)
    with pytest.raises(DomainError):
        chi2_left_right_check(4, 2.0)
