import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from decoyqkd.stats import (
    Interval,
    TrialCount,
    binomial_cdf,
    binomial_confidence_interval,
    log_binomial_term,
    make_rng,
    sample_binomial,
    sample_multinomial,
)


def mp_log_term(n, c, p):
    """High-precision oracle for log(binom(n,c) p^c (1-p)^(n-c))."""
    with mpmath.workdps(60):
        p = mpmath.mpf(p)
        return float(
            mpmath.loggamma(n + 1) - mpmath.loggamma(c + 1) - mpmath.loggamma(n - c + 1)
            + c * mpmath.log(p) + (n - c) * mpmath.log1p(-p)
        )


# --- log term ----------------------------------------------------------------

@pytest.mark.parametrize(
    "n,c,p",
    [(10, 3, 0.3), (100, 0, 0.01), (100, 100, 0.99), (10**6, 1000, 1.05e-3),
     (10**9, 5 * 10**5, 4.9e-4), (10**13, 4 * 10**9, 4.0001e-4), (37, 18, 0.2)],
)
def test_log_binomial_term_matches_high_precision(n, c, p):
    assert log_binomial_term(n, c, p) == pytest.approx(mp_log_term(n, c, p), rel=1e-11, abs=1e-9)


def test_log_binomial_term_edges():
    assert log_binomial_term(5, 0, 0.0) == 0.0
    assert log_binomial_term(5, 5, 1.0) == 0.0
    assert log_binomial_term(5, 2, 0.0) == -math.inf
    assert log_binomial_term(5, 6, 0.5) == -math.inf


# --- confidence interval ----------------------------------------------------

def test_interval_no_successes_closed_form():
    ci = binomial_confidence_interval(TrialCount(100, 0), 1e-7)
    assert ci.lo == 0.0
    assert ci.hi == pytest.approx(1 - 1e-7 ** (1 / 100), rel=1e-11)
    assert ci.hi == pytest.approx(0.148862, abs=1e-6)


def test_interval_all_successes_mirrors():
    ci = binomial_confidence_interval(TrialCount(100, 100), 1e-7)
    assert ci.hi == 1.0
    assert ci.lo == pytest.approx(1e-7 ** (1 / 100), rel=1e-11)


def test_interval_large_n_endpoints_solve_the_equation():
    n, c, eps = 10**6, 10**3, 1e-7
    ci = binomial_confidence_interval(TrialCount(n, c), eps)
    assert ci.contains(1e-3)
    for y in (ci.lo, ci.hi):
        assert mp_log_term(n, c, y) == pytest.approx(math.log(eps), abs=1e-9)


def test_interval_width_shrinks_like_inverse_sqrt_n():
    w1 = binomial_confidence_interval(TrialCount(10**6, 10**3), 1e-7).width
    w4 = binomial_confidence_interval(TrialCount(4 * 10**6, 4 * 10**3), 1e-7).width
    # n^{-1/2} scaling, slightly faster because the peak term shrinks too.
    assert 0.45 < w4 / w1 < 0.5


def test_interval_rejects_bad_input():
    with pytest.raises(ValueError):
        binomial_confidence_interval(TrialCount(10, 3), 0.0)
    with pytest.raises(ValueError):
        binomial_confidence_interval(TrialCount(10, 3), 1.0)
    with pytest.raises(ValueError):
        TrialCount(3, 4)
    with pytest.raises(ValueError):
        binomial_confidence_interval(TrialCount(10, 3), 0.1, mode="wald")


def test_interval_collapses_when_term_never_reaches_epsilon():
    # Peak term ~ 1/sqrt(2 pi n p q) ~ 0.008 < 0.05.
    ci = binomial_confidence_interval(TrialCount(10**4, 5000), 0.05)
    assert ci.lo == ci.hi == 0.5


def test_tail_mode_matches_beta_quantiles():
    from scipy.stats import beta

    n, c, eps = 200, 17, 1e-3
    ci = binomial_confidence_interval(TrialCount(n, c), eps, mode="tail")
    assert ci.lo == pytest.approx(beta.ppf(eps, c, n - c + 1), rel=1e-9)
    assert ci.hi == pytest.approx(beta.ppf(1 - eps, c + 1, n - c), rel=1e-9)
    # At the Clopper-Pearson ends the tails equal epsilon exactly.
    assert 1 - binomial_cdf(c - 1, n, ci.lo) == pytest.approx(eps, rel=1e-8)
    assert binomial_cdf(c, n, ci.hi) == pytest.approx(eps, rel=1e-8)


@settings(max_examples=200, deadline=None)
@given(
    n=st.integers(1, 10**7),
    frac=st.floats(0, 1),
    eps=st.sampled_from([1e-2, 1e-4, 1e-7, 1e-14]),
    mode=st.sampled_from(["paper", "tail"]),
)
def test_interval_contains_mle(n, frac, eps, mode):
    c = int(round(frac * n))
    ci = binomial_confidence_interval(TrialCount(n, c), eps, mode)
    assert ci.lo <= c / n <= ci.hi
    assert 0.0 <= ci.lo and ci.hi <= 1.0


@settings(max_examples=150, deadline=None)
@given(n=st.integers(2, 10**8), frac=st.floats(0.001, 0.999), eps=st.sampled_from([1e-4, 1e-7, 1e-14]))
def test_nontrivial_endpoints_have_term_equal_epsilon(n, frac, eps):
    c = min(n - 1, max(1, int(round(frac * n))))
    ci = binomial_confidence_interval(TrialCount(n, c), eps)
    if ci.width == 0:
        return
    for y in (ci.lo, ci.hi):
        if 0.0 < y < 1.0:
            # 1e-9 on the log term, plus the slack from y being a float:
            # one ulp of y moves the log term by |d/dy| * ulp.
            slope = abs(c / y - (n - c) / (1 - y))
            tol = 1e-9 + 2 * slope * np.spacing(y)
            assert log_binomial_term(n, c, y) == pytest.approx(math.log(eps), abs=tol)


@pytest.mark.parametrize("rate", [0.01, 0.1, 0.5])
def test_interval_width_nonincreasing_in_n(rate):
    widths = []
    for n in (100, 300, 1000, 3000, 10**4, 10**5, 10**6):
        c = int(round(rate * n))
        widths.append(binomial_confidence_interval(TrialCount(n, c), 1e-7).width)
    assert all(b <= a for a, b in zip(widths, widths[1:]))


@pytest.mark.parametrize("n,p", [(30, 0.5), (200, 0.05), (1000, 0.3)])
def test_tail_mode_coverage(n, p):
    eps = 0.05
    rng = make_rng(123, n)
    misses = 0
    trials = 10**4
    for c in rng.binomial(n, p, size=trials):
        if not binomial_confidence_interval(TrialCount(n, int(c)), eps, "tail").contains(p):
            misses += 1
    # <= 2 eps plus 3 standard errors of a 10% frequency
    assert misses / trials <= 2 * eps + 3 * math.sqrt(0.1 * 0.9 / trials)


@pytest.mark.parametrize("n,p", [(10, 0.3), (12, 0.5)])
def test_term_mode_coverage_small_n(n, p):
    # The single-term interval misses p exactly when P(C = c) <= eps, so
    # small n is where it behaves like a 2-sided confidence interval.
    eps = 0.05
    rng = make_rng(321, n)
    trials = 10**4
    misses = sum(
        not binomial_confidence_interval(TrialCount(n, int(c)), eps).contains(p)
        for c in rng.binomial(n, p, size=trials)
    )
    assert misses / trials <= 2 * eps + 3 * math.sqrt(0.1 * 0.9 / trials)


# --- cdf ----------------------------------------------------------------------

def test_cdf_examples():
    assert binomial_cdf(50, 50, 0.3) == 1.0
    assert binomial_cdf(0, 10, 0.0) == 1.0
    assert binomial_cdf(2, 10, 0.5) == pytest.approx(56 / 1024, rel=1e-14)


def exact_cdf(s, n, p):
    p = Fraction(p)
    return sum(math.comb(n, k) * p**k * (1 - p) ** (n - k) for k in range(s + 1))


@settings(max_examples=200, deadline=None)
@given(n=st.integers(0, 60), data=st.data(), p=st.fractions(0, 1, max_denominator=1000))
def test_cdf_matches_exact_rational_sum(n, data, p):
    s = data.draw(st.integers(0, n))
    exact = exact_cdf(s, n, p)
    upper = 1 - exact
    assert binomial_cdf(s, n, float(p)) + float(upper) == pytest.approx(1.0, abs=1e-12)
    assert binomial_cdf(s, n, float(p)) == pytest.approx(float(exact), abs=1e-12)


def test_cdf_monotone():
    n = 40
    vals = [binomial_cdf(s, n, 0.3) for s in range(n + 1)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    ps = np.linspace(0, 1, 21)
    vals = [binomial_cdf(12, n, p) for p in ps]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


# --- sampling ---------------------------------------------------------------

def test_sample_binomial_trivial():
    rng = make_rng(0)
    assert sample_binomial(0, 0.7, rng) == 0
    assert sample_binomial(10**6, 0.0, rng) == 0
    assert sample_binomial(10**6, 1.0, rng) == 10**6


def test_sample_binomial_mean():
    rng = make_rng(1)
    n, p = 10**6, 1e-3
    draws = np.array([sample_binomial(n, p, rng) for _ in range(10**4)])
    se = math.sqrt(n * p * (1 - p) / draws.size)
    assert abs(draws.mean() - n * p) < 3 * se
    assert draws.var() == pytest.approx(n * p * (1 - p), rel=0.05)


def test_sample_binomial_is_deterministic_per_seed():
    a = [sample_binomial(10**11, 3e-4, make_rng(9)) for _ in range(3)]
    assert len(set(a)) == 1


def test_multinomial_conservation_and_degenerate():
    rng = make_rng(2)
    w = [1 / 16, 4 / 16, 6 / 16, 4 / 16, 1 / 16]
    assert sum(sample_multinomial(16, w, rng)) == 16
    assert sample_multinomial(5, [1, 0, 0, 0, 0], rng) == [5, 0, 0, 0, 0]
    with pytest.raises(ValueError):
        sample_multinomial(5, [1.5, -0.5], rng)


def test_multinomial_large_n_middle_class():
    n = 10**8
    counts = sample_multinomial(n, [1 / 16, 4 / 16, 6 / 16, 4 / 16, 1 / 16], make_rng(3))
    se = math.sqrt(n * (3 / 8) * (5 / 8))
    assert abs(counts[2] - 3 * n / 8) < 3 * se
    assert sum(counts) == n


def test_interval_type():
    with pytest.raises(ValueError):
        Interval(2.0, 1.0)
    assert Interval(0.1, 0.3).width == pytest.approx(0.2)
