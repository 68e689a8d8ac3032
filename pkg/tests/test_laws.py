"""Tests for the step/perturbation law families."""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iterlil import (
    FAMILIES,
    InvalidParameterError,
    Stream,
    UnsupportedQueryError,
    make_law,
    parse_law,
)

rates = st.floats(min_value=0.2, max_value=5.0, allow_nan=False)


def test_family_registry():
    assert FAMILIES == ("det", "exp_indep", "eta_eq_xi", "lognormal_indep", "slow_tail")


def test_exponential_cdf_closed_form():
    law = make_law("exp_indep", (2.0, 1.0))
    assert law.xi_cdf(0.0) == 0.0
    assert law.xi_cdf(1.0) == pytest.approx(-math.expm1(-2.0), abs=0.0)
    assert law.eta_cdf(3.0) == pytest.approx(-math.expm1(-3.0), abs=0.0)
    assert law.xi_cdf(-1.0) == 0.0


def test_det_cdf_is_a_step():
    law = make_law("det", (1.0, 0.5))
    assert law.eta_cdf(0.49) == 0.0
    assert law.eta_cdf(0.5) == 1.0
    assert law.mu == 1.0 and law.sigma2 == 0.0 and law.degenerate


def test_slow_tail_cdf_values():
    law = make_law("slow_tail", (1.0,))
    # mass starts at e; the median of the perturbation sits at e^2
    assert law.eta_cdf(math.e * 0.999) == 0.0
    assert law.eta_cdf(math.e**2) == pytest.approx(0.5, rel=1e-12)
    assert not law.eta_mean_finite
    assert make_law("exp_indep", (1.0, 1.0)).eta_mean_finite


def test_moments_against_samples():
    # frozen-seed 5-sigma check of mu / sigma2 for every stochastic family
    n = 100_000
    for law in (
        make_law("exp_indep", (1.0, 2.0)),
        make_law("eta_eq_xi", (1.5,)),
        make_law("lognormal_indep", (0.0, 0.5, 1.0)),
        make_law("slow_tail", (2.0,)),
    ):
        xi, eta = law.sample(Stream(2024).generator(), n)
        se_mean = math.sqrt(law.sigma2 / n)
        assert abs(xi.mean() - law.mu) < 5 * se_mean, law.spec_string
        assert np.all(xi > 0) and np.all(eta > 0)
        # crude variance check; the sample variance SE needs 4th moments, so
        # allow a wide relative band instead
        assert xi.var() == pytest.approx(law.sigma2, rel=0.1)


def test_empirical_cdf_matches_closed_form():
    # Dvoretzky-Kiefer-Wolfowitz band at a comfortably small alpha
    n = 200_000
    eps = math.sqrt(math.log(2.0 / 1e-9) / (2.0 * n))  # ~ 0.0073
    for law in (
        make_law("exp_indep", (1.0, 0.5)),
        make_law("slow_tail", (1.0,)),
        make_law("lognormal_indep", (0.2, 0.7, 2.0)),
    ):
        _, eta = law.sample(Stream(99).generator(), n)
        eta_sorted = np.sort(eta)
        qs = eta_sorted[:: n // 500]
        ecdf = np.searchsorted(eta_sorted, qs, side="right") / n
        assert np.max(np.abs(ecdf - law.eta_cdf(qs))) < eps, law.spec_string


def test_eta_eq_xi_pairs_are_identical():
    law = make_law("eta_eq_xi", (1.0,))
    xi, eta = law.sample(Stream(7).generator(), 1000)
    assert xi is eta or np.array_equal(xi, eta)


def test_eta_eq_xi_accepts_nested_base():
    law = make_law("eta_eq_xi", ("lognormal", (0.0, 0.5)))
    assert law.base == "lognormal"
    assert law.spec_string == "eta_eq_xi(lognormal(0.0,0.5))"
    xi, eta = law.sample(Stream(1).generator(), 10)
    assert np.array_equal(xi, eta)


@given(lx=rates, le=rates)
@settings(max_examples=30, deadline=None)
def test_spec_string_round_trip(lx, le):
    law = make_law("exp_indep", (lx, le))
    assert parse_law(law.spec_string) == law


@given(lx=rates)
@settings(max_examples=20, deadline=None)
def test_eta_eq_xi_round_trip(lx):
    law = make_law("eta_eq_xi", (lx,))
    again = parse_law(law.spec_string)
    assert again == law
    assert again.base == "exp"


@given(t=st.floats(min_value=0.0, max_value=200.0), lx=rates, le=rates)
@settings(max_examples=50, deadline=None)
def test_cdf_integral_monotone_and_bounded(t, lx, le):
    law = make_law("exp_indep", (lx, le))
    val = law.eta_cdf_integral(t)
    assert 0.0 <= val <= t + 1e-9
    assert law.eta_cdf_integral(t + 1.0) >= val


def test_cdf_integral_against_antiderivative():
    # exponential: integral_0^t F = t - (1 - e^{-t}) / rate
    law = make_law("exp_indep", (1.0, 2.0))
    for t in (0.5, 3.0, 40.0):
        exact = t - (1.0 - math.exp(-2.0 * t)) / 2.0
        assert law.eta_cdf_integral(t) == pytest.approx(exact, rel=1e-6)
    # det: integral is max(0, t - b)
    det = make_law("det", (1.0, 0.5))
    assert det.eta_cdf_integral(0.3) == 0.0
    assert det.eta_cdf_integral(2.0) == pytest.approx(1.5, abs=0.0)


def test_non_closed_form_cdf_is_rejected():
    law = dataclasses.replace(make_law("exp_indep", (1.0, 1.0)), eta_cdf_form="empirical")
    with pytest.raises(UnsupportedQueryError):
        law.eta_cdf(1.0)
    with pytest.raises(UnsupportedQueryError):
        law.eta_cdf_integral(1.0)


def test_make_law_validation():
    with pytest.raises(InvalidParameterError):
        make_law("exp_indep", (0.0, 1.0))
    with pytest.raises(InvalidParameterError):
        make_law("exp_indep", (1.0,))
    with pytest.raises(InvalidParameterError):
        make_law("no_such_family", (1.0,))
    with pytest.raises(InvalidParameterError):
        make_law("lognormal_indep", (0.0, -0.5, 1.0))


def test_parse_law_rejects_garbage():
    for text in ("exp_indep", "exp_indep(", "exp_indep(1,x)", "det(1)"):
        with pytest.raises(InvalidParameterError):
            parse_law(text)


def test_sampling_is_block_invariant():
    # 60 + 40 pairs on one generator equal 100 pairs on a fresh copy
    for law in (
        make_law("exp_indep", (1.0, 1.0)),
        make_law("eta_eq_xi", (1.0,)),
        make_law("lognormal_indep", (0.0, 0.5, 1.0)),
        make_law("slow_tail", (1.0,)),
    ):
        g1 = Stream(31).generator()
        xa, ea = law.sample(g1, 60)
        xb, eb = law.sample(g1, 40)
        xi, eta = law.sample(Stream(31).generator(), 100)
        assert np.array_equal(np.concatenate([xa, xb]), xi), law.spec_string
        assert np.array_equal(np.concatenate([ea, eb]), eta), law.spec_string
