"""Fluctuation-scan harness: grids, normalisers, checks, reproducibility."""

from __future__ import annotations

import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from iterlil import (
    DegenerateLawError,
    DomainError,
    InvalidParameterError,
    Stream,
    center_y1,
    clt_check,
    ks_statistic,
    lil_normalizer,
    lil_scan,
    dump_scan_csv,
    make_law,
    nu_increment_check,
    renewal_function,
    scan_grid,
    supermartingale_check,
    supermartingale_sweep,
    tail_sum_check,
    v1_table,
    variance_scan,
    zj_term,
)

EXP = make_law("exp_indep", (1.0, 1.0))
SHARED = make_law("eta_eq_xi", (1.0,))
DET = make_law("det", (1.0, 0.5))
SLOW = make_law("slow_tail", (1.0,))


# -- normaliser ----------------------------------------------------------------


def test_normalizer_unit_law_anchor():
    # at t = e^e the loglog factor is exactly 1, so the unit-rate value
    # collapses to sqrt(2 e^e)
    t = math.exp(math.e)
    assert lil_normalizer(1, 1.0, 1.0, t) == pytest.approx(
        5.505317836688317, rel=1e-14
    )
    assert lil_normalizer(1, 1.0, 1.0, t) == pytest.approx(
        math.sqrt(2.0 * t), rel=1e-14
    )


def test_normalizer_higher_generation_coefficients():
    t = 100.0
    llt = math.log(math.log(t))
    # j = 2: 2/((2j-1)(j-1)!) = 2/3;  j = 3: 1/5
    assert lil_normalizer(2, 1.0, 1.0, t) == pytest.approx(
        math.sqrt((2.0 / 3.0) * t**3 * llt), rel=1e-14
    )
    assert lil_normalizer(3, 1.0, 1.0, t) == pytest.approx(
        math.sqrt((1.0 / 5.0) * t**5 * llt), rel=1e-14
    )
    # generic coefficient at j = 1 is 2, matching the dedicated branch
    assert 2.0 / ((2 * 1 - 1) * math.factorial(0)) == 2.0


def test_normalizer_scaling_in_mu_and_sigma():
    t = 50.0
    base = lil_normalizer(2, 1.0, 1.0, t)
    assert lil_normalizer(2, 1.0, 4.0, t) == pytest.approx(2.0 * base, rel=1e-12)
    assert lil_normalizer(2, 2.0, 1.0, t) == pytest.approx(
        base * 2.0 ** (-2.5), rel=1e-12
    )


def test_normalizer_vector_and_errors():
    ts = np.array([10.0, 100.0, 1000.0])
    out = lil_normalizer(1, 1.0, 1.0, ts)
    assert out.shape == ts.shape and np.all(np.diff(out) > 0)
    with pytest.raises(DomainError):
        lil_normalizer(1, 1.0, 1.0, math.e)
    with pytest.raises(DegenerateLawError):
        lil_normalizer(1, 1.0, 0.0, 100.0)
    with pytest.raises(InvalidParameterError):
        lil_normalizer(0, 1.0, 1.0, 100.0)
    with pytest.raises(InvalidParameterError):
        lil_normalizer(1, -1.0, 1.0, 100.0)


def test_centering_matches_integrated_tail():
    # exp(1) perturbation: integral_0^t F = t - 1 + e^-t, reproduced by the
    # law's quadrature to ~1e-6 relative
    t = 7.0
    want = 100.0 - (t - 1.0 + math.exp(-t))
    assert center_y1(100.0, t, EXP) == pytest.approx(want, abs=1e-4)


# -- scan grid -----------------------------------------------------------------


def test_scan_grid_geometric_structure():
    g = scan_grid(20.0, 500.0, "geometric", 1.2)
    assert g[0] == 20.0 and g[-1] == 500.0
    assert np.all(np.diff(g) > 0)
    assert np.all(g[1:] / g[:-1] <= 1.2 + 1e-9)


def test_scan_grid_proof_preset():
    g = scan_grid(20.0, 1e6, "proof_grid")
    assert g[0] == 20.0 and g[-1] == 1e6
    assert np.all(np.diff(g) > 0)
    # spacing stretches: later gaps dominate earlier ones
    assert (g[-1] - g[-2]) > (g[2] - g[1])


def test_scan_grid_rejections():
    with pytest.raises(DomainError):
        scan_grid(math.e, 100.0)
    with pytest.raises(InvalidParameterError):
        scan_grid(20.0, 10.0)
    with pytest.raises(InvalidParameterError):
        scan_grid(20.0, 100.0, "geometric", 1.0)
    with pytest.raises(InvalidParameterError):
        scan_grid(20.0, 100.0, "banana")


@settings(max_examples=60, deadline=None)
@given(
    t_min=st.floats(3.0, 50.0),
    factor=st.floats(1.5, 100.0),
    ratio=st.floats(1.05, 3.0),
    preset=st.sampled_from(["geometric", "proof_grid"]),
)
def test_scan_grid_always_well_formed(t_min, factor, ratio, preset):
    g = scan_grid(t_min, t_min * factor, preset, ratio)
    assert g[0] == t_min
    assert g[-1] == t_min * factor
    assert np.all(np.diff(g) > 0)
    if preset == "geometric":
        assert np.all(g[1:] / g[:-1] <= ratio * (1.0 + 1e-9))


# -- KS statistic against an independent implementation --------------------------


def test_ks_statistic_matches_scipy():
    rng = Stream(5).generator()
    for n in (37, 500):
        sample = rng.normal(size=n)
        want = scipy.stats.kstest(sample, "norm").statistic
        assert ks_statistic(sample) == pytest.approx(want, abs=1e-12)


def test_clt_check_rejects_bad_inputs():
    with pytest.raises(InvalidParameterError):
        clt_check(EXP, 100.0, 50, seed=1)
    with pytest.raises(DegenerateLawError):
        clt_check(DET, 100.0, 200, seed=1)


# -- fluctuation scan ----------------------------------------------------------


def test_scan_is_reproducible_and_seed_sensitive():
    a = lil_scan(EXP, 1, 4, 300.0, seed=11)
    b = lil_scan(EXP, 1, 4, 300.0, seed=11)
    c = lil_scan(EXP, 1, 4, 300.0, seed=12)
    assert a.fingerprint == b.fingerprint
    np.testing.assert_array_equal(a.r, b.r)
    assert c.fingerprint != a.fingerprint
    assert not np.array_equal(a.y, c.y)


def test_scan_extends_exactly_when_horizon_grows():
    # same seeds, longer horizon: the shared part of the grid must carry
    # bit-identical counts, so running extremes only ever widen
    short = lil_scan(EXP, 1, 4, 500.0, seed=21)
    long = lil_scan(EXP, 1, 4, 5000.0, seed=21)
    shared = short.scan_times[:-1]  # drop the appended right endpoint
    np.testing.assert_array_equal(long.scan_times[: shared.size], shared)
    np.testing.assert_array_equal(long.y[:, : shared.size], short.y[:, :-1])
    np.testing.assert_array_equal(long.r[:, : shared.size], short.r[:, :-1])
    assert np.all(np.diff(long.envelope_max) >= 0)
    assert np.all(np.diff(long.envelope_min) <= 0)
    assert long.envelope_max[-1] >= short.envelope_max[shared.size - 1]
    assert long.envelope_min[-1] <= short.envelope_min[shared.size - 1]


def test_scan_running_extremes_and_signs():
    res = lil_scan(EXP, 1, 200, 1000.0, seed=11)
    assert np.all(np.diff(res.running_max, axis=1) >= 0)
    assert np.all(np.diff(res.running_min, axis=1) <= 0)
    assert np.all(res.running_max >= res.r)
    assert np.all(res.running_min <= res.r)
    s = res.summary()
    assert 0.3 <= s["sign_fraction_final"] <= 0.7
    assert s["median_running_max_final"] > 0.0 > s["median_running_min_final"]
    assert s["n_rep"] == 200


def test_scan_csv_round_trips_all_columns(tmp_path):
    res = lil_scan(EXP, 1, 3, 200.0, seed=7)
    fname = str(tmp_path / "scan.csv")
    dump_scan_csv(res, fname)
    data = np.loadtxt(fname, delimiter=",", skiprows=1)
    n = res.scan_times.size
    assert data.shape == (3 * n, 8)
    for rep in range(3):
        block = data[rep * n : (rep + 1) * n]
        assert np.all(block[:, 0] == rep)
        np.testing.assert_array_equal(block[:, 1], res.scan_times)
        np.testing.assert_array_equal(block[:, 2], res.y[rep])
        np.testing.assert_array_equal(block[:, 5], res.r[rep])
    # recompute the normalised statistic from the dumped raw columns
    recomputed = (data[:, 2] - data[:, 3]) / data[:, 4]
    np.testing.assert_array_equal(recomputed, data[:, 5])


def test_scan_rejects_degenerate_and_bad_args():
    with pytest.raises(DegenerateLawError):
        lil_scan(DET, 1, 4, 100.0, seed=1)
    with pytest.raises(InvalidParameterError):
        lil_scan(EXP, 1, 0, 100.0, seed=1)
    with pytest.raises(InvalidParameterError):
        lil_scan(EXP, 0, 4, 100.0, seed=1)


# -- variance growth -----------------------------------------------------------


def test_variance_slope_near_one_for_first_generation():
    res = variance_scan(EXP, 1, (25.0, 50.0, 100.0, 200.0), 1500, seed=33)
    assert res.within(0.35)
    # first-generation counts have mean exactly t under unit-rate steps
    assert np.all(np.abs(res.means / res.t_points - 1.0) < 0.05)
    assert np.all(np.diff(res.variances) > 0)


def test_variance_scan_validation():
    with pytest.raises(InvalidParameterError):
        variance_scan(EXP, 1, (100.0, 50.0), 100, seed=1)
    with pytest.raises(InvalidParameterError):
        variance_scan(EXP, 1, (25.0, 50.0), 1, seed=1)
    with pytest.raises(DegenerateLawError):
        variance_scan(DET, 1, (25.0, 50.0), 100, seed=1)


# -- exponential bound ----------------------------------------------------------


def test_sweep_equals_per_exponent_checks():
    us = (0.1, -0.1)
    swept = supermartingale_sweep(EXP, 50.0, us, 400, seed=9)
    for u, res in zip(us, swept):
        single = supermartingale_check(EXP, 50.0, u, 400, seed=9)
        assert single.mean == res.mean
        assert single.se == res.se
        assert res.passed


def test_sweep_rejects_zero_exponent():
    with pytest.raises(InvalidParameterError):
        supermartingale_sweep(EXP, 50.0, (0.1, 0.0), 100, seed=1)


# -- decay diagnostics -----------------------------------------------------------


def test_tail_sums_decay_for_integrable_perturbations():
    res = tail_sum_check(EXP, (100.0, 1000.0), 60, seed=3)
    assert res.eta_mean_finite
    assert res.nonincreasing and res.halved and res.passed


def test_tail_sums_heavy_perturbations_need_no_halving():
    res = tail_sum_check(SLOW, (100.0, 1000.0), 60, seed=3)
    assert not res.eta_mean_finite
    assert res.passed == res.nonincreasing


def test_window_counts_shrink_against_growing_power():
    res = nu_increment_check(EXP, (100.0, 1000.0), 1.0, 0.5, 60, seed=3)
    assert np.all(np.diff(res.medians) <= 0) and res.passed
    with pytest.raises(InvalidParameterError):
        nu_increment_check(EXP, (100.0, 1000.0), 0.0, 0.5, 60, seed=3)


def test_second_generation_residual_medians_decay():
    # centred second-generation counts grow like t^(3/2), so dividing by
    # t^2 must push the medians down as t doubles
    table = v1_table(renewal_function(SHARED, 0.01, 200.0))
    v1fn = table.v_grid_function(1)
    meds = []
    for ti, t in enumerate((50.0, 100.0, 200.0)):
        grid = np.array([t])
        vals = [
            abs(float(zj_term(SHARED, t, 2, grid, Stream(88).child(ti, r), v1fn).values[0]))
            for r in range(300)
        ]
        meds.append(float(np.median(vals)) / t**2)
    assert meds[0] > meds[1] > meds[2]
