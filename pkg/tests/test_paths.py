"""Trajectory simulation, counting, decomposition and round trips."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iterlil import (
    InvalidParameterError,
    OutOfHorizonError,
    Stream,
    count_nu,
    count_y,
    decompose_xz,
    dump_path_csv,
    load_path_csv,
    make_law,
    simulate_path,
    supermartingale_stat,
    tail_sum,
)

DET = make_law("det", (1.0, 0.5))
EXP = make_law("exp_indep", (1.0, 1.0))


def det_path(horizon=3.2):
    return simulate_path(DET, horizon, Stream(0))


def test_det_walk_enumeration():
    path = det_path()
    np.testing.assert_array_equal(path.s, [0.0, 1.0, 2.0, 3.0, 4.0])
    np.testing.assert_array_equal(path.t_birth, [0.5, 1.5, 2.5, 3.5])
    np.testing.assert_array_equal(path.xi, np.ones(4))
    assert path.n_steps == 4


def test_det_count_y_floor_formula():
    path = simulate_path(DET, 10.0, Stream(0))
    grid = np.array([0.1, 0.5, 0.9, 1.5, 7.25, 10.0])
    vals = count_y(path, grid).values
    expect = [math.floor(t + 0.5) if t >= 0.5 else 0 for t in grid]
    np.testing.assert_array_equal(vals, expect)


def test_det_count_nu_floor_formula():
    path = simulate_path(DET, 10.0, Stream(0))
    grid = np.array([0.0, 0.99, 1.0, 5.5, 10.0])
    np.testing.assert_array_equal(count_nu(path, grid).values, [1, 1, 2, 6, 11])


def test_counts_are_monotone_and_ordered():
    path = simulate_path(EXP, 200.0, Stream(12).child(0))
    grid = np.linspace(1.0, 200.0, 57)
    y = count_y(path, grid).values
    nu = count_nu(path, grid).values
    assert np.all(np.diff(y) >= 0) and np.all(np.diff(nu) >= 0)
    assert np.all(nu >= y)  # every perturbed point needs its walk point first
    assert np.all(y == np.floor(y)) and np.all(nu == np.floor(nu))


def test_shared_step_law_counts_differ_by_one():
    # when eta == xi the perturbed points are exactly the walk points S_1, S_2, ...
    law = make_law("eta_eq_xi", (1.0,))
    path = simulate_path(law, 100.0, Stream(3).child(7))
    grid = np.linspace(0.5, 100.0, 41)
    np.testing.assert_array_equal(
        count_nu(path, grid).values - count_y(path, grid).values, np.ones(41)
    )


def test_count_beyond_horizon_is_refused():
    path = det_path()
    with pytest.raises(OutOfHorizonError):
        count_y(path, np.array([1.0, 5.0]))


def test_walk_point_density_long_run():
    path = simulate_path(EXP, 1.0e4, Stream(2024).child(0))
    assert 0.9 <= path.s.size / 1.0e4 <= 1.1


def test_tail_sum_det_enumeration():
    path = det_path()
    # at t = 3 only the walk point sitting exactly at 3 still waits for its child
    assert tail_sum(path, 3.0, DET) == 1.0
    # between integers every reachable child has arrived
    assert tail_sum(path, 2.7, DET) == 0.0


def test_tail_sum_bounds():
    path = simulate_path(EXP, 50.0, Stream(8).child(1))
    for t in (1.0, 10.0, 50.0):
        v = tail_sum(path, t, EXP)
        assert 0.0 <= v <= count_nu(path, np.array([t])).values[0]


def test_tail_sum_slow_tail_is_small_relative_to_t():
    law = make_law("slow_tail", (1.0,))
    vals = [
        tail_sum(simulate_path(law, 1.0e4, Stream(77).child(r)), 1.0e4, law) / 1.0e4
        for r in range(100)
    ]
    assert np.mean(vals) < 0.5


def test_reconstruction_identity_is_quadrature_free():
    path = simulate_path(EXP, 80.0, Stream(15).child(2))
    for t in (5.0, 33.3, 80.0):
        x, _ = decompose_xz(path, t, EXP)
        y = count_y(path, np.array([t])).values[0]
        idx = np.searchsorted(path.s, t, side="right")
        marks = float(np.sum(EXP.eta_cdf(t - path.s[:idx])))
        assert x == pytest.approx(y - marks, abs=1e-9)


def test_decomposition_sums_to_centered_count():
    law = make_law("eta_eq_xi", (1.0,))
    path = simulate_path(law, 60.0, Stream(4).child(0))
    t = 42.0
    x, z = decompose_xz(path, t, law)
    y = count_y(path, np.array([t])).values[0]
    assert x + z == pytest.approx(y - law.eta_cdf_integral(t) / law.mu, rel=1e-9)


def test_x_is_zero_before_any_support():
    path = det_path()
    x, _ = decompose_xz(path, 0.3, DET)  # t below the child offset, nothing counted
    assert x == 0.0


def test_x_variance_grows_sublinearly():
    # sample variance of the martingale part over t spanning two decades,
    # divided by t, must decrease
    n = 1000
    ts = (100.0, 1000.0, 10_000.0)
    xs = np.empty((n, len(ts)))
    for r in range(n):
        path = simulate_path(EXP, ts[-1], Stream(91).child(r))
        for i, t in enumerate(ts):
            xs[r, i], _ = decompose_xz(path, t, EXP)
    ratios = xs.var(axis=0, ddof=1) / np.asarray(ts)
    assert ratios[0] > ratios[1] > ratios[2]


def test_supermartingale_stat_exact_small_t():
    # below every support nothing is counted and the statistic collapses to
    # exp(-(u^2 e^|u|/2) * nu(t))
    law = make_law("det", (1.0, 0.5))
    path = simulate_path(law, 3.2, Stream(0))
    u, t = 0.3, 0.25
    nu = count_nu(path, np.array([t])).values[0]
    expect = math.exp(-(u * u * math.exp(abs(u)) / 2.0) * nu)
    assert supermartingale_stat(path, t, u, law) == pytest.approx(expect, rel=1e-12)
    assert supermartingale_stat(path, t, u, law) <= 1.0


def test_supermartingale_stat_rejects_zero_u():
    path = det_path()
    with pytest.raises(InvalidParameterError):
        supermartingale_stat(path, 1.0, 0.0, DET)


def test_path_csv_round_trip(tmp_path):
    path = simulate_path(EXP, 35.0, Stream(6).child(3))
    fname = str(tmp_path / "p.csv")
    dump_path_csv(path, fname)
    again = load_path_csv(fname, 35.0)
    np.testing.assert_array_equal(path.xi, again.xi)
    np.testing.assert_array_equal(path.eta, again.eta)
    np.testing.assert_array_equal(path.s, again.s)
    np.testing.assert_array_equal(path.t_birth, again.t_birth)


@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_simulation_is_deterministic(seed):
    a = simulate_path(EXP, 30.0, Stream(seed).child(1))
    b = simulate_path(EXP, 30.0, Stream(seed).child(1))
    assert np.array_equal(a.xi, b.xi) and np.array_equal(a.t_birth, b.t_birth)


@given(
    seed=st.integers(min_value=0, max_value=2**32 - 1),
    h1=st.floats(min_value=5.0, max_value=50.0),
    scale=st.floats(min_value=1.1, max_value=8.0),
)
@settings(max_examples=25, deadline=None)
def test_shorter_horizon_is_a_prefix(seed, h1, scale):
    h2 = h1 * scale
    a = simulate_path(EXP, h1, Stream(seed).child(0))
    b = simulate_path(EXP, h2, Stream(seed).child(0))
    n = a.n_steps
    assert b.n_steps >= n
    assert np.array_equal(a.xi, b.xi[:n])
    assert np.array_equal(a.s, b.s[: n + 1])


def test_truncation_keeps_first_exceeding_sum():
    path = simulate_path(EXP, 25.0, Stream(10).child(4))
    assert path.s[-1] > 25.0 >= path.s[-2]


def test_horizon_validation():
    with pytest.raises(InvalidParameterError):
        simulate_path(EXP, 0.0, Stream(1))
    with pytest.raises(InvalidParameterError):
        simulate_path(EXP, -3.0, Stream(1))
