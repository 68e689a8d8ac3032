"""Generation cascades: exact small cases, coupling, and mean growth."""

from __future__ import annotations

import math

import numpy as np
import pytest

from iterlil import (
    GridFunction,
    InvalidParameterError,
    PopulationCapError,
    Stream,
    count_y,
    make_law,
    renewal_function,
    simulate_generations,
    simulate_path,
    v1_table,
    zj_term,
)

DET = make_law("det", (1.0, 0.5))


def brute_force_det_births(a, b, horizon, depth):
    """Independent enumeration of deterministic cascade birth times."""
    gen = [0.0]
    for _ in range(depth):
        nxt = []
        for born in gen:
            t = born + b
            while t <= horizon:
                nxt.append(t)
                t += a
        gen = nxt
    return np.sort(np.array(gen))


def test_det_cascade_matches_enumeration():
    grid = np.array([0.9, 1.0, 1.9, 2.0, 3.0])
    run = simulate_generations(DET, 3.0, 2, grid, Stream(0))
    for depth in (1, 2):
        births = brute_force_det_births(1.0, 0.5, 3.0, depth)
        expect = np.searchsorted(births, grid, side="right")
        np.testing.assert_array_equal(run.counts[depth - 1].values, expect)
    np.testing.assert_array_equal(run.counts[1].values, [0, 1, 1, 3, 6])
    assert run.births_processed == 9  # 3 first-generation + 6 second


def test_three_generations_det():
    grid = np.array([1.0, 2.0, 3.0, 4.0])
    run = simulate_generations(DET, 4.0, 3, grid, Stream(0))
    births = brute_force_det_births(1.0, 0.5, 4.0, 3)
    np.testing.assert_array_equal(
        run.counts[2].values, np.searchsorted(births, grid, side="right")
    )


def test_first_generation_couples_to_plain_path():
    # generation 1 of a cascade re-creates the trajectory drawn from the
    # generation-1 sub-stream, so the counts must agree exactly
    law = make_law("exp_indep", (1.0, 1.0))
    grid = np.linspace(2.0, 75.0, 29)
    stream = Stream(314).child(9)
    run = simulate_generations(law, 75.0, 3, grid, stream)
    path = simulate_path(law, 75.0, stream.child(1))
    np.testing.assert_array_equal(run.counts[0].values, count_y(path, grid).values)


def test_generation_counts_are_monotone_gridfunctions():
    law = make_law("eta_eq_xi", (1.0,))
    grid = np.linspace(1.0, 40.0, 14)
    run = simulate_generations(law, 40.0, 2, grid, Stream(5))
    for gf in run.counts:
        assert isinstance(gf, GridFunction)
        assert np.all(np.diff(gf.values) >= 0)


def test_second_generation_mean_growth():
    # over n cascades the generation-2 count at t = 20 averages t^2/2 = 200
    law = make_law("eta_eq_xi", (1.0,))
    grid = np.array([20.0])
    n = 10_000
    vals = np.empty(n)
    for r in range(n):
        vals[r] = simulate_generations(law, 20.0, 2, grid, Stream(141).child(r)).counts[1].values[0]
    se = vals.std(ddof=1) / math.sqrt(n)
    assert abs(vals.mean() - 200.0) <= 3.0 * se


def test_centered_second_generation_det_is_zero():
    # deterministic cascade equals its conditional mean, so the centred
    # term vanishes when the mean table is evaluated exactly on its nodes
    nodes = np.arange(0.0, 3.5, 0.5)
    staircase = np.floor(nodes + 0.5)
    v1 = GridFunction(nodes, staircase, monotone=True)
    z = zj_term(DET, 3.0, 2, np.array([1.0, 2.0, 3.0]), Stream(0), v1)
    np.testing.assert_array_equal(z.values, np.zeros(3))


def test_centered_second_generation_mean_near_zero():
    law = make_law("eta_eq_xi", (1.0,))
    t = 30.0
    table = v1_table(renewal_function(law, 0.01, t + 0.01), law)
    v1 = table.v_grid_function(1)
    n = 400
    vals = np.array(
        [zj_term(law, t, 2, np.array([t]), Stream(99).child(r), v1).values[0] for r in range(n)]
    )
    se = vals.std(ddof=1) / math.sqrt(n)
    # centring by the true conditional mean kills the first-order drift
    assert abs(vals.mean()) <= 4.0 * se + 1e-9


def test_population_cap_reports_generation():
    law = make_law("eta_eq_xi", (1.0,))
    with pytest.raises(PopulationCapError) as exc:
        simulate_generations(law, 50.0, 3, np.array([50.0]), Stream(1), cap=100)
    assert exc.value.generation in (1, 2, 3)


def test_grid_beyond_horizon_rejected():
    with pytest.raises(InvalidParameterError):
        simulate_generations(DET, 3.0, 2, np.array([1.0, 4.0]), Stream(0))


def test_depth_validation():
    with pytest.raises(InvalidParameterError):
        simulate_generations(DET, 3.0, 0, np.array([1.0]), Stream(0))
