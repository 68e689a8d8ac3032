"""Branching cascade driven by a perturbed random walk.

An ancestor at time 0 produces first-generation individuals at the perturbed
birth times of its walk; every individual born at time b independently runs
a fresh walk and produces children at b + (its own birth times), and so on.
Generation j counts grow like t^j, so intermediate generations are kept as
explicit birth-time frontiers while the final generation is streamed
straight into grid histograms.

Randomness: generation pass g of a run draws from stream.child(g), and
mothers within a pass are walked in their creation order, so a run is a
pure function of (law, horizon, j_max, master seed, key path) regardless of
how runs are scheduled across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError, PopulationCapError, TableRangeError
from .gridfn import GridFunction, as_grid
from .laws import JointStepLaw
from .rng import Stream
from .walks import DEFAULT_CAP, run_walks

__all__ = ["GenerationRun", "simulate_generations", "zj_term"]


@dataclass
class GenerationRun:
    """Counts per generation of one branching run."""

    j_max: int
    grid: np.ndarray
    counts: list[GridFunction] = field(default_factory=list)
    births_processed: int = 0
    capped: bool = False


def _counts_from_births(births: np.ndarray, grid: np.ndarray) -> np.ndarray:
    return np.searchsorted(np.sort(births), grid, side="right").astype(float)


def _run_generations(
    law: JointStepLaw,
    horizon: float,
    j_max: int,
    grid: np.ndarray,
    stream: Stream,
    cap: int,
) -> tuple[list[np.ndarray], np.ndarray, int]:
    """Shared engine: returns (counts per generation, gen-1 births, total births)."""
    if j_max < 1:
        raise InvalidParameterError("j_max must be at least 1")
    if float(grid[-1]) > horizon:
        raise InvalidParameterError("grid must not extend beyond the horizon")

    counts: list[np.ndarray] = []
    total = 0
    gen1: np.ndarray = np.empty(0)
    frontier = np.array([0.0])
    for g in range(1, j_max + 1):
        rng = stream.child(g).generator()
        budget = cap - total
        if budget <= 0:
            raise PopulationCapError(
                f"birth cap {cap} exhausted before generation {g}", generation=g
            )
        if g < j_max:
            try:
                births = run_walks(
                    law, rng, frontier, horizon, mode="collect", cap=budget
                )
            except PopulationCapError as exc:
                raise PopulationCapError(str(exc), generation=g) from None
            total += births.shape[0]
            counts.append(_counts_from_births(births, grid))
            if g == 1:
                gen1 = births
            frontier = births
        else:
            try:
                hist, nb = run_walks(
                    law, rng, frontier, horizon, mode="count", grid=grid, cap=budget
                )
            except PopulationCapError as exc:
                raise PopulationCapError(str(exc), generation=g) from None
            total += nb
            counts.append(np.cumsum(hist).astype(float))
            if g == 1:
                gen1 = np.empty(0)  # final generation is never materialised
    return counts, gen1, total


def simulate_generations(
    law: JointStepLaw,
    horizon: float,
    j_max: int,
    grid,
    stream: Stream,
    cap: int = DEFAULT_CAP,
) -> GenerationRun:
    """Run one branching cascade and count births per generation on the grid.

    counts[0] agrees exactly with count_y of a trajectory simulated from
    stream.child(1), because both consume the same sub-stream through the
    same walk engine.
    """
    g = as_grid(grid)
    counts, _, total = _run_generations(law, horizon, j_max, g, stream, cap)
    run = GenerationRun(j_max=j_max, grid=g, births_processed=total)
    run.counts = [GridFunction(g, c, monotone=True) for c in counts]
    return run


def zj_term(
    law: JointStepLaw,
    horizon: float,
    j: int,
    grid,
    stream: Stream,
    vj_minus_1: GridFunction,
    cap: int = DEFAULT_CAP,
) -> GridFunction:
    """Centred generation-j count given the first generation.

    Returns, per grid time t,
        Y_j(t) - sum over first-generation births T_r <= t of
                 Vjm1(t - T_r)
    where Vjm1 is the supplied mean-count table for generation j-1
    (interpolated linearly).  Every generation-j individual descends from
    exactly one first-generation ancestor, so the subtraction centres each
    ancestor's subtree count by its conditional mean.  The same stream as
    simulate_generations yields the same cascade.
    """
    if j < 2:
        raise InvalidParameterError("zj_term needs a generation index j >= 2")
    g = as_grid(grid)
    if vj_minus_1.grid[-1] < g[-1]:
        raise TableRangeError(
            "mean-count table must cover the scan span "
            f"({vj_minus_1.grid[-1]} < {g[-1]})"
        )
    counts, gen1, _ = _run_generations(law, horizon, j, g, stream, cap)
    yj = counts[j - 1]
    vals = np.empty_like(yj)
    for i, t in enumerate(g):
        born = gen1[gen1 <= t]
        if born.size:
            vals[i] = yj[i] - float(np.sum(vj_minus_1.interp(t - born)))
        else:
            vals[i] = yj[i]
    return GridFunction(g, vals)
