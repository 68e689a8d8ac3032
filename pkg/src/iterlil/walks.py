"""Driver for the resumable walk kernels.

All trajectory generation in the package funnels through `run_walks` so
that the random draw consumption is a pure function of
(law, mothers, horizon) and the stream contents -- never of the output mode.
That is what makes a full trajectory, a births-only pass and a
counts-only pass of the same sub-stream agree exactly, and what makes
results independent of worker count.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidParameterError, PopulationCapError
from .kernels import (
    WALK_NEED_DRAWS,
    WALK_NEED_SPACE,
    WALK_OK,
    walk_collect,
    walk_count,
    walk_full,
)
from .laws import JointStepLaw

__all__ = ["DEFAULT_CAP", "run_walks"]

#: default ceiling on births/steps processed by one call
DEFAULT_CAP = 100_000_000

_BLOCK_MIN = 256
_BLOCK_MAX = 4_000_000


def _block_size(expected: float) -> int:
    expected = max(expected, 1.0)
    raw = 1.2 * expected + 4.0 * math.sqrt(expected) + 64.0
    return int(min(_BLOCK_MAX, max(_BLOCK_MIN, math.ceil(raw))))


def _grow(arr: np.ndarray, minimum: int) -> np.ndarray:
    new = np.empty(max(minimum, int(1.5 * arr.shape[0]) + 16), dtype=arr.dtype)
    new[: arr.shape[0]] = arr
    return new


def run_walks(
    law: JointStepLaw,
    rng: np.random.Generator,
    mothers: np.ndarray,
    horizon: float,
    mode: str,
    grid: np.ndarray | None = None,
    cap: int = DEFAULT_CAP,
):
    """Walk every mother to the horizon, in mother order.

    mode "collect"  -> float array of child birth times, in creation order
    mode "count"    -> (int histogram aligned with `grid`, total births);
                       counts up to grid[g] are cumsum(hist)[:g+1]
    mode "full"     -> (xi, eta, s, t_birth) arrays of the single mother's
                       walk, retaining the first step sum beyond the horizon

    Mothers must not exceed the horizon.  The cap bounds recorded
    births/steps and is enforced to within one draw block.
    """
    if horizon <= 0.0 or not math.isfinite(horizon):
        raise InvalidParameterError("horizon must be positive and finite")
    mothers = np.ascontiguousarray(mothers, dtype=float)
    if mothers.size and float(mothers.max()) > horizon:
        raise InvalidParameterError("mothers must be born within the horizon")
    if mode == "full" and mothers.size != 1:
        raise InvalidParameterError("full mode walks exactly one mother")
    if mode == "count":
        if grid is None:
            raise InvalidParameterError("count mode requires a grid")
        hist = np.zeros(grid.shape[0], dtype=np.int64)

    nm = mothers.shape[0]
    # suffix[m] = sum of (horizon - b) over mothers m..end, for block sizing
    suffix = np.concatenate([np.cumsum((horizon - mothers)[::-1])[::-1], [0.0]])

    expected_children = suffix[0] / law.mu + nm
    if mode == "collect":
        out = np.empty(_block_size(expected_children), dtype=float)
    elif mode == "full":
        out_n = _block_size(horizon / law.mu)
        oxi = np.empty(out_n)
        oeta = np.empty(out_n)
        otb = np.empty(out_n)
        os_ = np.empty(out_n + 1)
        os_[0] = 0.0

    m = 0
    s = 0.0
    pos = 0  # children written (collect), births seen (count), steps (full)
    status = WALK_NEED_DRAWS if nm else WALK_OK
    xi = eta = None
    u = 0
    while status != WALK_OK:
        if status == WALK_NEED_DRAWS:
            remaining = (suffix[m] - s) / law.mu + (nm - m)
            xi, eta = law.sample(rng, _block_size(remaining))
            u = 0
        elif status == WALK_NEED_SPACE:
            if mode == "collect":
                out = _grow(out, pos + 1)
            else:  # full
                need = pos + 1
                oxi = _grow(oxi, need)
                oeta = _grow(oeta, need)
                otb = _grow(otb, need)
                os_ = _grow(os_, need + 1)

        if mode == "collect":
            status, m, s, u, pos = walk_collect(
                mothers, horizon, xi, eta, u, m, s, out, pos
            )
        elif mode == "count":
            status, m, s, u, pos = walk_count(
                mothers, horizon, grid, hist, xi, eta, u, m, s, pos
            )
        else:
            status, u, s, pos = walk_full(
                horizon, xi, eta, u, s, pos, oxi, oeta, os_, otb
            )
            m = 1 if status == WALK_OK else 0
        if pos > cap:
            raise PopulationCapError(
                f"walk produced more than cap={cap} births/steps", generation=None
            )

    if mode == "collect":
        return out[:pos].copy()
    if mode == "count":
        return hist, pos
    return (
        oxi[:pos].copy(),
        oeta[:pos].copy(),
        os_[: pos + 1].copy(),
        otb[:pos].copy(),
    )
