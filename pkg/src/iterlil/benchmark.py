"""Timing comparison of the compiled kernels against their plain-Python bodies.

Run with::

    python3 -m iterlil.benchmark

The jitted variants are the module-level exports of `iterlil.kernels`; the
plain bodies are the same functions before decoration, so the comparison is
line-for-line fair.  Set ITERLIL_NUMBA=0 and both columns collapse to the
interpreter.
"""

from __future__ import annotations

import time

import numpy as np

from . import kernels
from .laws import make_law
from .rng import Stream

_REPEAT = 3


def _best(fn, *args):
    fn(*args)  # warm-up (includes jit compilation on first call)
    best = np.inf
    for _ in range(_REPEAT):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def _row(name, plain_s, fast_s):
    speedup = plain_s / fast_s if fast_s > 0 else float("inf")
    print(f"{name:20s} plain {plain_s * 1e3:9.2f} ms   jit {fast_s * 1e3:9.2f} ms   x{speedup:6.1f}")


def main():
    print(f"numba enabled: {kernels.NUMBA_ENABLED}")

    # Sizes are picked so the interpreted bodies stay in the seconds range;
    # the compiled kernels handle 10-100x larger tables in production runs.

    # renewal solve on 5e3 nodes, exponential step mass truncated at ~37
    law = make_law("exp_indep", (1.0, 1.0))
    h, n = 0.02, 5_000
    grid = h * np.arange(n + 1)
    cdf = law.xi_cdf(grid)
    dF = np.diff(cdf, prepend=0.0)
    msup = int(np.nonzero(dF)[0][-1])
    _row(
        "renewal_solve",
        _best(kernels._renewal_solve_py, dF, msup),
        _best(kernels.renewal_solve, dF, msup),
    )

    # increment convolution, both factors with full support
    da = np.full(3_001, h)
    _row(
        "conv_increments",
        _best(kernels._conv_increments_py, da, da, da.size - 1, da.size - 1),
        _best(kernels.conv_increments, da, da, da.size - 1, da.size - 1),
    )

    # counting walk over one long trajectory
    rng = Stream(0).generator()
    horizon = 200_000.0
    xi, eta = law.sample(rng, 250_000)
    b = np.zeros(1)
    out_grid = np.linspace(10.0, horizon, 64)
    hist = np.zeros(out_grid.size + 1, dtype=np.int64)

    def run_count(fn):
        hist[:] = 0
        fn(b, horizon, out_grid, hist, xi, eta, 0, 0, 0.0, 0)

    _row(
        "walk_count",
        _best(run_count, kernels._walk_count_py),
        _best(run_count, kernels.walk_count),
    )


if __name__ == "__main__":
    main()
