"""Hot numeric loops, JIT compiled when possible.

Every kernel is written as a plain Python function over numpy arrays and
scalars, then wrapped with numba's njit unless the environment variable
ITERLIL_NUMBA is set to 0/false/off (or numba is missing), in which case the
original interpreted function is used unchanged.  Both variants compute
bit-identical results; `python -m iterlil.benchmark` times them side by side.

The walk kernels are resumable state machines: they consume pre-drawn
(xi, eta) blocks sequentially and return a status plus enough state to
continue after the caller refills the block or grows an output buffer.  The
caller-side protocol lives in `iterlil.walks`.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "NUMBA_ENABLED",
    "HAVE_NUMBA",
    "WALK_OK",
    "WALK_NEED_DRAWS",
    "WALK_NEED_SPACE",
    "walk_collect",
    "walk_count",
    "walk_full",
    "renewal_solve",
    "conv_increments",
]

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - sandbox always ships numba
    numba = None
    HAVE_NUMBA = False

_FLAG = os.environ.get("ITERLIL_NUMBA", "1").strip().lower()
NUMBA_ENABLED = HAVE_NUMBA and _FLAG not in ("0", "false", "no", "off")


def _jit(fn):
    if NUMBA_ENABLED:
        return numba.njit(cache=True)(fn)
    return fn


# Status codes shared by the resumable walk kernels.
WALK_OK = 0
WALK_NEED_DRAWS = 1
WALK_NEED_SPACE = 2


def _bucket_py(grid, x):
    """First index g with grid[g] >= x, or len(grid) if none."""
    lo = 0
    hi = grid.shape[0]
    while lo < hi:
        mid = (lo + hi) // 2
        if grid[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


_bucket = _jit(_bucket_py)


def _walk_collect_py(b, horizon, xi, eta, u0, m0, s0, out, pos0):
    """Walk each mother b[m] to the horizon, collecting child birth times.

    One (xi, eta) pair is consumed per step while the running step sum has
    not yet exceeded horizon - b[m]; a child time b[m] + sum + eta is kept
    only if it does not exceed the horizon.  Returns
    (status, m, s, u, pos): current mother, partial step sum within it,
    draws consumed and children written so far.
    """
    n = xi.shape[0]
    nm = b.shape[0]
    cap = out.shape[0]
    m = m0
    s = s0
    u = u0
    pos = pos0
    while m < nm:
        rem = horizon - b[m]
        while s <= rem:
            if u >= n:
                return WALK_NEED_DRAWS, m, s, u, pos
            t = s + eta[u]
            if t <= rem:
                if pos >= cap:
                    return WALK_NEED_SPACE, m, s, u, pos
                out[pos] = b[m] + t
                pos += 1
            s += xi[u]
            u += 1
        m += 1
        s = 0.0
    return WALK_OK, m, s, u, pos


def _walk_count_py(b, horizon, grid, hist, xi, eta, u0, m0, s0, nb0):
    """Like walk_collect, but stream children into grid histogram buckets.

    hist[g] tallies children in (grid[g-1], grid[g]]; children above the
    last grid node still count toward the returned birth total.  Counts of
    children up to grid[g] are recovered as cumsum(hist)[g].
    """
    n = xi.shape[0]
    nm = b.shape[0]
    ng = grid.shape[0]
    m = m0
    s = s0
    u = u0
    nb = nb0
    while m < nm:
        rem = horizon - b[m]
        while s <= rem:
            if u >= n:
                return WALK_NEED_DRAWS, m, s, u, nb
            t = s + eta[u]
            if t <= rem:
                g = _bucket(grid, b[m] + t)
                if g < ng:
                    hist[g] += 1
                nb += 1
            s += xi[u]
            u += 1
        m += 1
        s = 0.0
    return WALK_OK, m, s, u, nb


def _walk_full_py(horizon, xi, eta, u0, s0, k0, oxi, oeta, os_, otb):
    """Single walk from the origin retaining every step.

    Steps are recorded while the previous step sum is <= horizon, so the
    final recorded sum is the first one strictly beyond the horizon
    (os_[k] > horizon >= os_[k-1] on normal return).  os_ must be one slot
    longer than the other outputs; os_[0] is the caller's 0.0.
    """
    n = xi.shape[0]
    cap = oxi.shape[0]
    s = s0
    u = u0
    k = k0
    while s <= horizon:
        if u >= n:
            return WALK_NEED_DRAWS, u, s, k
        if k >= cap:
            return WALK_NEED_SPACE, u, s, k
        oxi[k] = xi[u]
        oeta[k] = eta[u]
        otb[k] = s + eta[u]
        s += xi[u]
        os_[k + 1] = s
        u += 1
        k += 1
    return WALK_OK, u, s, k


def _renewal_solve_py(dF, msup):
    """Expected visit counts of a pure random walk on a uniform grid.

    Solves U = 1 + F * U by forward substitution.  The Stieltjes mass
    dF[m] = F(m h) - F((m-1) h) acts at the midpoint of its cell, realised
    by averaging the two neighbouring U values; the resulting one-term
    implicitness is solved exactly.  Cells with zero mass (the CDF already
    saturated in double precision) are skipped via msup, which keeps light
    tails near-linear in cost.
    """
    n = dF.shape[0] - 1
    U = np.empty(n + 1)
    U[0] = 1.0
    c1 = 0.5 * dF[1] if n >= 1 else 0.0
    for i in range(1, n + 1):
        acc = 1.0 + c1 * U[i - 1]
        mtop = msup if msup < i else i
        for m in range(2, mtop + 1):
            acc += dF[m] * 0.5 * (U[i - m] + U[i - m + 1])
        U[i] = acc / (1.0 - c1)
    return U


def _conv_increments_py(da, db, asup, bsup):
    """Discrete convolution of two increment sequences on a shared grid.

    dc[i] = sum_a da[a] * db[i-a]; asup/bsup are the last nonzero indices,
    used to skip structurally zero terms.  All inputs nonnegative implies
    the output is nonnegative, which keeps cumulative sums monotone.
    """
    n = da.shape[0]
    out = np.zeros(n)
    for i in range(n):
        alo = i - bsup
        if alo < 0:
            alo = 0
        ahi = i if i < asup else asup
        acc = 0.0
        for a in range(alo, ahi + 1):
            acc += da[a] * db[i - a]
        out[i] = acc
    return out


walk_collect = _jit(_walk_collect_py)
walk_count = _jit(_walk_count_py)
walk_full = _jit(_walk_full_py)
renewal_solve = _jit(_renewal_solve_py)
conv_increments = _jit(_conv_increments_py)
