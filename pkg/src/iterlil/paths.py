"""Perturbed random walk trajectories and their counting statistics.

A trajectory is driven by step sums S_0 = 0, S_k = xi_1 + ... + xi_k; the
k-th perturbed point is born at T_k = S_{k-1} + eta_k.  Two counting
processes matter downstream: the number of perturbed points born by time t
(count_y) and the number of step sums, origin included, that have not yet
passed t (count_nu).  Simulation keeps every step whose predecessor sum lies
within the horizon plus the first sum beyond it, so both counts are exact
for any query time up to the horizon.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, OutOfHorizonError
from .gridfn import GridFunction, as_grid
from .laws import JointStepLaw
from .rng import Stream
from .walks import DEFAULT_CAP, run_walks

__all__ = [
    "PrwPath",
    "simulate_path",
    "count_y",
    "count_nu",
    "tail_sum",
    "decompose_xz",
    "supermartingale_stat",
    "dump_path_csv",
    "load_path_csv",
]

#: exp() overflows just above this exponent in IEEE double
_EXP_SATURATION = 709.0


@dataclass(frozen=True)
class PrwPath:
    """One simulated trajectory, truncated just past its horizon."""

    xi: np.ndarray
    eta: np.ndarray
    s: np.ndarray
    t_birth: np.ndarray
    horizon: float

    def __post_init__(self):
        n = self.xi.shape[0]
        if n == 0:
            raise InvalidParameterError("a trajectory needs at least one step")
        if self.eta.shape[0] != n or self.t_birth.shape[0] != n:
            raise InvalidParameterError("xi, eta, t_birth must share a length")
        if self.s.shape[0] != n + 1 or self.s[0] != 0.0:
            raise InvalidParameterError("s must start at 0 and have one extra slot")
        if np.any(self.xi <= 0.0) or np.any(self.eta <= 0.0):
            raise InvalidParameterError("steps and perturbations must be positive")
        # Positive steps make s strictly increasing in exact arithmetic, but a
        # step below the resolution of the running sum ties in doubles.
        if np.any(np.diff(self.s) < 0.0):
            raise InvalidParameterError("step sums must be nondecreasing")
        if not (self.s[-1] > self.horizon >= self.s[-2]):
            raise InvalidParameterError("trajectory truncation does not match horizon")

    @property
    def n_steps(self) -> int:
        return self.xi.shape[0]


def _as_generator(stream_or_rng) -> np.random.Generator:
    if isinstance(stream_or_rng, Stream):
        return stream_or_rng.generator()
    return stream_or_rng


def simulate_path(
    law: JointStepLaw,
    horizon: float,
    stream_or_rng,
    cap: int = DEFAULT_CAP,
) -> PrwPath:
    """Simulate one trajectory out to (just beyond) the horizon.

    Accepts either a Stream or a ready Generator; a given
    (law, horizon, master seed, key path) always yields the same trajectory,
    bit for bit.
    """
    rng = _as_generator(stream_or_rng)
    xi, eta, s, tb = run_walks(
        law, rng, np.array([0.0]), horizon, mode="full", cap=cap
    )
    return PrwPath(xi=xi, eta=eta, s=s, t_birth=tb, horizon=horizon)


def _check_within_horizon(path: PrwPath, tmax: float):
    if tmax > path.horizon:
        raise OutOfHorizonError(
            f"query time {tmax} exceeds trajectory horizon {path.horizon}"
        )


def count_y(path: PrwPath, grid) -> GridFunction:
    """Perturbed points born by each grid time."""
    g = as_grid(grid)
    _check_within_horizon(path, float(g[-1]))
    births = np.sort(path.t_birth)
    vals = np.searchsorted(births, g, side="right").astype(float)
    return GridFunction(g, vals, monotone=True)


def count_nu(path: PrwPath, grid) -> GridFunction:
    """Step sums (origin included) not beyond each grid time."""
    g = as_grid(grid)
    _check_within_horizon(path, float(g[-1]))
    vals = np.searchsorted(path.s, g, side="right").astype(float)
    return GridFunction(g, vals, monotone=True)


def tail_sum(path: PrwPath, t: float, law: JointStepLaw) -> float:
    """Sum of perturbation tail probabilities over step sums within t.

    Equals sum over S_k <= t of (1 - F(t - S_k)); lies in [0, nu(t)] and,
    normalised by t, decays for every admissible law.
    """
    t = float(t)
    _check_within_horizon(path, t)
    idx = int(np.searchsorted(path.s, t, side="right"))
    if idx == 0:
        return 0.0
    return float(idx - np.sum(law.eta_cdf(t - path.s[:idx])))


def _mark_sum(path: PrwPath, t: float, law: JointStepLaw) -> float:
    """sum over S_k <= t of F(t - S_k), the conditional birth intensity mass."""
    idx = int(np.searchsorted(path.s, t, side="right"))
    if idx == 0:
        return 0.0
    return float(np.sum(law.eta_cdf(t - path.s[:idx])))


def decompose_xz(path: PrwPath, t: float, law: JointStepLaw) -> tuple[float, float]:
    """Split the centred birth count into martingale and renewal parts.

    Returns (x, z) with
        x = Y(t) - sum_{S_k <= t} F(t - S_k)
        z = sum_{S_k <= t} F(t - S_k) - mu^{-1} * integral_0^t F
    so x + z reconstructs Y(t) - mu^{-1} integral_0^t F up to quadrature
    error in the integral term only; x itself is quadrature-free.
    """
    t = float(t)
    _check_within_horizon(path, t)
    y = float(np.count_nonzero(path.t_birth <= t))
    mk = _mark_sum(path, t, law)
    z = mk - law.eta_cdf_integral(t) / law.mu
    return y - mk, z


def supermartingale_stat(path: PrwPath, t: float, u: float, law: JointStepLaw) -> float:
    """Exponential fluctuation statistic with unit mean bound.

    Computes exp(u*x - (u^2 e^{|u|} / 2) * tailsum) where x is the
    martingale part from decompose_xz.  Its expectation over trajectories is
    at most 1 for every u != 0 and every t, which the Monte Carlo harness
    verifies.  If the exponent exceeds the double range the value saturates
    to inf so that callers can flag the replicate.
    """
    if u == 0.0:
        raise InvalidParameterError("u must be nonzero")
    t = float(t)
    _check_within_horizon(path, t)
    y = float(np.count_nonzero(path.t_birth <= t))
    x = y - _mark_sum(path, t, law)
    ts = tail_sum(path, t, law)
    exponent = u * x - 0.5 * u * u * math.exp(abs(u)) * ts
    if exponent > _EXP_SATURATION:
        return math.inf
    return math.exp(exponent)


# -- debug dump -------------------------------------------------------------


def dump_path_csv(path: PrwPath, fname: str):
    """Write the trajectory as rows k, xi, eta, s, t_birth (k = 1-based).

    The s column holds the k-th step sum; the implicit zeroth sum is 0.
    """
    with open(fname, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "xi", "eta", "s", "t_birth"])
        for k in range(path.n_steps):
            w.writerow(
                [
                    k + 1,
                    "%.17g" % path.xi[k],
                    "%.17g" % path.eta[k],
                    "%.17g" % path.s[k + 1],
                    "%.17g" % path.t_birth[k],
                ]
            )


def load_path_csv(fname: str, horizon: float) -> PrwPath:
    """Rebuild a trajectory dumped by dump_path_csv; horizon is not stored
    in the CSV and must be supplied."""
    rows = []
    with open(fname, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != ["k", "xi", "eta", "s", "t_birth"]:
            raise InvalidParameterError(f"unexpected path CSV header {header!r}")
        rows = [tuple(float(x) for x in row[1:]) for row in r]
    arr = np.asarray(rows, dtype=float)
    s = np.concatenate([[0.0], arr[:, 2]])
    return PrwPath(
        xi=arr[:, 0], eta=arr[:, 1], s=s, t_birth=arr[:, 3], horizon=horizon
    )
