"""Renewal tables: expected counts on a uniform grid.

The central objects are the expected number U(t) of step sums in [0, t]
(origin included) and the expected generation counts V_1 = F * U,
V_j = V_{j-1} * V_1 of the branching cascade, all tabulated on a uniform
grid of spacing h.  Everything is built from nonnegative Stieltjes
increments, so each tabulated function is nondecreasing by construction;
convolutions are direct O(n * support) loops, with structurally zero tail
mass skipped.

Grid discretisation error is first order in h for the convolutions and
second order for U (the solver centres each mass cell); the defaults
h = 0.01, t_max = 500 keep a table build well under a second.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    GridError,
    InvalidParameterError,
    IterlilError,
    TableRangeError,
)
from .gridfn import GridFunction, as_grid
from .kernels import conv_increments, renewal_solve
from .laws import JointStepLaw, parse_law
from .rng import Stream
from .walks import DEFAULT_CAP

__all__ = [
    "RenewalTable",
    "renewal_function",
    "v1_table",
    "vj_table",
    "vj_monte_carlo",
    "McEstimate",
    "SubadditivityCheck",
    "check_subadditivity",
    "export_table_csv",
    "import_table_csv",
    "DEFAULT_H",
    "DEFAULT_T_MAX",
]

DEFAULT_H = 0.01
DEFAULT_T_MAX = 500.0
_MAX_NODES = 100_000_000


@dataclass
class RenewalTable:
    """Uniform-grid tables of U and the generation means V_j."""

    law_spec: str
    h: float
    t_max: float
    grid: np.ndarray
    u_vals: np.ndarray
    f_vals: np.ndarray | None = None
    v_vals: dict[int, np.ndarray] = field(default_factory=dict)
    dv: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def j_max(self) -> int:
        return max(self.v_vals, default=0)

    def index_of(self, t: float) -> int:
        """Nearest grid index for t; errors if t lies beyond the table."""
        if t < 0.0 or t > self.t_max + 0.5 * self.h:
            raise TableRangeError(f"t={t} outside table range [0, {self.t_max}]")
        return min(int(round(t / self.h)), self.grid.shape[0] - 1)

    def u_at(self, t: float) -> float:
        return float(self.u_vals[self.index_of(t)])

    def v_at(self, j: int, t: float) -> float:
        if j not in self.v_vals:
            raise TableRangeError(f"V_{j} has not been tabulated")
        return float(self.v_vals[j][self.index_of(t)])

    def v_grid_function(self, j: int) -> GridFunction:
        if j not in self.v_vals:
            raise TableRangeError(f"V_{j} has not been tabulated")
        return GridFunction(self.grid, self.v_vals[j], monotone=True)


def _last_nonzero(a: np.ndarray) -> int:
    nz = np.nonzero(a)[0]
    return int(nz[-1]) if nz.size else 0


def renewal_function(law: JointStepLaw, h: float = DEFAULT_H, t_max: float = DEFAULT_T_MAX) -> RenewalTable:
    """Tabulate U on [0, t_max] (t_max is rounded to a whole number of steps).

    U solves U = 1 + F_xi * U; the numeric table is nondecreasing with
    U(0) = 1 exactly.
    """
    if not (h > 0.0 and math.isfinite(h)):
        raise GridError("step h must be positive")
    if not (t_max >= h and math.isfinite(t_max)):
        raise GridError("t_max must be at least one step")
    if t_max / h > _MAX_NODES:
        raise GridError(f"t_max/h = {t_max / h:.3g} exceeds the node limit {_MAX_NODES}")
    n = int(round(t_max / h))
    grid = np.arange(n + 1) * h
    f_xi = np.asarray(law.xi_cdf(grid), dtype=float)
    if f_xi[0] != 0.0:
        raise InvalidParameterError("step law must be strictly positive")
    d_fxi = np.diff(f_xi, prepend=0.0)
    u = renewal_solve(d_fxi, _last_nonzero(d_fxi))
    if np.any(np.diff(u) < 0.0):
        raise IterlilError("renewal solve lost monotonicity; refine the grid")
    return RenewalTable(
        law_spec=law.spec_string, h=h, t_max=float(grid[-1]), grid=grid, u_vals=u
    )


def _du(table: RenewalTable) -> np.ndarray:
    du = np.diff(table.u_vals, prepend=0.0)
    du[0] = 1.0  # unit mass of the origin visit
    return du


def v1_table(table: RenewalTable, law: JointStepLaw | None = None) -> RenewalTable:
    """Add V_1 = F_eta * U to the table (mean first-generation count)."""
    law = law if law is not None else parse_law(table.law_spec)
    f_eta = np.asarray(law.eta_cdf(table.grid), dtype=float)
    if f_eta[0] != 0.0:
        raise InvalidParameterError("perturbation law must be strictly positive")
    table.f_vals = f_eta
    d_feta = np.diff(f_eta, prepend=0.0)
    du = _du(table)
    dv1 = conv_increments(d_feta, du, _last_nonzero(d_feta), _last_nonzero(du))
    v1 = np.cumsum(dv1)
    if np.any(v1 > table.u_vals * (1.0 + 1e-12) + 1e-12):
        raise IterlilError("V_1 exceeded U; increment construction is broken")
    table.v_vals[1] = v1
    table.dv[1] = dv1
    return table


def vj_table(table: RenewalTable, j: int) -> RenewalTable:
    """Extend the table with V_2 .. V_j via V_j = V_{j-1} * V_1."""
    if j < 1:
        raise InvalidParameterError("generation index must be >= 1")
    if 1 not in table.v_vals:
        v1_table(table)
    dv1 = table.dv[1]
    sup1 = _last_nonzero(dv1)
    for jj in range(2, j + 1):
        if jj in table.v_vals:
            continue
        prev = table.dv[jj - 1]
        dvj = conv_increments(prev, dv1, _last_nonzero(prev), sup1)
        table.v_vals[jj] = np.cumsum(dvj)
        table.dv[jj] = dvj
    return table


@dataclass
class McEstimate:
    """Monte Carlo mean of a grid function, with per-node standard errors."""

    grid: np.ndarray
    mean: np.ndarray
    se: np.ndarray
    n_rep: int


def _vj_mc_one(args) -> np.ndarray:
    law_spec, j, grid, seed, r, cap = args
    from .branching import simulate_generations  # deferred: avoid import cycle

    law = parse_law(law_spec)
    run = simulate_generations(law, float(grid[-1]), j, grid, Stream(seed).child(r), cap)
    return run.counts[j - 1].values


def vj_monte_carlo(
    law: JointStepLaw,
    j: int,
    grid,
    n_rep: int,
    seed: int,
    cap: int = DEFAULT_CAP,
    workers: int = 1,
) -> McEstimate:
    """Independent-cascade estimate of V_j on the grid, with standard errors.

    This is the simulation-side oracle for vj_table: the two must agree to
    within a few standard errors everywhere.
    """
    if n_rep < 2:
        raise InvalidParameterError("need at least 2 replicates")
    g = as_grid(grid)
    from .parallel import map_indexed

    rows = map_indexed(
        _vj_mc_one,
        [(law.spec_string, j, g, seed, r, cap) for r in range(n_rep)],
        workers,
    )
    samples = np.vstack(rows)
    mean = samples.mean(axis=0)
    se = samples.std(axis=0, ddof=1) / math.sqrt(n_rep)
    return McEstimate(grid=g, mean=mean, se=se, n_rep=n_rep)


@dataclass
class SubadditivityCheck:
    """One increment-domination residual and its numeric tolerance."""

    k: int
    x: float
    hh: float
    residual: float
    eps_num: float

    @property
    def passed(self) -> bool:
        return self.residual >= -self.eps_num


def check_subadditivity(table: RenewalTable, k: int, x: float, hh: float) -> SubadditivityCheck:
    """Residual of U(hh) * V_1(x+hh)^(k-1) - (V_k(x+hh) - V_k(x)).

    The increment of V_k over any window of width hh is dominated by the
    number of fresh walk arrivals in a width-hh window times the (k-1)-th
    power of the first-generation mean; the residual is therefore
    nonnegative up to grid error.  eps_num = 10 h L with L a local
    Lipschitz bound of V_k at the window's right edge.
    """
    if k < 1:
        raise InvalidParameterError("k must be >= 1")
    if hh <= 0.0 or x < 0.0:
        raise InvalidParameterError("need x >= 0 and hh > 0")
    if k not in table.v_vals or 1 not in table.v_vals:
        vj_table(table, k)
    i_right = table.index_of(x + hh)
    i_left = table.index_of(x)
    i_hh = table.index_of(hh)
    vk = table.v_vals[k]
    v1 = table.v_vals[1]
    increment = float(vk[i_right] - vk[i_left])
    bound = float(table.u_vals[i_hh]) * float(v1[i_right]) ** (k - 1)
    lo = max(0, i_right - 2)
    hi = min(vk.shape[0], i_right + 3)
    local_lip = float(np.max(table.dv[k][lo:hi])) / table.h
    return SubadditivityCheck(
        k=k,
        x=x,
        hh=hh,
        residual=bound - increment,
        eps_num=10.0 * table.h * local_lip,
    )


# -- CSV round trip ----------------------------------------------------------


def export_table_csv(table: RenewalTable, fname: str):
    """Write t, U, V1..Vjmax columns (17 significant digits, '.' decimal)."""
    js = sorted(table.v_vals)
    os.makedirs(os.path.dirname(os.path.abspath(fname)), exist_ok=True)
    with open(fname, "w", newline="") as fh:
        fh.write(f"# law = {table.law_spec}\n")
        fh.write(f"# h = {table.h!r}\n")
        fh.write("t,U" + "".join(f",V{j}" for j in js) + "\n")
        for i in range(table.grid.shape[0]):
            row = ["%.17g" % table.grid[i], "%.17g" % table.u_vals[i]]
            row += ["%.17g" % table.v_vals[j][i] for j in js]
            fh.write(",".join(row) + "\n")


def import_table_csv(fname: str) -> RenewalTable:
    """Rebuild a table exported by export_table_csv."""
    law_spec = ""
    h = None
    with open(fname) as fh:
        lines = fh.read().splitlines()
    body = []
    for ln in lines:
        if ln.startswith("# law ="):
            law_spec = ln.split("=", 1)[1].strip()
        elif ln.startswith("# h ="):
            h = float(ln.split("=", 1)[1].strip())
        elif ln and not ln.startswith("#"):
            body.append(ln)
    header = body[0].split(",")
    if header[:2] != ["t", "U"]:
        raise InvalidParameterError(f"unexpected table header {header!r}")
    js = [int(c[1:]) for c in header[2:]]
    data = np.array([[float(x) for x in ln.split(",")] for ln in body[1:]])
    grid = data[:, 0]
    if h is None:
        h = float(grid[1] - grid[0]) if grid.shape[0] > 1 else float(grid[0])
    table = RenewalTable(
        law_spec=law_spec,
        h=h,
        t_max=float(grid[-1]),
        grid=grid,
        u_vals=data[:, 1],
    )
    for pos, j in enumerate(js):
        table.v_vals[j] = data[:, 2 + pos]
        table.dv[j] = np.diff(data[:, 2 + pos], prepend=0.0)
    if law_spec:
        law = parse_law(law_spec)
        table.f_vals = np.asarray(law.eta_cdf(grid), dtype=float)
    return table
