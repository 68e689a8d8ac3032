"""Monte Carlo harness for iterated-logarithm fluctuation experiments.

The centred generation-j count, divided by

    sqrt(2 sigma^2 mu^(-2j-1) t^(2j-1) loglog t / ((2j-1) (j-1)!)),

has limit points filling [-1, 1] as t grows.  `lil_scan` tracks that ratio
along a sparse time grid per replicate, recording running extremes whose
aggregate envelope should settle near +-1.  The other entry points are
finite-sample checks of the supporting structure: variance growth exponent
2j-1, a central limit check for the walk counts, the unit-mean bound of the
exponential fluctuation statistic, and the decay of perturbation tail sums
and walk-count increments.

All checks accept a worker count; replicates use per-replicate sub-streams,
so results are identical for any worker split.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .errors import (
    DegenerateLawError,
    DomainError,
    InvalidParameterError,
)
from .gridfn import GridFunction
from .laws import JointStepLaw, parse_law
from .parallel import map_indexed
from .paths import simulate_path
from .renewal import RenewalTable, renewal_function, v1_table, vj_table
from .rng import Stream
from .walks import DEFAULT_CAP

__all__ = [
    "scan_grid",
    "lil_normalizer",
    "center_y1",
    "LilScanResult",
    "lil_scan",
    "dump_scan_csv",
    "VarianceScanResult",
    "variance_scan",
    "CltCheckResult",
    "clt_check",
    "SupermartingaleCheckResult",
    "supermartingale_check",
    "supermartingale_sweep",
    "TailSumCheckResult",
    "tail_sum_check",
    "NuIncrementCheckResult",
    "nu_increment_check",
    "DEFAULT_T_MIN",
    "DEFAULT_RATIO",
]

DEFAULT_T_MIN = 20.0
DEFAULT_RATIO = 1.2

#: one-sample Kolmogorov-Smirnov critical value at asymptotic level 1%
KS_COEFF = 1.63


def scan_grid(
    t_min: float,
    t_max: float,
    preset: str = "geometric",
    ratio: float = DEFAULT_RATIO,
) -> np.ndarray:
    """Sparse scan times in [t_min, t_max].

    "geometric" multiplies by `ratio`; "proof_grid" uses exp(n^(3/4)),
    the spacing under which running extremes stabilise most cleanly.  Both
    ends are always included.
    """
    if t_min <= math.e:
        raise DomainError("t_min must exceed e for loglog normalisation")
    if t_max <= t_min:
        raise InvalidParameterError("t_max must exceed t_min")
    if preset == "geometric":
        if ratio <= 1.0:
            raise InvalidParameterError("geometric ratio must exceed 1")
        pts = [t_min]
        while pts[-1] * ratio < t_max:
            pts.append(pts[-1] * ratio)
    elif preset == "proof_grid":
        n = max(1, math.ceil(math.log(t_min) ** (4.0 / 3.0)))
        pts = [t_min]
        while True:
            t = math.exp(n ** 0.75)
            n += 1
            if t >= t_max:
                break
            if t > pts[-1] * (1.0 + 1e-12):
                pts.append(t)
    else:
        raise InvalidParameterError(f"unknown grid preset {preset!r}")
    if t_max > pts[-1] * (1.0 + 1e-12):
        pts.append(t_max)
    else:
        pts[-1] = t_max
    return np.asarray(pts, dtype=float)


def lil_normalizer(j: int, mu: float, sigma2: float, t):
    """Iterated-logarithm normaliser for centred generation-j counts.

    j = 1 uses sqrt(2 sigma^2 mu^-3 t loglog t); higher j carries the extra
    t^(2j-2) growth and the 1/((2j-1)(j-1)!) combinatorial factor.  The two
    expressions agree at j = 1.
    """
    if j < 1:
        raise InvalidParameterError("generation index must be >= 1")
    if mu <= 0.0:
        raise InvalidParameterError("mu must be positive")
    if sigma2 <= 0.0:
        raise DegenerateLawError("normaliser undefined for zero-variance laws")
    tt = np.asarray(t, dtype=float)
    if np.any(tt <= math.e):
        raise DomainError("normaliser needs t > e")
    llt = np.log(np.log(tt))
    if j == 1:
        out = np.sqrt(2.0 * sigma2 * mu ** (-3) * tt * llt)
    else:
        coeff = 2.0 / ((2 * j - 1) * math.factorial(j - 1))
        out = np.sqrt(coeff * sigma2 * mu ** (-(2 * j + 1)) * tt ** (2 * j - 1) * llt)
    return float(out) if np.isscalar(t) else out


def center_y1(y: float, t: float, law: JointStepLaw) -> float:
    """Centre a first-generation count by its long-run mean drift."""
    return float(y) - law.eta_cdf_integral(t) / law.mu


# -- fluctuation scan ---------------------------------------------------------


@dataclass
class LilScanResult:
    law_spec: str
    j: int
    master_seed: int
    preset: str
    scan_times: np.ndarray
    y: np.ndarray  # (n_rep, n_times) raw counts
    centering: np.ndarray  # deterministic, per time
    normalizer: np.ndarray
    r: np.ndarray
    running_max: np.ndarray
    running_min: np.ndarray
    envelope_max: np.ndarray  # per time, max over replicates of running max
    envelope_min: np.ndarray
    fingerprint: str
    tail_diagnostic: np.ndarray  # loglog(t) * (1 - F(t)), logged not tested

    @property
    def n_rep(self) -> int:
        return self.y.shape[0]

    def summary(self) -> dict:
        final_r = self.r[:, -1]
        return {
            "law": self.law_spec,
            "j": self.j,
            "seed": self.master_seed,
            "n_rep": self.n_rep,
            "preset": self.preset,
            "t_min": float(self.scan_times[0]),
            "t_max": float(self.scan_times[-1]),
            "fingerprint": self.fingerprint,
            "envelope_max_final": float(self.envelope_max[-1]),
            "envelope_min_final": float(self.envelope_min[-1]),
            "median_running_max_final": float(np.median(self.running_max[:, -1])),
            "median_running_min_final": float(np.median(self.running_min[:, -1])),
            "median_abs_r_final": float(np.median(np.abs(final_r))),
            "sign_fraction_final": float(np.mean(final_r > 0.0)),
            "tail_diagnostic_final": float(self.tail_diagnostic[-1]),
        }


def _lil_one(args) -> np.ndarray:
    law_spec, j, times, t_max, seed, r, cap = args
    from .branching import simulate_generations

    law = parse_law(law_spec)
    run = simulate_generations(law, t_max, j, times, Stream(seed).child(r), cap)
    return run.counts[j - 1].values


def _scan_fingerprint(law_spec: str, j: int, seed: int, n_rep: int, preset: str, ratio: float, t_min: float, t_max: float) -> str:
    text = (
        f"law={law_spec};j={j};seed={seed};reps={n_rep};"
        f"preset={preset};ratio={ratio!r};t_min={t_min!r};t_max={t_max!r}"
    )
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def lil_scan(
    law: JointStepLaw,
    j: int,
    n_rep: int,
    t_max: float,
    *,
    t_min: float = DEFAULT_T_MIN,
    preset: str = "geometric",
    ratio: float = DEFAULT_RATIO,
    seed: int = 0,
    table: RenewalTable | None = None,
    cap: int = DEFAULT_CAP,
    workers: int = 1,
) -> LilScanResult:
    """Track normalised centred counts along a scan grid, per replicate.

    Centering is mu^{-1} integral_0^t F for j = 1 and the tabulated mean
    V_j for j >= 2 (a table is built on demand with a node budget of 5e4).
    Running extremes are monotone by construction; their envelope over
    replicates estimates the limit-point band.
    """
    if law.degenerate:
        raise DegenerateLawError("fluctuation scan needs sigma^2 > 0")
    if n_rep < 1:
        raise InvalidParameterError("need at least one replicate")
    if j < 1:
        raise InvalidParameterError("generation index must be >= 1")
    times = scan_grid(t_min, t_max, preset, ratio)

    if j == 1:
        centering = np.array(
            [law.eta_cdf_integral(t) / law.mu for t in times], dtype=float
        )
    else:
        if table is None:
            h = max(0.01, t_max / 50_000.0)
            table = renewal_function(law, h, t_max + h)
            vj_table(v1_table(table, law), j)
        elif j not in table.v_vals:
            vj_table(table, j)
        centering = table.v_grid_function(j).interp(times)

    normalizer = lil_normalizer(j, law.mu, law.sigma2, times)
    rows = map_indexed(
        _lil_one,
        [(law.spec_string, j, times, float(times[-1]), seed, r, cap) for r in range(n_rep)],
        workers,
    )
    y = np.vstack(rows)
    r_mat = (y - centering) / normalizer
    running_max = np.maximum.accumulate(r_mat, axis=1)
    running_min = np.minimum.accumulate(r_mat, axis=1)
    return LilScanResult(
        law_spec=law.spec_string,
        j=j,
        master_seed=seed,
        preset=preset,
        scan_times=times,
        y=y,
        centering=centering,
        normalizer=normalizer,
        r=r_mat,
        running_max=running_max,
        running_min=running_min,
        envelope_max=running_max.max(axis=0),
        envelope_min=running_min.min(axis=0),
        fingerprint=_scan_fingerprint(
            law.spec_string, j, seed, n_rep, preset, ratio, float(times[0]), float(times[-1])
        ),
        tail_diagnostic=np.log(np.log(times)) * (1.0 - np.asarray(law.eta_cdf(times))),
    )


def dump_scan_csv(result: LilScanResult, fname: str):
    """One row per (replicate, scan time); all reals at 17 significant digits."""
    with open(fname, "w", newline="") as fh:
        fh.write("replicate,t,Y_j,V_j,normalizer,R_j,running_max,running_min\n")
        for rep in range(result.n_rep):
            for i, t in enumerate(result.scan_times):
                fh.write(
                    "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n"
                    % (
                        rep,
                        t,
                        result.y[rep, i],
                        result.centering[i],
                        result.normalizer[i],
                        result.r[rep, i],
                        result.running_max[rep, i],
                        result.running_min[rep, i],
                    )
                )


# -- variance growth ----------------------------------------------------------


@dataclass
class VarianceScanResult:
    law_spec: str
    k: int
    t_points: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    slope: float
    n_rep: int
    seed: int

    def within(self, half_width: float = 0.35) -> bool:
        return abs(self.slope - (2 * self.k - 1)) <= half_width


def _var_one(args) -> float:
    law_spec, k, t, seed, ti, r, cap = args
    from .branching import simulate_generations

    law = parse_law(law_spec)
    grid = np.array([t])
    run = simulate_generations(law, t, k, grid, Stream(seed).child(ti, r), cap)
    return float(run.counts[k - 1].values[0])


def variance_scan(
    law: JointStepLaw,
    k: int,
    t_points,
    n_rep: int,
    seed: int,
    cap: int = DEFAULT_CAP,
    workers: int = 1,
) -> VarianceScanResult:
    """Least-squares growth exponent of Var Y_k(t) against t.

    The fitted slope of log variance on log t estimates 2k - 1.
    """
    if law.degenerate:
        raise DegenerateLawError("variance growth needs sigma^2 > 0")
    tp = np.asarray(t_points, dtype=float)
    if tp.ndim != 1 or tp.size < 2 or np.any(np.diff(tp) <= 0):
        raise InvalidParameterError("t_points must be ascending with >= 2 entries")
    if n_rep < 2:
        raise InvalidParameterError("need at least 2 replicates")
    means = np.empty(tp.size)
    variances = np.empty(tp.size)
    for ti, t in enumerate(tp):
        vals = np.asarray(
            map_indexed(
                _var_one,
                [(law.spec_string, k, float(t), seed, ti, r, cap) for r in range(n_rep)],
                workers,
            )
        )
        means[ti] = vals.mean()
        variances[ti] = vals.var(ddof=1)
    slope = float(np.polyfit(np.log(tp), np.log(variances), 1)[0])
    return VarianceScanResult(
        law_spec=law.spec_string,
        k=k,
        t_points=tp,
        means=means,
        variances=variances,
        slope=slope,
        n_rep=n_rep,
        seed=seed,
    )


# -- central limit check -------------------------------------------------------


@dataclass
class CltCheckResult:
    law_spec: str
    t: float
    n_rep: int
    ks_stat: float
    ks_threshold: float
    mean_norm: float
    mean_tolerance: float

    @property
    def passed(self) -> bool:
        return self.ks_stat < self.ks_threshold

    @property
    def mean_ok(self) -> bool:
        return abs(self.mean_norm) < self.mean_tolerance


def _clt_one(args) -> float:
    law_spec, t, seed, r = args
    law = parse_law(law_spec)
    path = simulate_path(law, t, Stream(seed).child(r))
    return float(path.n_steps)  # number of step sums within t, origin included


def ks_statistic(sample: np.ndarray) -> float:
    """One-sample Kolmogorov-Smirnov distance to the standard normal."""
    z = np.sort(np.asarray(sample, dtype=float))
    n = z.shape[0]
    cdf = ndtr(z)
    i = np.arange(1, n + 1)
    return float(np.max(np.maximum(i / n - cdf, cdf - (i - 1) / n)))


def clt_check(
    law: JointStepLaw,
    t: float,
    n_rep: int,
    seed: int,
    table: RenewalTable | None = None,
    h: float = 0.01,
    workers: int = 1,
) -> CltCheckResult:
    """Distribution check of walk counts against their normal limit.

    Normalises nu(t) by the tabulated mean U(t) and the asymptotic standard
    deviation sqrt(sigma^2 mu^-3 t), then compares the empirical CDF to the
    standard normal at the 1% Kolmogorov-Smirnov level.
    """
    if n_rep < 100:
        raise InvalidParameterError("distribution check needs n_rep >= 100")
    if law.degenerate:
        raise DegenerateLawError("central limit check needs sigma^2 > 0")
    if table is None:
        table = renewal_function(law, h, t + h)
    u_t = table.u_at(t)  # raises TableRangeError if the table is too short
    counts = np.asarray(
        map_indexed(
            _clt_one,
            [(law.spec_string, float(t), seed, r) for r in range(n_rep)],
            workers,
        )
    )
    scale = math.sqrt(law.sigma2 * law.mu ** (-3) * t)
    z = (counts - u_t) / scale
    return CltCheckResult(
        law_spec=law.spec_string,
        t=float(t),
        n_rep=n_rep,
        ks_stat=ks_statistic(z),
        ks_threshold=KS_COEFF / math.sqrt(n_rep),
        mean_norm=float(z.mean()),
        mean_tolerance=5.0 / math.sqrt(n_rep),
    )


# -- exponential fluctuation statistic ------------------------------------------


@dataclass
class SupermartingaleCheckResult:
    law_spec: str
    t: float
    u: float
    n_rep: int
    mean: float
    se: float
    n_flagged: int

    @property
    def passed(self) -> bool:
        return self.mean <= 1.0 + 3.0 * self.se


def _sm_one(args) -> tuple[float, float]:
    law_spec, t, seed, r = args
    law = parse_law(law_spec)
    path = simulate_path(law, t, Stream(seed).child(r))
    idx = int(np.searchsorted(path.s, t, side="right"))
    mark = float(np.sum(law.eta_cdf(t - path.s[:idx])))
    y = float(np.count_nonzero(path.t_birth <= t))
    return y - mark, idx - mark  # martingale part, tail sum


def supermartingale_sweep(
    law: JointStepLaw,
    t: float,
    us,
    n_rep: int,
    seed: int,
    workers: int = 1,
) -> list[SupermartingaleCheckResult]:
    """Unit-mean bound check for several exponents over shared trajectories.

    Identical to running supermartingale_check per u (each u sees the same
    per-replicate sub-streams); sharing the trajectories just avoids
    re-simulating them.  Overflowed replicates are excluded from the mean
    and counted in n_flagged.
    """
    us = [float(u) for u in us]
    if any(u == 0.0 for u in us):
        raise InvalidParameterError("u must be nonzero")
    if n_rep < 2:
        raise InvalidParameterError("need at least 2 replicates")
    pairs = map_indexed(
        _sm_one,
        [(law.spec_string, float(t), seed, r) for r in range(n_rep)],
        workers,
    )
    xs = np.array([p[0] for p in pairs])
    tails = np.array([p[1] for p in pairs])
    out = []
    for u in us:
        with np.errstate(over="ignore"):
            stats = np.exp(u * xs - 0.5 * u * u * math.exp(abs(u)) * tails)
        finite = np.isfinite(stats)
        kept = stats[finite]
        mean = float(kept.mean())
        se = float(kept.std(ddof=1) / math.sqrt(kept.size))
        out.append(
            SupermartingaleCheckResult(
                law_spec=law.spec_string,
                t=float(t),
                u=u,
                n_rep=n_rep,
                mean=mean,
                se=se,
                n_flagged=int(n_rep - kept.size),
            )
        )
    return out


def supermartingale_check(
    law: JointStepLaw,
    t: float,
    u: float,
    n_rep: int,
    seed: int,
    workers: int = 1,
) -> SupermartingaleCheckResult:
    """Monte Carlo mean of the exponential fluctuation statistic vs its bound."""
    return supermartingale_sweep(law, t, [u], n_rep, seed, workers)[0]


# -- decay checks ---------------------------------------------------------------


@dataclass
class TailSumCheckResult:
    law_spec: str
    t_points: np.ndarray
    medians: np.ndarray
    eta_mean_finite: bool

    @property
    def nonincreasing(self) -> bool:
        return bool(np.all(np.diff(self.medians) <= 0.0))

    @property
    def halved(self) -> bool:
        return bool(self.medians[-1] < 0.5 * self.medians[0])

    @property
    def passed(self) -> bool:
        if not self.nonincreasing:
            return False
        return self.halved if self.eta_mean_finite else True


def _tail_one(args) -> list[float]:
    law_spec, tpts, seed, r = args
    from .paths import tail_sum

    law = parse_law(law_spec)
    path = simulate_path(law, float(tpts[-1]), Stream(seed).child(r))
    return [tail_sum(path, float(t), law) / float(t) for t in tpts]


def tail_sum_check(
    law: JointStepLaw,
    t_points,
    n_rep: int,
    seed: int,
    workers: int = 1,
) -> TailSumCheckResult:
    """Median decay of normalised perturbation tail sums along t_points.

    Medians of tail_sum(t)/t must be nonincreasing; laws with a finite-mean
    perturbation must additionally at least halve from first to last point.
    """
    tp = np.asarray(t_points, dtype=float)
    if tp.ndim != 1 or tp.size < 2 or np.any(np.diff(tp) <= 0):
        raise InvalidParameterError("t_points must be ascending with >= 2 entries")
    if n_rep < 2:
        raise InvalidParameterError("need at least 2 replicates")
    rows = np.asarray(
        map_indexed(
            _tail_one,
            [(law.spec_string, tp, seed, r) for r in range(n_rep)],
            workers,
        )
    )
    return TailSumCheckResult(
        law_spec=law.spec_string,
        t_points=tp,
        medians=np.median(rows, axis=0),
        eta_mean_finite=law.eta_mean_finite,
    )


@dataclass
class NuIncrementCheckResult:
    law_spec: str
    t_points: np.ndarray
    b: float
    c: float
    medians: np.ndarray

    @property
    def passed(self) -> bool:
        return bool(np.all(np.diff(self.medians) <= 0.0))


def _nui_one(args) -> list[float]:
    law_spec, tpts, b, c, seed, r = args
    law = parse_law(law_spec)
    path = simulate_path(law, float(tpts[-1]) + b, Stream(seed).child(r))
    out = []
    for t in tpts:
        n2 = int(np.searchsorted(path.s, t + b, side="right"))
        n1 = int(np.searchsorted(path.s, t, side="right"))
        out.append((n2 - n1) / t ** c)
    return out


def nu_increment_check(
    law: JointStepLaw,
    t_points,
    b: float,
    c: float,
    n_rep: int,
    seed: int,
    workers: int = 1,
) -> NuIncrementCheckResult:
    """Median of (nu(t+b) - nu(t)) / t^c along t_points; must not increase.

    Fixed-width count increments stay O(1) while t^c grows, so the
    normalised medians decay for any b > 0 and c > 0.
    """
    tp = np.asarray(t_points, dtype=float)
    if tp.ndim != 1 or tp.size < 2 or np.any(np.diff(tp) <= 0):
        raise InvalidParameterError("t_points must be ascending with >= 2 entries")
    if b <= 0.0 or c <= 0.0:
        raise InvalidParameterError("need b > 0 and c > 0")
    rows = np.asarray(
        map_indexed(
            _nui_one,
            [(law.spec_string, tp, float(b), float(c), seed, r) for r in range(n_rep)],
            workers,
        )
    )
    return NuIncrementCheckResult(
        law_spec=law.spec_string,
        t_points=tp,
        b=float(b),
        c=float(c),
        medians=np.median(rows, axis=0),
    )
