"""End-to-end acceptance battery: ten numbered checks with frozen seeds.

Each criterion function is self-contained, returns a CriterionResult, and
pins its own tolerances.  Statistical bands were calibrated by pilot runs
and then frozen together with the master seed; deterministic checks use
closed forms or exact enumeration.  `run_all` prints one PASS/FAIL line
per criterion and is what `iterlil all` executes.
"""

from __future__ import annotations

import filecmp
import math
import os
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass

import numpy as np

from . import harness, renewal
from .branching import simulate_generations
from .laws import make_law
from .rng import Stream

__all__ = ["CriterionResult", "run_all", "CRITERIA", "MASTER_SEED"]

MASTER_SEED = 20260814

# Pilot-frozen statistical bands (seeds above, measured 2026-08):
# j=1 median running extremes landed at +0.92 / -0.80; j=2 median |R_2|
# at 0.28.  Bounds leave headroom against seed-free redraws while still
# catching scale errors of 2x.
ENVELOPE_BAND = (0.55, 1.45)
MEDIAN_R2_BOUND = 0.8


@dataclass
class CriterionResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _result(name: str, passed: bool, detail: str, t0: float) -> CriterionResult:
    return CriterionResult(name, bool(passed), detail, round(time.time() - t0, 2))


def criterion_01_renewal_closed_form() -> CriterionResult:
    """Tabulated mean count vs the exact 1 + t closed form."""
    t0 = time.time()
    law = make_law("exp_indep", (1.0, 1.0))
    table = renewal.renewal_function(law, 0.01, 50.0)
    err = table.u_at(50.0) - 51.0
    return _result(
        "renewal-closed-form", abs(err) < 0.05, f"|U(50) - 51| = {abs(err):.2e} (< 0.05)", t0
    )


def criterion_02_mean_count_growth() -> CriterionResult:
    """Convolution-power tables track t^j / (j! mu^j)."""
    t0 = time.time()
    law_e = make_law("eta_eq_xi", (1.0,))
    tab_e = renewal.renewal_function(law_e, 0.01, 50.0)
    renewal.vj_table(tab_e, 2)
    rel = abs(tab_e.v_at(2, 50.0) / (50.0**2 / 2.0) - 1.0)

    law_i = make_law("exp_indep", (1.0, 1.0))
    tab_i = renewal.renewal_function(law_i, 0.01, 200.0)
    renewal.vj_table(tab_i, 3)
    ratios = {
        j: abs(tab_i.v_at(j, 200.0) * math.factorial(j) / 200.0**j - 1.0) for j in (2, 3)
    }
    ok = rel < 1e-2 and all(r < 0.05 for r in ratios.values())
    detail = (
        f"shared-step rel err {rel:.2e} (< 1e-2); "
        f"independent-exp |ratio-1|: j=2 {ratios[2]:.2e}, j=3 {ratios[3]:.2e} (< 0.05)"
    )
    return _result("mean-count-growth", ok, detail, t0)


def criterion_03_oracle_equivalence() -> CriterionResult:
    """Monte Carlo generation means vs numeric tables; exact tiny case."""
    t0 = time.time()
    law = make_law("exp_indep", (1.0, 1.0))
    table = renewal.renewal_function(law, 0.01, 51.0)
    renewal.vj_table(table, 2)
    grid = np.linspace(5.0, 50.0, 10)
    truth = np.array([table.v_at(2, t) for t in grid])
    mc = renewal.vj_monte_carlo(law, 2, grid, n_rep=10_000, seed=MASTER_SEED)
    z = np.abs(mc.mean - truth) / mc.se
    within = bool(np.all(z <= 3.0))

    det = make_law("det", (1.0, 0.5))
    run = simulate_generations(det, 3.0, 2, np.array([3.0]), Stream(MASTER_SEED))
    exact = run.counts[1].values[0]
    ok = within and exact == 6.0
    detail = f"max |z| = {np.max(z):.2f} over 10 grid points (<= 3); det count = {exact:g} (== 6)"
    return _result("oracle-equivalence", ok, detail, t0)


def criterion_04_increment_bound() -> CriterionResult:
    """Table increments obey the renewal-bound inequality everywhere sampled."""
    t0 = time.time()
    law = make_law("exp_indep", (1.0, 1.0))
    table = renewal.renewal_function(law, 0.01, 500.0)
    renewal.vj_table(table, 2)
    rng = np.random.default_rng(MASTER_SEED)
    worst = math.inf
    failures = 0
    for _ in range(1000):
        k = int(rng.integers(1, 3))
        x, hh = rng.uniform(0.0, 250.0, size=2)
        chk = renewal.check_subadditivity(table, k, x, hh)
        worst = min(worst, chk.residual)
        failures += 0 if chk.passed else 1
    detail = f"1000 random (x, h) pairs, k in {{1,2}}: {failures} failures, worst residual {worst:+.2e}"
    return _result("increment-bound", failures == 0, detail, t0)


def criterion_05_variance_growth() -> CriterionResult:
    """Log-log variance slope matches 2k - 1 within +/- 0.35."""
    t0 = time.time()
    tp = (25.0, 50.0, 100.0, 200.0, 400.0)
    vs1 = harness.variance_scan(
        make_law("exp_indep", (1.0, 1.0)), 1, tp, n_rep=10_000, seed=MASTER_SEED
    )
    vs2 = harness.variance_scan(
        make_law("eta_eq_xi", (1.0,)), 2, tp, n_rep=10_000, seed=MASTER_SEED
    )
    ok = vs1.within(0.35) and vs2.within(0.35)
    detail = f"slope k=1: {vs1.slope:.3f} (want 1 +/- 0.35); k=2: {vs2.slope:.3f} (want 3 +/- 0.35)"
    return _result("variance-growth", ok, detail, t0)


def criterion_06_exponential_bound() -> CriterionResult:
    """Exponential-statistic means stay at or below one."""
    t0 = time.time()
    us = (0.05, -0.05, 0.2, -0.2)
    pieces = []
    ok = True
    for fam, params in (("exp_indep", (1.0, 1.0)), ("slow_tail", (1.0,))):
        law = make_law(fam, params)
        sweep = harness.supermartingale_sweep(law, 100.0, us, n_rep=100_000, seed=MASTER_SEED)
        ok &= all(r.passed for r in sweep)
        top = max(r.mean - (1.0 + 3.0 * r.se) for r in sweep)
        pieces.append(f"{fam}: max(mean - 1 - 3se) = {top:+.1e}")
    return _result("exponential-bound", ok, "; ".join(pieces) + " (<= 0)", t0)


def criterion_07_normal_approximation() -> CriterionResult:
    """Walk counts at large t pass a 1% Kolmogorov-Smirnov normality gate."""
    t0 = time.time()
    law = make_law("exp_indep", (1.0, 1.0))
    res = harness.clt_check(law, 10_000.0, n_rep=2000, seed=MASTER_SEED)
    ok = res.passed and res.mean_ok
    detail = f"KS = {res.ks_stat:.4f} (< {res.ks_threshold:.4f}); mean of normalised sample = {res.mean_norm:+.3f}"
    return _result("normal-approximation", ok, detail, t0)


def criterion_08_fluctuation_envelope() -> CriterionResult:
    """Scaled running extremes sit in the pilot-frozen bands around +/- 1."""
    t0 = time.time()
    law1 = make_law("exp_indep", (1.0, 1.0))
    res1 = harness.lil_scan(law1, 1, 50, 1.0e6, seed=MASTER_SEED)
    med_max = float(np.median(res1.running_max[:, -1]))
    med_min = float(np.median(res1.running_min[:, -1]))
    lo, hi = ENVELOPE_BAND
    ok1 = lo <= med_max <= hi and -hi <= med_min <= -lo

    law2 = make_law("eta_eq_xi", (1.0,))
    res2 = harness.lil_scan(law2, 2, 30, 1.0e3, seed=MASTER_SEED)
    med_r2 = float(np.median(np.abs(res2.r[:, -1])))
    monotone = bool(
        np.all(np.diff(res2.running_max, axis=1) >= 0.0)
        and np.all(np.diff(res2.running_min, axis=1) <= 0.0)
    )
    ok2 = med_r2 < MEDIAN_R2_BOUND and monotone
    detail = (
        f"depth 1: median running max/min {med_max:+.3f}/{med_min:+.3f} (bands +/-[{lo}, {hi}]); "
        f"depth 2: median |R| {med_r2:.3f} (< {MEDIAN_R2_BOUND}), extremes monotone: {monotone}"
    )
    return _result("fluctuation-envelope", ok1 and ok2, detail, t0)


def criterion_09_determinism() -> CriterionResult:
    """Identical artifacts from 1-worker and 8-worker reruns."""
    t0 = time.time()
    base = [
        sys.executable,
        "-m",
        "iterlil.cli",
        "lil-scan",
        "--law",
        "exp_indep(1.0,1.0)",
        "--seed",
        str(MASTER_SEED),
        "--reps",
        "8",
        "--horizon",
        "1000",
        "--j",
        "1",
    ]
    with tempfile.TemporaryDirectory() as tmp:
        dirs = {w: os.path.join(tmp, f"w{w}") for w in (1, 8)}
        for w, out in dirs.items():
            proc = subprocess.run(
                base + ["--workers", str(w), "--out", out], capture_output=True, text=True
            )
            if proc.returncode != 0:
                return _result(
                    "determinism", False, f"workers={w} exited {proc.returncode}: {proc.stderr.strip()}", t0
                )
        names = sorted(os.listdir(dirs[1]))
        if names != sorted(os.listdir(dirs[8])):
            return _result("determinism", False, f"artifact name sets differ: {names}", t0)
        same = all(
            filecmp.cmp(os.path.join(dirs[1], n), os.path.join(dirs[8], n), shallow=False)
            for n in names
        )
        detail = f"{len(names)} artifact(s) byte-identical across workers 1 vs 8: {same}"
        return _result("determinism", same, detail, t0)


def criterion_10_decay_medians() -> CriterionResult:
    """Tail-sum and count-increment medians decay across three decades."""
    t0 = time.time()
    tp = (1.0e3, 1.0e4, 1.0e5)
    pieces = []
    ok = True
    for fam, params in (("exp_indep", (1.0, 1.0)), ("slow_tail", (1.0,))):
        law = make_law(fam, params)
        ts = harness.tail_sum_check(law, tp, n_rep=100, seed=MASTER_SEED)
        ok &= ts.passed
        pieces.append(f"tail {fam}: {' -> '.join(f'{m:.1e}' for m in ts.medians)}")
    ni = harness.nu_increment_check(
        make_law("exp_indep", (1.0, 1.0)), tp, b=1.0, c=0.5, n_rep=100, seed=MASTER_SEED
    )
    ok &= ni.passed
    pieces.append(f"count-increments: {' -> '.join(f'{m:.1e}' for m in ni.medians)}")
    return _result("decay-medians", ok, "; ".join(pieces), t0)


CRITERIA = (
    criterion_01_renewal_closed_form,
    criterion_02_mean_count_growth,
    criterion_03_oracle_equivalence,
    criterion_04_increment_bound,
    criterion_05_variance_growth,
    criterion_06_exponential_bound,
    criterion_07_normal_approximation,
    criterion_08_fluctuation_envelope,
    criterion_09_determinism,
    criterion_10_decay_medians,
)


def run_all(verbose: bool = False) -> list[CriterionResult]:
    results = []
    for i, fn in enumerate(CRITERIA, start=1):
        res = fn()
        results.append(res)
        if verbose:
            status = "PASS" if res.passed else "FAIL"
            print(f"[{i:2d}/10] {status} {res.name:24s} {res.seconds:7.1f}s  {res.detail}")
    if verbose:
        n_ok = sum(r.passed for r in results)
        print(f"{n_ok}/10 criteria passed")
    return results


if __name__ == "__main__":
    sys.exit(0 if all(r.passed for r in run_all(verbose=True)) else 1)
