"""Command-line interface.

Subcommands::

    iterlil simulate   dump trajectory / generation-count CSVs
    iterlil renewal    tabulate the renewal function and convolution powers
    iterlil lil-scan   scaled-fluctuation scan along a sparse time grid
    iterlil var-scan   log-log growth-rate fit of generation-count variance
    iterlil checks     distributional sanity checks (exit 1 on failure)
    iterlil all        full acceptance battery

Exit codes: 0 success / checks passed, 1 a check failed, 2 bad configuration.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import branching, harness, renewal
from .config import McConfig, fingerprint, parse_config
from .errors import IterlilError
from .laws import parse_law
from .paths import dump_path_csv, simulate_path
from .rng import Stream

__all__ = ["main", "build_parser"]

_FMT = "%.17g"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="key = value config file")
    common.add_argument("--law", help="law spec, e.g. exp_indep(1.0,1.0)")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--reps", type=int, help="number of replicates")
    common.add_argument("--horizon", type=float, help="largest time queried")
    common.add_argument("--grid", help="scan grid preset: geometric[:ratio] | proof_grid")
    common.add_argument("--j", type=int, help="generation depth")
    common.add_argument("--step", type=float, help="renewal table step size")
    common.add_argument("--out", help="output directory (default $ITERLIL_OUT or ./out)")
    common.add_argument("--workers", type=int, help="process pool size")

    parser = argparse.ArgumentParser(prog="iterlil", description=__doc__.split("\n", 1)[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common])
    sub.add_parser("renewal", parents=[common])
    sub.add_parser("lil-scan", parents=[common])
    p_var = sub.add_parser("var-scan", parents=[common])
    p_var.add_argument("--t-points", help="comma-separated fit times")
    p_checks = sub.add_parser("checks", parents=[common])
    p_checks.add_argument("--u", help="comma-separated tilt parameters", default="0.05,-0.05,0.2,-0.2")
    sub.add_parser("all", parents=[common])
    return parser


def _config_from_args(args: argparse.Namespace) -> McConfig:
    overrides = {
        key: getattr(args, key)
        for key in ("law", "seed", "reps", "horizon", "grid", "j", "step", "out", "workers")
    }
    return parse_config(args.config, overrides)


def _outdir(cfg: McConfig) -> str:
    path = cfg.output_dir
    os.makedirs(path, exist_ok=True)
    return path


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_simulate(cfg: McConfig) -> int:
    law = parse_law(cfg.law)
    out = _outdir(cfg)
    fp = fingerprint(cfg)
    if cfg.j == 1:
        for rep in range(cfg.reps):
            path = simulate_path(law, cfg.horizon, Stream(cfg.seed).child(rep))
            dump_path_csv(path, os.path.join(out, f"path_{fp}_r{rep:04d}.csv"))
        print(f"simulate: wrote {cfg.reps} trajectory file(s) to {out} [{fp}]")
        return 0
    grid = np.linspace(cfg.horizon / 20.0, cfg.horizon, 20)
    counts = np.empty((cfg.reps, cfg.j, grid.size))
    for rep in range(cfg.reps):
        run = branching.simulate_generations(law, cfg.horizon, cfg.j, grid, Stream(cfg.seed).child(rep))
        for gen in range(cfg.j):
            counts[rep, gen] = run.counts[gen].values
    name = os.path.join(out, f"counts_{fp}.csv")
    with open(name, "w") as fh:
        fh.write("replicate,t," + ",".join(f"Y_{g + 1}" for g in range(cfg.j)) + "\n")
        for rep in range(cfg.reps):
            for ti, t in enumerate(grid):
                row = ",".join(_FMT % counts[rep, gen, ti] for gen in range(cfg.j))
                fh.write(f"{rep},{_FMT % t},{row}\n")
    agg = os.path.join(out, f"counts_agg_{fp}.csv")
    with open(agg, "w") as fh:
        head = [f"mean_Y_{g + 1}" for g in range(cfg.j)] + [f"var_Y_{g + 1}" for g in range(cfg.j)]
        fh.write("t," + ",".join(head) + "\n")
        means = counts.mean(axis=0)
        variances = counts.var(axis=0, ddof=1) if cfg.reps > 1 else np.zeros_like(means)
        for ti, t in enumerate(grid):
            cells = [_FMT % means[gen, ti] for gen in range(cfg.j)]
            cells += [_FMT % variances[gen, ti] for gen in range(cfg.j)]
            fh.write(f"{_FMT % t}," + ",".join(cells) + "\n")
    print(f"simulate: wrote {name} and {agg}")
    return 0


def _cmd_renewal(cfg: McConfig) -> int:
    law = parse_law(cfg.law)
    table = renewal.renewal_function(law, h=cfg.step, t_max=cfg.horizon)
    renewal.v1_table(table, law)
    for j in range(2, cfg.j + 1):
        renewal.vj_table(table, j)
    out = _outdir(cfg)
    name = os.path.join(out, f"renewal_{fingerprint(cfg)}.csv")
    renewal.export_table_csv(table, name)
    tail = table.u_at(cfg.horizon)
    print(f"renewal: U({cfg.horizon:g}) = {tail:.6f}; table -> {name}")
    return 0


def _cmd_lil_scan(cfg: McConfig) -> int:
    law = parse_law(cfg.law)
    res = harness.lil_scan(
        law,
        cfg.j,
        cfg.reps,
        cfg.horizon,
        preset=cfg.grid_preset,
        ratio=cfg.grid_ratio,
        seed=cfg.seed,
        workers=cfg.workers,
    )
    out = _outdir(cfg)
    fp = fingerprint(cfg)
    csv_name = os.path.join(out, f"lil_scan_{fp}.csv")
    harness.dump_scan_csv(res, csv_name)
    summary = res.summary()
    summary["config_fingerprint"] = fp
    _write_json(os.path.join(out, f"lil_summary_{fp}.json"), summary)
    print(
        "lil-scan: envelope [{:+.4f}, {:+.4f}] over {} replicate(s); {}".format(
            summary["envelope_min_final"], summary["envelope_max_final"], cfg.reps, csv_name
        )
    )
    return 0


def _cmd_var_scan(cfg: McConfig, t_points: str | None) -> int:
    law = parse_law(cfg.law)
    if t_points:
        times = tuple(float(tok) for tok in t_points.split(","))
    else:
        times = (25.0, 50.0, 100.0, 200.0, 400.0)
    res = harness.variance_scan(
        law, cfg.j, times, n_rep=cfg.reps, seed=cfg.seed, workers=cfg.workers
    )
    out = _outdir(cfg)
    fp = fingerprint(cfg)
    payload = {
        "law": cfg.law,
        "k": cfg.j,
        "times": list(times),
        "variances": [float(v) for v in res.variances],
        "slope": res.slope,
        "expected_slope": 2 * cfg.j - 1,
        "within_band": res.within(),
        "config_fingerprint": fp,
    }
    _write_json(os.path.join(out, f"var_scan_{fp}.json"), payload)
    print(f"var-scan: fitted slope {res.slope:.3f} (expect {2 * cfg.j - 1}) -> {'ok' if res.within() else 'OUT OF BAND'}")
    return 0 if res.within() else 1


def _cmd_checks(cfg: McConfig, u_arg: str) -> int:
    law = parse_law(cfg.law)
    us = tuple(float(tok) for tok in u_arg.split(","))
    results: dict = {}
    ok = True

    t_sm = min(100.0, cfg.horizon)
    sweep = harness.supermartingale_sweep(law, t_sm, us, n_rep=max(cfg.reps, 200), seed=cfg.seed, workers=cfg.workers)
    results["supermartingale"] = [
        {"u": r.u, "mean": r.mean, "se": r.se, "passed": r.passed, "n_flagged": r.n_flagged}
        for r in sweep
    ]
    ok &= all(r.passed for r in sweep)

    t_points = tuple(cfg.horizon * f for f in (0.01, 0.1, 1.0))
    tail = harness.tail_sum_check(law, t_points, n_rep=max(cfg.reps, 100), seed=cfg.seed, workers=cfg.workers)
    results["tail_sum"] = {
        "times": [float(t) for t in tail.t_points],
        "medians": [float(m) for m in tail.medians],
        "nonincreasing": tail.nonincreasing,
        "halved": tail.halved,
        "passed": tail.passed,
    }
    ok &= tail.passed

    nui = harness.nu_increment_check(
        law, t_points, b=1.0, c=0.5, n_rep=max(cfg.reps, 100), seed=cfg.seed, workers=cfg.workers
    )
    results["nu_increments"] = {
        "times": [float(t) for t in nui.t_points],
        "medians": [float(m) for m in nui.medians],
        "passed": nui.passed,
    }
    ok &= nui.passed

    clt = harness.clt_check(law, min(cfg.horizon, 10_000.0), n_rep=max(cfg.reps, 200), seed=cfg.seed, workers=cfg.workers)
    results["clt"] = {
        "t": clt.t,
        "ks_stat": clt.ks_stat,
        "ks_threshold": clt.ks_threshold,
        "mean_norm": clt.mean_norm,
        "passed": clt.passed and clt.mean_ok,
    }
    ok &= clt.passed and clt.mean_ok

    table = renewal.renewal_function(law, h=cfg.step, t_max=min(cfg.horizon, 50.0))
    renewal.vj_table(table, 2)
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    sub_ok = True
    for _ in range(100):
        k = int(rng.integers(1, 3))
        x, hh = rng.uniform(0.0, table.t_max / 2.0, size=2)
        chk = renewal.check_subadditivity(table, k, x, hh)
        sub_ok &= chk.passed
        worst = min(worst, chk.residual)
    results["subadditivity"] = {"pairs": 100, "worst_residual": worst, "passed": sub_ok}
    ok &= sub_ok

    out = _outdir(cfg)
    fp = fingerprint(cfg)
    results["config_fingerprint"] = fp
    results["passed"] = bool(ok)
    _write_json(os.path.join(out, f"checks_{fp}.json"), results)
    for name in ("supermartingale", "tail_sum", "nu_increments", "clt", "subadditivity"):
        entry = results[name]
        passed = all(r["passed"] for r in entry) if isinstance(entry, list) else entry["passed"]
        print(f"check {name:16s} {'PASS' if passed else 'FAIL'}")
    return 0 if ok else 1


def _cmd_all(cfg: McConfig) -> int:
    from .acceptance import run_all

    results = run_all(verbose=True)
    out = _outdir(cfg)
    fp = fingerprint(cfg)
    payload = {
        "results": [
            {"name": r.name, "passed": r.passed, "detail": r.detail, "seconds": r.seconds}
            for r in results
        ],
        "passed": all(r.passed for r in results),
        "config_fingerprint": fp,
    }
    _write_json(os.path.join(out, f"acceptance_{fp}.json"), payload)
    return 0 if payload["passed"] else 1


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.command == "simulate":
            return _cmd_simulate(cfg)
        if args.command == "renewal":
            return _cmd_renewal(cfg)
        if args.command == "lil-scan":
            return _cmd_lil_scan(cfg)
        if args.command == "var-scan":
            return _cmd_var_scan(cfg, args.t_points)
        if args.command == "checks":
            return _cmd_checks(cfg, args.u)
        return _cmd_all(cfg)
    except IterlilError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
