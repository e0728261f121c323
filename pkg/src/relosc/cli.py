"""Command-line driver: run, scan, oracle, compare, fit.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime error,
3 comparison failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import warnings

import numpy as np

from . import __version__
from .config import (ConfigError, canonical_config_text, config_hash,
                     parse_config, with_overrides)
from .estimators import MeasurementObserver
from .fits import fit_constant, fit_exponential, fit_gaussian, fit_power
from .model import estimated_gap
from .oracles import ConvergenceError, oracle_report
from .runio import (read_json, read_scan_csv, read_xye_csv, write_correlation_csv,
                    write_histogram_csv, write_json, write_scan_csv,
                    write_series_csv)
from .sampler import (TARGET_ACCEPTANCE, WIDE_FRACTION, WIDE_SCALE,
                      run_chain)

BETA_GAP_MINIMUM = 5.0

# names shared between run summaries and oracle reports
COMPARE_FIELDS = (("kinetic", "kinetic"), ("potential", "potential"),
                  ("energy", "ground_energy"), ("q2", "q_squared"))


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _load_config(path, seed=None, out_dir=None):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from None
    cfg = parse_config(text)
    return with_overrides(cfg, seed=seed, out_dir=out_dir)


def _warn_beta_adequacy(params):
    gap = estimated_gap(params)
    if gap > 0.0 and params.beta * gap < BETA_GAP_MINIMUM:
        warnings.warn(
            f"beta*gap = {params.beta * gap:.2f} < {BETA_GAP_MINIMUM}: "
            "ground-state formulas assume ground-state dominance; "
            "increase n_t or tau")


def _run_one(cfg, jobs, out_dir):
    """Execute one configured run and write its artifacts; returns summary dict."""
    _warn_beta_adequacy(cfg.params)
    flags = cfg.observables
    observer = MeasurementObserver(
        cfg.params,
        histogram=cfg.histogram if flags.density else None,
        correlate=flags.correlation,
    )
    summary = run_chain(cfg.params, cfg.sampler, observer, jobs=jobs)
    result = summary.result
    h = config_hash(cfg)

    os.makedirs(out_dir, exist_ok=True)
    series_names = []
    if flags.energy:
        series_names += ["kinetic", "potential", "energy"]
    if flags.q2:
        series_names += ["q2"]
    for name in series_names:
        write_series_csv(os.path.join(out_dir, f"{name}.csv"), result.series[name], h)

    observables = {}
    for name in series_names:
        st = result.blocked(name)
        observables[name] = {
            "mean": st.mean, "std_error": st.std_error,
            "block_size": st.block_size, "n_blocks": st.n_blocks,
            "plateau": st.plateau,
        }

    payload = {
        "config_hash": h,
        "params": {"m": cfg.params.m, "omega": cfg.params.omega,
                   "tau": cfg.params.tau, "n_t": cfg.params.n_t,
                   "beta": cfg.params.beta},
        "acceptance_rate": summary.acceptance_rate,
        "observables": observables,
    }
    if flags.density:
        write_histogram_csv(os.path.join(out_dir, "histogram.csv"), result.histogram, h)
        payload["histogram"] = {
            "file": "histogram.csv",
            "total_samples": result.histogram.total_samples,
            "out_of_range": result.histogram.out_of_range,
        }
    if flags.correlation:
        write_correlation_csv(os.path.join(out_dir, "correlation.csv"),
                              result.correlation, h)
        payload["correlation"] = {"file": "correlation.csv",
                                  "n_lags": len(result.correlation.lags) - 1}
    write_json(os.path.join(out_dir, "summary.json"), payload)
    write_json(os.path.join(out_dir, "metadata.json"), {
        "config_hash": h,
        "config_text": canonical_config_text(cfg),
        "seed": cfg.sampler.seed,
        "version": __version__,
        "proposal": {"kind": "uniform mixture",
                     "wide_fraction": WIDE_FRACTION, "wide_scale": WIDE_SCALE,
                     "tuning_target": TARGET_ACCEPTANCE,
                     "start": "hot" if cfg.sampler.hot_start else "cold"},
        "chains": summary.chains,
    })
    return payload


def cmd_run(args):
    cfg = _load_config(args.config, seed=args.seed, out_dir=args.out)
    payload = _run_one(cfg, args.jobs, cfg.out_dir)
    for name, st in payload["observables"].items():
        print(f"{name}: {st['mean']:.6g} +/- {st['std_error']:.2g}")
    print(f"acceptance: {payload['acceptance_rate']:.3f}")
    print(f"output: {cfg.out_dir}")
    return 0


def cmd_scan(args):
    cfg = _load_config(args.config, seed=args.seed, out_dir=args.out)
    if cfg.scan is None:
        raise ConfigError("scan requires a [scan] section in the config")
    rows = []
    for value in cfg.scan.values:
        sub_out = os.path.join(cfg.out_dir, f"scan_{cfg.scan.variable}_{value:g}")
        sub = with_overrides(cfg, out_dir=sub_out, scan=None,
                             **{cfg.scan.variable: value})
        payload = _run_one(sub, args.jobs, sub_out)
        for name, st in payload["observables"].items():
            rows.append((value, name, st["mean"], st["std_error"]))
        print(f"{cfg.scan.variable} = {value:g} done")
    write_scan_csv(os.path.join(cfg.out_dir, "combined.csv"), rows, config_hash(cfg))
    print(f"combined table: {os.path.join(cfg.out_dir, 'combined.csv')}")
    return 0


def cmd_oracle(args):
    cfg = _load_config(args.config, out_dir=args.out)
    m, omega = cfg.params.m, cfg.params.omega
    if args.regime == "sho" and m <= omega:
        warnings.warn("sho oracle outside its regime: expected m >> omega")
    kwargs = {}
    if args.regime == "grid":
        kwargs["n_points"] = args.n_points
        if args.p_max is not None:
            kwargs["p_max"] = args.p_max
    report = oracle_report(args.regime, m, omega, **kwargs)
    payload = report.to_dict()
    payload["config_hash"] = config_hash(cfg)
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, f"oracle_{args.regime}.json")
    write_json(path, payload)
    print(f"E0 = {report.ground_energy!r}  gap = {report.gap!r}  "
          f"<T> = {report.kinetic!r}  <V> = {report.potential!r}  "
          f"<q2> = {report.q_squared!r}")
    print(f"output: {path}")
    return 0


def cmd_compare(args):
    summary = read_json(os.path.join(args.run_dir, "summary.json"))
    oracle = read_json(args.oracle)
    if summary.get("config_hash") != oracle.get("config_hash") and not args.force:
        raise UsageError(
            "config hash mismatch between run and oracle "
            f"({summary.get('config_hash')} vs {oracle.get('config_hash')}); "
            "use --force to compare anyway")
    rows = []
    failed = False
    for sim_name, oracle_name in COMPARE_FIELDS:
        if sim_name not in summary.get("observables", {}) or oracle_name not in oracle:
            continue
        st = summary["observables"][sim_name]
        ref = oracle[oracle_name]
        diff = st["mean"] - ref
        sigma = st["std_error"]
        if sigma > 0.0:
            z = diff / sigma
        else:
            z = 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
        rows.append({"observable": sim_name, "simulated": st["mean"],
                     "oracle": ref, "difference": diff, "sigma": sigma, "z": z})
        if abs(z) > args.tolerance:
            failed = True
    if not rows:
        raise UsageError("no comparable observables between run and oracle")
    print(f"{'observable':<12}{'simulated':>16}{'oracle':>16}{'diff':>14}{'diff/sigma':>12}")
    for r in rows:
        print(f"{r['observable']:<12}{r['simulated']:>16.8g}{r['oracle']:>16.8g}"
              f"{r['difference']:>14.3g}{r['z']:>12.2f}")
    write_json(os.path.join(args.run_dir, "comparison.json"),
               {"config_hash": summary.get("config_hash"),
                "oracle_hash": oracle.get("config_hash"),
                "tolerance": args.tolerance, "rows": rows, "passed": not failed,
                "oracle_file": os.path.abspath(args.oracle)})
    return 3 if failed else 0


def cmd_fit(args):
    if args.observable is not None:
        rows, src_hash = read_scan_csv(args.infile)
        pts = np.array([[v, m, e] for v, name, m, e in rows if name == args.observable])
        if len(pts) == 0:
            raise UsageError(f"observable {args.observable!r} not found in {args.infile}")
    else:
        pts, src_hash = read_xye_csv(args.infile)
    pts = pts[pts[:, 2] > 0.0]
    if args.x_scale != 1.0:
        pts[:, 0] *= args.x_scale
    if args.max_x is not None:
        pts = pts[np.abs(pts[:, 0]) <= args.max_x]
    if len(pts) == 0:
        raise UsageError("no usable points after filtering")
    if args.kind == "constant":
        res = fit_constant(pts)
    elif args.kind == "power":
        if args.exponent is None:
            raise UsageError("--exponent is required for a power fit")
        res = fit_power(pts, args.exponent)
    elif args.kind == "exponential":
        res = fit_exponential(pts)
    else:
        res = fit_gaussian(pts)
    for k, v in res.parameters.items():
        print(f"{k} = {v:.8g} +/- {res.std_errors[k]:.3g}")
    print(f"chi2/dof = {res.chi_squared_per_dof:.3g}  converged = {res.converged}")
    if args.out:
        payload = res.to_dict()
        payload["config_hash"] = src_hash  # hash carried by the input CSV
        write_json(args.out, payload)
        print(f"output: {args.out}")
    return 0 if res.converged else 2


def build_parser():
    p = _Parser(prog="relosc",
                description="Path-integral Monte Carlo for the relativistic oscillator")
    p.add_argument("--version", action="version", version=f"relosc {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="config file (key = value)")
        sp.add_argument("--seed", type=int, default=None, help="override the master seed")
        sp.add_argument("--out", default=None, help="override the output directory")
        sp.add_argument("--jobs", type=int, default=1,
                        help="worker processes (never affects results)")

    sp = sub.add_parser("run", help="single simulation run")
    common(sp)
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("scan", help="one run per scan value plus a combined table")
    common(sp)
    sp.set_defaults(fn=cmd_scan)

    sp = sub.add_parser("oracle", help="write a closed-form/grid reference report")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", default=None)
    sp.add_argument("--regime", required=True, choices=["sho", "ultra", "grid"])
    sp.add_argument("--n-points", type=int, default=4096)
    sp.add_argument("--p-max", type=float, default=None)
    sp.set_defaults(fn=cmd_oracle)

    sp = sub.add_parser("compare", help="run vs oracle, field by field")
    sp.add_argument("run_dir")
    sp.add_argument("oracle")
    sp.add_argument("--tolerance", type=float, default=3.0,
                    help="fail when |difference| exceeds this many sigma")
    sp.add_argument("--force", action="store_true",
                    help="compare despite a config-hash mismatch")
    sp.set_defaults(fn=cmd_compare)

    sp = sub.add_parser("fit", help="weighted least-squares fit of a CSV series")
    sp.add_argument("--kind", required=True,
                    choices=["exponential", "gaussian", "constant", "power"])
    sp.add_argument("--in", dest="infile", required=True,
                    help="3-column CSV (x, y, error) or a scan combined.csv")
    sp.add_argument("--observable", default=None,
                    help="select rows of a combined scan table")
    sp.add_argument("--exponent", type=float, default=None)
    sp.add_argument("--x-scale", type=float, default=1.0,
                    help="multiply x before fitting (e.g. tau for lag -> time)")
    sp.add_argument("--max-x", type=float, default=None,
                    help="drop points with |x| beyond this after scaling")
    sp.add_argument("--out", default=None, help="write the fit result as JSON")
    sp.set_defaults(fn=cmd_fit)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConvergenceError, ValueError, OSError, RuntimeError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
