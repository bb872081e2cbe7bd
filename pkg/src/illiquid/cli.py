"""Command-line front end: solve, policy, asymptotics, simulate, sweep.

Every run writes a manifest.json (params, tolerances, seed, versions) so the
artifacts can be reproduced byte for byte.  Exit codes: 0 success, 1 user
error (bad arguments, violated parameter assumptions), 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import platform
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .errors import (BracketingFailed, EventNotFound, NonpositiveWealth,
                     NumericalBreakdown, OutOfDomain, PositivityViolated,
                     RegionExit, Singularity, StepRejected, ToleranceNotMet,
                     ValidationError)
from .fbsolver import DEFAULT_ATOL, DEFAULT_RTOL, ode_residual, shoot
from .model import CONFIG_KEYS, MarketParams, load_config, merton_point, validate
from .policy import (asymptotic_coeffs, build_policy, no_trade_band,
                     policy_summary, write_policy_csv, write_solution_csv)
from .sim import SimConfig, mc_verify_budget, mc_verify_g

_NUMERICAL_ERRORS = (ToleranceNotMet, BracketingFailed, EventNotFound,
                     NumericalBreakdown, RegionExit, PositivityViolated,
                     Singularity, StepRejected, NonpositiveWealth, OutOfDomain,
                     ArithmeticError)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; our contract reserves 2 for numerics
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _versions() -> dict:
    import numpy
    import scipy
    try:
        import numba
        numba_ver = numba.__version__
    except ImportError:
        numba_ver = None
    return {
        "python": platform.python_version(),
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "numba": numba_ver,
        "illiquid": __version__,
    }


def _write_json(path: str, obj: dict) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(out_dir: str, command: str, params: MarketParams,
                    tolerances: dict, seed=None, extra=None) -> None:
    manifest = {
        "command": command,
        "params": params.as_dict(),
        "tolerances": tolerances,
        "seed": seed,
        "versions": _versions(),
    }
    if extra:
        manifest.update(extra)
    _write_json(os.path.join(out_dir, "manifest.json"), manifest)


def _resolve_params(args) -> MarketParams:
    values = {}
    if args.config:
        values.update(load_config(args.config))
    for item in args.set or []:
        if "=" not in item:
            raise ValidationError(f"override {item!r} is not key=value")
        key, _, raw = item.partition("=")
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise ValidationError(
                f"unknown parameter {key!r}; known: {', '.join(CONFIG_KEYS)}")
        values[key] = float(raw)
    required = ("mu1", "sigma1", "mu2", "sigma2", "rho", "delta", "p")
    missing = [k for k in required if k not in values]
    if missing:
        raise ValidationError(
            f"missing parameters: {', '.join(missing)} "
            "(pass --config FILE and/or --set key=value)")
    return MarketParams(**values)


def _tolerances(args) -> dict:
    return {"shoot_tol": args.tol, "rtol": args.rtol, "atol": args.atol}


def _solve(params: MarketParams, args):
    dc = validate(params)
    sol = shoot(dc, tol=args.tol, rtol=args.rtol, atol=args.atol)
    return dc, sol


def cmd_solve(args) -> int:
    params = _resolve_params(args)
    dc, sol = _solve(params, args)
    os.makedirs(args.out, exist_ok=True)
    write_solution_csv(sol, os.path.join(args.out, "solution.csv"))
    summary = {
        "x_lo": sol.x_lo,
        "x_hi": sol.x_hi,
        "band_width": sol.band_width,
        "shoot_param": sol.shoot_param,
        "regime": sol.regime.value,
        "ode_residual": ode_residual(sol, dc),
        "g_prime_endpoints": [float(sol.g_prime[0]), float(sol.g_prime[-1])],
        "merton": dict(zip(("x_M", "y_M", "pi_star"), merton_point(dc))),
    }
    _write_json(os.path.join(args.out, "solution.json"), summary)
    _write_manifest(args.out, "solve", params, _tolerances(args))
    print(f"solved: [{sol.x_lo:.6f}, {sol.x_hi:.6f}]  "
          f"residual {summary['ode_residual']:.3e}")
    return 0


def cmd_policy(args) -> int:
    params = _resolve_params(args)
    dc, sol = _solve(params, args)
    pol = build_policy(sol, params)
    os.makedirs(args.out, exist_ok=True)
    write_solution_csv(sol, os.path.join(args.out, "solution.csv"))
    write_policy_csv(pol, os.path.join(args.out, "policy.csv"))
    _write_json(os.path.join(args.out, "policy.json"), policy_summary(pol))
    _write_manifest(args.out, "policy", params, _tolerances(args))
    print(f"policy: x_hat={pol.x_hat:.6f} band=({pol.band[0]:.6f}, "
          f"{pol.band[1]:.6f}) value={pol.value:.8f} "
          f"initial_trade={pol.initial_trade.kind}")
    return 0


def cmd_asymptotics(args) -> int:
    params = _resolve_params(args)
    dc = validate(params)
    ac = asymptotic_coeffs(params)
    x_m, y_m, pi_star = merton_point(dc)
    os.makedirs(args.out, exist_ok=True)
    out = {
        "zeta0": ac.zeta0,
        "zeta1": ac.zeta1,
        "zeta0_display": ac.zeta0_display,
        "zeta1_display": ac.zeta1_display,
        "x_M": x_m,
        "y_M": y_m,
        "pi_star": pi_star,
        "nu": dc.nu,
        "regime": dc.regime.value,
    }
    _write_json(os.path.join(args.out, "asymptotics.json"), out)
    _write_manifest(args.out, "asymptotics", params, _tolerances(args))
    print(f"zeta0={ac.zeta0:.9f} zeta1={ac.zeta1:.9f} "
          f"(displays: {ac.zeta0_display:.9f}, {ac.zeta1_display:.9f})")
    return 0


def cmd_simulate(args) -> int:
    params = _resolve_params(args)
    dc, sol = _solve(params, args)
    pol = build_policy(sol, params)
    cfg = SimConfig(horizon=args.horizon, n_steps=args.steps,
                    n_paths=args.paths, seed=args.seed)
    est = mc_verify_g(pol, cfg, parallel=not args.serial)

    budget_cfg = SimConfig(horizon=args.budget_horizon,
                           n_steps=args.budget_steps,
                           n_paths=args.budget_paths, seed=args.seed)
    reports = [mc_verify_budget(pol, budget_cfg.replace(n_steps=budget_cfg.n_steps // f))
               for f in (4, 2, 1)]
    slope = float(np.polyfit(np.log([r.dt for r in reports]),
                             np.log([r.rms for r in reports]), 1)[0])
    checks = {
        "g_within_3_sigma": abs(est.estimate - est.target) <= 3.0 * est.stderr,
        "budget_slope_first_order": 0.8 <= slope <= 1.2,
        "liquidation_value_floor": reports[-1].adm_min >= -1e-6,
    }
    out = {
        "g_estimate": est.estimate,
        "g_target": est.target,
        "stderr": est.stderr,
        "deviation_sigmas": est.deviation_sigmas,
        "tail_estimate": est.tail_estimate,
        "budget_rms": {f"{r.dt:.9g}": r.rms for r in reports},
        "budget_slope": slope,
        "adm_min": reports[-1].adm_min,
        "clamp_frac": reports[-1].clamp_frac,
        "checks": checks,
        "all_ok": all(checks.values()),
    }
    os.makedirs(args.out, exist_ok=True)
    _write_json(os.path.join(args.out, "sim.json"), out)
    _write_manifest(args.out, "simulate", params, _tolerances(args),
                    seed=args.seed,
                    extra={"sim": {"horizon": cfg.horizon, "n_steps": cfg.n_steps,
                                   "n_paths": cfg.n_paths,
                                   "parallel": not args.serial},
                           "budget_sim": {"horizon": budget_cfg.horizon,
                                          "n_steps": budget_cfg.n_steps,
                                          "n_paths": budget_cfg.n_paths}})
    status = "ok" if out["all_ok"] else "FAILED: " + ", ".join(
        k for k, v in checks.items() if not v)
    print(f"g: {est.estimate:.6f} vs {est.target:.6f} "
          f"({est.deviation_sigmas:.2f} sigma)  budget slope {slope:.3f}  "
          f"adm_min {reports[-1].adm_min:+.3e}  [{status}]")
    return 0 if out["all_ok"] else 2


def _sweep_row(payload) -> dict:
    values, lam, tol, rtol, atol = payload
    row = {"lambda": lam, "x_lo": math.nan, "x_hi": math.nan,
           "pi_lo": math.nan, "pi_hi": math.nan, "value": math.nan,
           "error": ""}
    try:
        params = MarketParams(**{**values, "lambda_sell": lam, "lambda_buy": 0.0})
        dc = validate(params)
        sol = shoot(dc, tol=tol, rtol=rtol, atol=atol)
        pol = build_policy(sol, params)
        row.update(x_lo=sol.x_lo, x_hi=sol.x_hi, pi_lo=pol.band[0],
                   pi_hi=pol.band[1], value=pol.value)
    except Exception as exc:  # recorded per-row; the sweep continues
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def cmd_sweep(args) -> int:
    params = _resolve_params(args)
    lams = sorted({float(tok) for tok in args.lambdas.split(",") if tok.strip()})
    if not lams:
        raise ValidationError("empty lambda list")
    if any(l <= 0 for l in lams):
        raise ValidationError("lambda values must be positive")
    values = params.as_dict()
    payloads = [(values, lam, args.tol, args.rtol, args.atol) for lam in lams]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as ex:
            rows = list(ex.map(_sweep_row, payloads))
    else:
        rows = [_sweep_row(p) for p in payloads]

    ok_rows = [r for r in rows if not r["error"]]
    fit = None
    if len(ok_rows) >= 2:
        widths = [r["pi_hi"] - r["pi_lo"] for r in ok_rows]
        if all(w > 0 for w in widths):
            coef = np.polyfit(np.log([r["lambda"] for r in ok_rows]),
                              np.log(widths), 1)
            fit = {"slope": float(coef[0]), "intercept": float(coef[1]),
                   "n": len(ok_rows)}

    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "sweep.csv")
    with open(csv_path, "w") as fh:
        fh.write("lambda,x_lo,x_hi,pi_lo,pi_hi,value,error\n")
        for r in rows:
            fh.write(f"{r['lambda']:.17g},{r['x_lo']:.17g},{r['x_hi']:.17g},"
                     f"{r['pi_lo']:.17g},{r['pi_hi']:.17g},{r['value']:.17g},"
                     f"{r['error']}\n")
        if fit:
            fh.write(f"# fit log(band_width) = slope*log(lambda) + intercept: "
                     f"slope={fit['slope']:.17g} intercept={fit['intercept']:.17g} "
                     f"n={fit['n']}\n")
    _write_json(os.path.join(args.out, "sweep.json"),
                {"rows": rows, "fit": fit})
    _write_manifest(args.out, "sweep", params, _tolerances(args),
                    extra={"lambdas": lams, "workers": args.workers})
    n_err = sum(1 for r in rows if r["error"])
    if fit:
        print(f"sweep: {len(rows)} rows ({n_err} failed)  "
              f"slope={fit['slope']:.4f} intercept={fit['intercept']:.4f}")
    else:
        print(f"sweep: {len(rows)} rows ({n_err} failed)  no fit")
    return 2 if n_err else 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="illiquid",
                     description="Free-boundary solver and Monte Carlo "
                                 "verification for the two-risky-asset "
                                 "transaction-cost model.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value parameter file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a parameter (repeatable)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--tol", type=float, default=1e-10,
                       help="shooting tolerance on the integral constraint")
        p.add_argument("--rtol", type=float, default=DEFAULT_RTOL)
        p.add_argument("--atol", type=float, default=DEFAULT_ATOL)

    p = sub.add_parser("solve", help="solve the free-boundary problem")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("policy", help="solve and build the trading policy")
    common(p)
    p.set_defaults(func=cmd_policy)

    p = sub.add_parser("asymptotics", help="small-cost expansion coefficients")
    common(p)
    p.set_defaults(func=cmd_asymptotics)

    p = sub.add_parser("simulate", help="Monte Carlo verification")
    common(p)
    p.add_argument("--seed", type=int, default=1234)
    p.add_argument("--paths", type=int, default=2000)
    p.add_argument("--steps", type=int, default=20_000)
    p.add_argument("--horizon", type=float, default=100.0)
    p.add_argument("--serial", action="store_true",
                   help="run the compiled kernel single-threaded")
    p.add_argument("--budget-paths", type=int, default=64)
    p.add_argument("--budget-steps", type=int, default=4096)
    p.add_argument("--budget-horizon", type=float, default=2.0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="no-trade band across sell costs "
                                     "(lambda_buy pinned to 0)")
    common(p)
    p.add_argument("--lambdas", required=True,
                   help="comma-separated positive sell costs")
    p.add_argument("--workers", type=int, default=max(1, os.cpu_count() or 1))
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
