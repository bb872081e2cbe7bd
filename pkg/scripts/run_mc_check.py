"""Monte Carlo verification driver: dual integral vs solved g, plus budget decay.

The default sizes match the acceptance gate's big run (1e4 paths, dt 1e-3,
horizon 400); pass --paths/--steps/--horizon to scale down for a quick look.

    python3 scripts/run_mc_check.py --config configs/reference.cfg \
        --paths 2000 --steps 40000 --horizon 200
"""
import argparse
import os
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from illiquid import (SimConfig, build_policy, load_config, mc_verify_budget,
                      mc_verify_g, params_from_mapping, shoot, validate)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True)
    ap.add_argument("--paths", type=int, default=10_000)
    ap.add_argument("--steps", type=int, default=400_000)
    ap.add_argument("--horizon", type=float, default=400.0)
    ap.add_argument("--seed", type=int, default=1234)
    ap.add_argument("--serial", action="store_true")
    args = ap.parse_args()

    params = params_from_mapping(load_config(args.config))
    dc = validate(params)
    sol = shoot(dc)
    pol = build_policy(sol, params)
    print(f"interval [{sol.x_lo:.6f}, {sol.x_hi:.6f}]  "
          f"entry {pol.x_hat:.6f} ({pol.initial_trade.kind})  "
          f"g(entry) {float(pol.g_at(pol.x_hat)):.6f}")

    t0 = time.time()
    est = mc_verify_g(pol, SimConfig(horizon=args.horizon, n_steps=args.steps,
                                     n_paths=args.paths, seed=args.seed),
                      parallel=not args.serial)
    print(f"dual integral: {est.estimate:.6f} +- {est.stderr:.6f}  "
          f"target {est.target:.6f}  ({est.deviation_sigmas:.2f} sigma, "
          f"tail {est.tail_estimate:.2e})  [{time.time() - t0:.1f}s]")

    rms = []
    for n in (1024, 2048, 4096):
        rep = mc_verify_budget(pol, SimConfig(horizon=2.0, n_steps=n,
                                              n_paths=64, seed=args.seed))
        rms.append(rep.rms)
        print(f"budget dt={rep.dt:9.2e}  rms={rep.rms:.3e}  "
              f"interior_max={rep.interior_max:.3e}  "
              f"boundary_median={rep.boundary_median:.3e}  "
              f"adm_min={rep.adm_min:+.3e}")
    slope = np.polyfit(np.log([2.0 / n for n in (1024, 2048, 4096)]),
                       np.log(rms), 1)[0]
    print(f"budget residual decay: slope {slope:.3f} in dt (want ~1)")


if __name__ == "__main__":
    main()
