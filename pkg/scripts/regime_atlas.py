"""Solve one market per sign regime and print a one-line summary of each.

Quick sanity sweep over the four (utility exponent, drift gap) sign patterns;
useful after touching the root-branch selection or the shooting bracket.
"""
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from illiquid import MarketParams, build_policy, merton_point, shoot, validate

MARKETS = {
    "P+M+": dict(mu1=0.10, sigma1=0.40, mu2=0.08, sigma2=0.30,
                 rho=0.2, delta=0.10, p=0.5),
    "P-M+": dict(mu1=0.10, sigma1=0.40, mu2=0.08, sigma2=0.30,
                 rho=0.2, delta=0.10, p=-1.0),
    "P+M-": dict(mu1=0.02, sigma1=0.40, mu2=0.08, sigma2=0.20,
                 rho=0.6, delta=0.15, p=0.5),
    "P-M-": dict(mu1=0.02, sigma1=0.40, mu2=0.08, sigma2=0.20,
                 rho=0.6, delta=0.15, p=-1.0),
}


def main():
    print(f"{'regime':6} {'interval':28} {'fraction band':24} "
          f"{'pi*':>9} {'entry':>9} {'value':>12}")
    for name, kw in MARKETS.items():
        params = MarketParams(**kw)
        dc = validate(params)
        sol = shoot(dc)
        pol = build_policy(sol, params)
        _, _, pi_star = merton_point(dc)
        iv = f"[{sol.x_lo:+.4f}, {sol.x_hi:+.4f}]"
        band = f"[{pol.band[0]:+.4f}, {pol.band[1]:+.4f}]"
        print(f"{name:6} {iv:28} {band:24} {pi_star:+9.4f} "
              f"{pol.x_hat:+9.4f} {pol.value:12.4f}")


if __name__ == "__main__":
    main()
