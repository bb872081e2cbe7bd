"""Policy objects built on a solved interval: positions, band, value.

From the solved g we read off everything an investor acts on: the log
premium f of the internal (shadow) price over the quoted one, the target
fractions pi1/pi2 of wealth in the two risky assets, the no-trade band in
illiquid fraction, the initial lump trade that jumps the state into the
interval, and the value of the problem.  Also the small-cost expansion
coefficients of the band.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .coeffs import optimizers
from .errors import (MultipleRoots, NonpositiveWealth, NumericalBreakdown,
                     Singularity, ValidationError)
from .fbsolver import FreeBoundarySolution
from .model import DerivedConstants, MarketParams, validate


@dataclass(frozen=True)
class InitialTrade:
    kind: str           # "none" | "buy" | "sell" (illiquid shares)
    share_delta: float  # phi1(0+) - eta1

    def as_dict(self) -> dict:
        return {"kind": self.kind, "share_delta": self.share_delta}


@dataclass(frozen=True)
class AsymptoticCoeffs:
    zeta0: float
    zeta1: float
    zeta0_display: float  # as-displayed closed form (drops a sigma1^2; kept for comparison)
    zeta1_display: float  # as-displayed closed form (passes the rho=0 cross-check)


@dataclass
class PolicySurface:
    params: MarketParams
    dc: DerivedConstants
    sol: FreeBoundarySolution
    f: np.ndarray          # log shadow premium on sol.grid, decreasing
    pi1: np.ndarray        # illiquid fraction of wealth on sol.grid
    pi2: np.ndarray        # liquid risky fraction on sol.grid
    pi1_loadings: np.ndarray  # pi1 recomputed from the risk-price route
    mapped_fraction: np.ndarray  # pi1 mapped through the quoted-price mark
    xi_0: float            # shadow-marked initial capital
    x_hat: float           # post-trade state the paths start from
    band: tuple            # (pi_lo, pi_hi) in quoted-price fraction
    value: float
    initial_trade: InitialTrade

    # --- dense evaluations -------------------------------------------------
    def f_at(self, x):
        return self.dc.y_lo + (self.sol.band_width - self.sol.cum_at(x))

    def g_at(self, x):
        return self.sol.g_at(x)

    def xi_at(self, x):
        p = self.params
        return p.eta0 + p.eta1 * p.s1_0 * np.exp(self.f_at(x)) + p.eta2 * p.s2_0

    def pi1_at(self, x):
        return x / (self.dc.q * self.sol.g_at(x))

    def trade_gap_at(self, x):
        """r(x): shadow-marked illiquid holding minus the target at state x."""
        p = self.params
        return p.eta1 * p.s1_0 * np.exp(self.f_at(x)) - self.xi_at(x) * self.pi1_at(x)


def _fraction_map(p1, factor):
    den = p1 + factor * (1.0 - p1)
    if np.any(np.abs(den) < 1e-12 * (1.0 + np.abs(p1))):
        raise Singularity("fraction map denominator vanished")
    return p1 / den


def no_trade_band(sol: FreeBoundarySolution, params: MarketParams) -> tuple:
    """(pi_lo, pi_hi): quoted-price illiquid fractions at the two boundaries."""
    dc = validate(params)
    p1_lo = sol.x_lo / (dc.q * sol.g[0])
    p1_hi = sol.x_hi / (dc.q * sol.g[-1])
    pi_lo = _fraction_map(p1_lo, 1.0 + params.lambda_buy)
    pi_hi = _fraction_map(p1_hi, 1.0 - params.lambda_sell)
    return float(pi_lo), float(pi_hi)


def build_policy(sol: FreeBoundarySolution, params: MarketParams) -> PolicySurface:
    dc = validate(params)
    if sol.regime is not dc.regime:
        raise ValidationError(
            f"solution regime {sol.regime.value} does not match parameters "
            f"({dc.regime.value})")
    # sanity guard against a solution/params mix-up; absolute floor covers the
    # shooting tolerance, which does not shrink with the band
    if abs(sol.band_width - dc.band_width) > 1e-8 + 1e-4 * dc.band_width:
        raise ValidationError("solution band width does not match parameters")

    x, g, gp = sol.grid, sol.g, sol.g_prime
    q = dc.q
    f = dc.y_lo + (sol.band_width - sol.cum_integral)
    pi1 = x / (q * g)

    opt = optimizers(x, g, gp, dc)
    s1, s2 = opt.s1_hat, opt.s2_hat
    pi1_loadings = ((1.0 + q) * opt.theta1_hat - x * s1 / g) / (s1 + params.sigma1)
    pi2 = ((1.0 + q) * opt.theta2_hat - x * s2 / g - pi1 * s2) / params.sigma2
    mapped = _fraction_map(pi1, np.exp(f))

    pi_band = (float(_fraction_map(pi1[0], 1.0 + params.lambda_buy)),
               float(_fraction_map(pi1[-1], 1.0 - params.lambda_sell)))

    surface = PolicySurface(
        params=params, dc=dc, sol=sol, f=f, pi1=pi1, pi2=pi2,
        pi1_loadings=pi1_loadings, mapped_fraction=mapped,
        xi_0=math.nan, x_hat=math.nan, band=pi_band, value=math.nan,
        initial_trade=InitialTrade("none", 0.0))

    # --- initial state: where the lump trade (if any) drops the paths ------
    r = surface.trade_gap_at(x)
    signs = np.sign(r)
    if np.all(r > 0):
        x_hat, kind = sol.x_hi, "sell"
    elif np.all(r < 0):
        x_hat, kind = sol.x_lo, "buy"
    else:
        flips = np.nonzero(signs[:-1] * signs[1:] < 0)[0]
        exact = np.nonzero(r == 0.0)[0]
        roots = [float(x[i]) for i in exact]
        for i in flips:
            roots.append(float(brentq(lambda t: float(surface.trade_gap_at(t)),
                                      x[i], x[i + 1], xtol=1e-12 * max(1.0, abs(dc.x_M)),
                                      rtol=8.9e-16)))
        roots = sorted(set(roots))
        if not roots:
            # r touches zero without a strict sign flip; nearest grid point
            roots = [float(x[np.argmin(np.abs(r))])]
        if len(roots) > 1:
            warnings.warn(
                f"trade gap has {len(roots)} roots; taking the leftmost",
                MultipleRoots)
        x_hat, kind = roots[0], "none"

    xi_0 = float(surface.xi_at(x_hat))
    if xi_0 <= 0.0:
        raise NonpositiveWealth(
            f"shadow-marked initial capital {xi_0:.6g} <= 0")
    g_hat = float(sol.g_at(x_hat))
    p = params.p
    value = xi_0**p / p * abs(g_hat) ** (1.0 - p)

    f_hat = float(surface.f_at(x_hat))
    phi1_0 = float(surface.pi1_at(x_hat)) * xi_0 / (params.s1_0 * math.exp(f_hat))
    delta_shares = phi1_0 - params.eta1
    if kind == "none":
        trade = InitialTrade("none", 0.0)
    else:
        trade = InitialTrade(kind, delta_shares)

    surface.x_hat = float(x_hat)
    surface.xi_0 = xi_0
    surface.value = float(value)
    surface.initial_trade = trade
    return surface


def value(sol: FreeBoundarySolution, params: MarketParams) -> float:
    """Value of the problem for the given endowment (post optimal lump trade)."""
    return build_policy(sol, params).value


def asymptotic_coeffs(params: MarketParams) -> AsymptoticCoeffs:
    """Small-cost band expansion: pi ~ zeta0 -+ zeta1 * cost^(1/3).

    zeta0 is re-derived (equals the frictionless fraction pi*; the displayed
    closed form is dimensionally short a sigma1^2 and is reported alongside).
    zeta1 uses the displayed closed form, which passes an independent rho = 0
    cross-check.
    """
    dc = validate(params)
    m1, s1, m2, s2, rho = (params.mu1, params.sigma1, params.mu2,
                           params.sigma2, params.rho)
    q = dc.q
    opq = 1.0 + q
    one_m_r2 = 1.0 - rho * rho

    zeta0 = dc.x_M / (q * dc.y_M)
    zeta0_display = opq * dc.drift_gap / one_m_r2

    Q = (opq**2 * s1**2 * m2**2
         - 2.0 * rho * opq**2 * s1 * s2 * m1 * m2
         + (opq**2 * m1**2 + (2.0 * opq * m1 - s1**2) * (rho**2 - 1.0) * s1**2) * s2**2)
    cubed = 3.0 * opq**3 * dc.drift_gap**2 * Q / (4.0 * one_m_r2**4 * s1**8 * s2**2)
    if not cubed > 0.0:
        raise NumericalBreakdown(f"band-expansion cube {cubed:.3e} not positive")
    zeta1 = cubed ** (1.0 / 3.0)
    return AsymptoticCoeffs(zeta0=float(zeta0), zeta1=float(zeta1),
                            zeta0_display=float(zeta0_display),
                            zeta1_display=float(zeta1))


# --- artifact writers -------------------------------------------------------

def write_solution_csv(sol: FreeBoundarySolution, path: str) -> None:
    header = (f"x_lo={sol.x_lo!r} x_hi={sol.x_hi!r} shoot_param={sol.shoot_param!r} "
              f"regime={sol.regime.value} band_width={sol.band_width!r}\n"
              "x,g,g_prime,cum_integral")
    data = np.column_stack([sol.grid, sol.g, sol.g_prime, sol.cum_integral])
    np.savetxt(path, data, delimiter=",", header=header, fmt="%.17g")


def write_policy_csv(policy: PolicySurface, path: str) -> None:
    header = (f"x_hat={policy.x_hat!r} pi_lo={policy.band[0]!r} pi_hi={policy.band[1]!r} "
              f"value={policy.value!r}\n"
              "x,f,pi1,pi2,mapped_fraction")
    data = np.column_stack([policy.sol.grid, policy.f, policy.pi1, policy.pi2,
                            policy.mapped_fraction])
    np.savetxt(path, data, delimiter=",", header=header, fmt="%.17g")


def policy_summary(policy: PolicySurface) -> dict:
    ac = asymptotic_coeffs(policy.params)
    return {
        "x_lo": policy.sol.x_lo,
        "x_hi": policy.sol.x_hi,
        "x_hat": policy.x_hat,
        "pi_lo": policy.band[0],
        "pi_hi": policy.band[1],
        "value": policy.value,
        "zeta0": ac.zeta0,
        "zeta1": ac.zeta1,
        "initial_trade": policy.initial_trade.as_dict(),
    }
