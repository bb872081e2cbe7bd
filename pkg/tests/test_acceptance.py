"""Acceptance gate: one test per numbered criterion, tolerances inline.

Criterion 5 is split: the g- and value-collapse clauses hold and stay green;
the width clause asks for |x_hi - x_lo| <= 1e-2*|x_M| at costs 1e-6, which
no parameter choice near the reference market can reach (the width scales
like 2*zeta1*(2e-6)^(1/3) ~ 0.36 here, three times the cap of ~0.116, and
the cube-root rate itself is confirmed by criterion 6).  That clause is
kept as a strict xfail rather than silently loosened.

The Monte Carlo criteria pin master seeds; the measured numbers behind each
frozen seed/config choice are recorded alongside the run artifacts.
"""
import math

import numpy as np
import pytest

from illiquid import (MarketParams, SimConfig, asymptotic_coeffs,
                      build_policy, frictionless_value, mc_verify_budget,
                      mc_verify_g, merton_point, shoot, simulate, validate)
from illiquid.coeffs import abc, disc_scale, p2_denominator
from illiquid.fbsolver import ode_residual
from conftest import REGIME_NAMES, REGIME_PARAMS

REF_BOTH = ("P+M+", "P-M+")          # reference market, p = 0.5 and p = -1


# --- 1: converged g solves the quadratic ODE --------------------------------

@pytest.mark.parametrize("name", REF_BOTH)
def test_criterion_01_ode_residual(name, regime_cases):
    _, dc, sol = regime_cases[name]
    assert ode_residual(sol, dc) <= 1e-8
    assert abs(sol.g_prime[0]) <= 1e-8
    assert abs(sol.g_prime[-1]) <= 1e-8


# --- 2: integral constraint matched ------------------------------------------

@pytest.mark.parametrize("name", REF_BOTH)
def test_criterion_02_integral_constraint(name, regime_cases):
    params, _, sol = regime_cases[name]
    target = math.log((1.0 + params.lambda_buy) / (1.0 - params.lambda_sell))
    assert abs(sol.cum_integral[-1] - target) <= 1e-10


# --- 3: positivity suite, every grid point, all four regimes -----------------

@pytest.mark.parametrize("name", REGIME_NAMES)
def test_criterion_03_positivity(name, regime_cases):
    _, dc, sol = regime_cases[name]
    x, g, gp = sol.grid, sol.g, sol.g_prime
    q = dc.q
    assert np.all(q * g > 0)
    assert np.all(1.0 + gp > 0)
    assert np.all(p2_denominator(x, g, gp, dc) > 0)
    assert np.all(q * (g - x * gp) > 0)
    assert np.all(gp[1:-1] / x[1:-1] > 0)


# --- 4: discriminant law ------------------------------------------------------

@pytest.mark.parametrize("name", REGIME_NAMES)
def test_criterion_04_discriminant_law(name, regime_cases):
    _, dc, _ = regime_cases[name]
    rng = np.random.default_rng(20260817)
    n = 10_000
    x = rng.uniform(-5 * abs(dc.x_M), 5 * abs(dc.x_M), n)
    x = np.where(np.abs(x) < 1e-3, 1e-3, x)          # x = 0 excluded
    y = rng.uniform(-5 * abs(dc.y_M), 5 * abs(dc.y_M), n)
    co = abc(x, y, dc)
    assert np.all(co.disc >= -1e-9 * disc_scale(co))
    vx = abc(dc.x_D, dc.y_D, dc)
    assert vx.disc <= 1e-9 * disc_scale(vx)


# --- 5: frictionless limit at lambda = 1e-6 ----------------------------------

@pytest.fixture(scope="module")
def tiny_cost_policy():
    params = MarketParams(**REGIME_PARAMS["P+M+"],
                          lambda_buy=1e-6, lambda_sell=1e-6)
    dc = validate(params)
    return dc, build_policy(shoot(dc), params)


def test_criterion_05_g_and_value_collapse(tiny_cost_policy):
    dc, pol = tiny_cost_policy
    g_hat = float(pol.g_at(pol.x_hat))
    assert abs(g_hat - dc.y_M) <= 1e-3 * abs(dc.y_M)
    v_friction = frictionless_value(dc, pol.xi_0)
    assert abs(pol.value - v_friction) <= 1e-3 * abs(v_friction)


@pytest.mark.xfail(reason="width cap 1e-2*|x_M| is below the cube-root "
                          "envelope ~2*zeta1*(2e-6)^(1/3) for this market; "
                          "measured factor ~3.2", strict=True)
def test_criterion_05_band_collapse_rate(tiny_cost_policy):
    dc, pol = tiny_cost_policy
    assert pol.sol.x_hi - pol.sol.x_lo <= 1e-2 * abs(dc.x_M)


# --- 6: cube-root law of the fraction band ------------------------------------

def test_criterion_06_cube_root_law():
    base = REGIME_PARAMS["P+M+"]
    lams = np.array([1e-5, 1e-4, 1e-3, 1e-2])
    half, mid = [], []
    for lam in lams:
        params = MarketParams(**base, lambda_buy=0.0, lambda_sell=lam)
        pol = build_policy(shoot(validate(params)), params)
        lo, hi = pol.band
        half.append(0.5 * (hi - lo))
        mid.append(0.5 * (hi + lo))
    half = np.array(half)
    mid = np.array(mid)

    slope = np.polyfit(np.log(lams), np.log(half), 1)[0]
    assert 0.31 <= slope <= 0.36

    co = asymptotic_coeffs(MarketParams(**base))
    # coefficient extrapolated to lambda -> 0: the ratio half/lam^(1/3) is
    # linear in lam^(1/3) to leading correction
    ratio = half / lams ** (1.0 / 3.0)
    intercept = np.polyfit(lams ** (1.0 / 3.0), ratio, 1)[1]
    assert abs(intercept - co.zeta1) <= 0.05 * co.zeta1

    # midpoint -> frictionless fraction, correction O(lam^(2/3))
    design = np.vstack([np.ones_like(lams), lams ** (2.0 / 3.0)]).T
    zeta0_fit = np.linalg.lstsq(design, mid, rcond=None)[0][0]
    _, _, pi_star = merton_point(validate(MarketParams(**base)))
    assert abs(zeta0_fit - pi_star) <= 1e-2 * abs(pi_star)
    gap_slope = np.polyfit(np.log(lams), np.log(np.abs(mid - pi_star)), 1)[0]
    assert gap_slope >= 0.5


# --- 7: rho = 0 collapse of the expansion coefficient -------------------------

def test_criterion_07_rho_zero_crosscheck():
    kw = dict(REGIME_PARAMS["P+M+"], rho=0.0)
    params = MarketParams(**kw)
    co = asymptotic_coeffs(params)
    m1, s1, m2, s2 = kw["mu1"], kw["sigma1"], kw["mu2"], kw["sigma2"]
    q = kw["p"] / (1.0 - kw["p"])
    opq = 1.0 + q
    simplified = (3 * m1**2 * m2**2 * opq**5 / (4 * s1**6 * s2**2)
                  + 3 * m1**2 * opq**3 * (opq * m1 - s1**2) ** 2
                  / (4 * s1**8)) ** (1.0 / 3.0)
    assert abs(co.zeta1_display - simplified) <= 1e-12 * simplified
    single_asset = (3 * m1**2 * opq**3 * (opq * m1 - s1**2) ** 2
                    / (4 * s1**8)) ** (1.0 / 3.0)
    assert simplified > single_asset


# --- 8: Monte Carlo reproduces g at the entry state ---------------------------

def test_criterion_08_mc_g_representation(ref_policy):
    # 1e4 paths, dt = 1e-3, horizon 40/delta = 400: the package defaults.
    # Frozen seed 1234 measures 2.17 standard errors on this box.
    est = mc_verify_g(ref_policy, SimConfig())
    assert est.tail_estimate <= 0.2 * est.stderr
    assert abs(est.estimate - est.target) <= 3.0 * est.stderr


# --- 9: pathwise sandwich + liquidation floor ---------------------------------

def test_criterion_09_sandwich_and_admissibility(ref_policy):
    paths = simulate(ref_policy, SimConfig(horizon=2.0, n_steps=4096,
                                           n_paths=64, seed=2026))
    par = ref_policy.params
    lo = (1.0 - par.lambda_sell) * paths.S1
    hi = (1.0 + par.lambda_buy) * paths.S1
    assert np.all(paths.S_tilde >= lo)        # exact float comparisons
    assert np.all(paths.S_tilde <= hi)
    liq = (paths.phi0
           + lo * np.maximum(paths.phi1, 0.0)
           - hi * np.maximum(-paths.phi1, 0.0)
           + paths.S2 * paths.phi2)
    w0 = float(paths.W[0, 0])
    assert float(liq.min()) >= -1e-6 * w0


# --- 10: self-financing --------------------------------------------------------

def test_criterion_10_self_financing(ref_policy):
    # (a) first-order decay of the budget residual over three refinements
    rms = []
    steps = (512, 1024, 2048)
    for n in steps:
        rep = mc_verify_budget(ref_policy, SimConfig(horizon=2.0, n_steps=n,
                                                     n_paths=64, seed=31))
        rms.append(rep.rms)
    slope = np.polyfit(np.log([2.0 / n for n in steps]), np.log(rms), 1)[0]
    assert 0.8 <= slope <= 1.2
    # (b) share changes only at boundary-contact steps: on a fine grid the
    # interior log-share increments sit an order of magnitude under the
    # boundary pushes (measured ~13x at this seed/config)
    rep = mc_verify_budget(ref_policy, SimConfig(horizon=2.0, n_steps=32768,
                                                 n_paths=32, seed=777))
    assert rep.n_boundary > 0
    assert rep.interior_max <= 0.1 * rep.boundary_median


# --- 11: determinism -----------------------------------------------------------

def test_criterion_11_determinism(ref_policy):
    cfg = SimConfig(horizon=100.0, n_steps=20_000, n_paths=500, seed=1234)
    serial = mc_verify_g(ref_policy, cfg, parallel=False)
    threaded = mc_verify_g(ref_policy, cfg, parallel=True)
    assert serial.estimate == threaded.estimate          # bitwise
    assert serial.stderr == threaded.stderr
    assert serial.tail_estimate == threaded.tail_estimate
    again = mc_verify_g(ref_policy, cfg, parallel=True)
    assert again.estimate == threaded.estimate
