"""Shared fixtures: the four sign-regime parameter sets, solved once per session.

FROZEN holds closed-form constants for each set, computed independently with
sympy (exact rationals, then evalf) and pinned here as literals so the tests
do not share code paths with the library they are checking.
"""
import numpy as np
import pytest

from illiquid import MarketParams, build_policy, shoot, validate

# Desk reference market (both utility exponents) plus a negative-drift-gap
# market (both exponents) so every branch of the root selection gets exercised.
REGIME_PARAMS = {
    "P+M+": dict(mu1=0.10, sigma1=0.40, mu2=0.08, sigma2=0.30,
                 rho=0.2, delta=0.10, p=0.5),
    "P-M+": dict(mu1=0.10, sigma1=0.40, mu2=0.08, sigma2=0.30,
                 rho=0.2, delta=0.10, p=-1.0),
    "P+M-": dict(mu1=0.02, sigma1=0.40, mu2=0.08, sigma2=0.20,
                 rho=0.6, delta=0.15, p=0.5),
    "P-M-": dict(mu1=0.02, sigma1=0.40, mu2=0.08, sigma2=0.20,
                 rho=0.6, delta=0.15, p=-1.0),
}

# Exact-arithmetic values, frozen. Do not regenerate from the library.
FROZEN = {
    "P+M+": dict(
        q=1.0,
        drift_gap=0.07866666666666666,
        R=0.10694444444444445,
        D=0.044299768518518516,
        nu=0.08859953703703703,
        x_M=11.561071195297188,
        y_M=11.286740692357936,
        pi_star=1.0243055555555556,
        y_C=7.758620689655173,
        x_D=7.142857142857142,
        y_D=7.142857142857142,
        zeta1=1.2819232980590247,
        zeta0_display=0.16388888888888892,
    ),
    "P-M+": dict(
        q=-0.5,
        drift_gap=0.07866666666666666,
        R=0.10694444444444445,
        D=0.12785011574074076,
        nu=0.06392505787037038,
        x_M=2.002942174946248,
        y_M=-15.643317868054767,
        pi_star=0.2560763888888889,
        y_C=-16.9811320754717,
        x_D=25.000000000000014,
        y_D=-50.00000000000003,
        zeta1=0.2413832634743072,
        zeta0_display=0.04097222222222223,
    ),
    "P+M-": dict(
        q=1.0,
        drift_gap=-0.07599999999999998,
        R=0.13849999999999998,
        D=0.041796875,
        nu=0.08359375,
        x_M=-17.75700934579439,
        y_M=11.962616822429908,
        pi_star=-1.484375,
        y_C=7.142857142857142,
        x_D=3.1250000000000004,
        y_D=3.1250000000000004,
        zeta1=3.125113800990827,
        zeta0_display=-0.2375,
    ),
    "P-M-": dict(
        q=-0.5,
        drift_gap=-0.07599999999999998,
        R=0.13849999999999998,
        D=0.2041015625,
        nu=0.10205078125,
        x_M=-1.8181818181818177,
        y_M=-9.799043062200957,
        pi_star=-0.37109375,
        y_C=-10.526315789473685,
        x_D=100.00000000000047,
        y_D=-200.00000000000094,
        zeta1=0.46086727826154555,
        zeta0_display=-0.059375,
    ),
}

REGIME_NAMES = tuple(REGIME_PARAMS)


@pytest.fixture(scope="session")
def regime_cases():
    """name -> (params, derived constants, solved free boundary)."""
    out = {}
    for name, kw in REGIME_PARAMS.items():
        params = MarketParams(**kw)
        dc = validate(params)
        assert dc.regime.value == name     # fixture sanity, not a test
        out[name] = (params, dc, shoot(dc))
    return out


@pytest.fixture(scope="session")
def ref_case(regime_cases):
    return regime_cases["P+M+"]


@pytest.fixture(scope="session")
def ref_params(ref_case):
    return ref_case[0]


@pytest.fixture(scope="session")
def ref_dc(ref_case):
    return ref_case[1]


@pytest.fixture(scope="session")
def ref_sol(ref_case):
    return ref_case[2]


@pytest.fixture(scope="session")
def ref_policy(ref_case):
    params, _, sol = ref_case
    return build_policy(sol, params)


@pytest.fixture(scope="session")
def neg_policy(regime_cases):
    params, _, sol = regime_cases["P-M+"]
    return build_policy(sol, params)


def rel_err(got, want):
    return abs(got - want) / abs(want)
