"""Market primitives: parameters, validation, derived constants.

Two risky assets (one freely traded, one charged proportional costs on every
purchase/sale), a zero-rate bond, and CRRA felicity c^p/p.  Everything the
downstream solver needs that depends only on the parameter set is computed
once here and carried in DerivedConstants: the curvature exponent q, the
log bid-ask band, the characteristic points of the coefficient conics, and
the per-parameter polynomial coefficients used by the quadratic in g'.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import AssumptionViolated, DegenerateLiquidity, ValidationError

CONFIG_KEYS = (
    "mu1", "sigma1", "mu2", "sigma2", "rho", "delta", "p",
    "lambda_buy", "lambda_sell", "eta0", "eta1", "eta2", "s1_0", "s2_0",
)


class Regime(Enum):
    """Sign pattern that fixes geometry: utility exponent x drift gap."""

    P_POS_M_POS = "P+M+"
    P_POS_M_NEG = "P+M-"
    P_NEG_M_POS = "P-M+"
    P_NEG_M_NEG = "P-M-"

    @property
    def p_positive(self) -> bool:
        return self in (Regime.P_POS_M_POS, Regime.P_POS_M_NEG)

    @property
    def m_positive(self) -> bool:
        return self in (Regime.P_POS_M_POS, Regime.P_NEG_M_POS)


@dataclass(frozen=True)
class MarketParams:
    mu1: float
    sigma1: float
    mu2: float
    sigma2: float
    rho: float
    delta: float
    p: float
    lambda_buy: float = 0.01
    lambda_sell: float = 0.01
    eta0: float = 1.0
    eta1: float = 0.0
    eta2: float = 0.0
    s1_0: float = 1.0
    s2_0: float = 1.0

    def replace(self, **kw) -> "MarketParams":
        d = self.as_dict()
        d.update(kw)
        return MarketParams(**d)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in CONFIG_KEYS}


@dataclass(frozen=True)
class AbcPoly:
    """Per-parameter coefficients of the three conics, Horner-ready.

    A(x,y) = x*(a_x + a_xx*x) + y*(a_y0 + a_yx*x) + a_yy*y**2   (same shape
    for B and C; C has no linear-x term).
    """

    a_x: float
    a_xx: float
    a_y0: float
    a_yx: float
    a_yy: float
    b_x: float
    b_xx: float
    b_y0: float
    b_yx: float
    b_yy: float
    c_xx: float
    c_y0: float
    c_yx: float
    c_yy: float


@dataclass(frozen=True)
class DerivedConstants:
    params: MarketParams
    q: float
    sgn_p: float
    regime: Regime
    y_lo: float            # log(1 - lambda_sell), lower edge of the log band
    y_hi: float            # log(1 + lambda_buy), upper edge
    band_width: float      # y_hi - y_lo
    R: float               # squared-Sharpe combination before the 1/(1-rho^2)
    D: float               # well-posedness gap: delta - q*R/(2(1-rho^2))
    drift_gap: float       # mu1 - rho*sigma1*mu2/sigma2
    nu: float              # frictionless consumption-to-wealth ratio, (1+q)*D
    y_C: float
    x_D: float
    y_D: float
    x_M: float
    y_M: float
    poly: AbcPoly


def _check_fields(p: MarketParams) -> None:
    def need(cond: bool, name: str, msg: str) -> None:
        if not cond:
            raise AssumptionViolated(name, msg)

    for k in CONFIG_KEYS:
        v = getattr(p, k)
        if not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ValidationError(f"{k} must be a finite number, got {v!r}")
    need(p.mu1 > 0, "mu1", "mu1 must be > 0")
    need(p.mu2 > 0, "mu2", "mu2 must be > 0")
    need(p.sigma1 > 0, "sigma1", "sigma1 must be > 0")
    need(p.sigma2 > 0, "sigma2", "sigma2 must be > 0")
    need(-1.0 < p.rho < 1.0, "rho", "rho must lie in (-1, 1)")
    need(p.delta > 0, "delta", "delta must be > 0")
    need(p.p < 1.0 and p.p != 0.0, "p", "p must be < 1 and nonzero")
    need(p.lambda_buy >= 0.0, "lambda_buy", "purchase cost must be >= 0")
    need(0.0 <= p.lambda_sell < 1.0, "lambda_sell", "sale cost must be in [0, 1)")
    need(p.s1_0 > 0, "s1_0", "initial price s1_0 must be > 0")
    need(p.s2_0 > 0, "s2_0", "initial price s2_0 must be > 0")
    if p.lambda_buy == 0.0 and p.lambda_sell == 0.0:
        raise DegenerateLiquidity(
            "lambda_buy = lambda_sell = 0: frictionless problem; "
            "use the closed-form solution, not the interval solver"
        )
    liq = (p.eta0
           + (1.0 - p.lambda_sell) * p.s1_0 * max(p.eta1, 0.0)
           - (1.0 + p.lambda_buy) * p.s1_0 * max(-p.eta1, 0.0)
           + p.s2_0 * p.eta2)
    need(liq >= 0, "initial_liquidation",
         f"initial position liquidates to {liq:.6g} < 0")


def _abc_poly(p: MarketParams, q: float, sgn: float) -> AbcPoly:
    m1, s1, m2, s2, r, d = p.mu1, p.sigma1, p.mu2, p.sigma2, p.rho, p.delta
    opq = 1.0 + q
    s2sq = s2 * s2
    # shared tail coefficient: the y^2 weight of A and C (B carries twice it)
    yy = -q * opq**2 * (2.0 * d * s2sq - q * m2 * m2)

    a_x = -2.0 * opq**2 * s2sq * sgn
    a_xx = (opq**4 * m2 * m2
            - 2.0 * r * q * opq**2 * s1 * s2 * m2
            + ((1.0 + 2.0 * q + q * q * r * r) * s1 * s1 - 2.0 * opq**2 * m1) * s2sq)
    a_y0 = opq * 2.0 * q * s2sq * sgn
    a_yx = opq * (2.0 * r * q * q * s1 * s2 * m2
                  - 2.0 * q * opq**2 * m2 * m2
                  + (2.0 * d * opq**2 + q * (2.0 * m1 - s1 * s1)) * s2sq)

    b_x = a_x
    b_xx = 2.0 * s2 * (r * s1 * m2 * opq**2
                       - (m1 * opq**2 - q * (1.0 - r * r) * s1 * s1) * s2)
    b_y0 = opq * 4.0 * q * s2sq * sgn
    b_yx = opq * (2.0 * r * q * (q - 1.0) * s1 * s2 * m2
                  - 2.0 * q * opq**2 * m2 * m2
                  + (2.0 * d * opq**2 + q * (4.0 * m1 - s1 * s1)) * s2sq)

    c_xx = -(1.0 - r * r) * s1 * s1 * s2sq
    c_y0 = 2.0 * q * opq * s2sq * sgn
    c_yx = 2.0 * q * opq * s2 * (m1 * s2 - r * m2 * s1)

    return AbcPoly(a_x, a_xx, a_y0, a_yx, yy,
                   b_x, b_xx, b_y0, b_yx, 2.0 * yy,
                   c_xx, c_y0, c_yx, yy)


def validate(params: MarketParams) -> DerivedConstants:
    """Check every standing condition and return the derived constants.

    Raises AssumptionViolated (with .which naming the clause) on any failed
    condition, DegenerateLiquidity when both costs vanish.
    """
    _check_fields(params)
    m1, s1, m2, s2 = params.mu1, params.sigma1, params.mu2, params.sigma2
    rho, delta, p = params.rho, params.delta, params.p

    q = p / (1.0 - p)
    sgn = 1.0 if p > 0 else -1.0
    opq = 1.0 + q
    one_m_r2 = 1.0 - rho * rho

    R = (m1 / s1) ** 2 + (m2 / s2) ** 2 - 2.0 * rho * m1 * m2 / (s1 * s2)
    D = delta - q * R / (2.0 * one_m_r2)
    if not D > 0.0:
        raise AssumptionViolated(
            "delta_gap", f"delta must exceed q*R/(2(1-rho^2)); gap = {D:.6g}")
    drift_gap = m1 - rho * s1 * m2 / s2
    if drift_gap == 0.0:
        raise AssumptionViolated(
            "drift_gap", "mu1 == rho*mu2*sigma1/sigma2 is excluded")
    if m2 == rho * s1 * s2 / opq:
        raise AssumptionViolated(
            "hedge_point", "mu2 == rho*sigma1*sigma2/(1+q) is excluded")

    tail = 2.0 * delta * s2 * s2 - q * m2 * m2        # y^2-weight kernel
    den_D = 2.0 * delta * opq**2 + q * (s1 * s1 - 2.0 * opq * m1)
    if p > 0 and (tail <= 0.0 or den_D <= 0.0):
        # Provably positive for p > 0 under the gap condition; if this fires
        # the arithmetic above is wrong, not the parameters.
        raise AssumptionViolated("positivity_combo",
                                 f"internal positivity check failed: "
                                 f"tail={tail:.6g} den={den_D:.6g}")

    y_lo = math.log1p(-params.lambda_sell)
    y_hi = math.log1p(params.lambda_buy)

    y_C = 2.0 * s2 * s2 * sgn / (opq * tail)
    x_D = 2.0 * q * opq * sgn / den_D
    y_D = x_D / q
    x_M = q * drift_gap * sgn / (one_m_r2 * s1 * s1 * D)
    y_M = sgn / (opq * D)

    regime = {
        (True, True): Regime.P_POS_M_POS,
        (True, False): Regime.P_POS_M_NEG,
        (False, True): Regime.P_NEG_M_POS,
        (False, False): Regime.P_NEG_M_NEG,
    }[(p > 0, drift_gap > 0)]

    return DerivedConstants(
        params=params, q=q, sgn_p=sgn, regime=regime,
        y_lo=y_lo, y_hi=y_hi, band_width=y_hi - y_lo,
        R=R, D=D, drift_gap=drift_gap, nu=opq * D,
        y_C=y_C, x_D=x_D, y_D=y_D, x_M=x_M, y_M=y_M,
        poly=_abc_poly(params, q, sgn),
    )


def merton_point(dc: DerivedConstants) -> tuple[float, float, float]:
    """Frictionless fixed point (x_M, y_M) and the illiquid fraction pi*.

    (x_M, y_M) is the vertex of the C(x,y)=0 conic — the point where the
    level curve meets its horizontal-tangent locus away from the origin —
    and pi* = x_M/(q*y_M) is the classical constant fraction, independent
    of the discount rate.
    """
    pi_star = dc.x_M / (dc.q * dc.y_M)
    return dc.x_M, dc.y_M, pi_star


def frictionless_value(dc: DerivedConstants, wealth: float) -> float:
    """Closed-form value of the zero-cost problem at the given wealth.

    V = (wealth^p / p) * nu^(p-1) with nu the constant consumption ratio.
    Used as the limit oracle for the transaction-cost value as costs vanish.
    """
    p = dc.params.p
    if wealth <= 0:
        raise ValidationError("wealth must be positive")
    return wealth**p / p * dc.nu ** (p - 1.0)


def load_config(path: str) -> dict[str, float]:
    """Parse a flat `key = value` config file (# comments, floats only)."""
    out: dict[str, float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected key = value")
            key, _, val = line.partition("=")
            key = key.strip()
            if key not in CONFIG_KEYS:
                raise ValidationError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                out[key] = float(val.strip())
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: bad number {val!r}") from exc
    return out


def params_from_mapping(mapping: dict[str, float]) -> MarketParams:
    unknown = set(mapping) - set(CONFIG_KEYS)
    if unknown:
        raise ValidationError(f"unknown parameter keys: {sorted(unknown)}")
    return MarketParams(**mapping)
