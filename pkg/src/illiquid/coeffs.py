"""Coefficient algebra for the first-order interval ODE.

The scalar function g on the no-trade interval satisfies an implicit quadratic
A(x,g)·g'^2 + B(x,g)·g' + C(x,g) = 0, with A, B, C quadratic polynomials in
(x, y).  This module evaluates them (Horner form in y, coefficients
precomputed per parameter set), selects the correct root branch stably, gives
the start curve y = Gamma(x) (the C = 0 level set branch the trajectory
launches from), and evaluates the pointwise optimizer quantities (shadow
drift m, loadings s1/s2, risk prices theta1/theta2, and the alpha/beta/gamma
combinations feeding the state dynamics).

All public functions accept scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalBreakdown, OutOfDomain, Singularity
from .model import DerivedConstants

# relative clamp window for roundoff-negative discriminants
DISC_CLAMP_REL = 1e-13


@dataclass(frozen=True)
class QuadCoeffs:
    a: object  # float or ndarray
    b: object
    c: object
    disc: object


@dataclass(frozen=True)
class OptimizerValues:
    m_hat: object
    s1_hat: object
    s2_hat: object
    theta1_hat: object
    theta2_hat: object
    alpha_hat: object
    beta_hat: object
    gamma_hat: object


def abc(x, y, dc: DerivedConstants) -> QuadCoeffs:
    """Evaluate A, B, C and the raw discriminant B^2 - 4AC at (x, y)."""
    P = dc.poly
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a = x * (P.a_x + P.a_xx * x) + y * (P.a_y0 + P.a_yx * x) + P.a_yy * y * y
    b = x * (P.b_x + P.b_xx * x) + y * (P.b_y0 + P.b_yx * x) + P.b_yy * y * y
    c = P.c_xx * x * x + y * (P.c_y0 + P.c_yx * x) + P.c_yy * y * y
    disc = b * b - 4.0 * a * c
    if a.ndim == 0:
        return QuadCoeffs(float(a), float(b), float(c), float(disc))
    return QuadCoeffs(a, b, c, disc)


def disc_scale(coeffs: QuadCoeffs):
    """Natural magnitude against which the discriminant is compared."""
    return coeffs.b * coeffs.b + np.abs(4.0 * coeffs.a * coeffs.c)


def gamma_curve(x, dc: DerivedConstants):
    """Start curve: the y with C(x, y) = 0 the trajectory launches from.

    Upper branch of the level set for p > 0, lower branch for p < 0.  Raises
    OutOfDomain where the level set has no real point above this x.
    """
    P = dc.poly
    x = np.asarray(x, dtype=float)
    c2 = P.c_yy
    c1 = P.c_y0 + P.c_yx * x
    c0 = P.c_xx * x * x
    disc = c1 * c1 - 4.0 * c2 * c0
    scale = c1 * c1 + np.abs(4.0 * c2 * c0)
    bad = disc < -DISC_CLAMP_REL * scale
    if np.any(bad):
        raise OutOfDomain(
            f"no start-curve point at x={np.atleast_1d(x)[np.argmax(np.atleast_1d(bad))]}")
    disc = np.maximum(disc, 0.0)
    sq = np.sqrt(disc)
    # stable two-root evaluation: big root first, mate via c0/(c2*r_big)
    r_big = (-c1 - np.sign(c1) * sq) / (2.0 * c2)
    with np.errstate(divide="ignore", invalid="ignore"):
        r_mate = np.where(r_big != 0.0, c0 / (c2 * np.where(r_big != 0.0, r_big, 1.0)), 0.0)
    hi = np.maximum(r_big, r_mate)
    lo = np.minimum(r_big, r_mate)
    out = hi if dc.sgn_p > 0 else lo
    return float(out) if out.ndim == 0 else out


def _root_scalar(a: float, b: float, c: float, m_positive: bool, clamp: bool) -> float:
    """Stable branch-selected root of a*t^2 + b*t + c = 0.

    m_positive picks 2C/(-B+sqrt) (the smaller-magnitude branch used on the
    positive-gap side); the mirror regimes use 2C/(-B-sqrt).  `clamp` allows
    small-negative discriminants (integration trial steps probing past the
    stopping locus); public evaluation passes clamp=False and raises.
    """
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        scale = b * b + abs(4.0 * a * c)
        if clamp or disc >= -DISC_CLAMP_REL * scale:
            disc = 0.0
        else:
            raise OutOfDomain(f"discriminant {disc:.3e} < 0 beyond tolerance")
    sq = math.sqrt(disc)
    if m_positive:
        if b < 0.0:
            return 2.0 * c / (sq - b)
        if a == 0.0:
            raise NumericalBreakdown("root branch degenerate: A=0 with B>=0")
        return -(b + sq) / (2.0 * a)
    else:
        if b > 0.0:
            den = -b - sq
            if den == 0.0:
                raise NumericalBreakdown("root branch degenerate: B=sqrt(disc)=0")
            return 2.0 * c / den
        if a == 0.0:
            raise NumericalBreakdown("root branch degenerate: A=0 with B<=0")
        return (sq - b) / (2.0 * a)


def f_rhs(x, y, dc: DerivedConstants):
    """g'(x) as the branch-selected root of the coefficient quadratic."""
    m_pos = dc.regime.m_positive
    if np.ndim(x) == 0 and np.ndim(y) == 0:
        co = abc(float(x), float(y), dc)
        return _root_scalar(co.a, co.b, co.c, m_pos, clamp=False)
    co = abc(x, y, dc)
    a, b, c = map(np.asarray, (co.a, co.b, co.c))
    disc = np.asarray(co.disc).copy()
    scale = disc_scale(co)
    if np.any(disc < -DISC_CLAMP_REL * scale):
        raise OutOfDomain("discriminant < 0 beyond tolerance at some points")
    np.maximum(disc, 0.0, out=disc)
    sq = np.sqrt(disc)
    with np.errstate(divide="ignore", invalid="ignore"):
        if m_pos:
            direct = b < 0.0
            den1 = np.where(direct, sq - b, 1.0)
            den2 = np.where(direct, 1.0, 2.0 * a)
            out = np.where(direct, 2.0 * c / den1, -(b + sq) / den2)
        else:
            direct = b > 0.0
            den1 = np.where(direct, -b - sq, 1.0)
            den2 = np.where(direct, 1.0, 2.0 * a)
            out = np.where(direct, 2.0 * c / den1, (sq - b) / den2)
    if not np.all(np.isfinite(out)):
        raise NumericalBreakdown("root branch degenerate at some points")
    return out


def p2_denominator(x, g, gp, dc: DerivedConstants):
    """q*g*(1+g') - (1+q)*x*g' — the common optimizer denominator."""
    q = dc.q
    return q * g * (1.0 + gp) - (1.0 + q) * x * gp


def shadow_ratios(x, g, gp, dc: DerivedConstants):
    """(s1/g', s2/g') with the g' factor cancelled algebraically.

    These stay finite and smooth at the interval endpoints where g' -> 0,
    which is what the reflected-state drift and diffusion actually need.
    """
    p = dc.params
    q = dc.q
    opq = 1.0 + q
    P2 = p2_denominator(x, g, gp, dc)
    r1 = p.sigma1 * (x - q * g) / P2
    r2 = (-p.rho * p.sigma1 * p.sigma2 * x
          - (p.mu2 * opq**2 - q * p.rho * p.sigma1 * p.sigma2) * x * gp
          + q * opq * p.mu2 * g * (1.0 + gp)) / (p.sigma2 * P2 * (1.0 + gp))
    return r1, r2


def optimizers(x, g, gp, dc: DerivedConstants) -> OptimizerValues:
    """Pointwise optimizer block at (x, g(x), g'(x)).

    Returns the shadow drift adjustment m, the shadow volatility loadings
    s1/s2, the two risk prices theta1/theta2, and the derived alpha (discount
    net of risk-price quadratic), beta (loading-weighted risk price), gamma
    (half squared shadow vol).
    """
    p = dc.params
    q = dc.q
    opq = 1.0 + q
    P2 = p2_denominator(x, g, gp, dc)
    if np.any(np.asarray(P2) == 0.0):
        raise Singularity("optimizer denominator q*g*(1+g') - (1+q)*x*g' vanished")
    r1, r2 = shadow_ratios(x, g, gp, dc)
    s1 = r1 * gp
    s2 = r2 * gp

    m1, sg1, m2, sg2, rho = p.mu1, p.sigma1, p.mu2, p.sigma2, p.rho
    one_m_r2 = 1.0 - rho * rho
    # First term carries (sg1 + s1), NOT the product: with the product, the
    # drift violates its own first-order condition (the risk price th1 then
    # fails x*(sigma1+(1+q)*s1)/(q*(1+q)*g) and the wealth fractions collapse
    # to ~0, killing the budget identity).  Checked against a direct numeric
    # minimization of the pointwise objective: min value 0 at machine
    # precision, argmin matches this form.
    m_hat = (2.0 * one_m_r2 * sg2 * (sg1 + opq * s1) * (sg1 + s1) * x
             + q * opq * (2.0 * m2 * (rho * (sg1 + s1) + s2)
                          - sg2 * (2.0 * m1 + 2.0 * sg1 * s1 + s1 * s1
                                   + 2.0 * rho * (sg1 + s1) * s2 + s2 * s2)) * g
             ) / (2.0 * q * opq * sg2 * g)

    th1 = (rho * (sg2 * s2 - m2) / (one_m_r2 * sg2)
           - (m2 * s2 - (m_hat + m1 + s1 * sg1 + 0.5 * (s1 * s1 + s2 * s2)) * sg2)
           / (one_m_r2 * sg2 * (s1 + sg1)))
    th2 = m2 / sg2 - rho * th1

    alpha = opq * p.delta - 0.5 * q * opq * (th1 * th1 + th2 * th2 + 2.0 * rho * th1 * th2)
    beta = q * ((s1 + rho * s2) * th1 + (rho * s1 + s2) * th2)
    gamma = 0.5 * (s1 * s1 + s2 * s2 + 2.0 * rho * s1 * s2)
    return OptimizerValues(m_hat, s1, s2, th1, th2, alpha, beta, gamma)
