"""Free-boundary solver: shooting on the interval ODE with integral constraint.

The no-trade interval [x_lo, x_hi] and the function g on it come out of a
one-parameter shooting problem: launch the trajectory at a point (a, Gamma(a))
on the start curve (where g' = 0), integrate the branch-selected root ODE
g' = F(x, g) until the stopping locus C(x, g) = 0 is hit again (there g' = 0
once more), and tune a until the accumulated integral of g'/x equals the log
bid-ask band width.  The integral is carried as an augmented ODE state, so
the shooting constraint and the exported cumulative integral are one object.

Orientation: on the positive-gap side the start parameter a sits in
(0, x_M) and x increases toward the stop; on the negative-gap side a sits in
(x_M, 0) and x decreases.  Exported grids are always ascending in x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .coeffs import _root_scalar, abc, f_rhs, gamma_curve, p2_denominator
from .errors import (BracketingFailed, EventNotFound, PositivityViolated,
                     RegionExit, ToleranceNotMet)
from .model import DerivedConstants, Regime

DEFAULT_RTOL = 1e-12
DEFAULT_ATOL = 1e-14
SPAN_FACTOR = 60.0
N_GRID = 2001


@dataclass
class FreeBoundarySolution:
    x_lo: float
    x_hi: float
    grid: np.ndarray           # ascending, cosine-clustered, endpoints exact
    g: np.ndarray
    g_prime: np.ndarray
    cum_integral: np.ndarray   # int_{x_lo}^{x} g'(t)/t dt on the grid
    shoot_param: float         # solved start abscissa a
    regime: Regime
    band_width: float          # the constraint value actually matched
    _dense: object = field(default=None, repr=False)
    _dense_sign: float = field(default=1.0, repr=False)
    _total: float = field(default=0.0, repr=False)

    def g_at(self, x):
        """Dense-output evaluation of g anywhere on [x_lo, x_hi]."""
        return self._dense(x)[0]

    def cum_at(self, x):
        """Dense-output cumulative integral from x_lo."""
        raw = self._dense(x)[1]
        if self._dense_sign > 0:
            return raw
        return raw + self._total

    def gp_at(self, x, dc: DerivedConstants):
        return f_rhs(x, self.g_at(x), dc)


def _rhs_factory(dc: DerivedConstants):
    """Scalar RHS for the augmented state z = (g, cumulative integral)."""
    P = dc.poly
    m_pos = dc.regime.m_positive
    a_x, a_xx, a_y0, a_yx, a_yy = P.a_x, P.a_xx, P.a_y0, P.a_yx, P.a_yy
    b_x, b_xx, b_y0, b_yx, b_yy = P.b_x, P.b_xx, P.b_y0, P.b_yx, P.b_yy
    c_xx, c_y0, c_yx, c_yy = P.c_xx, P.c_y0, P.c_yx, P.c_yy

    def rhs(x, z):
        y = z[0]
        a = x * (a_x + a_xx * x) + y * (a_y0 + a_yx * x) + a_yy * y * y
        b = x * (b_x + b_xx * x) + y * (b_y0 + b_yx * x) + b_yy * y * y
        c = c_xx * x * x + y * (c_y0 + c_yx * x) + c_yy * y * y
        # clamp=True: trial steps probe past the stopping locus where the
        # discriminant dips negative; the event cuts the step back afterwards.
        gp = _root_scalar(a, b, c, m_pos, clamp=True)
        return (gp, gp / x)

    def stop_event(x, z):
        y = z[0]
        return c_xx * x * x + y * (c_y0 + c_yx * x) + c_yy * y * y

    stop_event.terminal = True
    stop_event.direction = -1.0  # trigger only when C crosses down through 0
    return rhs, stop_event


def integrate_from(a: float, dc: DerivedConstants,
                   rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL):
    """Integrate from the start-curve point above a to the stopping locus.

    Returns (b_a, result) where b_a is the abscissa at which C(x, g) = 0 was
    hit again and result is the scipy integration object (dense output over
    the traversed span, state = (g, integral of g'/x from a)).
    """
    g0 = gamma_curve(a, dc)
    rhs, ev = _rhs_factory(dc)
    direction = 1.0 if dc.regime.m_positive else -1.0
    span = SPAN_FACTOR * max(abs(dc.x_M), 1e-6)
    res = solve_ivp(rhs, (a, a + direction * span), (g0, 0.0),
                    method="DOP853", rtol=rtol, atol=atol,
                    dense_output=True, events=ev)
    if res.status != 1 or len(res.t_events[0]) == 0:
        raise EventNotFound(
            f"stopping locus not reached from a={a!r} within span {span:g} "
            f"(solver status {res.status}: {res.message})")
    b = float(res.t_events[0][0])
    return b, res


def constraint_integral(a: float, dc: DerivedConstants,
                        rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL) -> float:
    """G(a): the value of int g'/x dx accumulated start-to-stop (always > 0)."""
    _, res = integrate_from(a, dc, rtol, atol)
    return abs(float(res.y_events[0][0][1]))


def _check_positivity(grid, g, gp, dc: DerivedConstants) -> None:
    q = dc.q
    if not np.all(q * g > 0):
        raise PositivityViolated("q_g", "q*g must stay positive on the interval")
    if not np.all(1.0 + gp > 0):
        raise PositivityViolated("one_plus_gp", "1+g' must stay positive")
    P2 = p2_denominator(grid, g, gp, dc)
    if not np.all(P2 > 0):
        raise PositivityViolated("P2", "optimizer denominator must stay positive")
    if not np.all(q * (g - grid * gp) > 0):
        raise PositivityViolated("q_g_minus_xgp", "q*(g - x*g') must stay positive")
    interior = (gp[1:-1] / grid[1:-1])
    if interior.size and not np.all(interior > 0):
        raise PositivityViolated("gp_over_x", "g'/x must be positive inside")


def _check_region(grid, g, dc: DerivedConstants) -> None:
    co = abc(grid, g, dc)
    scale = np.abs(co.a) + np.abs(co.b) + np.abs(co.c) + 1.0
    if np.any(np.asarray(co.c)[1:-1] < -1e-12 * scale[1:-1]):
        raise RegionExit("trajectory left the C >= 0 region mid-interval")
    if not dc.regime.m_positive:
        # on the negative-gap side the admissible cell pins B > 0 and A > 0
        if np.any(np.asarray(co.b)[1:-1] <= 0) or np.any(np.asarray(co.a)[1:-1] <= 0):
            raise RegionExit("negative-gap trajectory left the B>0, A>0 cell")


def _export(a: float, b: float, res, dc: DerivedConstants,
            band_width: float, n_grid: int) -> FreeBoundarySolution:
    m_pos = dc.regime.m_positive
    x_lo, x_hi = (a, b) if m_pos else (b, a)
    k = np.arange(n_grid)
    grid = x_lo + (x_hi - x_lo) * 0.5 * (1.0 - np.cos(np.pi * k / (n_grid - 1)))
    grid[0], grid[-1] = x_lo, x_hi

    z = res.sol(grid)
    g = z[0].copy()
    raw_I = z[1].copy()
    total = abs(float(res.y_events[0][0][1]))
    cum = raw_I if m_pos else raw_I + total
    cum[0] = 0.0   # exact at x_lo by construction; kill event-root roundoff
    gp = np.asarray(f_rhs(grid, g, dc))

    _check_positivity(grid, g, gp, dc)
    _check_region(grid, g, dc)

    return FreeBoundarySolution(
        x_lo=float(x_lo), x_hi=float(x_hi), grid=grid, g=g, g_prime=gp,
        cum_integral=cum, shoot_param=float(a), regime=dc.regime,
        band_width=float(total), _dense=res.sol,
        _dense_sign=1.0 if m_pos else -1.0, _total=total)


def shoot(dc: DerivedConstants, band_width: float | None = None,
          tol: float = 1e-10, max_iter: int = 200,
          rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
          n_grid: int = N_GRID) -> FreeBoundarySolution:
    """Solve the free boundary: find a with G(a) = band_width.

    G(a) is continuous, -> 0 as a approaches the frictionless point x_M and
    grows without bound (logarithmically) as a -> 0, so a sign-change bracket
    in t = a/x_M in (0, 1) exists; bisection runs on ln t.
    """
    target = dc.band_width if band_width is None else float(band_width)
    if target <= 0:
        raise BracketingFailed(f"band width must be positive, got {target:g}")
    xM = dc.x_M

    evals: dict[float, tuple] = {}

    def G(t: float):
        a = t * xM
        b, res = integrate_from(a, dc, rtol, atol)
        val = abs(float(res.y_events[0][0][1]))
        evals[t] = (a, b, res, val)
        return val

    # --- bracket: G decreasing in t, G(t->1) = 0, G(t->0) = inf -----------
    t_hi = 0.5
    g_hi = G(t_hi)
    if g_hi > target:
        # move toward the vertex until the band is overshot from below
        for _ in range(60):
            t_lo, g_lo = t_hi, g_hi
            t_hi = 1.0 - (1.0 - t_hi) * 0.25
            g_hi = G(t_hi)
            if g_hi <= target:
                break
            if 1.0 - t_hi < 1e-13:
                raise BracketingFailed(
                    f"G({t_hi:.17g}) = {g_hi:.3e} still above band {target:.3e}")
        else:
            raise BracketingFailed("no upper bracket toward the vertex")
    else:
        # move toward zero until the band is exceeded
        t_lo = t_hi
        g_lo = g_hi
        for _ in range(60):
            t_lo = t_lo * 0.25
            g_lo = G(t_lo)
            if g_lo >= target:
                break
            if t_lo < 1e-60:
                raise BracketingFailed(
                    f"G({t_lo:.3e}) = {g_lo:.3e} never reached band {target:.3e}")
        else:
            raise BracketingFailed("no lower bracket toward zero")

    # --- bisection on ln t -------------------------------------------------
    u_lo, u_hi = math.log(t_lo), math.log(t_hi)
    best_t, best_err = None, math.inf
    for v, (_, _, _, gv) in evals.items():
        err = abs(gv - target)
        if err < best_err:
            best_t, best_err = v, err
    for _ in range(max_iter):
        if best_err <= tol:
            break
        u_mid = 0.5 * (u_lo + u_hi)
        t_mid = math.exp(u_mid)
        g_mid = G(t_mid)
        err = abs(g_mid - target)
        if err < best_err:
            best_t, best_err = t_mid, err
        if g_mid > target:
            u_lo = u_mid
        else:
            u_hi = u_mid
        if u_hi - u_lo < 4e-16 * max(1.0, abs(u_lo), abs(u_hi)):
            break
    if best_err > tol:
        raise ToleranceNotMet(
            f"|G - band| = {best_err:.3e} > tol {tol:.1e} after bisection")

    a, b, res, _ = evals[best_t]
    return _export(a, b, res, dc, target, n_grid)


def ode_residual(sol: FreeBoundarySolution, dc: DerivedConstants,
                 g: np.ndarray | None = None) -> float:
    """Max normalized quadratic residual |A g'^2 + B g' + C|/(1+|A|+|B|+|C|).

    Evaluated on the stored arrays (optionally with a replacement g, which is
    how perturbation sensitivity is probed); this is an independent algebraic
    check of whatever is in the solution object, not a tautology on the
    integrator's own right-hand side evaluations.
    """
    gg = sol.g if g is None else np.asarray(g, dtype=float)
    co = abc(sol.grid, gg, dc)
    num = np.abs(co.a * sol.g_prime**2 + co.b * sol.g_prime + co.c)
    den = 1.0 + np.abs(co.a) + np.abs(co.b) + np.abs(co.c)
    return float(np.max(num / den))
