"""Simulation of the reflected state and Monte Carlo verification.

Two independent checks of the constructed solution:

* mc_verify_g: the solved g at the entry state must equal the expected
  discounted integral of the dual consumption weight exp(-q*lnH) along the
  reflected state paths.  Long-horizon, many-path estimate with a compiled
  kernel (per-path counter-based RNG, so serial and parallel runs reduce the
  same per-path results in the same order and agree bit for bit).

* mc_verify_budget: the wealth process implied by the closed-form marks must
  be self-financing against the internal price and the liquid risky price.
  The per-step residual of dW/W - pi1*dStilde/Stilde - pi2*dS2/S2 + c/W*dt
  is first order in the step, so its RMS must shrink ~ dt under refinement.
  The same report carries the share-change and liquidation diagnostics.

The state-stepping coefficients are tabulated on a uniform grid (cheap to
interpolate inside the kernel); wealth/position marks in the numpy simulator
are evaluated from the dense ODE solution instead, so the budget residual
isolates the Euler error rather than table roughness.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .coeffs import f_rhs, optimizers, shadow_ratios
from .errors import StepRejected, TailTooFat, ValidationError
from .fbsolver import FreeBoundarySolution
from .model import DerivedConstants
from .policy import PolicySurface

try:
    from numba import njit, prange
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency, but keep a pure-numpy route
    HAVE_NUMBA = False
    prange = range

N_TABLE = 4097
_MAX_STORED = 1 << 22  # full-path storage cap (simulate keeps ~13 arrays)

_SCHEMES = ("euler-project",)


@dataclass(frozen=True)
class SimConfig:
    horizon: float = 400.0
    n_steps: int = 400_000
    n_paths: int = 10_000
    seed: int = 1234
    scheme: str = "euler-project"

    def __post_init__(self):
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise ValidationError(f"horizon must be positive, got {self.horizon}")
        if self.n_steps < 1 or self.n_paths < 1:
            raise ValidationError("n_steps and n_paths must be >= 1")
        if self.scheme not in _SCHEMES:
            raise ValidationError(f"unknown scheme {self.scheme!r}; known: {_SCHEMES}")

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps

    def replace(self, **kw) -> "SimConfig":
        from dataclasses import replace as _replace
        return _replace(self, **kw)


@dataclass
class StepTables:
    """Uniform-grid tables of the state-stepping coefficients."""
    x_lo: float
    x_hi: float
    h: float
    drift: np.ndarray   # x * (alpha + beta/g')
    dif1: np.ndarray    # -x * s1/g'
    dif2: np.ndarray    # -x * s2/g'
    th1: np.ndarray
    th2: np.ndarray
    qvar: np.ndarray    # 0.5*(th1^2 + th2^2 + 2 rho th1 th2)


def build_step_tables(sol: FreeBoundarySolution, dc: DerivedConstants,
                      n: int = N_TABLE) -> StepTables:
    p = dc.params
    x = np.linspace(sol.x_lo, sol.x_hi, n)
    g = sol.g_at(x)
    gp = sol.gp_at(x, dc)
    gp[0] = 0.0
    gp[-1] = 0.0
    r1, r2 = shadow_ratios(x, g, gp, dc)   # s1/g', s2/g' without the 0/0
    opt = optimizers(x, g, gp, dc)
    th1, th2 = opt.theta1_hat, opt.theta2_hat
    # beta/g' with the same cancellation as the ratios
    beta_over_gp = dc.q * ((r1 + p.rho * r2) * th1 + (p.rho * r1 + r2) * th2)
    drift = x * (opt.alpha_hat + beta_over_gp)
    qvar = 0.5 * (th1**2 + th2**2 + 2.0 * p.rho * th1 * th2)
    return StepTables(x_lo=float(sol.x_lo), x_hi=float(sol.x_hi),
                      h=float((sol.x_hi - sol.x_lo) / (n - 1)),
                      drift=drift, dif1=-x * r1, dif2=-x * r2,
                      th1=th1, th2=th2, qvar=qvar)


@dataclass
class SimulatedPaths:
    times: np.ndarray      # (n_steps+1,)
    X: np.ndarray          # (n_paths, n_steps+1) reflected state
    Phi_up: np.ndarray     # cumulative push at the lower boundary
    Phi_down: np.ndarray   # cumulative push at the upper boundary
    ln_H: np.ndarray
    S1: np.ndarray
    S2: np.ndarray
    S_tilde: np.ndarray    # S1 * clipped internal-price ratio
    W: np.ndarray
    c: np.ndarray
    phi0: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    dt: float
    x_lo: float
    x_hi: float


def _interp_tab(tab: np.ndarray, t_idx: np.ndarray, frac: np.ndarray) -> np.ndarray:
    return tab[t_idx] + frac * (tab[t_idx + 1] - tab[t_idx])


def simulate(policy: PolicySurface, cfg: SimConfig) -> SimulatedPaths:
    """Euler scheme with boundary projection; full paths kept in memory."""
    sol, dc, par = policy.sol, policy.dc, policy.params
    n, m = cfg.n_paths, cfg.n_steps
    if n * (m + 1) > _MAX_STORED:
        raise ValidationError(
            f"simulate() stores full paths; n_paths*(n_steps+1) = {n*(m+1)} "
            f"exceeds {_MAX_STORED}.  Use mc_verify_g for long/many-path runs.")
    tab = build_step_tables(sol, dc)
    dt = cfg.dt
    sqdt = math.sqrt(dt)
    rho = par.rho
    sq1mr2 = math.sqrt(1.0 - rho * rho)
    band = tab.x_hi - tab.x_lo
    inv_h = 1.0 / tab.h

    rng = np.random.Generator(np.random.Philox(cfg.seed))
    X = np.empty((n, m + 1))
    Phi_up = np.zeros((n, m + 1))
    Phi_dn = np.zeros((n, m + 1))
    ln_H = np.zeros((n, m + 1))
    B1 = np.zeros(n)
    B2 = np.zeros(n)
    B1_path = np.zeros((n, m + 1))
    B2_path = np.zeros((n, m + 1))
    X[:, 0] = policy.x_hat

    for k in range(m):
        xk = X[:, k]
        t_pos = (xk - tab.x_lo) * inv_h
        idx = np.minimum(t_pos.astype(np.int64), N_TABLE - 2)
        frac = t_pos - idx
        z = rng.standard_normal((2, n))
        db1 = sqdt * z[0]
        db2 = sqdt * (rho * z[0] + sq1mr2 * z[1])
        th1 = _interp_tab(tab.th1, idx, frac)
        th2 = _interp_tab(tab.th2, idx, frac)
        qv = _interp_tab(tab.qvar, idx, frac)
        ln_H[:, k + 1] = ln_H[:, k] - th1 * db1 - th2 * db2 - qv * dt
        step = (_interp_tab(tab.drift, idx, frac) * dt
                + _interp_tab(tab.dif1, idx, frac) * db1
                + _interp_tab(tab.dif2, idx, frac) * db2)
        if np.any(np.abs(step) > band):
            raise StepRejected(
                f"state increment exceeded the whole interval at step {k}; "
                f"decrease dt (currently {dt:g})")
        xp = xk + step
        up = np.maximum(tab.x_lo - xp, 0.0)
        dn = np.maximum(xp - tab.x_hi, 0.0)
        X[:, k + 1] = xp + up - dn
        Phi_up[:, k + 1] = Phi_up[:, k] + up
        Phi_dn[:, k + 1] = Phi_dn[:, k] + dn
        B1 += db1
        B2 += db2
        B1_path[:, k + 1] = B1
        B2_path[:, k + 1] = B2

    times = dt * np.arange(m + 1)
    t_row = times[None, :]
    S1 = par.s1_0 * np.exp((par.mu1 - 0.5 * par.sigma1**2) * t_row + par.sigma1 * B1_path)
    S2 = par.s2_0 * np.exp((par.mu2 - 0.5 * par.sigma2**2) * t_row + par.sigma2 * B2_path)

    # marks from the dense solution (not the stepping tables)
    flatX = X.reshape(-1)
    gX = sol.g_at(flatX).reshape(X.shape)
    fX = (dc.y_lo + (sol.band_width - sol.cum_at(flatX))).reshape(X.shape)
    lo, hi = 1.0 - par.lambda_sell, 1.0 + par.lambda_buy
    ratio = np.clip(np.exp(fX), lo, hi)   # clip at use: the sandwich must be exact
    S_tilde = S1 * ratio

    q = dc.q
    opq = 1.0 + q
    g_hat = float(sol.g_at(policy.x_hat))
    ln_W = (math.log(policy.xi_0) - opq * par.delta * t_row - opq * ln_H
            + np.log(np.abs(gX)) - math.log(abs(g_hat)))
    W = np.exp(ln_W)
    c = W / np.abs(gX)

    gpX = sol.gp_at(flatX, dc).reshape(X.shape)
    gpX[X <= tab.x_lo] = 0.0
    gpX[X >= tab.x_hi] = 0.0
    opt = optimizers(flatX, gX.reshape(-1), gpX.reshape(-1), dc)
    pi1X = (flatX / (q * gX.reshape(-1))).reshape(X.shape)
    s1h = opt.s1_hat.reshape(X.shape)
    s2h = opt.s2_hat.reshape(X.shape)
    th2X = opt.theta2_hat.reshape(X.shape)
    pi2X = (opq * th2X - flatX.reshape(X.shape) * s2h / gX - pi1X * s2h) / par.sigma2

    phi1 = pi1X * W / S_tilde
    phi2 = pi2X * W / S2
    phi0 = (1.0 - pi1X - pi2X) * W
    return SimulatedPaths(times=times, X=X, Phi_up=Phi_up, Phi_down=Phi_dn,
                          ln_H=ln_H, S1=S1, S2=S2, S_tilde=S_tilde, W=W, c=c,
                          phi0=phi0, phi1=phi1, phi2=phi2, dt=dt,
                          x_lo=tab.x_lo, x_hi=tab.x_hi)


# --- compiled dual-weight integrator ----------------------------------------
#
# Per-path RNG: SplitMix64 streams; each path's starting state is the full
# avalanche of (master + (i+1)*GOLDEN), so streams don't overlap the way raw
# offset states would.  One Box-Muller pair per step.

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0  # 2^-53
_TWO_PI = 2.0 * math.pi


def _g_rep_paths(x0, x_lo, x_hi, h, drift, dif1, dif2, th1, th2, qvar,
                 dt, n_steps, n_paths, q, opq_delta, rho, sq1mr2, sqdt,
                 master_seed, out_int, out_tail):
    n_cells = drift.shape[0] - 1
    for i in prange(n_paths):
        s = master_seed + np.uint64(i + 1) * _GOLDEN
        # avalanche once so per-path streams start at unrelated states
        z = s
        z ^= z >> np.uint64(30)
        z *= _MIX1
        z ^= z >> np.uint64(27)
        z *= _MIX2
        z ^= z >> np.uint64(31)
        s = z

        x = x0
        lnh = 0.0
        acc = 0.0
        wprev = 1.0
        for k in range(n_steps):
            s += _GOLDEN
            z = s
            z ^= z >> np.uint64(30)
            z *= _MIX1
            z ^= z >> np.uint64(27)
            z *= _MIX2
            z ^= z >> np.uint64(31)
            u1 = (float(z >> np.uint64(11)) + 1.0) * _INV53
            s += _GOLDEN
            z = s
            z ^= z >> np.uint64(30)
            z *= _MIX1
            z ^= z >> np.uint64(27)
            z *= _MIX2
            z ^= z >> np.uint64(31)
            u2 = float(z >> np.uint64(11)) * _INV53
            r = math.sqrt(-2.0 * math.log(u1))
            za = r * math.cos(_TWO_PI * u2)
            zb = r * math.sin(_TWO_PI * u2)
            db1 = sqdt * za
            db2 = sqdt * (rho * za + sq1mr2 * zb)

            t_pos = (x - x_lo) / h
            j = int(t_pos)
            if j < 0:
                j = 0
            elif j > n_cells - 1:
                j = n_cells - 1
            fr = t_pos - j
            th1v = th1[j] + fr * (th1[j + 1] - th1[j])
            th2v = th2[j] + fr * (th2[j + 1] - th2[j])
            qv = qvar[j] + fr * (qvar[j + 1] - qvar[j])
            dr = drift[j] + fr * (drift[j + 1] - drift[j])
            d1 = dif1[j] + fr * (dif1[j + 1] - dif1[j])
            d2 = dif2[j] + fr * (dif2[j + 1] - dif2[j])

            lnh += -th1v * db1 - th2v * db2 - qv * dt
            x += dr * dt + d1 * db1 + d2 * db2
            if x < x_lo:
                x = x_lo
            elif x > x_hi:
                x = x_hi
            w = math.exp(-opq_delta * (k + 1) * dt - q * lnh)
            acc += 0.5 * (wprev + w) * dt
            wprev = w
        out_int[i] = acc
        out_tail[i] = wprev


if HAVE_NUMBA:
    _g_rep_serial = njit(cache=True, fastmath=False)(_g_rep_paths)
    _g_rep_parallel = njit(parallel=True, cache=True, fastmath=False)(_g_rep_paths)
else:
    _g_rep_serial = None
    _g_rep_parallel = None


def _g_rep_numpy(x0, tab: StepTables, dt, n_steps, n_paths, q, opq_delta,
                 rho, sq1mr2, sqdt, seed):
    """Fallback without numba: vectorized over paths, Philox stream.

    Note this draws from a different stream than the compiled kernel, so
    estimates differ within Monte Carlo error; serial/parallel flags are
    irrelevant here (single vectorized pass).
    """
    rng = np.random.Generator(np.random.Philox(seed))
    inv_h = 1.0 / tab.h
    x = np.full(n_paths, x0)
    lnh = np.zeros(n_paths)
    acc = np.zeros(n_paths)
    wprev = np.ones(n_paths)
    for k in range(n_steps):
        z = rng.standard_normal((2, n_paths))
        db1 = sqdt * z[0]
        db2 = sqdt * (rho * z[0] + sq1mr2 * z[1])
        t_pos = (x - tab.x_lo) * inv_h
        idx = np.minimum(t_pos.astype(np.int64), N_TABLE - 2)
        np.maximum(idx, 0, out=idx)
        fr = t_pos - idx
        lnh -= (_interp_tab(tab.th1, idx, fr) * db1
                + _interp_tab(tab.th2, idx, fr) * db2
                + _interp_tab(tab.qvar, idx, fr) * dt)
        x = (x + _interp_tab(tab.drift, idx, fr) * dt
             + _interp_tab(tab.dif1, idx, fr) * db1
             + _interp_tab(tab.dif2, idx, fr) * db2)
        np.clip(x, tab.x_lo, tab.x_hi, out=x)
        w = np.exp(-opq_delta * (k + 1) * dt - q * lnh)
        acc += 0.5 * (wprev + w) * dt
        wprev = w
    return acc, wprev


@dataclass(frozen=True)
class GRepEstimate:
    estimate: float      # Monte Carlo value of the dual integral, signed like g
    target: float        # g at the entry state
    stderr: float
    tail_estimate: float  # frozen-weight bound on the truncated remainder
    n_paths: int
    n_steps: int
    parallel: bool

    @property
    def deviation_sigmas(self) -> float:
        return abs(self.estimate - self.target) / self.stderr


def mc_verify_g(policy: PolicySurface, cfg: SimConfig,
                parallel: bool = True) -> GRepEstimate:
    """Estimate the dual integral that the solved g(x_hat) must equal."""
    sol, dc = policy.sol, policy.dc
    tab = build_step_tables(sol, dc)
    par = policy.params
    q = dc.q
    opq_delta = (1.0 + q) * par.delta
    rho = par.rho
    sq1mr2 = math.sqrt(1.0 - rho * rho)
    dt = cfg.dt
    sqdt = math.sqrt(dt)
    out_int = np.empty(cfg.n_paths)
    out_tail = np.empty(cfg.n_paths)

    if HAVE_NUMBA:
        kern = _g_rep_parallel if parallel else _g_rep_serial
        kern(float(policy.x_hat), tab.x_lo, tab.x_hi, tab.h,
             tab.drift, tab.dif1, tab.dif2, tab.th1, tab.th2, tab.qvar,
             dt, cfg.n_steps, cfg.n_paths, q, opq_delta, rho, sq1mr2, sqdt,
             np.uint64(cfg.seed), out_int, out_tail)
    else:
        out_int, out_tail = _g_rep_numpy(
            float(policy.x_hat), tab, dt, cfg.n_steps, cfg.n_paths, q,
            opq_delta, rho, sq1mr2, sqdt, cfg.seed)

    # fixed reduction order: same arrays, same order, serial or parallel
    mean_int = float(np.mean(out_int))
    stderr = float(np.std(out_int, ddof=1) / math.sqrt(cfg.n_paths))
    estimate = dc.sgn_p * mean_int
    target = float(sol.g_at(policy.x_hat))
    tail = float(np.mean(out_tail)) / opq_delta
    if tail > 0.2 * stderr:
        warnings.warn(
            f"truncated-tail bound {tail:.3e} is not small next to the Monte "
            f"Carlo stderr {stderr:.3e}; lengthen the horizon", TailTooFat)
    return GRepEstimate(estimate=estimate, target=target, stderr=stderr,
                        tail_estimate=tail, n_paths=cfg.n_paths,
                        n_steps=cfg.n_steps, parallel=parallel)


# --- self-financing check ----------------------------------------------------

@dataclass(frozen=True)
class BudgetReport:
    rms: float            # RMS of the per-step budget residual
    max_abs: float
    dt: float
    interior_max: float   # largest |d ln phi1| on steps away from the boundary
    boundary_median: float  # median |dPhi/X| on boundary steps
    clamp_frac: float     # fraction of steps touching a boundary
    adm_min: float        # min liquidation value over paths/time, / initial wealth
    n_boundary: int
    n_interior: int


def mc_verify_budget(policy: PolicySurface, cfg: SimConfig) -> BudgetReport:
    paths = simulate(policy, cfg)
    par = policy.params
    W, St, S2, c = paths.W, paths.S_tilde, paths.S2, paths.c
    dW = np.diff(W, axis=1)
    dSt = np.diff(St, axis=1)
    dS2 = np.diff(S2, axis=1)
    Xk = paths.X[:, :-1]
    pi1k = Xk / (policy.dc.q * policy.sol.g_at(Xk.reshape(-1)).reshape(Xk.shape))
    # pi2 along paths, via the same loadings route as the marks
    pi2k = (paths.phi2[:, :-1] * S2[:, :-1]) / W[:, :-1]
    res = (dW / W[:, :-1]
           - pi1k * dSt / St[:, :-1]
           - pi2k * dS2 / S2[:, :-1]
           + (c[:, :-1] / W[:, :-1]) * paths.dt)
    rms = float(np.sqrt(np.mean(res**2)))
    max_abs = float(np.max(np.abs(res)))

    dphi = np.diff(paths.Phi_up + paths.Phi_down, axis=1)
    boundary = dphi > 0.0
    dlnphi1 = np.abs(np.diff(np.log(np.abs(paths.phi1)), axis=1))
    interior_max = float(dlnphi1[~boundary].max()) if np.any(~boundary) else 0.0
    rel_push = dphi[boundary] / Xk[boundary]
    boundary_median = float(np.median(np.abs(rel_push))) if rel_push.size else 0.0

    lo_mark = (1.0 - par.lambda_sell) * paths.S1
    hi_mark = (1.0 + par.lambda_buy) * paths.S1
    liq = (paths.phi0
           + lo_mark * np.maximum(paths.phi1, 0.0)
           - hi_mark * np.maximum(-paths.phi1, 0.0)
           + S2 * paths.phi2)
    adm_min = float(liq.min() / policy.xi_0)

    return BudgetReport(rms=rms, max_abs=max_abs, dt=paths.dt,
                        interior_max=interior_max,
                        boundary_median=boundary_median,
                        clamp_frac=float(boundary.mean()),
                        adm_min=adm_min,
                        n_boundary=int(boundary.sum()),
                        n_interior=int((~boundary).sum()))
