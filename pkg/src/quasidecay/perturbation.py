"""Slow-decay construction around the rescaled Lane-Emden profile.

With w the entire solution of Delta w + w^p = 0, w(0) = 1, the rescaled problem

    Delta v + lam^(-2p/(p-1)) f(lam^(2/(p-1)) v) = 0

is written as L phi := phi'' + (N-1)/r phi' + p w^(p-1) phi = S(w) + N(phi) for
v = w + phi.  L is inverted by variation of parameters on a uniform grid in
t = log r, and phi is the fixed point of phi -> T(S(w) + N(phi)).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import make_interp_spline

from . import transform
from .errors import ContractionFailure, DegenerateFit, InvalidArgument, PositivityViolation, SolverDegeneracy
from .fitting import decay_exponent, loglog_slope
from .norms import STAR, STAR_STAR, WeightedNormSpec, default_sigma, weighted_sup
from .potentials import PotentialSpec, check_decay_class
from .profiles import ScalingFamily, lane_emden_log_grid
from .radial_ode import Profile, StepControls

log = logging.getLogger(__name__)

GRID_R_MIN = 1e-6
GRID_R_MAX = 1e12
GRID_DT = 0.005
WRONSKIAN_TOL = 1e-6
ODE_RTOL, ODE_ATOL = 1e-13, 1e-16


def _cumulative(g, t):
    # quintic-spline antiderivative: smooth in t, so L T(h) can be checked
    # by differentiating without amplifying node-to-node quadrature noise
    anti = make_interp_spline(t, g, k=5).antiderivative()
    return anti(t) - anti(t[0])


# --- the linear operator ---------------------------------------------------


def _is_log_uniform(r) -> bool:
    dt = np.diff(np.log(r))
    return bool(np.allclose(dt, dt[0], rtol=1e-6, atol=0.0))


class LinearSolver:
    """Causal inverse of L built from the scaling mode Z0 and a second solution Z1.

    Z0 = (2/(p-1)) w + r w' solves L Z0 = 0 exactly.  Z0 changes sign for
    oscillatory approaches to the singular solution, so Z1 is integrated
    directly (from r = 1, with Z1(1) = 0, Z1'(1) = 1) instead of by reduction
    of order.  T(h) is the solution with T(h)(0) = 0.
    """

    def __init__(self, w: Profile, N: int, p: float):
        if not _is_log_uniform(w.grid):
            raise InvalidArgument("the linear solver needs w on a uniform log grid")
        if not (w.grid[0] < 1.0 < w.grid[-1]):
            raise InvalidArgument("the solver grid must straddle r = 1")
        self.N, self.p = int(N), float(p)
        self.w = w
        self.r = w.grid
        self.t = np.log(self.r)
        a = 2.0 / (p - 1.0)
        ww, wp = w.values, w.derivs
        self.Z0 = a * ww + self.r * wp
        self.Z0p = (a + 2.0 - N) * wp - self.r * ww**p
        self.Z1, self.Z1p = self._second_solution()
        wr = self.r ** (N - 1) * (self.Z0 * self.Z1p - self.Z0p * self.Z1)
        W = float(np.median(wr))
        spread = float(np.max(np.abs(wr - W)) / abs(W)) if W != 0.0 else math.inf
        if not spread < WRONSKIAN_TOL:
            raise SolverDegeneracy(f"homogeneous solutions lost independence (Wronskian spread {spread:.2e})")
        self.wronskian = W
        self.wronskian_spread = spread
        self.potential = p * np.maximum(ww, 0.0) ** (p - 1.0)

    def _second_solution(self):
        N, p, r = self.N, self.p, self.r
        i1 = int(np.searchsorted(r, 1.0))
        r1 = r[i1]
        y1 = [self.w.values[i1], self.w.derivs[i1], 0.0, 1.0]

        def rhs(s, y):
            wv = max(y[0], 0.0)
            return [y[1], -(N - 1) / s * y[1] - wv**p, y[3], -(N - 1) / s * y[3] - p * wv ** (p - 1.0) * y[2]]

        opts = dict(method="DOP853", rtol=ODE_RTOL, atol=ODE_ATOL)
        fw = solve_ivp(rhs, (r1, r[-1]), y1, t_eval=r[i1:], **opts)
        bw = solve_ivp(rhs, (r1, r[0]), y1, t_eval=r[: i1 + 1][::-1], **opts)
        if fw.status != 0 or bw.status != 0:
            raise SolverDegeneracy("second homogeneous solution could not be integrated")
        Z1 = np.concatenate([bw.y[2][::-1][:-1], fw.y[2]])
        Z1p = np.concatenate([bw.y[3][::-1][:-1], fw.y[3]])
        return Z1, Z1p

    def solve(self, h):
        """(phi, phi') for L phi = h given h sampled on the solver grid."""
        h = np.asarray(h, dtype=float)
        if h.shape != self.r.shape:
            raise InvalidArgument("right-hand side must be sampled on the solver grid")
        rN = self.r**self.N
        r0 = self.r[0]
        g0, g1 = h * self.Z0 * rN, h * self.Z1 * rN
        # [0, r0] pieces from the leading behaviour Z0 ~ const, Z1 ~ r^(2-N)
        I0 = _cumulative(g0, self.t) + g0[0] / self.N
        I1 = _cumulative(g1, self.t) + 0.5 * h[0] * self.Z1[0] * r0**self.N
        W = self.wronskian
        phi = (self.Z1 * I0 - self.Z0 * I1) / W
        dphi = (self.Z1p * I0 - self.Z0p * I1) / W
        return phi, dphi

    def apply(self, phi, dphi):
        """L phi using phi'' from a quintic spline of phi' in log r."""
        spl = make_interp_spline(self.t, np.asarray(dphi, dtype=float), k=5)
        ddphi = spl(self.t, 1) / self.r
        return ddphi + (self.N - 1) / self.r * dphi + self.potential * phi

    def residual_norm(self, phi, dphi, h, spec: WeightedNormSpec, edge: float = 0.05) -> float:
        """||L phi - h||_** / ||h||_** away from the outer spline edge in log r."""
        h = np.asarray(h, dtype=float)
        res = self.apply(phi, dphi) - h
        keep = self.t <= self.t[-1] - edge * (self.t[-1] - self.t[0])
        spec = spec.with_family(STAR_STAR)
        den = weighted_sup(self.r, h, spec)
        num = weighted_sup(self.r[keep], res[keep], spec)
        return num / den if den > 0.0 else num

    def profile(self, phi, dphi, **meta) -> Profile:
        return Profile(self.r, phi, dphi, dict(N=self.N, p=self.p, **meta))


@lru_cache(maxsize=8)
def _cached_base(N: int, p: float, r_min: float, r_max: float, dt: float):
    w = lane_emden_log_grid(N, p, r_min, r_max, dt, StepControls(abs_tol=ODE_ATOL, rel_tol=ODE_RTOL))
    return w, LinearSolver(w, N, p)


def solver_for(N: int, p: float, r_min: float = GRID_R_MIN, r_max: float = GRID_R_MAX, dt: float = GRID_DT):
    """Lane-Emden base and its linear solver on the standard log grid (cached)."""
    if not p > (N + 2.0) / (N - 2.0):
        raise InvalidArgument(f"p={p} must exceed (N+2)/(N-2)")
    return _cached_base(int(N), float(p), float(r_min), float(r_max), float(dt))


def _solver_matching(w: Profile, N: int, p: float) -> LinearSolver:
    base, solver = solver_for(N, p)
    if w.grid.shape == base.grid.shape and np.array_equal(w.grid, base.grid):
        return solver
    return LinearSolver(w, N, p)


def _on_grid(h: Profile, r) -> np.ndarray:
    if h.grid.shape == r.shape and np.array_equal(h.grid, r):
        return np.asarray(h.values)
    return np.asarray(h(r))


def linear_solve(h: Profile, w: Profile, N: int, p: float, spec: Optional[WeightedNormSpec] = None) -> Profile:
    """phi = T(h) with the a-posteriori ratio ||phi||_* / ||h||_** in meta."""
    if not p > (N + 2.0) / (N - 2.0):
        raise InvalidArgument(f"p={p} must exceed (N+2)/(N-2)")
    spec = spec or WeightedNormSpec(default_sigma(p), p, STAR)
    spec.check_window(0.0, N - 2.0)
    solver = _solver_matching(w, N, p)
    hv = _on_grid(h, solver.r)
    h_norm = weighted_sup(solver.r, hv, spec.with_family(STAR_STAR))
    if not math.isfinite(h_norm):
        raise InvalidArgument("right-hand side has infinite weighted norm")
    phi, dphi = solver.solve(hv)
    phi_norm = weighted_sup(solver.r, phi, spec.with_family(STAR))
    ratio = phi_norm / h_norm if h_norm > 0.0 else 0.0
    return solver.profile(phi, dphi, role="T(h)", h_norm=h_norm, phi_norm=phi_norm, bound_ratio=ratio)


# --- error terms -----------------------------------------------------------


def _scaled_f(lam: float, p: float):
    a = 2.0 / (p - 1.0)
    up, down = lam**a, lam ** (-2.0 * p / (p - 1.0))

    def F(v):
        return down * np.asarray(transform.f(up * np.asarray(v), p))

    def dF(v):
        return lam**-2.0 * np.asarray(transform.f_prime(up * np.asarray(v), p))

    return F, dF


def error_S(family: ScalingFamily) -> Profile:
    """S(w) = w^p - lam^(-2p/(p-1)) f(lam^(2/(p-1)) w), using -Delta w = w^p."""
    w, p, lam = family.base, family.p, family.lam
    F, dF = _scaled_f(lam, p)
    ww = np.maximum(w.values, 0.0)
    S = ww**p - F(ww)
    dS = (p * ww ** (p - 1.0) - dF(ww)) * w.derivs
    return w.mapped(S, dS, role="S(w)", lam=lam)


def nonlinear_N(phi: Profile, family: ScalingFamily, lam: Optional[float] = None, p: Optional[float] = None) -> Profile:
    """N(phi) = F(w) + p w^(p-1) phi - F(w + phi) on the base grid."""
    lam = family.lam if lam is None else lam
    p = family.p if p is None else p
    w = family.base
    ph, dph = _on_grid(phi, w.grid), (phi.derivs if np.array_equal(phi.grid, w.grid) else phi(w.grid, 1))
    v = w.values + ph
    if np.any(v < 0.0):
        i = int(np.argmin(v))
        raise PositivityViolation(f"w + phi = {v[i]:.3e} < 0 at r = {w.grid[i]:.4g}")
    F, dF = _scaled_f(lam, p)
    ww = w.values
    val = F(ww) + p * ww ** (p - 1.0) * ph - F(v)
    der = (dF(ww) * w.derivs + p * (p - 1.0) * ww ** (p - 2.0) * w.derivs * ph
           + p * ww ** (p - 1.0) * dph - dF(v) * (w.derivs + dph))
    return w.mapped(val, der, role="N(phi)", lam=lam)


def scaling_slope(ladder: Sequence[float], evaluator: Callable[[float], float], min_span: float = 8.0) -> float:
    """Least-squares slope of log evaluator(lam) against log lam."""
    lams = np.asarray(list(ladder), dtype=float)
    if lams.size < 3:
        raise InvalidArgument("scaling ladder needs at least three points")
    if np.any(lams <= 0.0) or np.any(np.diff(lams) >= 0.0):
        raise InvalidArgument("scaling ladder must be positive and decreasing")
    if lams[0] / lams[-1] < min_span * (1 - 1e-12):
        raise InvalidArgument(f"scaling ladder spans a factor {lams[0] / lams[-1]:g} < {min_span:g}")
    vals = np.array([float(evaluator(float(l))) for l in lams])
    if np.any(vals == 0.0):
        raise DegenerateFit("a norm on the ladder evaluates to zero")
    return loglog_slope(lams, vals)


def S_norm(lam: float, N: int, p: float, sigma: Optional[float] = None) -> float:
    """||S(w)||_** of the rescaled error on the standard grid."""
    w, _ = solver_for(N, p)
    S = error_S(ScalingFamily(w, lam, p, N))
    spec = WeightedNormSpec(default_sigma(p) if sigma is None else sigma, p, STAR_STAR)
    return weighted_sup(S.grid, S.values, spec)


# --- fixed point -----------------------------------------------------------


@dataclass(frozen=True)
class FixedPointConfig:
    lam: float = 0.05
    max_iterations: int = 400
    contraction_tol: float = 1e-10
    ball_radius_factor: float = 4.0
    sigma: Optional[float] = None
    lam0: float = 0.5

    def __post_init__(self):
        if not (self.lam > 0.0 and math.isfinite(self.lam)):
            raise InvalidArgument("lambda must be positive")
        if self.lam > self.lam0:
            raise InvalidArgument(f"lambda={self.lam:g} exceeds lambda0={self.lam0:g}")
        if self.max_iterations < 1 or not self.contraction_tol > 0.0 or not self.ball_radius_factor > 0.0:
            raise InvalidArgument("iteration controls must be positive")

    def with_lam(self, lam: float) -> "FixedPointConfig":
        return FixedPointConfig(lam, self.max_iterations, self.contraction_tol,
                                self.ball_radius_factor, self.sigma, self.lam0)


class RescaledEvaluator:
    """x -> lam^(2/(p-1)) v(lam |x|), optionally mapped back by G^{-1}."""

    def __init__(self, v: Profile, lam: float, p: float, original: bool = False):
        self.v, self.lam, self.p, self.original = v, lam, p, original
        self.amp = lam ** (2.0 / (p - 1.0))

    @property
    def grid(self) -> np.ndarray:
        return self.v.grid / self.lam

    @property
    def values(self) -> np.ndarray:
        out = self.amp * self.v.values
        return np.asarray(transform.G_inverse(out)) if self.original else out

    def __call__(self, x):
        out = self.amp * np.asarray(self.v(self.lam * np.asarray(x, dtype=float)))
        if self.original:
            out = np.asarray(transform.G_inverse(out))
        return float(out) if out.ndim == 0 else out

    def tail_exponent(self) -> float:
        x = self.grid
        mask = x >= 0.5 * x[-1]
        return decay_exponent(x[mask], self.values[mask])

    def sup(self) -> float:
        return float(np.max(self.values))


def solve_slow_decay(lam: float, N: int, p: float, config: Optional[FixedPointConfig] = None):
    """Picard iteration phi_{k+1} = T(S(w) + N(phi_k)); returns (phi, v_lam, u_lam)."""
    config = (config or FixedPointConfig(lam)).with_lam(lam)
    w, solver = solver_for(N, p)
    sigma = default_sigma(p) if config.sigma is None else config.sigma
    star = WeightedNormSpec(sigma, p, STAR)
    star.check_window(0.0, min(2.0, 2.0 / (p - 1.0)))
    fam = ScalingFamily(w, lam, p, N)
    S = error_S(fam)
    ball = config.ball_radius_factor * lam ** (4.0 / (p - 1.0))
    r = solver.r
    phi = w.mapped(np.zeros_like(r), np.zeros_like(r))
    diffs, norms = [], []
    converged = False
    for k in range(1, config.max_iterations + 1):
        rhs = S.values + nonlinear_N(phi, fam).values
        new, dnew = solver.solve(rhs)
        diff = weighted_sup(r, new - phi.values, star)
        norm = weighted_sup(r, new, star)
        diffs.append(diff)
        norms.append(norm)
        phi = w.mapped(new, dnew)
        if norm > ball:
            raise ContractionFailure(
                f"iterate {k} left the ball: ||phi||_* = {norm:.3e} > {ball:.3e}",
                list(zip(norms, diffs)),
            )
        if diff <= config.contraction_tol:
            converged = True
            break
    if not converged:
        raise ContractionFailure(
            f"no convergence after {config.max_iterations} iterations (last step {diffs[-1]:.3e})",
            list(zip(norms, diffs)),
        )
    ratios = [b / a for a, b in zip(diffs, diffs[1:]) if a > 0.0]
    kappa = max(ratios[1:]) if len(ratios) > 1 else (ratios[0] if ratios else 0.0)
    v = w.values + phi.values
    F, _ = _scaled_f(lam, p)
    res = solver.apply(phi.values, phi.derivs) - S.values - nonlinear_N(phi, fam).values
    fterm = weighted_sup(r, F(v), star.with_family(STAR_STAR))
    residual = weighted_sup(r, res, star.with_family(STAR_STAR)) / fterm
    phi_norm = norms[-1]
    meta = {
        "role": "phi", "lam": lam, "sigma": sigma, "iterations": len(diffs),
        "contraction_factor": kappa, "kappa_trace": ratios, "step_norms": diffs,
        "phi_star_norm": phi_norm, "ball_radius": ball,
        "normalized_norm": phi_norm / lam ** (4.0 / (p - 1.0)), "residual": residual,
    }
    phi = solver.profile(phi.values, phi.derivs, **meta)
    vprof = Profile(r, v, w.derivs + phi.derivs, {"N": N, "p": p, "lam": lam, "role": "v"})
    log.info("lambda=%g converged in %d iterations, kappa=%.3f", lam, len(diffs), kappa)
    return phi, RescaledEvaluator(vprof, lam, p), RescaledEvaluator(vprof, lam, p, original=True)


# --- potential terms -------------------------------------------------------


def scaled_potential(V: PotentialSpec, lam: float, r) -> np.ndarray:
    """V_lam(r) = lam^(-2) V(r / lam) for a potential centered at the origin."""
    return lam**-2.0 * np.asarray(V.radial_values(np.asarray(r) / lam))


def potential_terms(family: ScalingFamily, V: PotentialSpec, lam: Optional[float] = None, p: Optional[float] = None):
    """S1(w) = S(w) + V_lam lam^(-a) h(lam^a w) and the operator P on profiles."""
    lam = family.lam if lam is None else lam
    p = family.p if p is None else p
    w = family.base
    check_decay_class(V, family.N, w.grid / lam)
    a = 2.0 / (p - 1.0)
    up = lam**a
    Vl = scaled_potential(V, lam, w.grid)
    S = error_S(family)
    hw = np.asarray(transform.h(up * w.values)) / up
    S1 = w.mapped(S.values + Vl * hw, S.derivs, role="S1(w)", lam=lam)

    def P(phi: Profile) -> Profile:
        ph = _on_grid(phi, w.grid)
        val = Vl * ((np.asarray(transform.h(up * (w.values + ph))) - np.asarray(transform.h(up * w.values))) / up - ph)
        return w.mapped(val, np.zeros_like(val), role="P(phi)", lam=lam)

    def dP(phi: Profile) -> np.ndarray:
        ph = _on_grid(phi, w.grid)
        return Vl * (np.asarray(transform.h_prime(up * (w.values + ph))) - 1.0)

    P.derivative = dP
    return S1, P


def potential_term_norm(family: ScalingFamily, V: PotentialSpec, theta: float) -> float:
    """||lam^(-a) V_lam h(lam^a w)||_** in the theta variant of the norm."""
    lam, p, w = family.lam, family.p, family.base
    up = lam ** (2.0 / (p - 1.0))
    vals = scaled_potential(V, lam, w.grid) * np.asarray(transform.h(up * w.values)) / up
    return weighted_sup(w.grid, vals, WeightedNormSpec(theta, p, STAR_STAR))
