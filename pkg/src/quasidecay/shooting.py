"""Shooting classification for the transformed zero-mass problem.

A trajectory of v'' + (N-1)/r v' + f(v) = 0, v(0) = d is either crossing
(it changes sign), fast decaying (v ~ r^(2-N)) or slow decaying
(v ~ r^(-2/(p-1))).  Bisection between a crossing and a positive trajectory
isolates the unique fast-decay height d* in the window
(N+2)/(N-2) < p < (3N+2)/(N-2).
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import BracketInvalid, ConvergenceFailure, InvalidArgument
from .fitting import decay_exponent
from .radial_ode import Profile, RadialProblem, StepControls, integrate_ivp
from .transform import F_antiderivative, f as f_transformed

log = logging.getLogger(__name__)

CROSSING = "crossing"
FAST = "fast-decay"
SLOW = "slow-decay"
UNDETERMINED = "undetermined"

MIN_TAIL_NODES = 8


@dataclass(frozen=True)
class ShotClass:
    """Outcome of classifying one trajectory.

    For crossings ``r_cross`` is the located zero, or ``None`` when the
    crossing is certified (r^(N-2) v already decreasing) but lies beyond
    the integration range; ``certified_at`` holds that radius.
    """

    kind: str
    exponent: Optional[float] = None
    r_cross: Optional[float] = None
    reason: Optional[str] = None
    certified_at: Optional[float] = None

    @property
    def is_fast(self) -> bool:
        return self.kind == FAST


@dataclass(frozen=True)
class ShootConfig:
    r_max: float = 200.0
    tail_window: Optional[tuple] = None
    tau_fast: float = 0.15
    tau_slow: float = 0.15
    bracket: tuple = (1e-2, 1e2)
    bisection_tol: float = 1e-12
    max_iterations: int = 200
    refine_r_max: float = 1000.0
    flatness_tol: float = 0.10
    controls: StepControls = field(default_factory=StepControls)

    def __post_init__(self):
        lo, hi = self.window
        if not (0.0 < lo < hi <= self.r_max):
            raise InvalidArgument(f"tail window {self.window} must lie in (0, r_max]")
        for tau in (self.tau_fast, self.tau_slow):
            if not 0.0 < tau < 0.5:
                raise InvalidArgument("exponent tolerances must lie in (0, 0.5)")
        a, b = self.bracket
        if not (0.0 < a < b):
            raise InvalidArgument("bracket must be an increasing pair of positive heights")

    @property
    def window(self) -> tuple:
        if self.tail_window is None:
            return (0.5 * self.r_max, self.r_max)
        return tuple(self.tail_window)

    def step_controls(self, r_max: Optional[float] = None) -> StepControls:
        return self.controls.with_r_max(self.r_max if r_max is None else r_max)


def admissible_window(N: int) -> tuple:
    return ((N + 2.0) / (N - 2.0), (3.0 * N + 2.0) / (N - 2.0))


def classify_shot(profile: Profile, N: int, p: float, config: ShootConfig = ShootConfig()) -> ShotClass:
    """Classify a zero-mass trajectory by crossing status and tail exponent."""
    term = profile.termination
    if term == "sign-crossing":
        return ShotClass(CROSSING, r_cross=profile.meta.get("r_cross"))
    flux_turn = profile.meta.get("flux_turn")
    if flux_turn is not None:
        return ShotClass(CROSSING, certified_at=float(flux_turn), reason="flux-turn")
    if term == "blow-up":
        return ShotClass(UNDETERMINED, reason="blow-up")
    if term == "step-failure":
        return ShotClass(UNDETERMINED, reason="step-failure")
    lo, hi = config.window
    mask = (profile.grid >= lo) & (profile.grid <= hi)
    if mask.sum() < MIN_TAIL_NODES:
        return ShotClass(UNDETERMINED, reason="insufficient-tail")
    r, v = profile.grid[mask], profile.values[mask]
    if np.any(v <= 0.0):
        return ShotClass(UNDETERMINED, reason="non-positive-tail")
    alpha = decay_exponent(r, v)
    if _pohozaev_obstructed(profile, N, p):
        return ShotClass(UNDETERMINED, exponent=alpha, reason="pohozaev-obstruction")
    fast = N - 2.0
    slow = 2.0 / (p - 1.0)
    scaled = r ** (N - 2) * v
    flat = np.ptp(scaled) / np.mean(scaled) < config.flatness_tol
    if abs(alpha - fast) <= config.tau_fast * fast and flat:
        return ShotClass(FAST, exponent=alpha)
    if abs(alpha - slow) <= config.tau_slow * slow:
        return ShotClass(SLOW, exponent=alpha)
    return ShotClass(UNDETERMINED, exponent=alpha, reason="exponent-mismatch")


def pohozaev_function(profile: Profile, N: int, p: float):
    """P(r) = r^N (v'^2/2 + F(v)) + (N-2)/2 r^(N-1) v v' along a profile.

    P(0) = 0, P' = r^(N-1) [N F(v) - (N-2)/2 v f(v)], and P -> 0 along any
    fast-decaying trajectory.
    """
    r, v, w = profile.grid, profile.values, profile.derivs
    F = F_antiderivative(np.maximum(v, 0.0), p)
    return r**N * (0.5 * w * w + F) + 0.5 * (N - 2) * r ** (N - 1) * v * w


def _pohozaev_obstructed(profile: Profile, N: int, p: float) -> bool:
    # P(r_end) > 0 and P' >= 0 for every later value of the decreasing v
    # keep P away from zero, which rules out fast decay.
    v_end = float(profile.values[-1])
    if v_end <= 0.0 or profile.derivs[-1] >= 0.0:
        return False
    if p > (N + 2.0) / (N - 2.0):
        # the small-v limit of P' is negative
        return False
    s = v_end * np.logspace(-12.0, 0.0, 400)
    rate = N * F_antiderivative(s, p) - 0.5 * (N - 2) * s * f_transformed(s, p)
    if np.any(rate < -1e-14 * np.abs(s * f_transformed(s, p))):
        return False
    return float(pohozaev_function(profile, N, p)[-1]) > 0.0


def shoot(N: int, p: float, d: float, config: ShootConfig = ShootConfig()):
    """Integrate from height d and classify; returns (ShotClass, Profile)."""
    problem = RadialProblem.zero_mass(N, p)
    prof = integrate_ivp(problem, d, config.step_controls())
    return classify_shot(prof, N, p, config), prof


def _heads_down(problem: RadialProblem, d: float, controls: StepControls) -> bool:
    prof = integrate_ivp(problem, d, controls, stop_on_flux_turn=True)
    return prof.termination == "sign-crossing" or prof.meta.get("flux_turn") is not None


def find_fast_decay(N: int, p: float, config: ShootConfig = ShootConfig()):
    """Bisect for the fast-decay height d*; returns (d_star, v_f profile).

    The bisection predicate is "the trajectory is certified to cross", which
    holds exactly above d*.  Each probe integrates to ``refine_r_max`` so the
    certificate is reached well before the slow-decay regime masks it.
    """
    lo_p, hi_p = admissible_window(N)
    if not (lo_p < p < hi_p):
        raise InvalidArgument(
            f"p={p} outside the fast-decay window ({lo_p:g}, {hi_p:g}) for N={N}"
        )
    problem = RadialProblem.zero_mass(N, p)
    lo, hi = config.bracket
    probe = config.step_controls(max(config.refine_r_max, config.r_max) * 10.0)
    cls_lo, _ = shoot(N, p, lo, config)
    cls_hi, _ = shoot(N, p, hi, config)
    if cls_lo.kind == cls_hi.kind or FAST in (cls_lo.kind, cls_hi.kind):
        raise BracketInvalid(
            f"bracket ends classify as {cls_lo.kind} and {cls_hi.kind}; need two distinct non-fast classes"
        )
    down_lo, down_hi = _heads_down(problem, lo, probe), _heads_down(problem, hi, probe)
    if down_lo == down_hi:
        raise BracketInvalid("bracket ends lie on the same side of d*")
    if down_lo:
        raise BracketInvalid("crossing side must be the upper end of the bracket")
    trace = []
    tightened = False
    for it in range(config.max_iterations):
        if hi / lo - 1.0 <= config.bisection_tol:
            break
        mid = math.sqrt(lo * hi) if hi / lo > 2.0 else 0.5 * (lo + hi)
        if not tightened and hi / lo - 1.0 < 1e-6:
            # switch to tightened tolerances for the final digits
            probe = probe.tightened(0.1)
            tightened = True
            widen = 1e-6
            while _heads_down(problem, lo, probe) and widen < 1e-2:
                lo, widen = lo * (1 - widen), widen * 4
            widen = 1e-6
            while not _heads_down(problem, hi, probe) and widen < 1e-2:
                hi, widen = hi * (1 + widen), widen * 4
            continue
        down = _heads_down(problem, mid, probe)
        trace.append((mid, down))
        if down:
            hi = mid
        else:
            lo = mid
    else:
        raise ConvergenceFailure("bisection did not reach the requested width", trace)
    # lo is certified not to cross under the probe controls out to 10x the
    # refinement radius, so integrating it with those same controls keeps v_f
    # on the decaying side of the predicate
    d_star = lo
    v_f = integrate_ivp(problem, d_star, probe.with_r_max(config.refine_r_max))
    refine_cfg = ShootConfig(
        r_max=config.refine_r_max, tau_fast=config.tau_fast, tau_slow=config.tau_slow,
        bracket=config.bracket, flatness_tol=config.flatness_tol, controls=config.controls,
    )
    cls = classify_shot(v_f, N, p, refine_cfg)
    if not cls.is_fast:
        raise ConvergenceFailure(
            f"bisection midpoint d={d_star!r} classifies as {cls.kind}", trace
        )
    v_f.meta.update({"d_star": d_star, "tail_exponent": cls.exponent, "bisection_steps": len(trace)})
    log.info("d* = %.15g for N=%d p=%g after %d probes", d_star, N, p, len(trace))
    return d_star, v_f


def _scan_point(args):
    N, p, d, config = args
    cls, _ = shoot(N, p, d, config)
    return cls


def scan_structure(N: int, p: float, d_grid: Sequence[float], config: ShootConfig = ShootConfig(), workers: int = 1):
    """Classify one trajectory per height; deterministic for fixed controls."""
    d_grid = [float(d) for d in d_grid]
    if any(d <= 0.0 for d in d_grid) or any(b <= a for a, b in zip(d_grid, d_grid[1:])):
        raise InvalidArgument("d_grid must be positive and increasing")
    jobs = [(N, p, d, config) for d in d_grid]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            classes = list(pool.map(_scan_point, jobs))
    else:
        classes = [_scan_point(j) for j in jobs]
    return list(zip(d_grid, classes))


def sign_changes(scan) -> int:
    """Transitions between crossing and positive (fast or slow) classes."""
    sides = [c.kind == CROSSING for _, c in scan if c.kind != UNDETERMINED]
    return sum(1 for a, b in zip(sides, sides[1:]) if a != b)


def class_changes(scan) -> int:
    """Number of adjacent grid points whose class kinds differ, ignoring undetermined."""
    kinds = [c.kind for _, c in scan if c.kind != UNDETERMINED]
    return sum(1 for a, b in zip(kinds, kinds[1:]) if a != b)
