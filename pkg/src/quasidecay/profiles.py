"""Lane-Emden baseline w, the singular-solution constant and the scaling family.

For p above the Sobolev exponent the entire solution of w'' + (N-1)/r w' + w^p = 0,
w(0) = 1, stays positive and approaches C r^(-2/(p-1)).  For N = 3, p = 7 the
approach oscillates in log r with a relative amplitude decaying like r^(-1/6),
so the default range is long enough for a 5% tail fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np

from .errors import InconsistentProfile, InvalidArgument
from .radial_ode import Profile, RadialProblem, StepControls, integrate_ivp

LANE_EMDEN_R_MAX = 1e9
LANE_EMDEN_CONTROLS = StepControls(abs_tol=1e-14, rel_tol=1e-12, r_max=LANE_EMDEN_R_MAX)


def _require_supercritical(N: int, p: float) -> None:
    if int(N) != N or N < 3:
        raise InvalidArgument(f"dimension N must be an integer >= 3, got {N}")
    if not p > (N + 2.0) / (N - 2.0):
        raise InvalidArgument(f"p={p} must exceed (N+2)/(N-2)={(N + 2.0) / (N - 2.0):g}")


def lane_emden(N: int, p: float, controls: StepControls = LANE_EMDEN_CONTROLS, nodes=None) -> Profile:
    """Entire solution w with w(0) = 1; a sign crossing is fatal."""
    _require_supercritical(N, p)
    prof = integrate_ivp(RadialProblem.lane_emden(N, p), 1.0, controls, nodes=nodes)
    if prof.termination != "reached-r-max":
        raise InconsistentProfile(
            f"Lane-Emden integration ended with {prof.termination} at r={prof.r_max:g}"
        )
    if np.any(prof.values <= 0.0):
        raise InconsistentProfile("Lane-Emden profile lost positivity")
    return prof.mapped(prof.values, prof.derivs, role="lane-emden")


def lane_emden_log_grid(
    N: int, p: float, r_min: float = 1e-6, r_max: float = 1e6, dt: float = 0.005,
    controls: StepControls = LANE_EMDEN_CONTROLS,
) -> Profile:
    """w sampled directly on a uniform grid in t = log r."""
    if not 0.0 < r_min < 1.0 < r_max:
        raise InvalidArgument("log grid must straddle r = 1")
    t = np.arange(math.log(r_min), math.log(r_max) + 0.5 * dt, dt)
    return lane_emden(N, p, controls, nodes=np.exp(t))


def singular_constant(N: int, p: float) -> float:
    """C with C^(p-1) = (2/(p-1)) (N - 2 - 2/(p-1))."""
    _require_supercritical(N, p)
    a = 2.0 / (p - 1.0)
    return (a * (N - 2.0 - a)) ** (1.0 / (p - 1.0))


def singular_residual(N: int, p: float, r: float) -> float:
    """Radial Lane-Emden operator applied to C r^(-2/(p-1)), relative to the w^p term."""
    C = singular_constant(N, p)
    a = 2.0 / (p - 1.0)
    u = C * r**-a
    lap = C * a * (a + 2.0 - N) * r ** (-a - 2.0)
    return abs(lap + u**p) / u**p


@dataclass(frozen=True)
class ScalingFamily:
    """w_lam(r) = lam^(2/(p-1)) w(lam r) built on a base profile with w(0) = 1."""

    base: Profile
    lam: float
    p: float
    N: int

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0.0):
            raise InvalidArgument(f"scale must be positive, got {self.lam}")
        if not self.p > 1.0:
            raise InvalidArgument("p must exceed 1")

    @property
    def amplitude(self) -> float:
        return self.lam ** (2.0 / (self.p - 1.0))

    def __call__(self, r, nu: int = 0):
        out = self.amplitude * self.lam**nu * np.asarray(self.base(self.lam * np.asarray(r, dtype=float), nu))
        return float(out) if out.ndim == 0 else out

    def compose(self, lam: float) -> "ScalingFamily":
        return ScalingFamily(self.base, self.lam * lam, self.p, self.N)


def rescale(family: ScalingFamily, r):
    """lam^(2/(p-1)) w(lam r), continued by the fitted tail power law off the grid."""
    return family(r)


def family_residual(family: ScalingFamily, r, controls: StepControls = LANE_EMDEN_CONTROLS) -> np.ndarray:
    """Relative gap between w_lam and a direct solve of the pure-power IVP.

    Scaling invariance makes w_lam the solution with v(0) = lam^(2/(p-1)),
    so an independent integration from that height checks the rescaling.
    """
    r = np.sort(np.atleast_1d(np.asarray(r, dtype=float)))
    r0 = min(float(r[0]), 1e-6) * 0.5
    direct = integrate_ivp(
        RadialProblem.lane_emden(family.N, family.p), family.amplitude, controls,
        nodes=np.concatenate([[r0], r]),
    )
    v = direct.values[1:]
    return np.abs(family(r) - v) / np.abs(v)
