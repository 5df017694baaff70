"""Nondegeneracy diagnostics for the fast-decay profile v_f.

The linearization phi'' + (N-1)/r phi' + f'(v_f) phi = 0 splits into spherical
modes with the extra term -l_k phi / r^2, l_k = k(k+N-2).  Mode 1 contains
the translation kernel v_f'; the variational solution z0 = dv/dd (mode 0)
must blow up against r^(-lambda_star); modes k >= 2 grow.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import make_interp_spline

from .errors import InvalidArgument
from .fitting import decay_exponent
from .radial_ode import Profile, RadialProblem, StepControls, integrate_ivp, integrate_mode, integrate_variational

DIVERGENT_NEGATIVE = "divergent-negative"
NOT_DIVERGENT = "not-divergent"
GROWTH = "growth"
DECAY = "decay"

# share of decreasing consecutive pairs required over the last decade
DECREASING_SHARE = 0.95
SAMPLES_PER_DECADE = 20


def lambda_star(N: int) -> float:
    if int(N) != N or N < 3:
        raise InvalidArgument("N must be an integer >= 3")
    return 0.5 * (N - 1) if N >= 4 else 0.5


@dataclass(frozen=True)
class DecayDiagnostic:
    lambda_star: float
    samples: tuple
    verdict: str
    decreasing_share: float = 0.0
    z0: Optional[Profile] = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "lambda_star": self.lambda_star,
            "verdict": self.verdict,
            "decreasing_share": self.decreasing_share,
            "samples": [list(s) for s in self.samples],
        }


def _problem(v_f: Profile, N: int, p: float) -> RadialProblem:
    if v_f.meta.get("N", N) != N:
        raise InvalidArgument(f"profile has N={v_f.meta.get('N')}, requested {N}")
    return RadialProblem.zero_mass(N, p)


def trend_verdict(r, s):
    """Divergent-negative when the last decade mostly decreases and ends negative."""
    r, s = np.asarray(r), np.asarray(s)
    last = r >= r[-1] / 10.0
    tail = s[last]
    if tail.size < 2:
        return NOT_DIVERGENT, 0.0
    share = float(np.mean(np.diff(tail) < 0.0))
    ok = share >= DECREASING_SHARE and tail[-1] < 0.0
    return (DIVERGENT_NEGATIVE if ok else NOT_DIVERGENT), share


def z0_diagnostic(v_f: Profile, N: int, p: float, controls: Optional[StepControls] = None) -> DecayDiagnostic:
    """Sample r^lambda_star z0(r) on a log grid and classify its trend."""
    problem = _problem(v_f, N, p)
    z0 = integrate_variational(problem, v_f, controls)
    lam = lambda_star(N)
    lo = max(z0.r_min, 1e-2)
    n = int(np.ceil(np.log10(z0.r_max / lo) * SAMPLES_PER_DECADE)) + 1
    r = np.logspace(np.log10(lo), np.log10(z0.r_max), n)
    s = r**lam * z0(r)
    verdict, share = trend_verdict(r, s)
    return DecayDiagnostic(lam, tuple(zip(r.tolist(), s.tolist())), verdict, share, z0)


def z0_finite_difference(v_f: Profile, N: int, p: float, radii, rel_delta: float = 1e-5) -> np.ndarray:
    """Central difference (v(d+delta) - v(d-delta)) / (2 delta) at the given radii."""
    problem = _problem(v_f, N, p)
    d = float(v_f.meta.get("d", v_f.values[0]))
    delta = rel_delta * d
    radii = np.asarray(radii, dtype=float)
    ctl = StepControls(abs_tol=1e-13, rel_tol=1e-12, r_max=float(radii.max()) * 1.01)
    hi = integrate_ivp(problem, d + delta, ctl)
    lo = integrate_ivp(problem, d - delta, ctl)
    return (hi(radii) - lo(radii)) / (2.0 * delta)


def mode_residual(r, phi, dphi, jac, N: int, k: int = 1, interior=None) -> float:
    """Max pointwise relative residual of a mode-k equation.

    phi'' comes from a quintic spline of phi' in t = log r; each node's
    residual is scaled by the sum of the magnitudes of the four terms.
    """
    r, phi, dphi, jac = (np.asarray(x, dtype=float) for x in (r, phi, dphi, jac))
    lam_k = k * (k + N - 2)
    t = np.log(r)
    spl = make_interp_spline(t, dphi, k=5)
    ddphi = spl(t, 1) / r
    terms = np.vstack([ddphi, (N - 1) / r * dphi, jac * phi, -lam_k / r**2 * phi])
    res = np.abs(terms.sum(axis=0))
    scale = np.abs(terms).sum(axis=0)
    mask = np.ones_like(r, dtype=bool) if interior is None else interior
    mask = mask & (scale > 0.0)
    if not mask.any():
        return 0.0
    return float(np.max(res[mask] / scale[mask]))


def _interior(v_f: Profile, problem: RadialProblem) -> np.ndarray:
    # near the origin the terms cancel to O(r^2) and the check only sees the
    # integrator's absolute tolerance; the outer 5% in log r is spline edge
    d = float(v_f.meta.get("d", v_f.values[0]))
    f0 = abs(problem.source(0.0, d))
    ell = np.sqrt(d / f0) if f0 > 0.0 else 1.0
    t = np.log(v_f.grid)
    edge = t[-1] - 0.05 * (t[-1] - t[0])
    return (v_f.grid >= 1e-2 * ell) & (t <= edge)


def mode1_identity_residual(v_f: Profile, N: int, p: Optional[float] = None, problem: Optional[RadialProblem] = None) -> float:
    """Residual of phi = v_f' in the k = 1 mode equation.

    phi is the stored derivative and phi' = v'' follows from the profile's own
    ODE; phi'' is obtained numerically.  ``problem`` defaults to the
    transformed zero-mass equation.
    """
    if problem is None:
        if p is None:
            raise InvalidArgument("need p or an explicit problem")
        problem = _problem(v_f, N, p)
    r, v, w = v_f.grid, v_f.values, v_f.derivs
    src = np.array([problem.source(ri, vi) for ri, vi in zip(r, v)])
    jac = np.array([problem.jacobian(ri, vi) for ri, vi in zip(r, v)])
    dphi = -(N - 1) / r * w - src
    return mode_residual(r, w, dphi, jac, N, 1, _interior(v_f, problem))


def mode_k_nondecay_check(v_f: Profile, N: int, p: float, k: int, controls: Optional[StepControls] = None) -> dict:
    """Integrate the regular mode-k branch along v_f and fit its tail exponent."""
    if int(k) != k or k < 2:
        raise InvalidArgument("mode_k_nondecay_check needs k >= 2; use mode1_branch_check for k = 1")
    problem = _problem(v_f, N, p)
    phi = integrate_mode(problem, v_f, int(k), controls=controls)
    alpha = phi.tail_exponent()
    return {"k": int(k), "tail_exponent": alpha, "verdict": GROWTH if alpha < 0.0 else DECAY}


def mode1_branch_check(v_f: Profile, N: int, p: float, r_agree: float = 10.0) -> dict:
    """Compare the regular k = 1 branch with v_f' and report the decay of v_f'.

    The regular branch also contains the growing solution ~ r, so any rounding
    is amplified like r^N at large r; agreement is measured on [r_min, r_agree].
    """
    problem = _problem(v_f, N, p)
    phi = integrate_mode(problem, v_f, 1, controls=StepControls(abs_tol=1e-13, rel_tol=1e-12), r_end=min(r_agree, v_f.r_max))
    d = float(v_f.meta.get("d", v_f.values[0]))
    scale = -problem.source(0.0, d) / N
    r = phi.grid
    kernel = v_f(r, 1) / scale
    agreement = float(np.max(np.abs(phi.values - kernel)) / np.max(np.abs(kernel)))
    mask = v_f.grid >= 0.5 * v_f.r_max
    alpha = decay_exponent(v_f.grid[mask], np.abs(v_f.derivs[mask]))
    return {
        "agreement": agreement,
        "r_agree": float(r[-1]),
        "vf_prime_exponent": alpha,
        "verdict": DECAY if alpha > 0.0 else GROWTH,
    }


def nondegeneracy_report(v_f: Profile, N: int, p: float, ks=(2, 3)) -> dict:
    diag = z0_diagnostic(v_f, N, p)
    return {
        "lambda_star": diag.lambda_star,
        "verdict": diag.verdict,
        "mode1_residual": mode1_identity_residual(v_f, N, p),
        "mode1_branch": mode1_branch_check(v_f, N, p),
        "modek_verdicts": {str(k): mode_k_nondecay_check(v_f, N, p, k) for k in ks},
    }
