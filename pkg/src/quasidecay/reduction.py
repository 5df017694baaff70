"""Reduced objects for the fast-decay problem under a small potential eps V.

With v_f radial about the origin and V(y - xi) the shifted potential,

    E(v_f)(x) = eps V(x - xi) h(v_f(|x|)),   h(s) = G^{-1}(s) / g(G^{-1}(s))
    G(xi)     = int v_f(|y|)^2 V(y - xi) dy

and the concentration point is read off the maximizer of G.  Every potential
component is radial about a point on the first axis, so each integral reduces
to (rho, theta) about that component's center, with theta measured toward
the origin:

    dy = omega_{N-2} rho^(N-1) sin^(N-2)(theta) drho dtheta.

Note the sign: a bump centered at a contributes V0(|y - xi - a|), so G peaks
at xi = -a and the solution concentrates at -xi = a.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import transform
from .errors import DivergentIntegral, InvalidArgument
from .norms import BRACKET_STAR_STAR, WeightedNormSpec, bracket_weight
from .potentials import GAUSSIAN, PotentialSpec, check_decay_class
from .radial_ode import Profile

GAUSS_POINTS = 16
# exp(-x^2) underflows below the double range past this many scales
GAUSSIAN_CUTOFF = 27.5
POWER_CUTOFF = 1e4
INTEGRABILITY_MARGIN = 0.1
# phase-space resolution of the sup in E_error_norm
NORM_DECADES = (-3.0, 4.0)
NORM_RADII = 421
NORM_ANGLES = 181


class BoundaryMaximumWarning(UserWarning):
    """The maximizer of G sits on |xi| = Lambda; the search radius is too small."""


def _omega(n: int) -> float:
    # area of the unit sphere S^n embedded in R^(n+1)
    return 2.0 * math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0)


def _gauss(breaks, n=GAUSS_POINTS):
    x, w = leggauss(n)
    a, b = np.asarray(breaks[:-1]), np.asarray(breaks[1:])
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b))[:, None] + half[:, None] * x[None, :]
    weights = half[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


def core_scale(v_f: Profile) -> float:
    """Radius where v_f first drops to half its central value."""
    v = v_f.values
    below = np.nonzero(v <= 0.5 * v[0])[0]
    if below.size == 0:
        return float(v_f.r_max)
    return float(v_f.grid[below[0]])


def fast_exponent(v_f: Profile) -> float:
    return float(v_f.tail_exponent())


def _check_integrable(v_f: Profile, V: PotentialSpec, N: int) -> float:
    alpha = fast_exponent(v_f)
    mu = V.tail_exponent()
    total = 2.0 * alpha + mu
    if not total > N + INTEGRABILITY_MARGIN:
        raise DivergentIntegral(
            f"v_f^2 V behaves like |y|^({-total:.3g}); needs faster than |y|^(-{N})", term="v_f^2 V"
        )
    return total


def _radial_breaks(s: float, ell: float, L: float, cut: float) -> np.ndarray:
    pts = [0.0, cut]
    for m in (ell, L):
        k = np.arange(-6, 60)
        pts.extend((m * 2.0**k)[m * 2.0**k < cut])
    if s > 0.0:
        pts.append(s)
        k = np.arange(-4, 60)
        off = ell * 2.0**k
        off = off[off < s]
        pts.extend(s - off)
        pts.extend(s + off)
    b = np.unique(np.clip(np.asarray(pts), 0.0, cut))
    keep = np.concatenate([[True], np.diff(b) > 1e-12 * cut])
    return b[keep]


def _angle_breaks(s: float, ell: float) -> np.ndarray:
    depth = 2
    if s > 0.0:
        depth = max(depth, int(math.ceil(math.log2(max(math.pi * s / ell, 1.0)))) + 4)
    return np.concatenate([[0.0], math.pi * 2.0 ** -np.arange(depth, -1, -1.0)])


def _component_integral(v_f: Profile, c: PotentialSpec, s: float, N: int, ell: float) -> float:
    """int v_f(|y|)^2 V0(|y - P|) dy with |P| = s."""
    L = c.scale
    gaussian = c.kind == GAUSSIAN
    cut = (GAUSSIAN_CUTOFF * L + s) if gaussian else POWER_CUTOFF * max(L, s, ell)
    rho, wr = _gauss(_radial_breaks(s, ell, L, cut))
    th, wt = _gauss(_angle_breaks(s, ell))
    cos_t, sin_t = np.cos(th), np.sin(th)
    wt = wt * sin_t ** (N - 2)
    omega = _omega(N - 2)

    def shells(radii):
        q2 = radii[:, None] ** 2 + s * s - 2.0 * s * radii[:, None] * cos_t[None, :]
        vf = v_f(np.sqrt(np.maximum(q2, 0.0)))
        ang = (vf * vf) @ wt
        return omega * ang * np.asarray(c.profile(radii)) * radii ** (N - 1)

    body = float(shells(rho) @ wr)
    if gaussian:
        return body
    ends = np.array([0.5 * cut, cut])
    tail_vals = shells(ends)
    if np.any(tail_vals <= 0.0):
        return body
    beta = -math.log(tail_vals[1] / tail_vals[0]) / math.log(2.0)
    if not beta > 1.0:
        raise DivergentIntegral(f"radial integrand behaves like rho^({-beta:.3g})", term="v_f^2 V")
    return body + float(tail_vals[1] * cut / (beta - 1.0))


def reduced_functional(v_f: Profile, V: PotentialSpec, xi_offset: float, N: Optional[int] = None) -> float:
    """G(xi) for xi = xi_offset e_1, summed over the potential's components."""
    N = int(v_f.meta.get("N", 3) if N is None else N)
    _check_integrable(v_f, V, N)
    ell = core_scale(v_f)
    total = 0.0
    for c in V.components:
        s = abs(float(xi_offset) + c.center)
        total += _component_integral(v_f, c, s, N, ell)
    return total


# --- error norm --------------------------------------------------------------


def _norm_points(center: float, scale: float):
    """(axial, radial) sample points on a polar grid about an axial center."""
    d = np.concatenate([[0.0], scale * np.logspace(*NORM_DECADES, NORM_RADII)])
    th = np.linspace(0.0, math.pi, NORM_ANGLES)
    ax = center + d[:, None] * np.cos(th)[None, :]
    rad = d[:, None] * np.sin(th)[None, :]
    return ax.ravel(), rad.ravel()


def E_values(v_f: Profile, V: PotentialSpec, eps: float, xi_offset: float, axial, radial) -> np.ndarray:
    """eps V(x - xi) h(v_f(|x|)) at points given by axial and off-axis coordinates."""
    axial = np.asarray(axial, dtype=float)
    radial = np.asarray(radial, dtype=float)
    vf = v_f(np.hypot(axial, radial))
    return eps * np.asarray(V(axial - xi_offset, radial)) * np.asarray(transform.h(vf))


def E_error_norm(v_f: Profile, V: PotentialSpec, eps: float, xi_offset: float,
                 spec: WeightedNormSpec, N: Optional[int] = None) -> float:
    """Discrete sup of <x - xi>^(2+sigma) |E(v_f)| over an axially symmetric grid."""
    N = int(v_f.meta.get("N", 3) if N is None else N)
    p = spec.p
    spec.check_window(2.0 / (p - 1.0), N - 2.0)
    if spec.family != BRACKET_STAR_STAR:
        spec = spec.with_family(BRACKET_STAR_STAR)
    if not (math.isfinite(eps) and eps >= 0.0):
        raise InvalidArgument("eps must be a finite non-negative number")
    if eps == 0.0:
        return 0.0
    ell = core_scale(v_f)
    pts = [_norm_points(0.0, ell), _norm_points(xi_offset, ell)]
    for c in V.components:
        pts.append(_norm_points(xi_offset + c.center, c.scale))
    ax = np.concatenate([a for a, _ in pts])
    rad = np.concatenate([b for _, b in pts])
    E = E_values(v_f, V, 1.0, xi_offset, ax, rad)
    weight = bracket_weight(np.hypot(ax - xi_offset, rad), spec)
    return eps * float(np.max(weight * np.abs(E)))


def h_bound_violation(v_f: Profile, V: PotentialSpec, eps: float, xi_offset: float) -> float:
    """max(|E| - eps V v_f) on the norm grid; non-positive when |h(s)| <= s holds."""
    ell = core_scale(v_f)
    ax, rad = _norm_points(xi_offset, ell)
    E = E_values(v_f, V, eps, xi_offset, ax, rad)
    bound = eps * np.asarray(V(ax - xi_offset, rad)) * v_f(np.hypot(ax, rad))
    return float(np.max(np.abs(E) - bound))


# --- critical point search ---------------------------------------------------


@dataclass(frozen=True)
class ReductionResult:
    xi_grid: tuple
    G_values: tuple
    argmax: float
    concentration_point: float
    gradient: float
    left_slope: float
    right_slope: float
    symmetry_residual: float
    boundary_ratio: float
    boundary_warning: bool
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def spacing(self) -> float:
        return float(self.xi_grid[1] - self.xi_grid[0])

    def to_dict(self) -> dict:
        return {
            "argmax": self.argmax,
            "concentration_point": self.concentration_point,
            "gradient": self.gradient,
            "left_slope": self.left_slope,
            "right_slope": self.right_slope,
            "symmetry_residual": self.symmetry_residual,
            "boundary_ratio": self.boundary_ratio,
            "boundary_warning": self.boundary_warning,
            "spacing": self.spacing,
        }


def find_critical_xi(v_f: Profile, V: PotentialSpec, Lambda: float, points: int = 101,
                     N: Optional[int] = None, workers: Optional[int] = None) -> ReductionResult:
    """Grid search for the maximizer of G on [-Lambda, Lambda] e_1."""
    if not (math.isfinite(Lambda) and Lambda > 0.0):
        raise InvalidArgument("Lambda must be positive")
    if int(points) != points or points < 3:
        raise InvalidArgument("need at least three grid points")
    N = int(v_f.meta.get("N", 3) if N is None else N)
    check_decay_class(V, N, np.logspace(-3, 4, 200) * max(c.scale for c in V.components))
    xi = np.linspace(-Lambda, Lambda, int(points))
    xi[np.abs(xi) < 1e-14 * Lambda] = 0.0
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            G = np.array(list(pool.map(lambda x: reduced_functional(v_f, V, x, N), xi)))
    else:
        G = np.array([reduced_functional(v_f, V, x, N) for x in xi])
    if np.any(G <= 0.0):
        raise InvalidArgument("reduced functional is not positive on the grid")
    i = int(np.argmax(G))
    dx = float(xi[1] - xi[0])
    left = float((G[i] - G[i - 1]) / dx) if i > 0 else math.nan
    right = float((G[i + 1] - G[i]) / dx) if i < G.size - 1 else math.nan
    if 0 < i < G.size - 1:
        grad = float((G[i + 1] - G[i - 1]) / (2.0 * dx))
    else:
        grad = left if i > 0 else right
    sym = float(np.max(np.abs(G - G[::-1])) / np.max(G))
    ratio = float(max(G[0], G[-1]) / G[i])
    boundary = i in (0, G.size - 1)
    if boundary:
        warnings.warn(f"maximum of G at the boundary xi = {xi[i]:g}; increase Lambda", BoundaryMaximumWarning)
    return ReductionResult(
        xi_grid=tuple(xi.tolist()), G_values=tuple(G.tolist()), argmax=float(xi[i]),
        concentration_point=float(-xi[i]) + 0.0, gradient=grad, left_slope=left, right_slope=right,
        symmetry_residual=sym, boundary_ratio=ratio, boundary_warning=boundary,
        meta={"N": N, "Lambda": float(Lambda), "points": int(points)},
    )


def E_norm_ladder(v_f: Profile, V: PotentialSpec, p: float, xi_offset: float = 0.0,
                  eps_values=(1e-1, 1e-2, 1e-3), sigma: Optional[float] = None,
                  N: Optional[int] = None) -> list:
    """E_error_norm / eps across an eps ladder; sigma defaults to the window midpoint."""
    N = int(v_f.meta.get("N", 3) if N is None else N)
    sigma = 0.5 * (2.0 / (p - 1.0) + N - 2.0) if sigma is None else sigma
    spec = WeightedNormSpec(sigma, p, BRACKET_STAR_STAR, center=xi_offset)
    out = []
    for e in eps_values:
        val = E_error_norm(v_f, V, e, xi_offset, spec, N)
        out.append({"eps": float(e), "norm": val, "ratio": val / e})
    return out
