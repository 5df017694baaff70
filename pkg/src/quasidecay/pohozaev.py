"""Pohozaev and energy identities for radial solutions in the original variable u.

A decaying solution of -Delta u - u Delta(u^2) = u^p satisfies

    (N-2)/2 int (1 + 2u^2)|grad u|^2 = N/(p+1) int u^(p+1)
    int |grad u|^2 + 4 int u^2 |grad u|^2 = int u^(p+1)

and the coefficient signs of their combination decide nonexistence.
Radial integrals are computed in t = log r with a fitted power-law tail.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import simpson

from .errors import DivergentIntegral, InvalidArgument
from .fitting import loglog_slope
from .radial_ode import Profile
from .transform import G_inverse, g

NONEXISTENCE = "nonexistence"
INCONCLUSIVE = "inconclusive"

# tail integrands must decay faster than r^(-1) by this factor
INTEGRABILITY_MARGIN = 1.1


@dataclass(frozen=True)
class IdentityReport:
    lhs: float
    rhs: float
    residual: float
    truncation_tail_estimate: float
    lhs_tail: float = 0.0
    rhs_tail: float = 0.0
    r_max: float = math.inf
    surface_measure: float = 1.0

    def to_dict(self) -> dict:
        return asdict(self)


def surface_measure(N: int) -> float:
    """Area of the unit sphere in R^N."""
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


def to_original(v: Profile) -> Profile:
    """u = G^{-1}(v) and u' = v' / g(u) on the same grid."""
    u = np.asarray(G_inverse(v.values))
    return v.mapped(u, v.derivs / np.asarray(g(u)), variable="u")


def _radial_integral(r, integrand, name: str):
    """int_r0^R I r^(N-1) dr (integrand already weighted) plus the tail estimate."""
    if not np.any(integrand):
        return 0.0, 0.0
    t = np.log(r)
    body = float(simpson(integrand * r, x=t))
    hi = r[-1]
    mask = r >= 0.5 * hi
    tail_vals = np.abs(integrand[mask])
    if mask.sum() < 4 or np.any(tail_vals == 0.0):
        return body, 0.0
    beta = -loglog_slope(r[mask], tail_vals)
    if beta < INTEGRABILITY_MARGIN:
        raise DivergentIntegral(
            f"term '{name}' behaves like r^({-beta:.3g}); not integrable at infinity", term=name
        )
    tail = float(integrand[-1] * hi / (beta - 1.0))
    return body, tail


def _terms(u: Profile, N: int, p: float) -> dict:
    r = u.grid
    uu, du = u.values, u.derivs
    if np.any(uu < 0.0):
        raise InvalidArgument("identities require a non-negative profile")
    w = r ** (N - 1)
    return {
        "gradient": du * du * w,
        "quasilinear": uu * uu * du * du * w,
        "power": uu ** (p + 1.0) * w,
    }


def _integrals(u: Profile, N: int, p: float) -> dict:
    out = {}
    for name, vals in _terms(u, N, p).items():
        out[name] = _radial_integral(u.grid, vals, name)
    return out


def integrability(u: Profile, N: int, p: float) -> dict:
    """Per-term fitted decay exponents and whether each tail integral converges."""
    rep = {}
    r = u.grid
    mask = r >= 0.5 * r[-1]
    for name, vals in _terms(u, N, p).items():
        tv = np.abs(vals[mask])
        if not np.any(tv) or np.any(tv == 0.0):
            rep[name] = {"exponent": math.inf, "converges": True}
            continue
        beta = -loglog_slope(r[mask], tv)
        rep[name] = {"exponent": beta, "converges": bool(beta >= INTEGRABILITY_MARGIN)}
    return rep


def _report(lhs_parts, rhs_parts, R, omega) -> IdentityReport:
    lhs_body = sum(b for b, _ in lhs_parts)
    lhs_tail = sum(t for _, t in lhs_parts)
    rhs_body = sum(b for b, _ in rhs_parts)
    rhs_tail = sum(t for _, t in rhs_parts)
    lhs = omega * (lhs_body + lhs_tail)
    rhs = omega * (rhs_body + rhs_tail)
    scale = max(abs(lhs), abs(rhs))
    residual = 0.0 if scale == 0.0 else abs(lhs - rhs) / scale
    return IdentityReport(
        lhs=lhs, rhs=rhs, residual=residual,
        truncation_tail_estimate=omega * (abs(lhs_tail) + abs(rhs_tail)),
        lhs_tail=omega * lhs_tail, rhs_tail=omega * rhs_tail, r_max=float(R), surface_measure=omega,
    )


def _scaled(parts, c):
    return [(c * b, c * t) for b, t in parts]


def pohozaev_residual(u: Profile, N: int, p: float) -> IdentityReport:
    """(N-2)/2 int (1+2u^2) u'^2 against N/(p+1) int u^(p+1)."""
    I = _integrals(u, N, p)
    omega = surface_measure(N)
    lhs = _scaled([I["gradient"]], 0.5 * (N - 2)) + _scaled([I["quasilinear"]], (N - 2))
    rhs = _scaled([I["power"]], N / (p + 1.0))
    return _report(lhs, rhs, u.r_max, omega)


def energy_balance(u: Profile, N: int, p: float) -> IdentityReport:
    """int u'^2 + 4 int u^2 u'^2 against int u^(p+1)."""
    I = _integrals(u, N, p)
    omega = surface_measure(N)
    lhs = [I["gradient"]] + _scaled([I["quasilinear"]], 4.0)
    return _report(lhs, [I["power"]], u.r_max, omega)


def regime_verdict(N: int, p: float) -> dict:
    """Signs of c1 int|grad u|^2 + c2 int u^2|grad u|^2 = 0 from the two identities.

    Equal signs (zeros allowed) force u = 0; c1 = c2 = 0 cannot occur for N >= 3.
    """
    if int(N) != N or N < 3:
        raise InvalidArgument("N must be an integer >= 3")
    if not p > 1.0:
        raise InvalidArgument("p must exceed 1")
    c1 = 0.5 * (N - 2) - N / (p + 1.0)
    c2 = (N - 2) - 4.0 * N / (p + 1.0)
    # snap rounding noise at the exact boundary exponents
    c1 = 0.0 if abs(c1) < 1e-13 else c1
    c2 = 0.0 if abs(c2) < 1e-13 else c2
    same_sign = (c1 >= 0.0 and c2 >= 0.0) or (c1 <= 0.0 and c2 <= 0.0)
    return {"c1": c1, "c2": c2, "verdict": NONEXISTENCE if same_sign else INCONCLUSIVE}
