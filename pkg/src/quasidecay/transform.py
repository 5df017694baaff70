"""Change of variables v = G(u) turning the quasilinear operator semilinear.

With g(s) = sqrt(1 + 2 s^2) and G(u) = int_0^u g(t) dt, a positive solution u of

    Delta u + u Delta(u^2) + u^p = 0

corresponds to v = G(u) solving Delta v + f(v) = 0 with
f(v) = G^{-1}(v)^p / g(G^{-1}(v)).

All functions accept scalars or numpy arrays and return the same kind.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

_SQRT2 = math.sqrt(2.0)
_NEWTON_MAXITER = 60


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidArgument("non-finite argument")
    return arr


def _ret(arr, like):
    if np.ndim(like) == 0:
        return float(arr)
    return arr


def g(u):
    """The coefficient sqrt(1 + 2 u^2)."""
    arr = np.asarray(u, dtype=float)
    return _ret(np.sqrt(1.0 + 2.0 * arr * arr), u)


def G(u):
    """Closed-form antiderivative of g, extended oddly to u < 0."""
    arr = _as_array(u)
    a = np.abs(arr)
    val = 0.5 * a * np.sqrt(1.0 + 2.0 * a * a) + np.arcsinh(_SQRT2 * a) / (2.0 * _SQRT2)
    return _ret(np.sign(arr) * val, u)


def _ginv_scalar(v: float) -> float:
    # Newton on the convex G from an initial point right of the root,
    # falling back to bisection inside [0, 2|v|] if an iterate escapes.
    a = abs(v)
    if a == 0.0:
        return 0.0
    u = a if a <= 1.0 else math.sqrt(a * _SQRT2)
    lo, hi = 0.0, 2.0 * a
    for _ in range(_NEWTON_MAXITER):
        gu = math.sqrt(1.0 + 2.0 * u * u)
        val = 0.5 * u * gu + math.asinh(_SQRT2 * u) / (2.0 * _SQRT2) - a
        if val > 0.0:
            hi = min(hi, u)
        else:
            lo = max(lo, u)
        step = val / gu
        nxt = u - step
        if not (lo <= nxt <= hi):
            nxt = 0.5 * (lo + hi)
        if abs(nxt - u) <= 4.0 * np.finfo(float).eps * nxt:
            u = nxt
            break
        u = nxt
    return math.copysign(u, v)


def G_inverse(v):
    """Inverse of G by safeguarded Newton iteration."""
    arr = _as_array(v)
    if arr.ndim == 0:
        return _ginv_scalar(float(arr))
    a = np.abs(arr).ravel()
    u = np.where(a <= 1.0, a, np.sqrt(a * _SQRT2))
    lo = np.zeros_like(a)
    hi = 2.0 * a
    active = a > 0.0
    for _ in range(_NEWTON_MAXITER):
        if not active.any():
            break
        ua = u[active]
        gu = np.sqrt(1.0 + 2.0 * ua * ua)
        val = 0.5 * ua * gu + np.arcsinh(_SQRT2 * ua) / (2.0 * _SQRT2) - a[active]
        hi_a = np.where(val > 0.0, np.minimum(hi[active], ua), hi[active])
        lo_a = np.where(val > 0.0, lo[active], np.maximum(lo[active], ua))
        nxt = ua - val / gu
        bad = (nxt < lo_a) | (nxt > hi_a)
        nxt = np.where(bad, 0.5 * (lo_a + hi_a), nxt)
        done = np.abs(nxt - ua) <= 4.0 * np.finfo(float).eps * nxt
        hi[active], lo[active], u[active] = hi_a, lo_a, nxt
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    u[a == 0.0] = 0.0
    return np.sign(arr) * u.reshape(arr.shape)


def f(v, p: float):
    """Transformed nonlinearity G^{-1}(v)^p / g(G^{-1}(v)); zero for v <= 0."""
    arr = _as_array(v)
    if arr.ndim == 0:
        x = float(arr)
        if x <= 0.0:
            return 0.0
        u = _ginv_scalar(x)
        return u**p / math.sqrt(1.0 + 2.0 * u * u)
    pos = np.maximum(arr, 0.0)
    u = G_inverse(pos)
    return u**p / np.sqrt(1.0 + 2.0 * u * u)


def f_prime(s, p: float):
    """Derivative of f, assembled from the u-representation of df/dv."""
    arr = _as_array(s)
    if arr.ndim == 0:
        x = float(arr)
        if x <= 0.0:
            return 0.0
        u = _ginv_scalar(x)
        g2 = 1.0 + 2.0 * u * u
        up = u ** (p - 1.0)
        return (p - 1.0) * up / g2 + up / (g2 * g2)
    u = G_inverse(np.maximum(arr, 0.0))
    g2 = 1.0 + 2.0 * u * u
    up = u ** (p - 1.0)
    return (p - 1.0) * up / g2 + up / (g2 * g2)


def h(s):
    """The potential-term map G^{-1}(s) / g(G^{-1}(s)), odd in s."""
    arr = _as_array(s)
    if arr.ndim == 0:
        u = _ginv_scalar(float(arr))
        return u / math.sqrt(1.0 + 2.0 * u * u)
    u = G_inverse(arr)
    return u / np.sqrt(1.0 + 2.0 * u * u)


def h_prime(s):
    """h'(s) = 1 / g(G^{-1}(s))^4, which lies in (0, 1]."""
    arr = _as_array(s)
    u = G_inverse(arr)
    g2 = 1.0 + 2.0 * np.asarray(u) ** 2
    return _ret(1.0 / (g2 * g2), s)


def F_antiderivative(v, p: float):
    """int_0^v f = G^{-1}(v)^{p+1} / (p+1), since dv = g(u) du."""
    arr = _as_array(v)
    u = G_inverse(np.maximum(arr, 0.0))
    return _ret(np.asarray(u) ** (p + 1.0) / (p + 1.0), v)


@dataclass(frozen=True)
class Nonlinearity:
    """The power p together with the transformed functions that depend on it."""

    p: float

    def __post_init__(self):
        if not (math.isfinite(self.p) and self.p > 1.0):
            raise InvalidArgument(f"exponent p must exceed 1, got {self.p}")

    def sobolev_critical(self, N: int) -> float:
        return (N + 2.0) / (N - 2.0)

    def quasilinear_critical(self, N: int) -> float:
        return (3.0 * N + 2.0) / (N - 2.0)

    def require_supercritical(self, N: int) -> None:
        if not self.p > self.sobolev_critical(N):
            raise InvalidArgument(
                f"p={self.p} is not above (N+2)/(N-2)={self.sobolev_critical(N):g} for N={N}"
            )

    def f(self, v):
        return f(v, self.p)

    def f_prime(self, v):
        return f_prime(v, self.p)

    def antiderivative(self, v):
        return F_antiderivative(v, self.p)
