"""Deterministic right-hand sides shared by the solver tests."""

import numpy as np


def envelope(r, sigma, p):
    """Inverse of the star_star weight: the extremal decay allowed at 0 and at infinity."""
    return np.where(r <= 1.0, r ** -(2.0 + sigma), r ** -(2.0 + 2.0 / (p - 1.0)))


def rhs_family(r, sigma, p, count=10, signed=False):
    """count bounded smooth modulations of the envelope; one-signed unless signed=True."""
    t = np.log(r)
    out = []
    for k in range(count):
        c, s = np.cos(1.3 * k + 0.4), np.sin(2.1 * k + 1.0)
        wave, step = np.cos((0.5 + 0.15 * k) * t), np.tanh(t - k + 5.0)
        a = c + 0.5 * s * wave + 0.3 * step if signed else 1.0 + 0.5 * c * wave + 0.3 * s * step
        out.append(a * envelope(r, sigma, p))
    return out


def manufactured(r, p, n):
    """phi = (1 + r^2)^(-1/(p-1)) with its first and second derivatives."""
    q = -1.0 / (p - 1.0)
    phi = (1 + r * r) ** q
    d1 = 2 * q * r * (1 + r * r) ** (q - 1)
    d2 = 2 * q * (1 + r * r) ** (q - 1) + 4 * q * (q - 1) * r * r * (1 + r * r) ** (q - 2)
    return phi, d1, d2


# (number, title, passed, detail) appended by the acceptance suite
ACCEPTANCE = []


def record_criterion(number, title, passed, detail):
    ACCEPTANCE.append((number, title, bool(passed), detail))
    print(f"criterion {number} {'PASS' if passed else 'FAIL'}: {title} ({detail})")
    assert passed, detail
