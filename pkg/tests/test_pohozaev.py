import math

import numpy as np
import pytest

from quasidecay.errors import DivergentIntegral, InvalidArgument
from quasidecay.pohozaev import (
    INCONCLUSIVE, NONEXISTENCE, energy_balance, integrability, pohozaev_residual, regime_verdict,
    surface_measure, to_original,
)
from quasidecay.radial_ode import Profile


def test_surface_measure():
    assert surface_measure(3) == pytest.approx(4 * math.pi)
    assert surface_measure(4) == pytest.approx(2 * math.pi**2)


def test_zero_profile():
    r = np.logspace(-3, 3, 100)
    z = Profile(r, np.zeros_like(r), np.zeros_like(r))
    for fn in (pohozaev_residual, energy_balance):
        rep = fn(z, 3, 7.0)
        assert rep.lhs == rep.rhs == 0.0 and rep.residual == 0.0


@pytest.mark.parametrize("N,p", [(3, 7.0), (4, 5.0)])
def test_identities_hold_on_fast_solution(N, p, request):
    u = to_original(request.getfixturevalue(f"vf{N}{int(p)}"))
    for fn in (pohozaev_residual, energy_balance):
        rep = fn(u, N, p)
        assert rep.residual <= 1e-2
        assert rep.truncation_tail_estimate > 0.0


def test_scaled_non_solution_violates_energy(vf37):
    u = to_original(vf37)
    bad = u.mapped(1.1 * u.values, 1.1 * u.derivs)
    assert energy_balance(bad, 3, 7.0).residual > 0.05


def test_grid_halving_is_stable(vf37):
    u = to_original(vf37)
    half = Profile(u.grid[::2], u.values[::2], u.derivs[::2], u.meta)
    for fn in (pohozaev_residual, energy_balance):
        a, b = fn(u, 3, 7.0), fn(half, 3, 7.0)
        assert abs(a.lhs - b.lhs) / abs(a.lhs) < 1e-4
        assert abs(a.rhs - b.rhs) / abs(a.rhs) < 1e-4


@pytest.mark.parametrize("N,p", [(3, 7.0), (3, 9.0), (4, 5.0), (5, 3.0)])
def test_slow_profile_power_integrability(N, p):
    # u ~ r^(-2/(p-1)): int u^(p+1) r^(N-1) converges iff (p+1) 2/(p-1) > N
    a = 2.0 / (p - 1.0)
    r = np.logspace(-2, 5, 800)
    u = Profile(r, (1 + r * r) ** (-a / 2), -a * r * (1 + r * r) ** (-a / 2 - 1))
    rep = integrability(u, N, p)
    expected = (p + 1.0) * a - N
    assert rep["power"]["exponent"] == pytest.approx(expected + 1.0, abs=1e-3)
    assert rep["power"]["converges"] is ((p + 1.0) * a > N + 0.1)


def test_divergent_term_is_named():
    r = np.logspace(-2, 4, 600)
    u = Profile(r, (1 + r * r) ** (-1 / 6), -(r / 3) * (1 + r * r) ** (-7 / 6))
    with pytest.raises(DivergentIntegral) as err:
        pohozaev_residual(u, 3, 7.0)
    assert err.value.term in ("gradient", "quasilinear", "power")
    assert err.value.term in str(err.value)


def test_negative_profile_rejected():
    r = np.logspace(-2, 2, 50)
    with pytest.raises(InvalidArgument):
        energy_balance(Profile(r, -1 / (1 + r), 1 / (1 + r) ** 2), 3, 7.0)


@pytest.mark.parametrize("N,p,c1,c2,verdict", [
    (3, 11.0, 0.25, 0.0, NONEXISTENCE),
    (3, 5.0, 0.0, -1.0, NONEXISTENCE),
    (3, 7.0, 0.125, -0.5, INCONCLUSIVE),
])
def test_regime_examples(N, p, c1, c2, verdict):
    out = regime_verdict(N, p)
    assert out["c1"] == pytest.approx(c1, abs=1e-15)
    assert out["c2"] == pytest.approx(c2, abs=1e-15)
    assert out["verdict"] == verdict


@pytest.mark.parametrize("N", range(3, 9))
def test_regime_boundaries(N):
    lo, hi = (N + 2) / (N - 2), (3 * N + 2) / (N - 2)
    assert regime_verdict(N, lo)["verdict"] == NONEXISTENCE
    assert regime_verdict(N, hi)["verdict"] == NONEXISTENCE
    for p in np.linspace(lo, hi, 9)[1:-1]:
        assert regime_verdict(N, p)["verdict"] == INCONCLUSIVE
    for p in (1.01, 0.5 * (1 + lo), hi + 0.5, 3 * hi):
        assert regime_verdict(N, p)["verdict"] == NONEXISTENCE
