import math

import numpy as np
import pytest

from quasidecay.errors import InvalidArgument
from quasidecay.radial_ode import (
    Profile, RadialProblem, StepControls, energy, integrate_ivp, integrate_mode, integrate_variational,
)


def test_free_problem_constant():
    prof = integrate_ivp(RadialProblem.free(3), 1.0, StepControls(r_max=50.0))
    assert np.all(prof.values == pytest.approx(1.0, abs=1e-14))
    assert np.all(np.abs(prof.derivs) <= 1e-14)
    assert prof.termination == "reached-r-max"


def test_linear_problem_matches_sinc():
    d = 2.0
    prof = integrate_ivp(RadialProblem.linear(3), d, StepControls(abs_tol=1e-13, rel_tol=1e-12, r_max=10.0))
    assert prof.termination == "sign-crossing"
    r = prof.grid
    exact = d * np.sin(r) / r
    assert np.max(np.abs(prof.values - exact)) <= 1e-9
    assert prof.meta["r_cross"] == pytest.approx(math.pi, abs=1e-10)
    assert abs(prof.values[-1]) <= 1e-8 * d


def test_lane_emden_positive_slow_tail():
    prob = RadialProblem.lane_emden(3, 7.0)
    prof = integrate_ivp(prob, 1.0, StepControls(abs_tol=1e-13, rel_tol=1e-11, r_max=1e6))
    assert np.all(prof.values > 0)
    assert prof.tail_exponent() == pytest.approx(1.0 / 3.0, rel=0.1)


def test_taylor_start():
    prob = RadialProblem.lane_emden(3, 7.0)
    prof = integrate_ivp(prob, 1.0, StepControls(r_max=1.0))
    r0 = prof.r_min
    assert prof.values[0] == pytest.approx(1.0, abs=1e-10)
    assert prof.derivs[0] == pytest.approx(-r0 / 3.0, rel=1e-6)


def test_energy_non_increasing():
    prob = RadialProblem.zero_mass(3, 7.0)
    prof = integrate_ivp(prob, 1.0, StepControls(r_max=100.0))
    E = energy(prob, prof)
    assert np.all(np.diff(E) <= 1e-12 * E[0])


def test_tolerance_halving_convergence():
    prob = RadialProblem.zero_mass(3, 7.0)
    radii = np.array([1.0, 5.0, 20.0])
    base = StepControls(r_max=30.0)
    a = integrate_ivp(prob, 1.0, base)(radii)
    b = integrate_ivp(prob, 1.0, base.tightened(0.5))(radii)
    assert np.max(np.abs(a - b)) <= 10 * (base.abs_tol + base.rel_tol * np.max(np.abs(a)))


def test_variational_initial_value_and_fd_oracle():
    prob = RadialProblem.zero_mass(3, 7.0)
    ctl = StepControls(abs_tol=1e-13, rel_tol=1e-12, r_max=12.0)
    d = 1.3
    base = integrate_ivp(prob, d, ctl)
    z0 = integrate_variational(prob, base, ctl)
    assert z0.values[0] == pytest.approx(1.0, abs=1e-8)
    delta = 1e-5
    hi = integrate_ivp(prob, d + delta, ctl)
    lo = integrate_ivp(prob, d - delta, ctl)
    r = np.array([1.0, 5.0, 10.0])
    fd = (hi(r) - lo(r)) / (2 * delta)
    np.testing.assert_allclose(z0(r), fd, rtol=1e-4, atol=1e-6)


def test_variational_free_problem_is_one():
    prob = RadialProblem.free(3)
    base = integrate_ivp(prob, 1.0, StepControls(r_max=10.0))
    z0 = integrate_variational(prob, base)
    assert np.max(np.abs(z0.values - 1.0)) <= 1e-12


def test_mode_zero_equals_variational():
    prob = RadialProblem.zero_mass(3, 7.0)
    base = integrate_ivp(prob, 1.0, StepControls(r_max=20.0))
    a = integrate_variational(prob, base)
    b = integrate_mode(prob, base, 0)
    np.testing.assert_allclose(a.values, b.values, rtol=0, atol=1e-12)


@pytest.mark.parametrize("k", [2, 3])
def test_free_mode_is_power(k):
    prob = RadialProblem.free(3)
    base = integrate_ivp(prob, 1.0, StepControls(r_max=10.0))
    phi = integrate_mode(prob, base, k)
    np.testing.assert_allclose(phi.values, phi.grid**k, rtol=1e-8)


def test_mode_rejects_range_beyond_base():
    prob = RadialProblem.free(3)
    base = integrate_ivp(prob, 1.0, StepControls(r_max=10.0))
    with pytest.raises(InvalidArgument):
        integrate_mode(prob, base, 1, r_end=20.0)
    with pytest.raises(InvalidArgument):
        integrate_mode(prob, base, -1)


def test_controls_validation():
    with pytest.raises(InvalidArgument):
        StepControls(r0=-1.0)
    with pytest.raises(InvalidArgument):
        StepControls(abs_tol=2.0)
    with pytest.raises(InvalidArgument):
        StepControls(r0=1.0, r_max=0.5)
    with pytest.raises(InvalidArgument):
        RadialProblem.free(2)


def test_profile_invariants_and_csv_round_trip(tmp_path):
    with pytest.raises(InvalidArgument):
        Profile([1.0, 1.0], [0.0, 0.0], [0.0, 0.0])
    with pytest.raises(InvalidArgument):
        Profile([1.0, 2.0], [np.nan, 0.0], [0.0, 0.0])
    prob = RadialProblem.zero_mass(3, 7.0)
    prof = integrate_ivp(prob, 1.0, StepControls(r_max=20.0))
    path = tmp_path / "v.csv"
    prof.to_csv(path)
    back = Profile.from_csv(path)
    assert np.array_equal(back.grid, prof.grid)
    assert np.array_equal(back.values, prof.values)
    assert back.meta["N"] == 3 and back.meta["termination"] == prof.termination
    assert path.read_text().splitlines()[1] == "r,v,v_prime"


def test_profile_tail_extrapolation():
    r = np.logspace(0, 2, 50)
    prof = Profile(r, r**-1.0, -(r**-2.0))
    assert prof(1000.0) == pytest.approx(1e-3, rel=1e-8)


def test_explicit_nodes():
    prob = RadialProblem.lane_emden(3, 7.0)
    nodes = np.array([1e-6, 0.5, 1.0, 2.0])
    prof = integrate_ivp(prob, 1.0, StepControls(abs_tol=1e-13, rel_tol=1e-12), nodes=nodes)
    np.testing.assert_array_equal(prof.grid, nodes)
