import numpy as np
import pytest

from quasidecay.errors import InvalidArgument
from quasidecay.profiles import (
    ScalingFamily, family_residual, lane_emden, rescale, singular_constant, singular_residual,
)


@pytest.fixture(scope="module")
def w37():
    return lane_emden(3, 7.0)


def test_start_and_monotone(w37):
    r0 = w37.r_min
    assert w37.values[0] == pytest.approx(1.0, abs=1e-12)
    assert w37.derivs[0] == pytest.approx(-r0 / 3.0, rel=1e-6)
    assert np.all(w37.values > 0)
    assert np.all(w37.derivs < 0)


def test_windowed_mean_near_singular_solution(w37):
    r = np.linspace(500.0, 1000.0, 501)
    mean = np.mean(w37(r) * r ** (1.0 / 3.0))
    assert mean == pytest.approx(singular_constant(3, 7.0), rel=0.10)


def test_tail_exponent(w37):
    assert w37.tail_exponent() == pytest.approx(1.0 / 3.0, rel=0.05)


def test_singular_constant_algebra():
    assert singular_constant(3, 7.0) ** 6 == pytest.approx(2.0 / 9.0, rel=1e-14)
    for p in (6.0, 9.0, 20.0, 100.0):
        assert singular_constant(3, p) > 0
    assert singular_residual(3, 7.0, 10.0) <= 1e-12


@pytest.mark.parametrize("N,p", [(3, 3.0), (3, 5.0), (4, 3.0)])
def test_subcritical_rejected(N, p):
    with pytest.raises(InvalidArgument):
        lane_emden(N, p)
    with pytest.raises(InvalidArgument):
        singular_constant(N, p)


def test_rescale_identity_and_sup(w37):
    r = np.logspace(-3, 2, 30)
    np.testing.assert_array_equal(rescale(ScalingFamily(w37, 1.0, 7.0, 3), r), w37(r))
    for lam in (0.1, 0.01):
        fam = ScalingFamily(w37, lam, 7.0, 3)
        grid = np.concatenate([[0.0], np.logspace(-4, 4, 400)])
        assert np.max(fam(grid)) == pytest.approx(lam ** (1.0 / 3.0), rel=1e-12)


@pytest.mark.parametrize("lam", [0.5, 0.1, 0.01])
def test_family_solves_pure_power_equation(w37, lam):
    fam = ScalingFamily(w37, lam, 7.0, 3)
    err = family_residual(fam, np.logspace(-1, 3, 15))
    assert np.max(err) <= 1e-9


def test_rescale_composition(w37):
    r = np.logspace(-2, 3, 40)
    a = ScalingFamily(w37, 0.3, 7.0, 3).compose(0.2)(r)
    b = ScalingFamily(w37, 0.06, 7.0, 3)(r)
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_family_guards(w37):
    with pytest.raises(InvalidArgument):
        ScalingFamily(w37, 0.0, 7.0, 3)
