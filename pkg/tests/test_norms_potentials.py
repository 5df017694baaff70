import math

import numpy as np
import pytest

from quasidecay.errors import InvalidArgument, PotentialSpecViolation
from quasidecay.norms import (
    BRACKET_STAR, STAR, STAR_STAR, WeightedNormSpec, default_sigma, weighted_norm, weighted_sup,
)
from quasidecay.potentials import PotentialSpec, check_decay_class
from quasidecay.radial_ode import Profile

R = np.logspace(-4, 4, 801)


def test_zero_norm():
    spec = WeightedNormSpec(0.3, 7.0)
    assert weighted_sup(R, np.zeros_like(R), spec) == 0.0


def test_extremal_profile_has_norm_two():
    sigma, p = 0.3, 7.0
    phi = np.where(R <= 1.0, R**-sigma, R ** (-2.0 / (p - 1.0)))
    assert weighted_sup(R, phi, WeightedNormSpec(sigma, p, STAR)) == pytest.approx(2.0, rel=1e-12)


def test_refinement_oracle():
    spec = WeightedNormSpec(0.3, 7.0, STAR_STAR)
    r = np.logspace(-3, 3, 121)
    v = np.minimum(1.0, r**-1.0)
    dv = np.where(r < 1.0, 0.0, -(r**-2.0))
    prof = Profile(r, v, dv)
    coarse = weighted_norm(prof, spec)
    fine = weighted_norm(prof, spec, refine=10)
    assert coarse == pytest.approx(fine, rel=0.01)


def test_split_norm_needs_both_sides():
    with pytest.raises(InvalidArgument):
        weighted_sup(np.linspace(2, 3, 10), np.ones(10), WeightedNormSpec(0.3, 7.0))


def test_bracket_norm_and_dual():
    spec = WeightedNormSpec(0.5, 7.0, BRACKET_STAR, center=2.0)
    x = np.linspace(0.0, 10.0, 101)
    val = weighted_sup(x, np.ones_like(x), spec)
    assert val == pytest.approx((1 + 64.0) ** 0.25)
    assert spec.dual().family == "bracket_star_star"
    assert spec.dual().dual() == spec


def test_spec_validation_and_default():
    with pytest.raises(InvalidArgument):
        WeightedNormSpec(0.0, 7.0)
    with pytest.raises(InvalidArgument):
        WeightedNormSpec(0.3, 7.0, "other")
    assert default_sigma(7.0) == pytest.approx(1.0 / 6.0)
    assert default_sigma(1.5) == 1.0
    with pytest.raises(InvalidArgument):
        WeightedNormSpec(0.9, 7.0).check_window(1 / 3, 0.5)


def test_potential_kinds():
    g = PotentialSpec.gaussian(2.0, 1.5)
    assert g.profile(0.0) == 2.0
    assert g.tail_exponent() == math.inf
    ip = PotentialSpec.inverse_power(5.0)
    assert ip.profile(1e3) == pytest.approx(1e-15, rel=1e-5)
    tab = PotentialSpec.table([0.0, 1.0, 2.0], [1.0, 0.5, 0.25], mu=6.0)
    assert tab.profile(1.5) == pytest.approx(math.sqrt(0.5 * 0.25))
    assert tab.profile(4.0) == pytest.approx(0.25 * 2.0**-6)
    two = PotentialSpec.sum(PotentialSpec.gaussian(center=-1.0), PotentialSpec.gaussian(2.0, center=3.0))
    assert not two.is_radial
    assert two(3.0) == pytest.approx(2.0 + math.exp(-16.0))
    assert two.shifted(1.0).components[1].center == 4.0


@pytest.mark.parametrize("kwargs", [
    dict(kind="gaussian", amplitude=-1.0),
    dict(kind="gaussian", scale=0.0),
    dict(kind="inverse-power"),
    dict(kind="wobbly"),
    dict(kind="sum"),
])
def test_potential_validation(kwargs):
    with pytest.raises(InvalidArgument):
        PotentialSpec(**kwargs)


def test_decay_class_checks():
    radii = np.logspace(-2, 4, 300)
    check_decay_class(PotentialSpec.gaussian(), 3, radii)
    check_decay_class(PotentialSpec.inverse_power(5.0), 3, radii)
    with pytest.raises(PotentialSpecViolation):
        check_decay_class(PotentialSpec.inverse_power(2.5), 3, radii)
    slow = PotentialSpec(kind="inverse-power", mu=1.0, decay_class="o2")
    with pytest.raises(PotentialSpecViolation):
        check_decay_class(slow, 3, radii)


def test_radial_values_need_centered_potential():
    with pytest.raises(InvalidArgument):
        PotentialSpec.gaussian(center=1.0).radial_values(R)
