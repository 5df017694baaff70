import os

import numpy as np
import pytest

from quasidecay.errors import BracketInvalid, InvalidArgument
from quasidecay.radial_ode import Profile
from quasidecay.shooting import (
    CROSSING, FAST, SLOW, UNDETERMINED, ShootConfig, ShotClass, class_changes, classify_shot,
    find_fast_decay, scan_structure, shoot, sign_changes,
)

WORKERS = min(8, os.cpu_count() or 1)
GRID = np.logspace(-3, 3, 200)


def synthetic(alpha, r_max=200.0):
    r = np.logspace(-3, np.log10(r_max), 400)
    v = (1 + r) ** -alpha
    return Profile(r, v, -alpha * (1 + r) ** (-alpha - 1), {"termination": "reached-r-max"})


def test_synthetic_fast():
    assert classify_shot(synthetic(1.0), 3, 7.0).kind == FAST


def test_synthetic_slow():
    assert classify_shot(synthetic(1.0 / 3.0), 3, 7.0).kind == SLOW


def test_crossing_takes_precedence():
    prof = synthetic(1.0)
    prof.meta.update(termination="sign-crossing", r_cross=3.0)
    cls = classify_shot(prof, 3, 7.0)
    assert cls.kind == CROSSING and cls.r_cross == 3.0


def test_blow_up_and_short_tail_undetermined():
    prof = synthetic(1.0)
    prof.meta["termination"] = "blow-up"
    assert classify_shot(prof, 3, 7.0).reason == "blow-up"
    r = np.linspace(1.0, 200.0, 6)
    short = Profile(r, 1 / r, -1 / r**2)
    assert classify_shot(short, 3, 7.0).reason == "insufficient-tail"


def test_config_validation():
    with pytest.raises(InvalidArgument):
        ShootConfig(tail_window=(10.0, 500.0))
    with pytest.raises(InvalidArgument):
        ShootConfig(tau_fast=0.6)
    with pytest.raises(InvalidArgument):
        ShootConfig(bracket=(2.0, 1.0))


def test_bracket_ends_have_distinct_classes():
    lo, _ = shoot(3, 7.0, 1e-2)
    hi, _ = shoot(3, 7.0, 1e2)
    assert lo.kind != hi.kind
    assert FAST not in (lo.kind, hi.kind)


@pytest.mark.parametrize("N,p", [(3, 7.0), (4, 5.0)])
def test_find_fast_decay_tail(N, p, request):
    d_star, v_f = request.getfixturevalue(f"fast{N}{int(p)}")
    assert v_f.tail_exponent() == pytest.approx(N - 2, rel=0.05)
    assert classify_shot(v_f, N, p, ShootConfig(r_max=v_f.r_max)).kind == FAST
    lo, hi = v_f.r_max / 2, v_f.r_max
    scaled = v_f.grid ** (N - 2) * v_f.values
    mask = (v_f.grid >= lo) & (v_f.grid <= hi)
    assert np.ptp(scaled[mask]) / np.mean(scaled[mask]) < 0.10


def test_d_star_stable_under_tighter_tolerances(fast37):
    d_star, _ = fast37
    cfg = ShootConfig()
    tight = ShootConfig(controls=cfg.controls.tightened(0.5))
    d2, _ = find_fast_decay(3, 7.0, tight)
    assert d2 == pytest.approx(d_star, rel=1e-3)


@pytest.mark.parametrize("N,p", [(3, 5.0), (3, 11.0), (3, 3.0), (4, 10.0)])
def test_find_fast_decay_rejects_p(N, p):
    with pytest.raises(InvalidArgument):
        find_fast_decay(N, p)


def test_bracket_invalid():
    with pytest.raises(BracketInvalid):
        find_fast_decay(3, 7.0, ShootConfig(bracket=(1e-2, 1e-1)))


@pytest.mark.parametrize("N,p", [(3, 5.0), (3, 11.0)])
def test_no_fast_decay_at_boundary_exponents(N, p):
    scan = scan_structure(N, p, GRID, workers=WORKERS)
    assert len(scan) == 200
    assert sum(c.kind == FAST for _, c in scan) == 0


def test_single_sign_change_around_d_star(fast37):
    d_star, _ = fast37
    scan = scan_structure(3, 7.0, GRID, workers=WORKERS)
    assert sign_changes(scan) == 1
    kinds = [c.kind for _, c in scan]
    first_cross = kinds.index(CROSSING)
    assert GRID[first_cross - 1] < d_star * 1.01 and GRID[first_cross] > d_star


def test_scan_deterministic_and_validated():
    grid = np.logspace(-1, 1, 6)
    a = scan_structure(3, 7.0, grid)
    b = scan_structure(3, 7.0, grid, workers=2)
    assert a == b
    with pytest.raises(InvalidArgument):
        scan_structure(3, 7.0, [1.0, 0.5])


def test_change_counters():
    c, s, u, f = (ShotClass(CROSSING), ShotClass(SLOW), ShotClass(UNDETERMINED), ShotClass(FAST))
    scan = list(enumerate([s, s, u, f, c, c]))
    assert sign_changes(scan) == 1
    assert class_changes(scan) == 2
