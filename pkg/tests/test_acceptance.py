"""Acceptance criteria at their stated tolerances; one PASS/FAIL line each."""

import math
import warnings

import numpy as np
import pytest

from quasidecay import transform as T
from quasidecay.config import RunConfig
from quasidecay.harness import run
from quasidecay.linearized import (
    DIVERGENT_NEGATIVE, GROWTH, mode1_identity_residual, mode_k_nondecay_check, z0_diagnostic,
)
from quasidecay.norms import STAR, STAR_STAR, WeightedNormSpec, default_sigma
from quasidecay.perturbation import S_norm, linear_solve, scaling_slope, solve_slow_decay, solver_for
from quasidecay.pohozaev import INCONCLUSIVE, NONEXISTENCE, energy_balance, pohozaev_residual, regime_verdict, to_original
from quasidecay.potentials import PotentialSpec
from quasidecay.reduction import E_norm_ladder, find_critical_xi
from quasidecay.shooting import FAST, scan_structure

from cases import manufactured, record_criterion, rhs_family

LADDER = (0.2, 0.1, 0.05, 0.025)
SCAN_GRID = np.logspace(-3, 3, 200)


def test_criterion_1_transform():
    u = np.logspace(-6, 6, 10_000)
    trip = float(np.max(np.abs(T.G_inverse(T.G(u)) - u) / u))
    s = 1e6
    asym = abs(float(T.G_inverse(s)) / math.sqrt(s) - 2**0.25)
    v = np.logspace(-4, 4, 401)
    fd = (T.f(v * (1 + 1e-6), 7.0) - T.f(v * (1 - 1e-6), 7.0)) / (2e-6 * v)
    deriv = float(np.max(np.abs(T.f_prime(v, 7.0) - fd) / np.abs(fd)))
    ok = trip <= 1e-10 and asym <= 1e-3 and deriv <= 1e-6
    record_criterion(1, "transform fidelity", ok, f"round trip {trip:.2e}, asymptote {asym:.2e}, f' {deriv:.2e}")


def test_criterion_2_structure(fast37, fast45):
    tails = {}
    for (N, p), (_, v_f) in (((3, 7.0), fast37), ((4, 5.0), fast45)):
        tails[(N, p)] = abs(v_f.tail_exponent() / (N - 2) - 1.0)
    counts = {}
    for N, p in ((3, 5.0), (3, 11.0)):
        scan = scan_structure(N, p, SCAN_GRID)
        counts[(N, p)] = sum(c.kind == FAST for _, c in scan)
    ok = max(tails.values()) <= 0.05 and not any(counts.values())
    record_criterion(2, "structure theorem", ok,
                     "tail deviations " + ", ".join(f"{k}: {v:.1e}" for k, v in tails.items())
                     + "; fast counts " + ", ".join(f"{k}: {v}" for k, v in counts.items()))


def test_criterion_3_pohozaev(vf37, vf45):
    worst = 0.0
    for N, p, v_f in ((3, 7.0, vf37), (4, 5.0, vf45)):
        u = to_original(v_f)
        worst = max(worst, pohozaev_residual(u, N, p).residual, energy_balance(u, N, p).residual)
    wrong = []
    for N in range(3, 9):
        lo, hi = (N + 2) / (N - 2), (3 * N + 2) / (N - 2)
        for p in np.concatenate([np.linspace(1.05, lo, 5), np.linspace(lo, hi, 11), np.linspace(hi, hi + 4, 5)]):
            expect = NONEXISTENCE if (p <= lo or p >= hi) else INCONCLUSIVE
            if regime_verdict(N, float(p))["verdict"] != expect:
                wrong.append((N, float(p)))
    ok = worst <= 1e-2 and not wrong
    record_criterion(3, "Pohozaev consistency", ok, f"max residual {worst:.2e}, regime mismatches {len(wrong)}")


def test_criterion_4_slow_decay_scaling():
    slope = scaling_slope(LADDER, lambda lam: S_norm(lam, 3, 7.0))
    target = 4.0 / 6.0
    ok = abs(slope / target - 1.0) <= 0.10
    record_criterion(4, "slow-decay scaling law", ok, f"slope {slope:.4f} vs {target:.4f}")


def test_criterion_5_contraction():
    kappas, normed, tails, sups = [], [], [], []
    for lam in LADDER:
        phi, _, u = solve_slow_decay(lam, 3, 7.0)
        kappas.append(phi.meta["contraction_factor"])
        normed.append(phi.meta["normalized_norm"])
        tails.append(abs(u.tail_exponent() / (2.0 / 6.0) - 1.0))
        sups.append(u.sup())
    spread = max(normed) / min(normed)
    decreasing = all(b < a for a, b in zip(sups, sups[1:]))
    ok = max(kappas) < 1.0 and spread <= 2.0 and max(tails) <= 0.05 and decreasing
    record_criterion(5, "contraction construction", ok,
                     f"max kappa {max(kappas):.3f}, norm spread {spread:.3f}, tail deviation {max(tails):.1e}, "
                     f"sup u decreasing {decreasing}")


def test_criterion_6_linear_solver():
    N, p = 3, 7.0
    sigma = default_sigma(p)
    w, sol = solver_for(N, p)
    r = w.grid
    phat, d1, d2 = manufactured(r, p, N)
    phi, _ = sol.solve(d2 + (N - 1) / r * d1 + sol.potential * phat)
    # the solver selects phi(0) = 0; compare modulo the kernel direction Z0
    c = (phat[0] - phi[0]) / sol.Z0[0]
    err = float(np.max(np.abs(phi + c * sol.Z0 - phat)) / np.max(np.abs(phat)))
    zero = np.zeros_like(r)
    ratios = [linear_solve(w.mapped(h, zero), w, N, p, WeightedNormSpec(sigma, p, STAR)).meta["bound_ratio"]
              for h in rhs_family(r, sigma, p)]
    spread = max(ratios) / min(ratios)
    ok = err <= 1e-6 and spread <= 2.0
    record_criterion(6, "linear solver", ok, f"manufactured error {err:.2e}, C spread {spread:.3f} over 10 h")


def test_criterion_7_nondegeneracy(vf37, vf45):
    res, verdicts, splits, grows = [], [], [], []
    for N, p, v_f in ((3, 7.0, vf37), (4, 5.0, vf45)):
        res.append(mode1_identity_residual(v_f, N, p))
        diag = z0_diagnostic(v_f, N, p)
        verdicts.append(diag.verdict == DIVERGENT_NEGATIVE)
        splits.append(diag.lambda_star == (0.5 if N == 3 else (N - 1) / 2))
        grows.extend(mode_k_nondecay_check(v_f, N, p, k)["verdict"] == GROWTH for k in (2, 3))
    ok = max(res) <= 1e-6 and all(verdicts) and all(splits) and all(grows)
    record_criterion(7, "nondegeneracy diagnostics", ok,
                     f"mode-1 residual {max(res):.1e}, divergent-negative {all(verdicts)}, "
                     f"lambda* split {all(splits)}, modes grow {all(grows)}")


def test_criterion_8_reduction(vf37):
    V = PotentialSpec.gaussian()
    rows = E_norm_ladder(vf37, V, 7.0, xi_offset=1.0)
    ratios = [row["ratio"] for row in rows]
    e_spread = max(ratios) / min(ratios) - 1.0
    res = find_critical_xi(vf37, V, 10.0, 101)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        shifted = find_critical_xi(vf37, PotentialSpec.gaussian(center=2.0), 10.0, 101)
    shift_ok = abs(shifted.concentration_point - 2.0) <= shifted.spacing and abs(shifted.argmax + 2.0) <= shifted.spacing
    ok = (e_spread <= 0.10 and res.symmetry_residual <= 1e-8 and res.argmax == 0.0 and shift_ok
          and res.boundary_ratio <= 0.05)
    record_criterion(8, "reduction", ok,
                     f"E/eps spread {e_spread:.1e}, symmetry {res.symmetry_residual:.1e}, argmax {res.argmax:g}, "
                     f"shifted concentration {shifted.concentration_point:g}, boundary ratio {res.boundary_ratio:.3f}")


def test_criterion_9_determinism(tmp_path):
    same = []
    for cfg in (RunConfig("shoot", find_dstar=True), RunConfig("slowdecay", lam=0.05),
                RunConfig("reduce", points=21)):
        a = run(cfg, str(tmp_path / "a"))
        b = run(cfg, str(tmp_path / "b"))
        for m in a.manifest:
            if m["file"].endswith(".csv"):
                same.append((tmp_path / "a" / a.run_id / m["file"]).read_bytes()
                            == (tmp_path / "b" / b.run_id / m["file"]).read_bytes())
    ok = bool(same) and all(same)
    record_criterion(9, "determinism", ok, f"{sum(same)} of {len(same)} CSVs identical")
