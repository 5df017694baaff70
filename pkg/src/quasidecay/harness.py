"""Run dispatch, artifact persistence and parameter sweeps.

A run writes into ``<out_dir>/<run_id>/``: CSV artifacts plus ``record.json``,
whose manifest lists every other file with its SHA-256.  Files are staged in
a temporary sibling directory renamed into place on success, so a failed run
leaves nothing behind.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
import shutil
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import linearized, perturbation, pohozaev, reduction, shooting
from .config import NUMERIC_FIELDS, RunConfig, coerce
from .errors import InvalidArgument, NumericalFailure, QuasiDecayError
from .fitting import decay_exponent
from .radial_ode import Profile, StepControls

log = logging.getLogger(__name__)

RECORD_NAME = "record.json"
SCHEMA_VERSION = 1


@dataclass
class RunRecord:
    run_id: str
    subcommand: str
    config: dict
    outputs: dict
    wall_clock: float
    tolerance_budget: dict
    manifest: list = field(default_factory=list)
    directory: Optional[str] = None
    status: str = "ok"

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("directory")
        d["schema_version"] = SCHEMA_VERSION
        return d

    def headline(self) -> dict:
        return {k: v for k, v in self.outputs.items() if isinstance(v, (int, float, str, bool)) or v is None}


# --- serialization helpers -----------------------------------------------------


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(header))
    for row in rows:
        w.writerow([_cell(x) for x in row])
    return buf.getvalue()


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_atomic(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Artifacts:
    def __init__(self, staging: Path):
        self.staging = staging
        self.files = []

    def write(self, name: str, text: str) -> None:
        write_atomic(self.staging / name, text)
        self.files.append(name)

    def manifest(self) -> list:
        return [
            {"file": n, "sha256": sha256_file(self.staging / n), "bytes": (self.staging / n).stat().st_size}
            for n in sorted(self.files)
        ]


def _step(name: str, fn: Callable, *args, **kwargs):
    """Call a module operation, tagging any package error with its name."""
    try:
        return fn(*args, **kwargs)
    except QuasiDecayError as exc:
        if getattr(exc, "operation", None) is None:
            exc.operation = name
            exc.args = (f"{name}: {exc}",) + tuple(exc.args[1:])
        raise


# --- per-subcommand work -------------------------------------------------------


def _shoot_config(cfg: RunConfig) -> shooting.ShootConfig:
    return shooting.ShootConfig(r_max=cfg.r_max, controls=StepControls(abs_tol=cfg.abs_tol, rel_tol=cfg.rel_tol))


def _fast_profile(cfg: RunConfig) -> Profile:
    if cfg.profile is not None:
        return _step("load_profile", Profile.from_csv, cfg.profile)
    _, v_f = _step("find_fast_decay", shooting.find_fast_decay, cfg.N, cfg.p, _shoot_config(cfg))
    return v_f


def _identities(v: Profile, N: int, p: float) -> dict:
    u = pohozaev.to_original(v)
    return {
        "pohozaev": _step("pohozaev_residual", pohozaev.pohozaev_residual, u, N, p).to_dict(),
        "energy": _step("energy_balance", pohozaev.energy_balance, u, N, p).to_dict(),
    }


def _run_shoot(cfg: RunConfig, out: _Artifacts) -> dict:
    scfg = _shoot_config(cfg)
    if cfg.find_dstar:
        d_star, v_f = _step("find_fast_decay", shooting.find_fast_decay, cfg.N, cfg.p, scfg)
        out.write("vf.csv", v_f.to_csv())
        ids = _identities(v_f, cfg.N, cfg.p)
        return {
            "d_star": d_star,
            "tail_exponent": v_f.meta.get("tail_exponent"),
            "bisection_steps": v_f.meta.get("bisection_steps"),
            "residuals": {k: v["residual"] for k, v in ids.items()},
            "pohozaev_residual": ids["pohozaev"]["residual"],
            "energy_residual": ids["energy"]["residual"],
        }
    cls, prof = _step("shoot", shooting.shoot, cfg.N, cfg.p, cfg.d, scfg)
    out.write("profile.csv", prof.to_csv())
    return {"d": cfg.d, "class": cls.kind, "fitted_exponent": cls.exponent, "r_cross": cls.r_cross, "reason": cls.reason}


def _run_scan(cfg: RunConfig, out: _Artifacts) -> dict:
    grid = np.logspace(math.log10(cfg.d_min), math.log10(cfg.d_max), cfg.d_points)
    scan = _step("scan_structure", shooting.scan_structure, cfg.N, cfg.p, grid, _shoot_config(cfg), cfg.workers)
    rows = [(d, c.kind, c.exponent, c.r_cross, c.reason) for d, c in scan]
    out.write("scan.csv", csv_text(["d", "class", "fitted_exponent", "r_cross", "reason"], rows))
    counts = {}
    for _, c in scan:
        counts[c.kind] = counts.get(c.kind, 0) + 1
    fast = [d for d, c in scan if c.is_fast]
    return {
        "counts": dict(sorted(counts.items())),
        "fast_decay_count": len(fast),
        "fast_decay_heights": fast,
        "sign_changes": shooting.sign_changes(scan),
        "class_changes": shooting.class_changes(scan),
    }


def _run_pohozaev(cfg: RunConfig, out: _Artifacts) -> dict:
    v = _step("load_profile", Profile.from_csv, cfg.profile)
    u = pohozaev.to_original(v)
    ids = _identities(v, cfg.N, cfg.p)
    return {
        **ids,
        "integrability": pohozaev.integrability(u, cfg.N, cfg.p),
        "regime": pohozaev.regime_verdict(cfg.N, cfg.p),
        "pohozaev_residual": ids["pohozaev"]["residual"],
        "energy_residual": ids["energy"]["residual"],
    }


def _run_nondegeneracy(cfg: RunConfig, out: _Artifacts) -> dict:
    v_f = _fast_profile(cfg)
    diag = _step("z0_diagnostic", linearized.z0_diagnostic, v_f, cfg.N, cfg.p)
    out.write("z0.csv", csv_text(["r", "r_lambda_z0"], diag.samples))
    rep = _step("nondegeneracy_report", linearized.nondegeneracy_report, v_f, cfg.N, cfg.p)
    return rep


def _run_slowdecay(cfg: RunConfig, out: _Artifacts) -> dict:
    fp = perturbation.FixedPointConfig(sigma=cfg.sigma)
    per, rows = {}, []
    for i, lam in enumerate(cfg.ladder()):
        phi, v_lam, u_lam = _step("solve_slow_decay", perturbation.solve_slow_decay, lam, cfg.N, cfg.p, fp.with_lam(lam))
        S = _step("S_norm", perturbation.S_norm, lam, cfg.N, cfg.p, cfg.sigma)
        x = u_lam.grid
        mask = x >= 0.5 * x[-1]
        entry = {
            "lam": lam,
            "iterations": phi.meta["iterations"],
            "contraction_factor": phi.meta["contraction_factor"],
            "phi_star_norm": phi.meta["phi_star_norm"],
            "normalized_norm": phi.meta["normalized_norm"],
            "residual": phi.meta["residual"],
            "tail_exponent": decay_exponent(x[mask], u_lam.values[mask]),
            "sup_u": u_lam.sup(),
            "S_norm": S,
        }
        per[repr(float(lam))] = entry
        rows.append([entry[k] for k in ("lam", "iterations", "contraction_factor", "phi_star_norm",
                                        "normalized_norm", "residual", "tail_exponent", "sup_u", "S_norm")])
        out.write(f"phi_{i:02d}.csv", phi.to_csv())
    out.write("ladder.csv", csv_text(["lam", "iterations", "contraction_factor", "phi_star_norm", "normalized_norm",
                                      "residual", "tail_exponent", "sup_u", "S_norm"], rows))
    result = {"per_lambda": per}
    if len(rows) == 1:
        result.update(next(iter(per.values())))
    lams = [r[0] for r in rows]
    if len(lams) >= 3 and lams[0] / lams[-1] >= 8.0:
        S = {r[0]: r[-1] for r in rows}
        result["S_slope"] = perturbation.scaling_slope(lams, S.__getitem__)
        result["S_slope_target"] = 4.0 / (cfg.p - 1.0)
    return result


def _run_reduce(cfg: RunConfig, out: _Artifacts) -> dict:
    v_f = _fast_profile(cfg)
    V = cfg.potential_spec()
    res = _step("find_critical_xi", reduction.find_critical_xi, v_f, V, cfg.Lambda, cfg.points, cfg.N)
    out.write("G.csv", csv_text(["xi", "G"], zip(res.xi_grid, res.G_values)))
    ladder = _step("E_error_norm", reduction.E_norm_ladder, v_f, V, cfg.p, cfg.xi, cfg.eps_ladder, None, cfg.N)
    return {**res.to_dict(), "E_norm_ladder": ladder}


_DISPATCH = {
    "shoot": _run_shoot,
    "structure-scan": _run_scan,
    "pohozaev": _run_pohozaev,
    "nondegeneracy": _run_nondegeneracy,
    "slowdecay": _run_slowdecay,
    "reduce": _run_reduce,
}


def _budget(cfg: RunConfig) -> dict:
    sc = shooting.ShootConfig()
    fp = perturbation.FixedPointConfig()
    budget = {
        "shooting": {"rel_tol": cfg.rel_tol, "abs_tol": cfg.abs_tol, "bisection_tol": sc.bisection_tol,
                     "tau_fast": sc.tau_fast, "tau_slow": sc.tau_slow},
        "linear_solver": {"ode_rtol": perturbation.ODE_RTOL, "ode_atol": perturbation.ODE_ATOL,
                          "grid_dt": perturbation.GRID_DT, "wronskian_tol": perturbation.WRONSKIAN_TOL},
        "fixed_point": {"contraction_tol": fp.contraction_tol, "ball_radius_factor": fp.ball_radius_factor},
        "quadrature": {"gauss_points": reduction.GAUSS_POINTS},
    }
    keep = {
        "shoot": ("shooting",), "structure-scan": ("shooting",), "pohozaev": (),
        "nondegeneracy": ("shooting",), "slowdecay": ("linear_solver", "fixed_point"),
        "reduce": ("shooting", "quadrature"),
    }[cfg.subcommand]
    return {k: budget[k] for k in keep}


def run(cfg: RunConfig, out_dir: Optional[str] = None) -> RunRecord:
    """Execute one configured run and persist its artifacts."""
    cfg.validate()
    root = Path(out_dir or cfg.out_dir)
    root.mkdir(parents=True, exist_ok=True)
    final = root / cfg.run_id
    staging = Path(tempfile.mkdtemp(dir=root, prefix=f".{cfg.run_id}."))
    t0 = time.perf_counter()
    try:
        art = _Artifacts(staging)
        outputs = _DISPATCH[cfg.subcommand](cfg, art)
        record = RunRecord(
            run_id=cfg.run_id, subcommand=cfg.subcommand, config=cfg.canonical(),
            outputs=_clean(outputs), wall_clock=time.perf_counter() - t0,
            tolerance_budget=_budget(cfg), manifest=art.manifest(),
        )
        write_atomic(staging / RECORD_NAME, dumps(record.to_dict()))
        if final.exists():
            shutil.rmtree(final)
        os.replace(staging, final)
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    record.directory = str(final)
    log.info("run %s (%s) finished in %.2fs", cfg.run_id, cfg.subcommand, record.wall_clock)
    return record


def verify_manifest(directory) -> bool:
    """Every file besides record.json is listed with a matching checksum, and nothing else."""
    directory = Path(directory)
    rec = json.loads((directory / RECORD_NAME).read_text(encoding="utf-8"))
    listed = {m["file"]: m["sha256"] for m in rec["manifest"]}
    present = {p.name for p in directory.iterdir() if p.is_file() and p.name != RECORD_NAME}
    if present != set(listed):
        return False
    return all(sha256_file(directory / n) == h for n, h in listed.items())


# --- sweeps -------------------------------------------------------------------


def _sweep_point(args):
    cfg_dict, axis, value, out_dir = args
    try:
        cfg = RunConfig(**{**cfg_dict, axis: coerce(axis, value)})
        rec = run(cfg, out_dir)
        return {"value": value, "status": "ok", "run_id": rec.run_id, "headline": rec.headline()}
    except QuasiDecayError as exc:
        return {"value": value, "status": "failed", "error": type(exc).__name__, "message": str(exc)}


def sweep(axis: str, values: Sequence, base: RunConfig, workers: int = 1, out_dir: Optional[str] = None) -> list:
    """Independent runs over one numeric config field; failures are recorded, not raised."""
    if axis not in NUMERIC_FIELDS:
        raise InvalidArgument(f"sweep axis {axis!r} is not a numeric config field")
    values = list(values)
    if not values:
        return []
    out = str(out_dir or base.out_dir)
    base_dict = {f: getattr(base, f) for f in base.__dataclass_fields__}
    jobs = [(base_dict, axis, v, out) for v in values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    return results


def write_sweep(results: list, axis: str, base: RunConfig, out_dir: Optional[str] = None) -> Path:
    """Aggregate CSV and JSON summary of a sweep, in a directory keyed by its content."""
    root = Path(out_dir or base.out_dir)
    key = hashlib.sha256(
        (base.canonical_text() + axis + json.dumps([r["value"] for r in results])).encode()
    ).hexdigest()[:16]
    d = root / f"sweep-{key}"
    d.mkdir(parents=True, exist_ok=True)
    scalar_keys = sorted({k for r in results if r["status"] == "ok" for k in r["headline"]})
    rows = []
    for r in results:
        h = r.get("headline", {})
        rows.append([r["value"], r["status"], r.get("run_id", "")] + [h.get(k) for k in scalar_keys] + [r.get("error", "")])
    write_atomic(d / "sweep.csv", csv_text([axis, "status", "run_id"] + scalar_keys + ["error"], rows))
    summary = {"axis": axis, "base": base.canonical(), "points": results}
    ok = [r for r in results if r["status"] == "ok" and isinstance(r["headline"].get("S_norm"), float)]
    if axis == "lam" and len(ok) >= 3:
        lams = sorted((float(r["value"]) for r in ok), reverse=True)
        S = {float(r["value"]): r["headline"]["S_norm"] for r in ok}
        try:
            summary["S_slope"] = perturbation.scaling_slope(lams, S.__getitem__)
        except QuasiDecayError as exc:
            summary["S_slope_error"] = str(exc)
    write_atomic(d / "sweep.json", dumps(summary))
    return d


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, InvalidArgument):
        return 2
    if isinstance(exc, NumericalFailure):
        return 3
    return 1
