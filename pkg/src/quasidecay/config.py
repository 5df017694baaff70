"""Run configuration: key = value files, flag overrides and a content-hash run id."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from .errors import InvalidArgument
from .potentials import PotentialSpec
from .shooting import admissible_window

SUBCOMMANDS = ("shoot", "structure-scan", "pohozaev", "nondegeneracy", "slowdecay", "reduce")

# fields a sweep may vary
NUMERIC_FIELDS = (
    "N", "p", "d", "d_min", "d_max", "d_points", "r_max", "lam", "Lambda", "points",
    "amplitude", "scale", "mu", "center", "xi", "sigma", "rel_tol", "abs_tol",
)


def _floats(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(float(x) for x in text)
    parts = [t for t in str(text).replace(";", ",").split(",") if t.strip()]
    try:
        return tuple(float(t) for t in parts)
    except ValueError as exc:
        raise InvalidArgument(f"not a comma-separated list of numbers: {text!r}") from exc


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off", ""):
        return False
    raise InvalidArgument(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    N: int = 3
    p: float = 7.0
    # shooting
    find_dstar: bool = False
    d: Optional[float] = None
    d_min: float = 1e-3
    d_max: float = 1e3
    d_points: int = 200
    r_max: float = 200.0
    rel_tol: float = 1e-9
    abs_tol: float = 1e-11
    profile: Optional[str] = None
    # slow decay
    lambda_ladder: tuple = (0.2, 0.1, 0.05, 0.025)
    lam: Optional[float] = None
    sigma: Optional[float] = None
    # reduction
    potential: str = "gaussian"
    amplitude: float = 1.0
    scale: float = 1.0
    mu: Optional[float] = None
    center: float = 0.0
    Lambda: float = 10.0
    points: int = 101
    xi: float = 0.0
    eps_ladder: tuple = (1e-1, 1e-2, 1e-3)
    # execution
    workers: int = 1
    out_dir: str = "runs"

    def __post_init__(self):
        self.validate()

    # --- validation -------------------------------------------------------

    def validate(self) -> None:
        if self.subcommand not in SUBCOMMANDS:
            raise InvalidArgument(f"unknown subcommand {self.subcommand!r}")
        if int(self.N) != self.N or self.N < 3:
            raise InvalidArgument("N must be an integer >= 3")
        if not (math.isfinite(self.p) and self.p > 1.0):
            raise InvalidArgument(f"p must exceed 1, got {self.p}")
        if self.workers < 1:
            raise InvalidArgument("workers must be at least 1")
        lo, hi = admissible_window(self.N)
        sub = self.subcommand
        if sub == "shoot":
            if not self.find_dstar and self.d is None:
                raise InvalidArgument("shoot needs --find-dstar or a height --d")
            if self.d is not None and not self.d > 0.0:
                raise InvalidArgument("shooting height d must be positive")
            if self.find_dstar and not lo < self.p < hi:
                raise InvalidArgument(f"--find-dstar needs p in ({lo:g}, {hi:g}) for N={self.N}")
        if sub == "structure-scan":
            if not (0.0 < self.d_min < self.d_max) or self.d_points < 2:
                raise InvalidArgument("scan needs 0 < d_min < d_max and at least two points")
        if sub in ("shoot", "structure-scan") and not self.r_max > 0.0:
            raise InvalidArgument("r_max must be positive")
        if sub in ("nondegeneracy", "reduce") and self.profile is None and not lo < self.p < hi:
            raise InvalidArgument(f"fast-decay profile needs p in ({lo:g}, {hi:g}) for N={self.N}")
        if sub == "slowdecay":
            if not self.p > lo:
                raise InvalidArgument(f"slow decay needs p > {lo:g} for N={self.N}")
            ladder = self.ladder()
            if not ladder or any(l <= 0.0 for l in ladder):
                raise InvalidArgument("lambda ladder must hold positive values")
        if sub == "reduce":
            if not self.Lambda > 0.0 or self.points < 3:
                raise InvalidArgument("reduce needs Lambda > 0 and at least three points")
            if any(e < 0.0 for e in self.eps_ladder):
                raise InvalidArgument("eps values must be non-negative")
            self.potential_spec()
        if sub == "pohozaev" and self.profile is None:
            raise InvalidArgument("pohozaev needs --profile")
        if self.profile is not None and sub in ("pohozaev", "nondegeneracy", "reduce"):
            if not Path(self.profile).is_file():
                raise InvalidArgument(f"profile file {self.profile!r} not found")

    def ladder(self) -> tuple:
        return (float(self.lam),) if self.lam is not None else tuple(self.lambda_ladder)

    def potential_spec(self) -> PotentialSpec:
        if self.potential == "gaussian":
            return PotentialSpec.gaussian(self.amplitude, self.scale, self.center)
        if self.potential == "inverse-power":
            if self.mu is None:
                raise InvalidArgument("inverse-power potential needs --mu")
            return PotentialSpec.inverse_power(self.mu, self.amplitude, self.scale, self.center)
        raise InvalidArgument(f"unsupported CLI potential {self.potential!r}")

    # --- identity ---------------------------------------------------------

    def canonical(self) -> dict:
        out = {}
        for f in fields(self):
            if f.name in ("out_dir", "workers"):
                continue
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    def canonical_text(self) -> str:
        return json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))

    @property
    def run_id(self) -> str:
        return hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()[:16]

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


_FIELD_TYPES = {f.name: f for f in fields(RunConfig)}


def coerce(name: str, value):
    """Convert a textual value to the type of the named config field."""
    if name not in _FIELD_TYPES:
        raise InvalidArgument(f"unknown config key {name!r}")
    if value is None:
        return None
    if name in ("lambda_ladder", "eps_ladder"):
        return _floats(value)
    if name == "find_dstar":
        return _bool(value)
    if name in ("N", "d_points", "points", "workers"):
        try:
            f = float(value)
        except ValueError as exc:
            raise InvalidArgument(f"{name} must be an integer") from exc
        if f != int(f):
            raise InvalidArgument(f"{name} must be an integer")
        return int(f)
    if name in ("subcommand", "profile", "potential", "out_dir"):
        return str(value)
    try:
        return float(value)
    except ValueError as exc:
        raise InvalidArgument(f"{name} must be numeric, got {value!r}") from exc


def parse_config_text(text: str) -> dict:
    """key = value lines; '#' starts a comment."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidArgument(f"config line {n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        out[key] = coerce(key, val)
    return out


def load_config(subcommand: str, path: Optional[str] = None, overrides: Optional[dict] = None) -> RunConfig:
    values = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise InvalidArgument(f"cannot read config {path!r}: {exc}") from exc
        values.update(parse_config_text(text))
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = coerce(k, v)
    values.pop("subcommand", None)
    return RunConfig(subcommand=subcommand, **values)
