"""Radial initial value problems v'' + (N-1)/r v' + F(r, v) = 0.

The origin is singular, so every integration starts at a small radius r0 from
the regular Taylor branch and continues with an adaptive DOP853 pair.
Results are stored as immutable :class:`Profile` objects that carry values,
first derivatives and a small metadata dictionary.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from . import transform
from .errors import InvalidArgument
from .fitting import decay_exponent

TERMINATIONS = ("reached-r-max", "sign-crossing", "blow-up", "step-failure")


@dataclass(frozen=True)
class RadialProblem:
    """Dimension plus the source term F(r, v) of the radial equation.

    ``jacobian`` is dF/dv and is needed by the linearized integrations;
    ``antiderivative`` is int_0^v F(r, s) ds for autonomous sources and is
    only used by energy diagnostics.
    """

    N: int
    source: Callable[[float, float], float]
    jacobian: Optional[Callable[[float, float], float]] = None
    antiderivative: Optional[Callable[[float], float]] = None
    p: Optional[float] = None
    name: str = "custom"

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 3:
            raise InvalidArgument(f"dimension N must be an integer >= 3, got {self.N}")

    @classmethod
    def zero_mass(cls, N: int, p: float) -> "RadialProblem":
        """Transformed zero-mass equation with source f(v)."""
        nl = transform.Nonlinearity(p)
        return cls(
            N,
            lambda r, v: transform.f(v, nl.p),
            lambda r, v: transform.f_prime(v, nl.p),
            lambda v: transform.F_antiderivative(v, nl.p),
            p=nl.p,
            name="zero-mass",
        )

    @classmethod
    def lane_emden(cls, N: int, p: float) -> "RadialProblem":
        transform.Nonlinearity(p)
        return cls(
            N,
            lambda r, v: v**p if v > 0.0 else 0.0,
            lambda r, v: p * v ** (p - 1.0) if v > 0.0 else 0.0,
            lambda v: max(v, 0.0) ** (p + 1.0) / (p + 1.0),
            p=p,
            name="lane-emden",
        )

    @classmethod
    def scaled_zero_mass(cls, N: int, p: float, lam: float) -> "RadialProblem":
        """Source lam^(-2p/(p-1)) f(lam^(2/(p-1)) v) of the rescaled problem."""
        if not lam > 0.0:
            raise InvalidArgument("scale lambda must be positive")
        transform.Nonlinearity(p)
        a = 2.0 / (p - 1.0)
        up = lam**a
        down = lam ** (-2.0 * p / (p - 1.0))
        return cls(
            N,
            lambda r, v: down * transform.f(up * v, p),
            lambda r, v: lam**-2.0 * transform.f_prime(up * v, p),
            lambda v: down / up * transform.F_antiderivative(up * v, p),
            p=p,
            name=f"scaled-zero-mass(lambda={lam:g})",
        )

    @classmethod
    def linear(cls, N: int) -> "RadialProblem":
        return cls(N, lambda r, v: v, lambda r, v: 1.0, lambda v: 0.5 * v * v, name="linear")

    @classmethod
    def free(cls, N: int) -> "RadialProblem":
        return cls(N, lambda r, v: 0.0, lambda r, v: 0.0, lambda v: 0.0, name="free")


@dataclass(frozen=True)
class StepControls:
    r0: Optional[float] = None
    abs_tol: float = 1e-11
    rel_tol: float = 1e-9
    max_step: float = math.inf
    r_max: float = 200.0
    blowup_factor: float = 1e8
    samples_per_efold: int = 64

    def __post_init__(self):
        if self.r0 is not None and not self.r0 > 0.0:
            raise InvalidArgument("r0 must be positive")
        for tol in (self.abs_tol, self.rel_tol):
            if not 0.0 < tol < 1.0:
                raise InvalidArgument("tolerances must lie in (0, 1)")
        if self.r0 is not None and not self.r_max > self.r0:
            raise InvalidArgument("r_max must exceed r0")
        if self.samples_per_efold < 4:
            raise InvalidArgument("samples_per_efold must be at least 4")

    def tightened(self, factor: float = 0.5) -> "StepControls":
        return StepControls(
            self.r0, self.abs_tol * factor, self.rel_tol * factor,
            self.max_step, self.r_max, self.blowup_factor, self.samples_per_efold,
        )

    def with_r_max(self, r_max: float) -> "StepControls":
        return StepControls(
            self.r0, self.abs_tol, self.rel_tol, self.max_step, r_max,
            self.blowup_factor, self.samples_per_efold,
        )


def _freeze(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Profile:
    """A radial function sampled on an increasing grid.

    Evaluation between nodes is cubic Hermite (values and stored slopes);
    beyond the last node the profile continues as the power law fitted on
    the outer half of the grid.
    """

    grid: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        grid, values, derivs = _freeze(self.grid), _freeze(self.values), _freeze(self.derivs)
        if grid.ndim != 1 or grid.size < 2:
            raise InvalidArgument("profile grid needs at least two nodes")
        if values.shape != grid.shape or derivs.shape != grid.shape:
            raise InvalidArgument("values and derivs must match the grid")
        if grid[0] <= 0.0 or np.any(np.diff(grid) <= 0.0):
            raise InvalidArgument("profile grid must be positive and strictly increasing")
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(derivs))):
            raise InvalidArgument("profile contains non-finite samples")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "derivs", derivs)
        object.__setattr__(self, "meta", dict(self.meta))

    @property
    def r_min(self) -> float:
        return float(self.grid[0])

    @property
    def r_max(self) -> float:
        return float(self.grid[-1])

    @property
    def termination(self) -> str:
        return self.meta.get("termination", "reached-r-max")

    def _spline(self):
        sp = self.__dict__.get("_sp")
        if sp is None:
            sp = CubicHermiteSpline(self.grid, self.values, self.derivs, extrapolate=False)
            object.__setattr__(self, "_sp", sp)
        return sp

    def tail_exponent(self, lo: Optional[float] = None, hi: Optional[float] = None) -> float:
        """Fitted decay exponent over [lo, hi], default the outer half of the grid."""
        hi = self.r_max if hi is None else hi
        lo = 0.5 * hi if lo is None else lo
        mask = (self.grid >= lo) & (self.grid <= hi)
        if mask.sum() < 2:
            raise InvalidArgument(f"tail window [{lo}, {hi}] holds fewer than two nodes")
        return decay_exponent(self.grid[mask], self.values[mask])

    def _tail_alpha(self) -> float:
        alpha = self.__dict__.get("_alpha")
        if alpha is None:
            try:
                alpha = self.tail_exponent()
            except Exception:
                alpha = 0.0
            object.__setattr__(self, "_alpha", alpha)
        return alpha

    def __call__(self, r, nu: int = 0):
        """Value (nu=0) or first derivative (nu=1) at radii r."""
        r_arr = np.asarray(r, dtype=float)
        flat = np.atleast_1d(r_arr).ravel()
        out = np.empty_like(flat)
        inside = (flat >= self.grid[0]) & (flat <= self.grid[-1])
        if inside.any():
            out[inside] = self._spline()(flat[inside], nu)
        below = flat < self.grid[0]
        if below.any():
            out[below] = self.values[0] if nu == 0 else self.derivs[0] * flat[below] / self.grid[0]
        above = flat > self.grid[-1]
        if above.any():
            alpha = self._tail_alpha()
            base = self.values[-1] * (flat[above] / self.grid[-1]) ** (-alpha)
            out[above] = base if nu == 0 else -alpha * base / flat[above]
        if r_arr.ndim == 0:
            return float(out[0])
        return out.reshape(r_arr.shape)

    def derivative(self, r):
        return self(r, nu=1)

    def mapped(self, values, derivs, **meta) -> "Profile":
        """A new profile on the same grid, inheriting this profile's metadata."""
        new_meta = dict(self.meta)
        new_meta.update(meta)
        return Profile(self.grid, values, derivs, new_meta)

    # --- serialization -------------------------------------------------

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        header = {k: self.meta.get(k) for k in ("N", "p", "d", "termination")}
        header["r_max"] = self.r_max
        buf.write("# " + ", ".join(f"{k}={_fmt_meta(v)}" for k, v in header.items()) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["r", "v", "v_prime"])
        for row in zip(self.grid, self.values, self.derivs):
            writer.writerow([repr(float(x)) for x in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    @classmethod
    def from_csv(cls, source) -> "Profile":
        text = Path(source).read_text(encoding="utf-8") if not _looks_like_csv(source) else source
        lines = text.splitlines()
        meta = {}
        if lines and lines[0].startswith("#"):
            for item in lines[0][1:].split(","):
                if "=" in item:
                    key, val = item.split("=", 1)
                    meta[key.strip()] = _parse_meta(val.strip())
            lines = lines[1:]
        reader = csv.reader(lines)
        header = next(reader)
        if [h.strip() for h in header[:3]] != ["r", "v", "v_prime"]:
            raise InvalidArgument(f"unexpected profile CSV header {header}")
        rows = np.array([[float(x) for x in row[:3]] for row in reader if row], dtype=float)
        if rows.ndim != 2 or rows.shape[0] < 2:
            raise InvalidArgument("profile CSV holds fewer than two rows")
        meta.pop("r_max", None)
        return cls(rows[:, 0], rows[:, 1], rows[:, 2], meta)


def _looks_like_csv(source) -> bool:
    return isinstance(source, str) and ("\n" in source)


def _fmt_meta(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def _parse_meta(text: str):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


# --- integration -------------------------------------------------------------


def default_r0(problem: RadialProblem, d: float) -> float:
    """Start radius scaled to the curvature length sqrt(d / |F(0, d)|)."""
    f0 = abs(problem.source(0.0, d))
    if f0 == 0.0:
        return 1e-6
    return 1e-6 * min(1.0, math.sqrt(abs(d) / f0))


def _sample_nodes(sol, r0: float, r_end: float, per_efold: int) -> np.ndarray:
    span = math.log(r_end / r0)
    n = max(2, int(math.ceil(span * per_efold)) + 1)
    log_nodes = np.exp(np.linspace(math.log(r0), math.log(r_end), n))
    steps = np.asarray(sol.t, dtype=float)
    sub = (steps[:-1, None] + np.diff(steps)[:, None] * np.linspace(0.0, 1.0, 4, endpoint=False)[None, :]).ravel()
    nodes = np.unique(np.concatenate([log_nodes, sub, [r0, r_end]]))
    nodes = nodes[(nodes >= r0) & (nodes <= r_end)]
    # drop near-duplicates that would make Hermite data ill-conditioned
    keep = np.concatenate([[True], np.diff(nodes) > 1e-12 * nodes[1:]])
    nodes = nodes[keep]
    nodes[-1] = r_end
    return nodes


def integrate_ivp(
    problem: RadialProblem,
    d: float,
    controls: StepControls = StepControls(),
    stop_on_flux_turn: bool = False,
    nodes=None,
) -> Profile:
    """Integrate the nonlinear IVP v(0) = d, v'(0) = 0.

    Besides the stop events (sign crossing, blow-up) the integration records
    the first radius where r^(N-2) v stops increasing; for a non-negative
    source this certifies a later sign crossing.

    ``nodes`` overrides the output grid (the first node is the start radius);
    nodes beyond an early termination are dropped.
    """
    if not (math.isfinite(d) and d > 0.0):
        raise InvalidArgument(f"shooting height must be positive, got {d}")
    N = problem.N
    r0 = controls.r0 if controls.r0 is not None else default_r0(problem, d)
    if nodes is not None:
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2 or nodes[0] <= 0.0 or np.any(np.diff(nodes) <= 0.0):
            raise InvalidArgument("output nodes must be positive and strictly increasing")
        r0 = float(nodes[0])
        controls = controls.with_r_max(float(nodes[-1]))
    if not controls.r_max > r0:
        raise InvalidArgument("r_max must exceed the start radius")
    F0 = problem.source(0.0, d)
    y0 = [d - F0 * r0 * r0 / (2.0 * N), -F0 * r0 / N]
    bound = controls.blowup_factor * d
    src = problem.source

    def rhs(r, y):
        return [y[1], -(N - 1) / r * y[1] - src(r, y[0])]

    def crossing(r, y):
        return y[0]

    crossing.terminal = True
    crossing.direction = -1

    def blowup(r, y):
        return bound - abs(y[0])

    blowup.terminal = True
    blowup.direction = -1

    def flux(r, y):
        return y[1] + (N - 2) * y[0] / r

    flux.terminal = bool(stop_on_flux_turn)
    flux.direction = -1

    sol = solve_ivp(
        rhs, (r0, controls.r_max), y0, method="DOP853",
        rtol=controls.rel_tol, atol=controls.abs_tol, max_step=controls.max_step,
        events=[crossing, blowup, flux], dense_output=True,
    )
    r_end = float(sol.t[-1])
    termination = "reached-r-max"
    r_cross = None
    if sol.status == -1:
        termination = "step-failure"
    elif sol.t_events[0].size:
        termination = "sign-crossing"
        r_cross = float(sol.t_events[0][0])
    elif sol.t_events[1].size:
        termination = "blow-up"
    flux_turn = float(sol.t_events[2][0]) if sol.t_events[2].size else None
    if r_end <= r0:
        nodes = np.array([r0, r0 * (1 + 1e-9)])
        vals, ders = np.array([y0[0]] * 2), np.array([y0[1]] * 2)
    else:
        if nodes is None:
            nodes = _sample_nodes(sol, r0, r_end, controls.samples_per_efold)
        else:
            nodes = nodes[nodes <= r_end]
            if nodes[-1] < r_end:
                nodes = np.append(nodes, r_end)
        ys = sol.sol(nodes)
        vals, ders = ys[0], ys[1]
        if termination == "sign-crossing":
            vals = vals.copy()
            vals[-1] = 0.0
    meta = {
        "N": N, "p": problem.p, "d": float(d), "problem": problem.name,
        "termination": termination, "r_cross": r_cross, "flux_turn": flux_turn,
        "r_max_requested": float(controls.r_max), "nfev": int(sol.nfev),
    }
    return Profile(nodes, vals, ders, meta)


def integrate_mode(
    problem: RadialProblem,
    base: Profile,
    k: int = 0,
    r_start: Optional[float] = None,
    controls: Optional[StepControls] = None,
    r_end: Optional[float] = None,
) -> Profile:
    """Regular solution of phi'' + (N-1)/r phi' + (F_v(v_base) - l_k/r^2) phi = 0.

    l_k = k(k+N-2); the start follows phi ~ r^k (1 - F_v(d) r^2 / (2(2k+N))),
    normalized so that phi / r^k -> 1 at the origin.
    """
    if int(k) != k or k < 0:
        raise InvalidArgument("mode index k must be a non-negative integer")
    if problem.jacobian is None:
        raise InvalidArgument("problem has no jacobian; cannot linearize")
    N = problem.N
    controls = controls or StepControls()
    r_end = base.r_max if r_end is None else float(r_end)
    if r_end > base.r_max * (1 + 1e-12) or r_end <= base.r_min:
        raise InvalidArgument(
            f"base profile covers [{base.r_min:g}, {base.r_max:g}], requested end {r_end:g}"
        )
    d = float(base.meta.get("d", base.values[0]))
    jac0 = problem.jacobian(0.0, d)
    if r_start is None:
        if k == 0:
            r_start = base.r_min
        else:
            ell = 1.0 / math.sqrt(abs(jac0)) if jac0 != 0.0 else 1.0
            r_start = max(base.r_min, 1e-3 * min(1.0, ell))
    lam_k = k * (k + N - 2)
    b = -jac0 / (2.0 * (2 * k + N))
    y0 = [r_start**k * (1.0 + b * r_start**2), k * r_start ** (k - 1) * (1.0 + b * (k + 2) / k * r_start**2) if k else 2.0 * b * r_start]
    spline = base._spline()
    jac = problem.jacobian
    rmax_base = base.r_max

    def v_at(r):
        return float(spline(min(r, rmax_base)))

    def rhs(r, y):
        return [y[1], -(N - 1) / r * y[1] - (jac(r, v_at(r)) - lam_k / (r * r)) * y[0]]

    atol = controls.abs_tol * min(1.0, r_start**k)
    sol = solve_ivp(
        rhs, (r_start, r_end), y0, method="DOP853",
        rtol=controls.rel_tol, atol=atol, max_step=controls.max_step, dense_output=True,
    )
    termination = "step-failure" if sol.status == -1 else "reached-r-max"
    end = float(sol.t[-1])
    nodes = _sample_nodes(sol, r_start, end, controls.samples_per_efold)
    ys = sol.sol(nodes)
    meta = {
        "N": N, "p": problem.p, "d": d, "mode": int(k), "lambda_k": float(lam_k),
        "termination": termination, "problem": problem.name + "-linearized",
    }
    return Profile(nodes, ys[0], ys[1], meta)


def integrate_variational(problem: RadialProblem, base: Profile, controls=None, r_end=None) -> Profile:
    """z0 = dv/dd along ``base``: the k = 0 mode with phi(0) = 1, phi'(0) = 0."""
    return integrate_mode(problem, base, 0, controls=controls, r_end=r_end)


def energy(problem: RadialProblem, profile: Profile) -> np.ndarray:
    """1/2 v'^2 + int_0^v F at every node; non-increasing along solutions."""
    if problem.antiderivative is None:
        raise InvalidArgument("problem has no antiderivative")
    prim = np.array([problem.antiderivative(float(v)) for v in profile.values])
    return 0.5 * profile.derivs**2 + prim
