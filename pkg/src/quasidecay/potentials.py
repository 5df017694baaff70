"""Positive bounded potentials V along with their declared decay class.

Each potential is radial about a center placed on the first coordinate axis,
which is the only direction the reductions use.  Sums of such bumps model
non-radial potentials such as two separated Gaussians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidArgument, PotentialSpecViolation

GAUSSIAN = "gaussian"
INVERSE_POWER = "inverse-power"
TABLE = "table"
SUM = "sum"
KINDS = (GAUSSIAN, INVERSE_POWER, TABLE, SUM)

# decay classes: o(|x|^-2), or bounded by C |x|^-mu with mu > N
LITTLE_O_2 = "o2"
POWER_BOUND = "power"
CLASSES = (LITTLE_O_2, POWER_BOUND)


@dataclass(frozen=True)
class PotentialSpec:
    kind: str = GAUSSIAN
    amplitude: float = 1.0
    scale: float = 1.0
    mu: Optional[float] = None
    center: float = 0.0
    decay_class: str = LITTLE_O_2
    table_r: tuple = ()
    table_v: tuple = ()
    terms: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown potential kind {self.kind!r}")
        if self.decay_class not in CLASSES:
            raise InvalidArgument(f"unknown decay class {self.decay_class!r}")
        if self.kind == SUM:
            if not self.terms:
                raise InvalidArgument("sum potential needs terms")
            return
        if not (self.amplitude > 0.0 and math.isfinite(self.amplitude)):
            raise InvalidArgument("potential amplitude must be positive")
        if not self.scale > 0.0:
            raise InvalidArgument("potential scale must be positive")
        if self.kind == INVERSE_POWER and not (self.mu is not None and self.mu > 0.0):
            raise InvalidArgument("inverse-power potential needs mu > 0")
        if self.kind == TABLE:
            r, v = np.asarray(self.table_r, float), np.asarray(self.table_v, float)
            if r.size < 2 or r.shape != v.shape or r[0] != 0.0 or np.any(np.diff(r) <= 0.0):
                raise InvalidArgument("table potential needs increasing radii starting at 0")
            if np.any(v <= 0.0):
                raise InvalidArgument("table potential values must be positive")
            if self.mu is None or self.mu <= 0.0:
                raise InvalidArgument("table potential needs a tail exponent mu")

    # --- construction helpers ----------------------------------------

    @classmethod
    def gaussian(cls, amplitude=1.0, scale=1.0, center=0.0) -> "PotentialSpec":
        return cls(GAUSSIAN, amplitude, scale, center=center)

    @classmethod
    def inverse_power(cls, mu, amplitude=1.0, scale=1.0, center=0.0) -> "PotentialSpec":
        return cls(INVERSE_POWER, amplitude, scale, mu=mu, center=center, decay_class=POWER_BOUND)

    @classmethod
    def table(cls, r, v, mu, center=0.0, decay_class=POWER_BOUND) -> "PotentialSpec":
        return cls(TABLE, 1.0, 1.0, mu=mu, center=center, decay_class=decay_class,
                   table_r=tuple(float(x) for x in r), table_v=tuple(float(x) for x in v))

    @classmethod
    def sum(cls, *terms: "PotentialSpec") -> "PotentialSpec":
        return cls(SUM, terms=tuple(terms))

    def shifted(self, offset: float) -> "PotentialSpec":
        if self.kind == SUM:
            return PotentialSpec.sum(*(t.shifted(offset) for t in self.terms))
        kw = {k: getattr(self, k) for k in self.__dataclass_fields__}
        kw["center"] = self.center + offset
        return PotentialSpec(**kw)

    # --- evaluation ----------------------------------------------------

    @property
    def components(self) -> tuple:
        return self.terms if self.kind == SUM else (self,)

    @property
    def is_radial(self) -> bool:
        return self.kind != SUM

    def profile(self, rho):
        """Radial shape V0(rho) about this component's own center."""
        if self.kind == SUM:
            raise InvalidArgument("a sum potential has no single radial profile")
        rho = np.asarray(rho, dtype=float)
        x = rho / self.scale
        if self.kind == GAUSSIAN:
            return self.amplitude * np.exp(-x * x)
        if self.kind == INVERSE_POWER:
            return self.amplitude * (1.0 + x * x) ** (-0.5 * self.mu)
        r, v = np.asarray(self.table_r), np.asarray(self.table_v)
        inside = np.interp(rho, r, np.log(v))
        tail = np.log(v[-1]) - self.mu * np.log(np.maximum(rho, r[-1]) / r[-1])
        return np.exp(np.where(rho <= r[-1], inside, tail))

    def __call__(self, axial, radial=0.0):
        """V at the point with coordinate ``axial`` along the axis and distance ``radial`` from it."""
        axial = np.asarray(axial, dtype=float)
        radial = np.asarray(radial, dtype=float)
        total = 0.0
        for c in self.components:
            total = total + c.profile(np.hypot(axial - c.center, radial))
        return total

    def radial_values(self, r):
        """V on radii about the origin; only defined for a centered radial potential."""
        if not self.is_radial or self.center != 0.0:
            raise InvalidArgument("radial evaluation needs a single potential centered at 0")
        return self.profile(r)

    @property
    def sup(self) -> float:
        return float(sum(c.amplitude if c.kind != TABLE else max(c.table_v) for c in self.components))

    def tail_exponent(self) -> float:
        """Decay exponent of the slowest component (inf for Gaussians)."""
        out = math.inf
        for c in self.components:
            if c.kind in (INVERSE_POWER, TABLE):
                out = min(out, float(c.mu))
        return out


def check_decay_class(V: PotentialSpec, N: int, radii) -> None:
    """Validate positivity, boundedness and the declared class on sampled radii."""
    radii = np.asarray(radii, dtype=float)
    for c in V.components:
        vals = c.profile(radii)
        if not np.all(np.isfinite(vals)) or np.any(vals < 0.0):
            raise PotentialSpecViolation("potential must be positive and finite on the sampled grid")
        # Gaussians may underflow to zero far out; other kinds may not vanish
        if c.kind != GAUSSIAN and np.any(vals == 0.0):
            raise PotentialSpecViolation("potential vanishes on the sampled grid")
        far = radii >= max(1.0, 0.1 * radii.max())
        if far.sum() < 2:
            continue
        rf, vf = radii[far], vals[far]
        if c.decay_class == POWER_BOUND:
            mu = c.tail_exponent()
            if math.isinf(mu):
                continue
            if mu <= N:
                raise PotentialSpecViolation(f"power-bound class needs mu > N, got mu={mu:g}")
            weighted = rf**mu * vf
            if weighted[-1] > 10.0 * max(np.median(weighted), c.sup):
                raise PotentialSpecViolation("V exceeds C |x|^-mu on the sampled grid")
        else:
            weighted = rf**2 * vf
            if weighted[-1] > 0.5 * weighted.max() and weighted[-1] > 1e-300:
                raise PotentialSpecViolation("V is not o(|x|^-2) on the sampled grid")
