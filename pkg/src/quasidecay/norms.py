"""Weighted supremum norms measuring decay at the origin and at infinity.

Split families (radial, centered at 0):

    star:       sup_{r<=1} r^s |phi| + sup_{r>=1} r^a |phi|
    star_star:  sup_{r<=1} r^(2+s) |h| + sup_{r>=1} r^(2+a) |h|

with inner exponent s (sigma, or theta in the potential variant) and outer
exponent a = 2/(p-1) unless overridden.  Bracket families use the single weight
<x - xi>^s or <x - xi>^(2+s) with <y> = sqrt(1 + |y|^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidArgument

STAR = "star"
STAR_STAR = "star_star"
BRACKET_STAR = "bracket_star"
BRACKET_STAR_STAR = "bracket_star_star"
FAMILIES = (STAR, STAR_STAR, BRACKET_STAR, BRACKET_STAR_STAR)


@dataclass(frozen=True)
class WeightedNormSpec:
    sigma: float
    p: float
    family: str = STAR
    outer_exponent: Optional[float] = None
    center: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidArgument(f"unknown norm family {self.family!r}")
        if not (math.isfinite(self.sigma) and self.sigma > 0.0):
            raise InvalidArgument("inner exponent must be positive")
        if not self.p > 1.0:
            raise InvalidArgument("p must exceed 1")

    @property
    def outer(self) -> float:
        return 2.0 / (self.p - 1.0) if self.outer_exponent is None else float(self.outer_exponent)

    @property
    def split(self) -> bool:
        return self.family in (STAR, STAR_STAR)

    @property
    def shift(self) -> float:
        return 2.0 if self.family in (STAR_STAR, BRACKET_STAR_STAR) else 0.0

    def dual(self) -> "WeightedNormSpec":
        """The right-hand-side norm paired with a solution norm (and back)."""
        swap = {STAR: STAR_STAR, STAR_STAR: STAR, BRACKET_STAR: BRACKET_STAR_STAR, BRACKET_STAR_STAR: BRACKET_STAR}
        return WeightedNormSpec(self.sigma, self.p, swap[self.family], self.outer_exponent, self.center)

    def with_family(self, family: str) -> "WeightedNormSpec":
        return WeightedNormSpec(self.sigma, self.p, family, self.outer_exponent, self.center)

    def check_window(self, lo: float, hi: float, what: str = "sigma") -> None:
        if not lo < self.sigma < hi:
            raise InvalidArgument(f"{what}={self.sigma:g} outside the open window ({lo:g}, {hi:g})")


def default_sigma(p: float) -> float:
    return 0.5 * min(2.0, 2.0 / (p - 1.0))


def split_weights(r, spec: WeightedNormSpec):
    """Inner and outer weights on radii r; each vanishes outside its region."""
    r = np.asarray(r, dtype=float)
    inner = np.where(r <= 1.0, r ** (spec.shift + spec.sigma), 0.0)
    outer = np.where(r >= 1.0, r ** (spec.shift + spec.outer), 0.0)
    return inner, outer


def bracket_weight(dist, spec: WeightedNormSpec):
    dist = np.asarray(dist, dtype=float)
    return (1.0 + dist * dist) ** (0.5 * (spec.shift + spec.sigma))


def weighted_sup(r, values, spec: WeightedNormSpec, dist=None) -> float:
    """Discrete weighted supremum over samples.

    For bracket families ``dist`` gives |x - xi| at each sample (defaults to
    |r - center| for radial data).
    """
    r = np.asarray(r, dtype=float)
    vals = np.abs(np.asarray(values, dtype=float))
    if vals.shape != r.shape:
        raise InvalidArgument("values must match the radii")
    if not np.all(np.isfinite(vals)):
        raise InvalidArgument("norm of non-finite samples")
    if spec.split:
        if r.min() > 1.0 or r.max() < 1.0:
            raise InvalidArgument("split norms need samples on both sides of r = 1")
        inner, outer = split_weights(r, spec)
        return float(np.max(inner * vals) + np.max(outer * vals))
    if dist is None:
        dist = np.abs(r - spec.center)
    return float(np.max(bracket_weight(dist, spec) * vals))


def weighted_norm(phi, spec: WeightedNormSpec, refine: int = 0) -> float:
    """Weighted norm of a Profile; ``refine`` > 0 adds interpolated nodes per interval."""
    r = phi.grid
    if refine > 0:
        frac = np.linspace(0.0, 1.0, refine + 1, endpoint=False)[1:]
        extra = (r[:-1, None] + np.diff(r)[:, None] * frac[None, :]).ravel()
        r = np.sort(np.concatenate([r, extra]))
        return weighted_sup(r, phi(r), spec)
    return weighted_sup(r, phi.values, spec)
