"""Adversarial regions A_(u,y) and their finite approximations.

A region spec describes a family of sets, one per data point: either the
singleton {(u, y)} or a ball in (u, y)-space whose radius may depend on the
point's location.  Finite approximations select the M points that enter
training as constraints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .data_model import DataPoint
from .errors import UsageError

#: the location-dependent radius rule used by the synthetic demo
DEMO_RADIUS_RULE = "cosine-demo"

_NORMS = ("l2", "linf")


@dataclass(frozen=True)
class RegionSpec:
    """Adversarial region family.

    kind        "singleton" or "ball".
    norm        ball norm, "l2" or "linf" (ignored for singleton).
    radius_rule ball radius: a constant >= 0, or the string "cosine-demo"
                for r(u) = |cos(3*u1/2 + pi/3) / 20|.
    scale       multiplier lambda >= 0 applied to the radius.
    """

    kind: str
    norm: str = "l2"
    radius_rule: float | str = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("singleton", "ball"):
            raise UsageError(f"unknown region kind {self.kind!r}")
        if self.norm not in _NORMS:
            raise UsageError(f"unknown norm {self.norm!r}")
        if isinstance(self.radius_rule, str):
            if self.radius_rule != DEMO_RADIUS_RULE:
                raise UsageError(f"unknown radius rule {self.radius_rule!r}")
        else:
            object.__setattr__(self, "radius_rule", float(self.radius_rule))
            if self.radius_rule < 0:
                raise UsageError("constant radius must be >= 0")
        object.__setattr__(self, "scale", float(self.scale))
        if self.scale < 0:
            raise UsageError("scale must be >= 0")


@dataclass(frozen=True)
class FiniteApproxSpec:
    """Finite approximation scheme for a region.

    center_only  the point itself (M = 1).
    cross5       the point plus the axis-extreme points of the ball of
                 radius inflation * r(pt); for d = 1 this is the classic
                 5-point cross (center, left, right, top, bottom).
    explicit     one point per offset (d_u, d_y); include (0, 0) to keep
                 the center.
    """

    scheme: str
    inflation: float = 1.0
    offsets: tuple = ()

    def __post_init__(self):
        if self.scheme not in ("center_only", "cross5", "explicit"):
            raise UsageError(f"unknown approximation scheme {self.scheme!r}")
        object.__setattr__(self, "inflation", float(self.inflation))
        if self.inflation < 0:
            raise UsageError("inflation must be >= 0")
        if self.scheme == "explicit":
            offs = tuple((tuple(float(x) for x in np.atleast_1d(du)), float(dy))
                         for du, dy in self.offsets)
            if not offs:
                raise UsageError("explicit scheme requires at least one offset (M >= 1)")
            for du, dy in offs:
                if not all(math.isfinite(x) for x in du) or not math.isfinite(dy):
                    raise UsageError("explicit offsets must be finite")
            object.__setattr__(self, "offsets", offs)


@dataclass(frozen=True)
class ApproxSet:
    """The materialized finite approximation for one data point."""

    points: tuple[DataPoint, ...]

    def __post_init__(self):
        if len(self.points) < 1:
            raise UsageError("approximation set must contain at least one point")

    @property
    def M(self) -> int:
        return len(self.points)

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        U = np.stack([p.u for p in self.points])
        y = np.array([p.y for p in self.points])
        return U, y


def region_radius(spec: RegionSpec, pt: DataPoint) -> float:
    """Radius of A_pt, i.e. scale * radius_rule(pt).  Ball regions only."""
    if spec.kind != "ball":
        raise UsageError("region_radius is only defined for ball regions")
    if isinstance(spec.radius_rule, str):
        base = abs(math.cos(1.5 * float(pt.u[0]) + math.pi / 3.0) / 20.0)
    else:
        base = spec.radius_rule
    return spec.scale * base


def scale_region(spec: RegionSpec, lam: float) -> RegionSpec:
    """Scaled family A^lambda: multiplies the radius by lambda (nested in lambda)."""
    lam = float(lam)
    if lam < 0:
        raise UsageError("lambda must be >= 0")
    if spec.kind == "singleton":
        return spec
    return replace(spec, scale=spec.scale * lam)


def make_approx(spec: FiniteApproxSpec, region: RegionSpec, pt: DataPoint) -> ApproxSet:
    """Materialize the finite approximation around ``pt``.

    Output order is fixed: center, +u1, -u1, ..., +ud, -ud, +y, -y for
    cross5; the given offset order for explicit.
    """
    if spec.scheme == "center_only":
        return ApproxSet((pt,))
    if spec.scheme == "explicit":
        pts = []
        for du, dy in spec.offsets:
            du = np.asarray(du, dtype=float)
            if du.shape[0] != pt.d:
                raise UsageError("explicit offset dimension mismatch")
            pts.append(DataPoint(pt.u + du, pt.y + dy))
        return ApproxSet(tuple(pts))
    # cross5
    if region.kind != "ball":
        raise UsageError("cross5 approximation requires a ball region")
    r = spec.inflation * region_radius(region, pt)
    pts = [pt]
    for ax in range(pt.d):
        e = np.zeros(pt.d)
        e[ax] = r
        pts.append(DataPoint(pt.u + e, pt.y))
        pts.append(DataPoint(pt.u - e, pt.y))
    pts.append(DataPoint(pt.u, pt.y + r))
    pts.append(DataPoint(pt.u, pt.y - r))
    return ApproxSet(tuple(pts))


def offset_norm(norm: str, du: np.ndarray, dy: float) -> float:
    """Norm of a displacement in (u, y)-space."""
    v = np.concatenate([np.atleast_1d(du), [dy]])
    if norm == "l2":
        return float(np.linalg.norm(v))
    return float(np.max(np.abs(v)))


def approx_within_region(region: RegionSpec, pt: DataPoint, aset: ApproxSet,
                         rtol: float = 1e-9) -> bool:
    """True when every approximation point lies in the (closed) region A_pt.

    Decides the certificate regime: subset regime is valid only when this
    holds for every training point.
    """
    if region.kind == "singleton":
        return all(offset_norm("l2", q.u - pt.u, q.y - pt.y) <= rtol for q in aset.points)
    r = region_radius(region, pt)
    tol = rtol * (1.0 + r)
    return all(offset_norm(region.norm, q.u - pt.u, q.y - pt.y) <= r + tol
               for q in aset.points)


def make_approxs(spec: FiniteApproxSpec, region: RegionSpec, points) -> list[ApproxSet]:
    """Per-point approximation sets for a whole dataset (training order)."""
    return [make_approx(spec, region, p) for p in points]
