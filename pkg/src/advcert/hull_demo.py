"""Convex-hull instantiation of the general learning scheme.

The hypothesis is a planar convex set, the cost its perimeter, and the
appropriateness function the Euclidean distance to the set (zero inside).
Training on points drawn from the unit disk yields the convex hull; the
complexity under ball regions of radius R counts hull vertices plus the
points within R of the boundary, which feeds the out-of-distribution
bound eps_hi(s*(R)) + mu/R.

Two Wasserstein mass-shift constructions provide empirical
out-of-distribution risks for validating the bound: emptying the outer
annulus of the disk onto the unit circle, and pushing the mass near the
hull boundary radially to just outside it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .complexity import ComplexityReport, report_from_flags
from .data_model import SchemeInterface
from .epsilon_bounds import Certificate, certify
from .errors import DegenerateInputError, UsageError
from .rng import make_rng

_BOUNDARY_TOL = 1e-9  # membership tolerance for "on the hull boundary"
_JUST_OUTSIDE = 1e-9  # radial overshoot of the band shift


@dataclass(frozen=True)
class HullModel:
    """Strictly convex polygon, vertices counter-clockwise; first vertex is
    the lexicographically smallest point."""

    vertices: np.ndarray
    perimeter: float


@dataclass(frozen=True)
class ShiftSpec:
    kind: str  # "annulus_to_boundary" | "boundary_band_radial"
    mu: float
    mc_samples: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("annulus_to_boundary", "boundary_band_radial"):
            raise UsageError(f"unknown shift kind {self.kind!r}")
        if not (self.mu > 0):
            raise UsageError("mu must be > 0")
        if self.mc_samples < 10_000:
            raise UsageError("mc_samples must be >= 1e4")


@dataclass(frozen=True)
class ShiftResult:
    risk: float
    std_error: float
    kind: str
    param_name: str   # "inner_radius" | "band_thickness"
    param_value: float
    n_samples: int


def convex_hull(points) -> HullModel:
    """Monotone-chain convex hull; collinear boundary points are dropped so
    the vertex list is strictly convex."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if P.shape[1] != 2:
        raise UsageError("convex_hull expects planar points")
    if P.shape[0] < 3:
        raise DegenerateInputError("need at least 3 points")
    P = P[np.lexsort((P[:, 1], P[:, 0]))]

    def cross2(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def half(pts):
        out = []
        for p in pts:
            while len(out) >= 2 and cross2(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(P)
    upper = half(P[::-1])
    verts = np.array(lower[:-1] + upper[:-1])
    if verts.shape[0] < 3:
        raise DegenerateInputError("all points are collinear")
    per = float(np.sum(np.linalg.norm(np.roll(verts, -1, axis=0) - verts, axis=1)))
    return HullModel(vertices=verts, perimeter=per)


def _edges(h: HullModel) -> tuple[np.ndarray, np.ndarray]:
    a = h.vertices
    return a, np.roll(a, -1, axis=0)


def points_in_hull(h: HullModel, P: np.ndarray) -> np.ndarray:
    """Inside-or-on-boundary test via edge cross products (CCW hull)."""
    a, b = _edges(h)
    e = b - a  # (V, 2)
    rel = P[:, None, :] - a[None, :, :]  # (S, V, 2)
    cross = e[None, :, 0] * rel[:, :, 1] - e[None, :, 1] * rel[:, :, 0]
    return np.all(cross >= 0.0, axis=1)


def boundary_distances(h: HullModel, P: np.ndarray) -> np.ndarray:
    """Euclidean distance to the hull boundary (from either side)."""
    a, b = _edges(h)
    e = b - a
    ee = np.sum(e * e, axis=1)
    rel = P[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("svk,vk->sv", rel, e) / ee[None, :], 0.0, 1.0)
    proj = a[None, :, :] + t[:, :, None] * e[None, :, :]
    d = np.linalg.norm(P[:, None, :] - proj, axis=2)
    return d.min(axis=1)


def hull_margins(h: HullModel, P) -> np.ndarray:
    """Vectorized appropriateness: 0 inside or on the hull, Euclidean
    distance to the hull outside."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    inside = points_in_hull(h, P)
    d = boundary_distances(h, P)
    return np.where(inside, 0.0, d)


def hull_margin(h: HullModel, p) -> float:
    return float(hull_margins(h, np.asarray(p, dtype=float)[None, :])[0])


def hull_scheme() -> SchemeInterface:
    """Perimeter cost, distance-to-set margin."""
    return SchemeInterface(cost=lambda h: h.perimeter, margin=hull_margin,
                           hypothesis_space="closed convex subsets of R^2")


def hull_complexity(points, h: HullModel, R: float,
                    tol: float = _BOUNDARY_TOL) -> ComplexityReport:
    """Complexity under ball regions of radius R with the points themselves
    as the (singleton) approximation sets.

    cond (i): the point is closer than R to the hull boundary (its ball
    pokes out); cond (ii): the point lies on the boundary (vertices always
    count); cond (iii): never, since training points are inside the hull.
    """
    if R < 0:
        raise UsageError("R must be >= 0")
    P = np.atleast_2d(np.asarray(points, dtype=float))
    d = boundary_distances(h, P)
    outside = ~points_in_hull(h, P)
    if np.any(outside & (d > tol)):
        raise UsageError("hull_complexity expects the hull of the given points")
    cond_i = d < R
    cond_ii = d <= tol
    cond_iii = np.zeros(P.shape[0], dtype=bool)
    return report_from_flags(cond_i, cond_ii, cond_iii, tol)


def hull_r_sweep(points, h: HullModel, R_grid, beta: float,
                 tol: float = _BOUNDARY_TOL) -> list[tuple[float, Certificate]]:
    """General-regime certificates for each tested radius R."""
    N = np.atleast_2d(np.asarray(points, dtype=float)).shape[0]
    out = []
    for R in R_grid:
        rep = hull_complexity(points, h, float(R), tol)
        out.append((float(R), certify(rep, N, beta, subset_regime=False)))
    return out


def sample_disk(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample from the unit disk."""
    r = np.sqrt(rng.uniform(0.0, 1.0, n))
    th = rng.uniform(0.0, 2.0 * math.pi, n)
    return np.stack([r * np.cos(th), r * np.sin(th)], axis=1)


def annulus_inner_radius(mu: float) -> float:
    """Inner radius r_a spending the whole budget on projecting the annulus
    (r_a, 1) of the uniform unit disk onto the circle:
    integral_{r_a}^1 (1 - s) * 2s ds = mu."""
    if not (0 < mu < 1.0 / 3.0):
        raise UsageError("annulus shift requires 0 < mu < 1/3")

    def f(r):
        return 1.0 / 3.0 - r * r + (2.0 / 3.0) * r**3 - mu

    return float(brentq(f, 0.0, 1.0, xtol=1e-15))


def _area_centroid(h: HullModel) -> np.ndarray:
    a, b = _edges(h)
    cr = a[:, 0] * b[:, 1] - b[:, 0] * a[:, 1]
    area = 0.5 * np.sum(cr)
    return np.sum((a + b) * cr[:, None], axis=0) / (6.0 * area)


def _ray_exit_lengths(h: HullModel, P: np.ndarray) -> np.ndarray:
    """Distance each (interior) point must travel along the ray from the hull
    centroid through it to reach the boundary."""
    c = _area_centroid(h)
    a, b = _edges(h)
    e = b - a
    nrm = np.stack([e[:, 1], -e[:, 0]], axis=1)  # outward normals (CCW hull)
    dirs = P - c
    denom = dirs @ nrm.T                      # (S, V)
    numer = np.sum((a - c) * nrm, axis=1)     # (V,) broadcast over S
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(denom > 1e-300, numer[None, :] / denom, np.inf)
    T = t.min(axis=1)                          # exit parameter; points are at t = 1
    return np.maximum(T - 1.0, 0.0) * np.linalg.norm(dirs, axis=1)


def ood_shift_experiment(h: HullModel, shift: ShiftSpec) -> ShiftResult:
    """Monte Carlo out-of-distribution risk under a mass-shift construction
    with Wasserstein budget mu (base law: uniform on the unit disk)."""
    rng = make_rng(shift.seed, "shift")
    n = shift.mc_samples
    P = sample_disk(n, rng)
    base_margins = hull_margins(h, P)
    outside = base_margins > 0
    if shift.kind == "annulus_to_boundary":
        r_a = annulus_inner_radius(shift.mu)
        moved = np.linalg.norm(P, axis=1) > r_a
        # projected mass lands on the unit circle, outside the hull a.s.
        ind = outside | moved
        name, value = "inner_radius", r_a
    else:
        inside = ~outside
        d = boundary_distances(h, P)
        move_len = _ray_exit_lengths(h, P) + _JUST_OUTSIDE

        def cost(w):
            sel = inside & (d < w)
            return float(np.sum(move_len[sel])) / n

        w_max = float(np.max(d[inside], initial=0.0))
        if cost(w_max) < shift.mu:
            raise UsageError("mu exceeds the transportable budget of the band shift")
        w = brentq(lambda w: cost(w) - shift.mu, 0.0, w_max, xtol=1e-14)
        ind = outside | (inside & (d < w))
        name, value = "band_thickness", float(w)
    risk = float(np.mean(ind))
    se = math.sqrt(max(risk * (1.0 - risk), 0.0) / n)
    return ShiftResult(risk=risk, std_error=se, kind=shift.kind,
                       param_name=name, param_value=value, n_samples=n)


def ood_empirical_risk(h: HullModel, shift: ShiftSpec) -> float:
    """Monte Carlo estimate of P'{hull_margin > 0} under the shifted law."""
    return ood_shift_experiment(h, shift).risk
