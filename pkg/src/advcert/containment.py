"""Region-in-band containment checks.

For linear predictors the band boundaries are two parallel hyperplanes, so
ball containment is decided exactly through the dual-norm point-to-plane
distance (critical point / maximal set).  Kernel bands are non-convex, so a
deterministic gridding of the ball is used instead; grid verdicts inside
the indeterminacy band (sup within a Lipschitz-times-mesh margin of zero)
are resolved pessimistically as "not contained".
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data_model import (DataPoint, Dataset, KernelPredictor, LinearPredictor,
                         Predictor, margin, margins)
from .errors import UsageError
from .regions import RegionSpec, region_radius, scale_region


@dataclass(frozen=True)
class MaximalSet:
    """Largest ball around ``center`` inscribed in the band, and the boundary
    point (critical point) attaining that radius."""

    center: DataPoint
    r_star: float
    critical_point: DataPoint
    side: str  # "upper" | "lower"


@dataclass(frozen=True)
class ContainmentResult:
    contained: bool
    witness: DataPoint | None
    method: str  # "analytic" | "grid"
    indeterminate: bool = False
    mesh: float | None = None


def _band_geometry(p: LinearPredictor, c: DataPoint, norm: str):
    """Signed residual, band gradient a = (-w, 1), its dual norm and the unit
    direction (in the ball norm) maximizing a^T v."""
    if c.d != p.d:
        raise UsageError("dimension mismatch")
    s = c.y - float(p.w @ c.u) - p.b
    a = np.concatenate([-p.w, [1.0]])
    if norm == "l2":
        dual = float(np.linalg.norm(a))
        v = a / dual
    elif norm == "linf":
        dual = float(np.sum(np.abs(a)))
        v = np.sign(a)  # last entry is 1, so ||v||_inf = 1
    else:
        raise UsageError(f"unknown norm {norm!r}")
    return s, dual, v


def critical_point_linear(p: LinearPredictor, c: DataPoint, norm: str = "l2") -> MaximalSet:
    """Nearest band-boundary point to ``c`` (which must lie inside the band).

    Distances to the two hyperplanes y - w.u - b = +/- gamma are
    (gamma -+ s) / ||(-w, 1)||_* with s the signed residual at c.
    """
    s, dual, v = _band_geometry(p, c, norm)
    if abs(s) > p.gamma:
        raise UsageError("critical_point_linear: center lies outside the band")
    dist_up = (p.gamma - s) / dual
    dist_lo = (p.gamma + s) / dual
    if dist_up < dist_lo:
        side, dist, direction = "upper", dist_up, v
    else:
        side, dist, direction = "lower", dist_lo, -v
    off = dist * direction
    cp = DataPoint(c.u + off[:-1], c.y + off[-1])
    return MaximalSet(center=c, r_star=dist, critical_point=cp, side=side)


def contains_ball_linear(p: LinearPredictor, c: DataPoint, r: float,
                         norm: str = "l2") -> ContainmentResult:
    """Exact verdict: the ball is contained iff c is inside and r <= r_star."""
    if r < 0:
        raise UsageError("radius must be >= 0")
    if margin(p, c) > 0:
        return ContainmentResult(False, witness=c, method="analytic")
    ms = critical_point_linear(p, c, norm)
    if r <= ms.r_star:
        return ContainmentResult(True, witness=None, method="analytic")
    s, dual, v = _band_geometry(p, c, norm)
    direction = v if ms.side == "upper" else -v
    off = r * direction
    witness = DataPoint(c.u + off[:-1], c.y + off[-1])
    return ContainmentResult(False, witness=witness, method="analytic")


def ball_grid(c: DataPoint, r: float, norm: str, resolution: int) -> np.ndarray:
    """Deterministic grid of the ball around c, as rows (u_1..u_d, y).

    linf: product grid, ``resolution`` points per axis (corners included).
    l2, d = 1: polar grid (resolution radii x resolution angles).
    l2, d >= 2: product grid with points outside the ball projected onto
    the sphere.
    """
    if resolution < 3:
        raise UsageError("grid resolution must be >= 3")
    dim = c.d + 1
    center = np.concatenate([c.u, [c.y]])
    if r == 0:
        return center[None, :]
    if norm == "l2" and c.d == 1:
        radii = np.linspace(0.0, r, resolution)
        angles = np.linspace(0.0, 2.0 * math.pi, resolution, endpoint=False)
        rr, aa = np.meshgrid(radii, angles, indexing="ij")
        offs = np.stack([rr * np.cos(aa), rr * np.sin(aa)], axis=-1).reshape(-1, 2)
        return center[None, :] + offs
    axes = [np.linspace(-r, r, resolution)] * dim
    mesh = np.meshgrid(*axes, indexing="ij")
    offs = np.stack([m.ravel() for m in mesh], axis=-1)
    if norm == "l2":
        nrm = np.linalg.norm(offs, axis=1)
        scl = np.ones_like(nrm)
        outside = nrm > r
        scl[outside] = r / nrm[outside]
        offs = offs * scl[:, None]
    return center[None, :] + offs


def grid_mesh(r: float, norm: str, resolution: int, d: int) -> float:
    """Covering-radius estimate (in l2) of the ball grid; the grid sup
    understates the true sup by at most Lipschitz * mesh."""
    if r == 0:
        return 0.0
    if norm == "l2" and d == 1:
        return math.hypot(r / (2.0 * (resolution - 1)), r * math.pi / resolution)
    h = 2.0 * r / (resolution - 1)
    return 0.5 * h * math.sqrt(d + 1)


def margin_lipschitz(p: Predictor) -> float:
    """Upper bound on the l2 Lipschitz constant of the margin over (u, y).

    For kernel predictors the prediction m satisfies
    |m(x) - m(x')| <= ||m||_H * ||phi(x) - phi(x')|| and the Gaussian
    feature map is sqrt(2)/sigma-Lipschitz, so Lip(m) <= sqrt(2)/sigma *
    sqrt(alpha' G alpha); this is far tighter than a sum-of-|alpha| bound.
    """
    if isinstance(p, LinearPredictor):
        return math.sqrt(float(p.w @ p.w) + 1.0)
    cached = getattr(p, "_lipschitz_cache", None)
    if cached is not None:
        return cached
    from .data_model import gram_matrix

    G = gram_matrix(p.kernel, p.anchors)
    h_norm_sq = max(float(p.alphas @ G @ p.alphas), 0.0)
    lip = math.sqrt(1.0 + 2.0 * h_norm_sq / p.kernel.sigma**2)
    object.__setattr__(p, "_lipschitz_cache", lip)
    return lip


def _grid_margins(p: Predictor, c: DataPoint, r: float, norm: str,
                  resolution: int) -> tuple[np.ndarray, np.ndarray]:
    pts = ball_grid(c, r, norm, resolution)
    m = margins(p, pts[:, :-1], pts[:, -1])
    return pts, m


def sup_margin_grid(p: Predictor, c: DataPoint, r: float, norm: str,
                    resolution: int) -> float:
    """Maximum margin over the deterministic ball grid (understates the sup
    by at most margin_lipschitz(p) * grid_mesh(...))."""
    if r < 0:
        raise UsageError("radius must be >= 0")
    if r == 0:
        return margin(p, c)
    _, m = _grid_margins(p, c, r, norm, resolution)
    return float(np.max(m))


def contains_region(p: Predictor, pt: DataPoint, region: RegionSpec,
                    grid_resolution: int = 41) -> ContainmentResult:
    """Dispatch: singleton -> margin test; ball + linear -> analytic;
    ball + kernel -> grid with pessimistic indeterminacy handling."""
    if region.kind == "singleton":
        m = margin(p, pt)
        return ContainmentResult(m <= 0, witness=pt if m > 0 else None, method="analytic")
    r = region_radius(region, pt)
    if r == 0:
        m = margin(p, pt)
        return ContainmentResult(m <= 0, witness=pt if m > 0 else None, method="analytic")
    if isinstance(p, LinearPredictor):
        return contains_ball_linear(p, pt, r, region.norm)
    pts, m = _grid_margins(p, pt, r, region.norm, grid_resolution)
    sup = float(np.max(m))
    mesh = grid_mesh(r, region.norm, grid_resolution, pt.d)
    if sup > 0:
        i = int(np.argmax(m))
        witness = DataPoint(pts[i, :-1], pts[i, -1])
        return ContainmentResult(False, witness=witness, method="grid", mesh=mesh)
    if sup + margin_lipschitz(p) * mesh <= 0:
        return ContainmentResult(True, witness=None, method="grid", mesh=mesh)
    return ContainmentResult(False, witness=None, method="grid",
                             indeterminate=True, mesh=mesh)


# ---------------------------------------------------------------------------
# bulk paths


def _linear_ball_misses(p: LinearPredictor, U: np.ndarray, y: np.ndarray,
                        radii: np.ndarray, norm: str) -> np.ndarray:
    """Vectorized 'ball not contained': |s| + r * ||(-w,1)||_* > gamma."""
    a = np.concatenate([-p.w, [1.0]])
    dual = float(np.linalg.norm(a)) if norm == "l2" else float(np.sum(np.abs(a)))
    s = y - U @ p.w - p.b
    return np.abs(s) + radii * dual > p.gamma


def _point_radii(region: RegionSpec, data: Dataset) -> np.ndarray:
    return np.array([region_radius(region, pt) for pt in data.points])


def containment_flags(data: Dataset, p: Predictor, region: RegionSpec,
                      grid_resolution: int = 41) -> tuple[np.ndarray, np.ndarray]:
    """Per-point (not_contained, indeterminate) flags for the whole dataset.

    Indeterminate grid verdicts are already folded into not_contained
    (pessimistic rule); the second array only reports where that happened.
    """
    N = len(data)
    U, y = data.as_arrays()
    indet = np.zeros(N, dtype=bool)
    if region.kind == "singleton":
        return margins(p, U, y) > 0, indet
    radii = _point_radii(region, data)
    if isinstance(p, LinearPredictor):
        return _linear_ball_misses(p, U, y, radii, region.norm), indet
    flags = np.zeros(N, dtype=bool)
    for i, pt in enumerate(data.points):
        res = contains_region(p, pt, region, grid_resolution)
        flags[i] = not res.contained
        indet[i] = res.indeterminate
    return flags, indet


def containment_flags_sweep(data: Dataset, p: Predictor, region: RegionSpec,
                            lambdas, grid_resolution: int = 41
                            ) -> tuple[np.ndarray, np.ndarray]:
    """(len(lambdas), N) 'not contained' flags for the nested family A^lambda.

    Flags are monotone non-decreasing along the sweep by construction: for
    grid-based verdicts the grid used at lambda_k is the union of the grids
    of all lambda_j <= lambda_k (every such point lies inside A^lambda_k).
    """
    lambdas = [float(l) for l in lambdas]
    if any(l < 0 for l in lambdas) or sorted(lambdas) != lambdas:
        raise UsageError("lambdas must be sorted ascending and >= 0")
    N = len(data)
    L = len(lambdas)
    flags = np.zeros((L, N), dtype=bool)
    indet = np.zeros((L, N), dtype=bool)
    U, y = data.as_arrays()
    if region.kind == "singleton":
        row = margins(p, U, y) > 0
        flags[:] = row
        return flags, indet
    radii = _point_radii(region, data)
    if isinstance(p, LinearPredictor):
        for k, lam in enumerate(lambdas):
            flags[k] = _linear_ball_misses(p, U, y, lam * radii, region.norm)
        return flags, indet  # exact, monotone already
    if region.norm == "l2" and data.d == 1 and isinstance(p, KernelPredictor):
        return _kernel_ring_sweep(data, p, radii, lambdas, grid_resolution)
    # generic fallback: per-lambda grids, pessimistic union across the sweep
    for k, lam in enumerate(lambdas):
        f, ind = containment_flags(data, p, scale_region(region, lam), grid_resolution)
        flags[k] = f if k == 0 else (f | flags[k - 1])
        indet[k] = ind
    return flags, indet


def _kernel_ring_sweep(data: Dataset, p: KernelPredictor, radii: np.ndarray,
                       lambdas: list[float], n_angles: int
                       ) -> tuple[np.ndarray, np.ndarray]:
    """Ring grids for planar l2 balls: one circle of points per lambda plus
    the center; sup at lambda_k maximizes over all rings j <= k."""
    N = len(data)
    L = len(lambdas)
    U, y = data.as_arrays()
    angles = np.linspace(0.0, 2.0 * math.pi, n_angles, endpoint=False)
    ca, sa = np.cos(angles), np.sin(angles)
    lip = margin_lipschitz(p)
    center_m = margins(p, U, y)
    sup = np.repeat(center_m[None, :], L, axis=0)  # running sup per (lambda, point)
    for k, lam in enumerate(lambdas):
        r = lam * radii  # (N,)
        gu = (U[:, 0, None] + r[:, None] * ca[None, :]).reshape(-1, 1)
        gy = (y[:, None] + r[:, None] * sa[None, :]).ravel()
        ring_m = margins(p, gu, gy).reshape(N, n_angles).max(axis=1)
        sup[k:] = np.maximum(sup[k:], ring_m[None, :])
    flags = np.zeros((L, N), dtype=bool)
    indet = np.zeros((L, N), dtype=bool)
    lam_arr = np.array(lambdas)
    gaps = np.diff(np.concatenate([[0.0], lam_arr]))  # radial spacing factors
    run_gap = np.maximum.accumulate(gaps)
    for k in range(L):
        mesh = np.hypot(0.5 * run_gap[k] * radii, lam_arr[k] * radii * math.pi / n_angles)
        definite_out = sup[k] > 0
        definite_in = sup[k] + lip * mesh <= 0
        flags[k] = ~definite_in
        indet[k] = ~definite_in & ~definite_out
    # enforce the union-of-grids monotone semantics on the final verdicts
    flags = np.maximum.accumulate(flags, axis=0)
    return flags, indet
