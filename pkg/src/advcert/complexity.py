"""The adversarial complexity statistic.

A training point counts toward the statistic when (i) its adversarial
region is not fully contained in the band, (ii) some approximation point
sits exactly on the band boundary (within a numerical tolerance), or
(iii) some approximation point is strictly outside.  The statistic feeds
the distribution-free risk bounds; kappa (#cond i) alone gives the
empirical adversarial risk.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .containment import containment_flags
from .data_model import Dataset, Predictor, margins
from .errors import UsageError
from .regions import ApproxSet, RegionSpec


@dataclass(frozen=True)
class ComplexityReport:
    s_star: int
    eta: int    # points with some approx margin > tol (approx set pokes out)
    kappa: int  # points whose region A is not contained (empirical adversarial misses)
    cond_i: tuple[bool, ...]
    cond_ii: tuple[bool, ...]
    cond_iii: tuple[bool, ...]
    equality_tol: float
    grid_indeterminate: bool = False
    indeterminate_points: tuple[int, ...] = field(default=())

    @property
    def N(self) -> int:
        return len(self.cond_i)


def approx_margins(p: Predictor, approxs: list[ApproxSet]) -> list[np.ndarray]:
    """Margins of every approximation point, grouped per training point."""
    U = np.concatenate([a.as_arrays()[0] for a in approxs], axis=0)
    y = np.concatenate([a.as_arrays()[1] for a in approxs])
    m = margins(p, U, y)
    out, pos = [], 0
    for a in approxs:
        out.append(m[pos:pos + a.M])
        pos += a.M
    return out


def complexity(data: Dataset, predictor: Predictor, regionA: RegionSpec,
               approxs: list[ApproxSet], tol: float,
               grid_resolution: int = 41) -> ComplexityReport:
    """Evaluate the three conditions per point and assemble the report.

    ``tol`` is the equality tolerance for condition (ii); it must dominate
    the solver's constraint residual (1e-6 * (1 + gamma) is a sound default
    for the trainer in this package).
    """
    if tol <= 0:
        raise UsageError("tol must be > 0")
    N = len(data)
    if len(approxs) != N:
        raise UsageError("approxs must align with the dataset")
    per_point = approx_margins(predictor, approxs)
    cond_ii = np.array([bool(np.any(np.abs(m) <= tol)) for m in per_point])
    cond_iii = np.array([bool(np.any(m > tol)) for m in per_point])
    cond_i, indet = containment_flags(data, predictor, regionA, grid_resolution)
    s_star = int(np.count_nonzero(cond_i | cond_ii | cond_iii))
    return ComplexityReport(
        s_star=s_star,
        eta=int(np.count_nonzero(cond_iii)),
        kappa=int(np.count_nonzero(cond_i)),
        cond_i=tuple(bool(x) for x in cond_i),
        cond_ii=tuple(bool(x) for x in cond_ii),
        cond_iii=tuple(bool(x) for x in cond_iii),
        equality_tol=float(tol),
        grid_indeterminate=bool(np.any(indet)),
        indeterminate_points=tuple(int(i) for i in np.nonzero(indet)[0]),
    )


def report_from_flags(cond_i, cond_ii, cond_iii, tol: float,
                      grid_indeterminate: bool = False,
                      indeterminate_points=()) -> ComplexityReport:
    """Assemble a report from precomputed flags (sweep internals)."""
    cond_i = np.asarray(cond_i, dtype=bool)
    cond_ii = np.asarray(cond_ii, dtype=bool)
    cond_iii = np.asarray(cond_iii, dtype=bool)
    return ComplexityReport(
        s_star=int(np.count_nonzero(cond_i | cond_ii | cond_iii)),
        eta=int(np.count_nonzero(cond_iii)),
        kappa=int(np.count_nonzero(cond_i)),
        cond_i=tuple(bool(x) for x in cond_i),
        cond_ii=tuple(bool(x) for x in cond_ii),
        cond_iii=tuple(bool(x) for x in cond_iii),
        equality_tol=float(tol),
        grid_indeterminate=bool(grid_indeterminate),
        indeterminate_points=tuple(int(i) for i in indeterminate_points),
    )


def empirical_adversarial_risk(report: ComplexityReport, N: int) -> float:
    """kappa / N: the fraction of training regions not contained in the band."""
    if N < 1:
        raise UsageError("N must be >= 1")
    return report.kappa / N
