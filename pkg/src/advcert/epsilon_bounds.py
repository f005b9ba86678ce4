"""Distribution-free risk bounds from the complexity statistic.

For a sample size N, confidence parameter beta and complexity k, the
bounds eps_hi(k) = 1 - t_lo(k) and eps_lo(k) = max(0, 1 - t_hi(k)) come
from the two nonnegative roots t_lo <= t_hi of

    C(N,k) t^(N-k) - beta/(2N) * sum_{i=k}^{N-1} C(i,k) t^(i-k)
                   - beta/(6N) * sum_{i=N+1}^{4N} C(i,k) t^(i-k)  =  0

(for k = N a single-root variant applies and t_lo(N) := 0, so
eps_hi(N) = 1 exactly).  Binomial coefficients like C(4N, k) overflow any
native float, so the equation is normalized by its leading term and
evaluated in log space with log-gamma coefficient ratios; roots are then
isolated with bracketed root finding plus a Newton polish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln, logsumexp

from .complexity import ComplexityReport, approx_margins, report_from_flags
from .containment import containment_flags_sweep
from .data_model import Dataset, Predictor
from .errors import NumericError, UsageError
from .regions import ApproxSet, RegionSpec, approx_within_region, scale_region

_T_FLOOR = 1e-300


@dataclass(frozen=True)
class EpsilonPair:
    eps_lo: float
    eps_hi: float
    t_lo: float
    t_hi: float
    residuals: tuple[float, float]  # normalized equation residual at each root


@dataclass(frozen=True)
class Certificate:
    """Risk certificate: Risk_A(theta*) in [eps_lo, eps_hi] with confidence
    1 - beta (subset regime), or Risk_A <= eps_hi only (general regime)."""

    N: int
    beta: float
    s_star: int
    eps_lo: float | None
    eps_hi: float
    regime: str  # "subset" | "general"
    report: ComplexityReport | None = None
    config_hash: str | None = None


@dataclass(frozen=True)
class SweepEntry:
    lam: float
    s_star: int
    certificate: Certificate


@dataclass(frozen=True)
class OodBound:
    """ε̄(s*(R)) + mu/R over a grid of ball radii; the minimum holds with
    confidence 1 - h*beta (union bound over the h tested radii)."""

    mu: float
    R_grid: tuple[float, ...]
    s_stars: tuple[int, ...]
    eps_his: tuple[float, ...]
    bounds: tuple[float, ...]
    best_index: int
    confidence: float

    @property
    def best_bound(self) -> float:
        return self.bounds[self.best_index]

    @property
    def best_R(self) -> float:
        return self.R_grid[self.best_index]


@lru_cache(maxsize=32)
def _lgamma_table(n: int) -> np.ndarray:
    return gammaln(np.arange(n + 1, dtype=float) + 1.0)  # lg[m] = ln(m!)


def _log_terms(N: int, k: int, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Log-coefficients and exponents of the normalized equation g(t) = 1.

    g(t) = sum_i exp(logc_i + e_i * ln t) with coefficient ratios
    C(i,k)/C(N,k) computed through log-gamma.
    """
    lg = _lgamma_table(4 * N)
    lbinom_nk = lg[N] - lg[k] - lg[N - k]

    def lbinom(i: np.ndarray) -> np.ndarray:
        return lg[i] - lg[k] - lg[i - k]

    i1 = np.arange(k, N)
    i2 = np.arange(N + 1, 4 * N + 1)
    logc1 = math.log(beta / (2.0 * N)) + lbinom(i1) - lbinom_nk
    logc2 = math.log(beta / (6.0 * N)) + lbinom(i2) - lbinom_nk
    logc = np.concatenate([logc1, logc2])
    e = np.concatenate([i1, i2]).astype(float) - N
    return logc, e


def _log_terms_k_eq_N(N: int, beta: float) -> tuple[np.ndarray, np.ndarray]:
    lg = _lgamma_table(4 * N)
    i2 = np.arange(N + 1, 4 * N + 1)
    logc = math.log(beta / (6.0 * N)) + (lg[i2] - lg[N] - lg[i2 - N])
    e = i2.astype(float) - N
    return logc, e


def _eval(logc: np.ndarray, e: np.ndarray, t: float) -> tuple[float, float]:
    """(psi, mean exponent) at t, where psi = ln g and psi'(t) = mean_exp / t."""
    z = logc + e * math.log(t)
    m = z.max()
    w = np.exp(z - m)
    s = w.sum()
    return float(m + math.log(s)), float((w @ e) / s)


def _psi(logc: np.ndarray, e: np.ndarray, t: float) -> float:
    """ln g(t); the equation's roots solve psi(t) = 0."""
    return _eval(logc, e, t)[0]


def _mean_exponent(logc: np.ndarray, e: np.ndarray, t: float) -> float:
    """Softmax-weighted mean of exponents (sign of psi')."""
    return _eval(logc, e, t)[1]


def _newton_root(logc, e, t0: float, lo: float, hi: float) -> float | None:
    """Newton iteration from a warm start, clipped to [lo, hi]; returns None
    if it fails to reach |psi| <= 1e-12 (== normalized residual there)."""
    t = t0
    for _ in range(16):
        psi, me = _eval(logc, e, t)
        if abs(psi) <= 1e-12:
            return t
        if me == 0:
            return None
        t_new = t - psi * t / me
        if not math.isfinite(t_new):
            return None
        t = min(max(t_new, lo), hi)
    psi, _ = _eval(logc, e, t)
    return t if abs(psi) <= 1e-12 else None


def _polish(logc, e, t: float, lo: float, hi: float) -> float:
    """Safeguarded Newton steps to push the normalized residual below 1e-12."""
    for _ in range(8):
        psi, me = _eval(logc, e, t)
        if abs(psi) <= 1e-12 or me == 0:
            break
        t_new = t - psi * t / me
        if not (lo <= t_new <= hi) or not math.isfinite(t_new) or t_new <= 0:
            break
        t = t_new
    return t


def _find_separator(logc, e, t0: float) -> float:
    """A point with g(t) < 1 strictly between the two roots, found by
    bisection on the sign of psi' (monotone since g is log-convex in ln t)."""
    lo, hi = t0, t0
    for _ in range(200):
        if _mean_exponent(logc, e, lo) < 0:
            break
        lo *= 0.5
        if lo < _T_FLOOR:
            raise NumericError("separator search failed (left)")
    for _ in range(200):
        if _mean_exponent(logc, e, hi) > 0:
            break
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _mean_exponent(logc, e, mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * hi:
            break
    t_min = 0.5 * (lo + hi)
    if _psi(logc, e, t_min) >= 0:
        raise NumericError("equation has no root gap; the two-roots guarantee failed")
    return t_min


def _bracket_root(logc, e, a: float, b: float) -> float:
    """Bracketed root of psi on [a, b] (psi changes sign there), then polish."""
    t = brentq(lambda t: _psi(logc, e, t), a, b, xtol=1e-13, rtol=8.9e-16, maxiter=256)
    return _polish(logc, e, t, a, b)


def _solve_pair(N: int, k: int, beta: float) -> tuple[float, float]:
    """(t_lo, t_hi) for k < N."""
    logc, e = _log_terms(N, k, beta)
    t_sep = 1.0 - k / N
    if _psi(logc, e, t_sep) >= 0:
        t_sep = _find_separator(logc, e, t_sep)
    # left bracket edge: g blows up as t -> 0 (the i=k term)
    a = t_sep
    for _ in range(2000):
        a *= 0.5
        if a < _T_FLOOR:
            raise NumericError("left bracket search failed")
        if _psi(logc, e, a) > 0:
            break
    t_lo = _bracket_root(logc, e, a, t_sep)
    # right bracket edge: the degree-(3N) tail dominates eventually
    b = max(2.0 * t_sep, 1.0)
    for _ in range(200):
        if _psi(logc, e, b) > 0:
            break
        b *= 2.0
    else:
        raise NumericError("right bracket search failed")
    t_hi = _bracket_root(logc, e, t_sep, b)
    return t_lo, t_hi


def _solve_k_eq_N(N: int, beta: float) -> float:
    logc, e = _log_terms_k_eq_N(N, beta)
    a = 1.0
    for _ in range(2000):
        if _psi(logc, e, a) < 0:
            break
        a *= 0.5
        if a < _T_FLOOR:
            raise NumericError("k=N bracket search failed (left)")
    b = max(2.0 * a, 1.0)
    for _ in range(200):
        if _psi(logc, e, b) > 0:
            break
        b *= 2.0
    else:
        raise NumericError("k=N bracket search failed (right)")
    return _bracket_root(logc, e, a, b)


def _validate_nkb(N: int, k: int, beta: float) -> None:
    if not (isinstance(N, (int, np.integer)) and N >= 1):
        raise UsageError("N must be an integer >= 1")
    if not (isinstance(k, (int, np.integer)) and 0 <= k <= N):
        raise UsageError("k must be an integer in [0, N]")
    if not (0.0 < beta < 1.0):
        raise UsageError("beta must lie in (0, 1)")


def epsilon(N: int, k: int, beta: float) -> EpsilonPair:
    """Risk-bounding pair (eps_lo(k), eps_hi(k)) at confidence 1 - beta."""
    _validate_nkb(N, k, beta)
    if k == N:
        t_hi = _solve_k_eq_N(N, beta)
        logc, e = _log_terms_k_eq_N(N, beta)
        res_hi = math.expm1(_psi(logc, e, t_hi))
        # t_lo(N) = 0 by definition, so eps_hi(N) = 1 exactly
        return EpsilonPair(eps_lo=max(0.0, 1.0 - t_hi), eps_hi=1.0,
                           t_lo=0.0, t_hi=t_hi, residuals=(0.0, res_hi))
    t_lo, t_hi = _solve_pair(N, k, beta)
    logc, e = _log_terms(N, k, beta)
    res = (math.expm1(_psi(logc, e, t_lo)), math.expm1(_psi(logc, e, t_hi)))
    return EpsilonPair(eps_lo=max(0.0, 1.0 - t_hi), eps_hi=1.0 - t_lo,
                       t_lo=t_lo, t_hi=t_hi, residuals=res)


def epsilon_table(N: int, beta: float) -> list[EpsilonPair]:
    """epsilon(N, k, beta) for every k in {0, ..., N}.

    Roots for consecutive k are close (both t_lo and t_hi decrease in k),
    so each k warm-starts a Newton iteration from the previous roots; any k
    where that iteration stalls falls back to the bracketed solve.
    """
    _validate_nkb(N, 0, beta)
    out = [epsilon(N, 0, beta)]
    for k in range(1, N):
        logc, e = _log_terms(N, k, beta)
        prev = out[-1]
        t_lo = t_hi = None
        # warm start is valid only while it sits on the expected branch
        if _mean_exponent(logc, e, prev.t_lo) < 0:
            t_lo = _newton_root(logc, e, prev.t_lo, _T_FLOOR, prev.t_lo)
        if _mean_exponent(logc, e, prev.t_hi) > 0:
            t_hi = _newton_root(logc, e, prev.t_hi, _T_FLOOR, prev.t_hi)
        if t_lo is None or t_hi is None or t_lo > t_hi:
            out.append(epsilon(N, k, beta))
            continue
        res = (math.expm1(_psi(logc, e, t_lo)), math.expm1(_psi(logc, e, t_hi)))
        out.append(EpsilonPair(eps_lo=max(0.0, 1.0 - t_hi), eps_hi=1.0 - t_lo,
                               t_lo=t_lo, t_hi=t_hi, residuals=res))
    if N >= 1:
        out.append(epsilon(N, N, beta))
    return out


def epsilon_explicit(N: int, k: int, beta: float) -> tuple[float, float]:
    """Closed-form envelopes (upper on eps_hi, lower on eps_lo), clamped to [0, 1]."""
    _validate_nkb(N, k, beta)
    lb = math.log(1.0 / beta)
    sq = math.sqrt(k + 1.0)
    sl = math.sqrt(math.log(k + 1.0))
    upper = k / N + 2.0 * sq / N * (sl + 4.0) + 2.0 * sq * math.sqrt(lb) / N + lb / N
    lower = k / N - 3.0 * sq / N * (sl + 2.0) - 3.0 * sq * math.sqrt(lb) / N
    return min(1.0, max(0.0, upper)), min(1.0, max(0.0, lower))


def certify(report: ComplexityReport, N: int, beta: float,
            subset_regime: bool, config_hash: str | None = None) -> Certificate:
    """Certificate from a complexity report: two-sided in the subset regime
    (approximation sets contained in the adversarial regions), upper bound
    only otherwise."""
    if not (0.0 < beta < 1.0):
        raise UsageError("beta must lie in (0, 1)")
    pair = epsilon(N, report.s_star, beta)
    return Certificate(
        N=N, beta=beta, s_star=report.s_star,
        eps_lo=pair.eps_lo if subset_regime else None,
        eps_hi=pair.eps_hi,
        regime="subset" if subset_regime else "general",
        report=report, config_hash=config_hash,
    )


def lambda_sweep(data: Dataset, predictor: Predictor, region: RegionSpec,
                 approxs: list[ApproxSet], lambdas, beta: float, tol: float,
                 grid_resolution: int = 41,
                 config_hash: str | None = None) -> list[SweepEntry]:
    """Complexity and certificate for the nested family A^lambda with the
    predictor held fixed.

    Only condition (i) varies with lambda; conditions (ii)/(iii) are reused
    across the sweep.  The regime is subset exactly for the lambdas whose
    scaled regions contain every approximation point.  Each certificate
    carries the per-lambda confidence 1 - beta; simultaneous validity over
    the whole grid costs a union bound of len(lambdas) * beta.
    """
    lambdas = [float(l) for l in lambdas]
    if not lambdas:
        raise UsageError("lambda grid must be nonempty")
    if sorted(lambdas) != lambdas or lambdas[0] < 0:
        raise UsageError("lambdas must be sorted ascending and >= 0")
    if tol <= 0:
        raise UsageError("tol must be > 0")
    per_point = approx_margins(predictor, approxs)
    cond_ii = [bool(np.any(np.abs(m) <= tol)) for m in per_point]
    cond_iii = [bool(np.any(m > tol)) for m in per_point]
    flags, indet = containment_flags_sweep(data, predictor, region, lambdas,
                                           grid_resolution)
    entries = []
    for idx, lam in enumerate(lambdas):
        rep = report_from_flags(flags[idx], cond_ii, cond_iii, tol,
                                grid_indeterminate=bool(np.any(indet[idx])),
                                indeterminate_points=np.nonzero(indet[idx])[0])
        scaled = scale_region(region, lam)
        subset = all(approx_within_region(scaled, pt, a)
                     for pt, a in zip(data.points, approxs))
        cert = certify(rep, len(data), beta, subset, config_hash=config_hash)
        entries.append(SweepEntry(lam=lam, s_star=rep.s_star, certificate=cert))
    return entries


def ood_bound(sweep: list[tuple[float, Certificate]], mu: float, beta: float) -> OodBound:
    """Best out-of-distribution bound min_i eps_hi(s*(R_i)) + mu/R_i.

    Ties break toward smaller R.  The reported confidence is 1 - h*beta for
    the h tested radii.
    """
    if not sweep:
        raise UsageError("R grid must be nonempty")
    if mu <= 0:
        raise UsageError("mu must be > 0")
    Rs = [float(R) for R, _ in sweep]
    if any(R <= 0 for R in Rs) or len(set(Rs)) != len(Rs):
        raise UsageError("R values must be positive and distinct")
    order = np.argsort(Rs)
    Rs = [Rs[i] for i in order]
    certs = [sweep[i][1] for i in order]
    bounds = [c.eps_hi + mu / R for R, c in zip(Rs, certs)]
    best = int(np.argmin(bounds))  # argmin returns the first (smallest R) on ties
    h = len(Rs)
    return OodBound(
        mu=mu, R_grid=tuple(Rs),
        s_stars=tuple(c.s_star for c in certs),
        eps_his=tuple(c.eps_hi for c in certs),
        bounds=tuple(bounds),
        best_index=best,
        confidence=1.0 - h * beta,
    )
