"""Core domain types: data points, band predictors, kernels, and the
abstract relaxed-learning-scheme interface.

A linear band predictor is the set {(u, y) : |y - w.u - b| <= gamma}.  The
margin functions below return f(theta, (u, y)) = |y - prediction| - gamma,
so a point is mispredicted exactly when its margin is positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from scipy.spatial.distance import cdist

from .errors import UsageError


def _as_readonly(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def _check_finite(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise UsageError(f"{what} contains non-finite entries")


@dataclass(frozen=True)
class DataPoint:
    """One observation: input vector u (length d) and scalar output y."""

    u: np.ndarray
    y: float

    def __post_init__(self):
        object.__setattr__(self, "u", _as_readonly(np.atleast_1d(self.u)))
        object.__setattr__(self, "y", float(self.y))
        _check_finite(self.u, "u")
        if not np.isfinite(self.y):
            raise UsageError("y is not finite")

    @property
    def d(self) -> int:
        return self.u.shape[0]


@dataclass(frozen=True)
class Dataset:
    """Immutable ordered collection of data points of common input dimension."""

    points: tuple[DataPoint, ...]
    d: int

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        for p in self.points:
            if p.d != self.d:
                raise UsageError(f"point of dimension {p.d} in dataset of dimension {self.d}")
        if self.d <= 0:
            raise UsageError("input dimension must be positive")

    @classmethod
    def from_arrays(cls, U, y) -> "Dataset":
        U = np.atleast_2d(np.asarray(U, dtype=float))
        y = np.asarray(y, dtype=float).ravel()
        if U.shape[0] != y.shape[0]:
            raise UsageError("U and y length mismatch")
        return cls(tuple(DataPoint(U[i], y[i]) for i in range(U.shape[0])), d=U.shape[1])

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.points:
            return np.zeros((0, self.d)), np.zeros(0)
        U = np.stack([p.u for p in self.points])
        y = np.array([p.y for p in self.points])
        return U, y

    def __len__(self) -> int:
        return len(self.points)

    @property
    def N(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class LinearPredictor:
    """Band predictor parameters theta = (w, b, gamma)."""

    w: np.ndarray
    b: float
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "w", _as_readonly(np.atleast_1d(self.w)))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "gamma", float(self.gamma))
        _check_finite(self.w, "w")
        if not (np.isfinite(self.b) and np.isfinite(self.gamma)):
            raise UsageError("b/gamma not finite")
        if self.gamma < 0:
            raise UsageError("gamma must be >= 0")

    @property
    def d(self) -> int:
        return self.w.shape[0]


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and bandwidth.  Only the Gaussian kernel is supported:
    K(u, v) = exp(-||u - v||^2 / sigma^2)."""

    kind: str = "gaussian"
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind != "gaussian":
            raise UsageError(f"unsupported kernel kind: {self.kind!r}")
        object.__setattr__(self, "sigma", float(self.sigma))
        if not (self.sigma > 0 and np.isfinite(self.sigma)):
            raise UsageError("sigma must be > 0")


@dataclass(frozen=True)
class KernelPredictor:
    """Band predictor in kernel form: prediction(u) = sum_m alphas[m] * K(anchors[m], u) + b.

    Anchors are stored explicitly so the predictor is self-contained and
    serializable; alphas and anchors are index-aligned.
    """

    alphas: np.ndarray
    anchors: np.ndarray
    b: float
    gamma: float
    kernel: KernelSpec

    def __post_init__(self):
        object.__setattr__(self, "alphas", _as_readonly(np.atleast_1d(self.alphas)))
        object.__setattr__(self, "anchors", _as_readonly(np.atleast_2d(self.anchors)))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "gamma", float(self.gamma))
        _check_finite(self.alphas, "alphas")
        _check_finite(self.anchors, "anchors")
        if self.anchors.shape[0] == 0:
            raise UsageError("anchors must be nonempty")
        if self.alphas.shape[0] != self.anchors.shape[0]:
            raise UsageError("alphas and anchors must be index-aligned")
        if self.gamma < 0:
            raise UsageError("gamma must be >= 0")

    @property
    def d(self) -> int:
        return self.anchors.shape[1]


Predictor = LinearPredictor | KernelPredictor


def kernel_eval(spec: KernelSpec, u, v) -> float:
    """Evaluate K(u, v) = exp(-||u - v||_2^2 / sigma^2).  Symmetric, in (0, 1]."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if u.shape != v.shape:
        raise UsageError("kernel_eval: dimension mismatch")
    return float(np.exp(-np.sum((u - v) ** 2) / spec.sigma**2))


def gram_matrix(spec: KernelSpec, A: np.ndarray, B: np.ndarray | None = None) -> np.ndarray:
    """Kernel matrix K[i, j] = K(A[i], B[j]); B defaults to A."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = A if B is None else np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise UsageError("gram_matrix: dimension mismatch")
    sq = cdist(A, B, "sqeuclidean")
    return np.exp(-sq / spec.sigma**2)


def predict_linear(p: LinearPredictor, U: np.ndarray) -> np.ndarray:
    return np.atleast_2d(U) @ p.w + p.b


def predict_kernel(p: KernelPredictor, U: np.ndarray) -> np.ndarray:
    K = gram_matrix(p.kernel, np.atleast_2d(U), p.anchors)
    return K @ p.alphas + p.b


def margins_linear(p: LinearPredictor, U: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vectorized |y - w.u - b| - gamma over rows of U."""
    U = np.atleast_2d(U)
    if U.shape[1] != p.d:
        raise UsageError("margin: dimension mismatch")
    return np.abs(np.asarray(y, dtype=float) - (U @ p.w + p.b)) - p.gamma


def margins_kernel(p: KernelPredictor, U: np.ndarray, y: np.ndarray) -> np.ndarray:
    U = np.atleast_2d(U)
    if U.shape[1] != p.d:
        raise UsageError("margin: dimension mismatch")
    return np.abs(np.asarray(y, dtype=float) - predict_kernel(p, U)) - p.gamma


def margin_linear(p: LinearPredictor, pt: DataPoint) -> float:
    """f(theta, (u, y)) = |y - w.u - b| - gamma; positive iff pt is mispredicted."""
    if pt.d != p.d:
        raise UsageError("margin_linear: dimension mismatch")
    return float(margins_linear(p, pt.u[None, :], np.array([pt.y]))[0])


def margin_kernel(p: KernelPredictor, pt: DataPoint) -> float:
    """Kernel-form margin |y - sum_m alpha_m K(anchor_m, u) - b| - gamma."""
    if pt.d != p.d:
        raise UsageError("margin_kernel: dimension mismatch")
    return float(margins_kernel(p, pt.u[None, :], np.array([pt.y]))[0])


def margin(p: Predictor, pt: DataPoint) -> float:
    if isinstance(p, LinearPredictor):
        return margin_linear(p, pt)
    return margin_kernel(p, pt)


def margins(p: Predictor, U: np.ndarray, y: np.ndarray) -> np.ndarray:
    if isinstance(p, LinearPredictor):
        return margins_linear(p, U, y)
    return margins_kernel(p, U, y)


@dataclass(frozen=True)
class SchemeInterface:
    """Abstract relaxed-optimization learning scheme.

    ``cost`` is the convex training cost c(theta); ``margin`` the
    appropriateness function f(theta, delta), convex in theta for each
    delta.  Both must be deterministic and finite on finite inputs.
    """

    cost: Callable[[Any], float]
    margin: Callable[[Any, Any], float]
    hypothesis_space: str = ""


def linear_svr_scheme(tau: float) -> SchemeInterface:
    """The band-predictor instance: c(theta) = gamma + tau*||w||^2, f = margin_linear."""
    if tau <= 0:
        raise UsageError("tau must be > 0")

    def cost(theta: LinearPredictor) -> float:
        return theta.gamma + tau * float(theta.w @ theta.w)

    return SchemeInterface(cost=cost, margin=margin_linear,
                           hypothesis_space=f"linear band predictors (tau={tau})")
