"""Independent oracle for tiny SVR training problems.

Eliminating the slacks turns the training QP into

    min_w  tau*||w||^2 + H(w),
    H(w) = min_{b, gamma >= 0}  gamma + rho * sum_i max(0, m_i(b, gamma; w))
    m_i = max(R_i(w) - b, b - L_i(w)),   R_i = max_j r_ij,  L_i = min_j r_ij,
    r_ij = ytilde_ij - w'util_ij.

For fixed w the inner problem is piecewise linear in (b, gamma) and
coercive, so its minimum is attained at a vertex of the line arrangement
generated by the active-constraint loci {gamma = R_i - b},
{gamma = b - L_i}, the max-switch lines {b = (R_i + L_i)/2} and
{gamma = 0}; those vertices are enumerated exhaustively.  The outer
problem is convex in w (d <= 2), solved by (nested) golden-section search.

This path shares no code with the production solver.
"""

import numpy as np

_PHI = (np.sqrt(5.0) - 1.0) / 2.0


def inner_min(R, L, rho):
    """Exact min over (b, gamma >= 0) by vertex enumeration."""
    R = np.asarray(R, dtype=float)
    L = np.asarray(L, dtype=float)
    mids = (R[:, None] + L[None, :]) / 2.0  # A_i x B_j intersections
    gs = (R[:, None] - L[None, :]) / 2.0
    cand_b = [mids.ravel()]
    cand_g = [gs.ravel()]
    switch_b = (R + L) / 2.0  # max-switch verticals (C family)
    cand_b.append(np.repeat(switch_b, R.size))
    cand_g.append((R[None, :] - switch_b[:, None]).ravel())  # C x A
    cand_b.append(np.repeat(switch_b, L.size))
    cand_g.append((switch_b[:, None] - L[None, :]).ravel())  # C x B
    for arr in (R, L, switch_b):  # intersections with gamma = 0
        cand_b.append(arr)
        cand_g.append(np.zeros_like(arr))
    b = np.concatenate(cand_b)
    g = np.concatenate(cand_g)
    ok = g >= 0
    b, g = b[ok], g[ok]
    m = np.maximum(R[None, :] - b[:, None], b[:, None] - L[None, :])
    F = g + rho * np.sum(np.maximum(0.0, m - g[:, None]), axis=1)
    i = int(np.argmin(F))
    return float(F[i]), float(b[i]), float(g[i])


def _segment_extremes(w, Util, ytil, owners, N):
    r = ytil - Util @ w
    R = np.full(N, -np.inf)
    L = np.full(N, np.inf)
    np.maximum.at(R, owners, r)
    np.minimum.at(L, owners, r)
    return R, L


def _golden(f, a, b, tol=1e-12, max_iter=200):
    """Golden-section minimization of a convex scalar function."""
    x1 = b - _PHI * (b - a)
    x2 = a + _PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _PHI * (b - a)
            f2 = f(x2)
    xs = (a + b) / 2.0
    return xs, f(xs)


def oracle_solve(Util, ytil, owners, N, d, tau, rho, w_box=60.0):
    """(objective, w, b, gamma) of the training program, independently of the
    production QP path.  Supports d in {1, 2}."""
    Util = np.atleast_2d(np.asarray(Util, dtype=float))
    ytil = np.asarray(ytil, dtype=float)
    owners = np.asarray(owners, dtype=int)

    def value(w):
        R, L = _segment_extremes(w, Util, ytil, owners, N)
        F, _, _ = inner_min(R, L, rho)
        return tau * float(w @ w) + F

    if d == 1:
        ws, obj = _golden(lambda t: value(np.array([t])), -w_box, w_box)
        w = np.array([ws])
    elif d == 2:

        def outer(w1):
            return _golden(lambda w2: value(np.array([w1, w2])), -w_box, w_box)[1]

        w1s, _ = _golden(outer, -w_box, w_box)
        w2s, obj = _golden(lambda w2: value(np.array([w1s, w2])), -w_box, w_box)
        w = np.array([w1s, w2s])
    else:
        raise ValueError("oracle supports d in {1, 2}")
    R, L = _segment_extremes(w, Util, ytil, owners, N)
    _, b, g = inner_min(R, L, rho)
    return obj, w, b, g
