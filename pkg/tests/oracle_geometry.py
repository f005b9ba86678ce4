"""Independent oracles for the containment geometry.

The production code uses the closed-form dual-norm distance; these
oracles recompute the nearest-boundary-point distance as an explicit
optimization (SLSQP for l2, an LP for linf), sharing no formulas with
the implementation.
"""

import numpy as np
from scipy.optimize import linprog, minimize


def nearest_hyperplane_distance(a, c, level, norm):
    """min ||x - c||_norm subject to a'x = level."""
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    n = a.size
    if norm == "l2":
        res = minimize(
            lambda x: np.sum((x - c) ** 2),
            x0=c + (level - a @ c) * a / (a @ a),
            constraints=[{"type": "eq", "fun": lambda x: a @ x - level}],
            method="SLSQP",
            options={"ftol": 1e-16, "maxiter": 400},
        )
        return float(np.linalg.norm(res.x - c))
    # linf: minimize t s.t. -t <= x_i - c_i <= t, a'x = level
    # variables (x_1..x_n, t)
    cvec = np.zeros(n + 1)
    cvec[-1] = 1.0
    A_ub = np.zeros((2 * n, n + 1))
    b_ub = np.zeros(2 * n)
    for i in range(n):
        A_ub[2 * i, i] = 1.0
        A_ub[2 * i, -1] = -1.0
        b_ub[2 * i] = c[i]
        A_ub[2 * i + 1, i] = -1.0
        A_ub[2 * i + 1, -1] = -1.0
        b_ub[2 * i + 1] = -c[i]
    A_eq = np.concatenate([a, [0.0]])[None, :]
    res = linprog(cvec, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[level],
                  bounds=[(None, None)] * n + [(0, None)], method="highs")
    if not res.success:
        raise RuntimeError("linf distance LP failed")
    return float(res.fun)


def band_ball_distance_oracle(w, b, gamma, c_u, c_y, norm):
    """Distance from (c_u, c_y) to the nearer band boundary, by optimization."""
    a = np.concatenate([-np.atleast_1d(w), [1.0]])
    c = np.concatenate([np.atleast_1d(c_u), [c_y]])
    d_up = nearest_hyperplane_distance(a, c, gamma + b, norm)
    d_lo = nearest_hyperplane_distance(a, c, -gamma + b, norm)
    return min(d_up, d_lo)
