"""Relaxed SVR training: QP assembly, solving, and lexicographic tie-breaking.

The training program minimizes gamma + tau*||w||^2 + rho*sum(xi) subject to
two linear rows per approximation point (the absolute value split) plus
nonnegativity of gamma and the slacks.  The kernel variant parametrizes
w = sum alpha_kh phi(u_kh) over all N*M approximation inputs, giving a
quadratic term tau * alpha' G alpha with G the Gram matrix.

Ties among optima are broken per the smallest gamma, then the smallest
|b|, implemented as two constrained re-solves at solver precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy.sparse as sp

import clarabel

from .data_model import Dataset, KernelPredictor, KernelSpec, LinearPredictor, gram_matrix
from .errors import NumericError, SolverFailure, UsageError
from .regions import ApproxSet

_EIG_RELCUT = 1e-12  # relative eigenvalue cutoff standing in for diagonal jitter


@dataclass(frozen=True)
class TrainConfig:
    tau: float
    rho: float
    solver_tol: float = 1e-8
    max_iter: int = 200

    def __post_init__(self):
        if not (self.tau > 0):
            raise UsageError("tau must be > 0 (use a tiny positive value for 'tau = 0+')")
        if not (self.rho > 0):
            raise UsageError("rho must be > 0")
        if not (self.solver_tol > 0):
            raise UsageError("solver_tol must be > 0")
        if self.max_iter < 1:
            raise UsageError("max_iter must be >= 1")


@dataclass
class QpProblem:
    """Explicit QP data: minimize 0.5 x'Px + q'x subject to Gx <= h.

    Rows of G: the 2*N*M split absolute-value constraints in order
    (i, j, +), (i, j, -), followed by -gamma <= 0 and -xi_i <= 0.
    """

    P: np.ndarray
    q: np.ndarray
    G: np.ndarray
    h: np.ndarray
    n_vars: int
    blocks: dict[str, slice]
    meta: dict[str, Any] = field(default_factory=dict)
    _compiled: "object" = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class RawSolution:
    x: np.ndarray
    objective: float
    iterations: int
    status: str
    max_violation: float


@dataclass(frozen=True)
class SvrSolution:
    predictor: LinearPredictor | KernelPredictor
    slacks: np.ndarray
    objective: float
    diagnostics: dict


def _stack_approxs(approxs: list[ApproxSet]) -> tuple[np.ndarray, np.ndarray, list[int]]:
    U = np.concatenate([a.as_arrays()[0] for a in approxs], axis=0)
    y = np.concatenate([a.as_arrays()[1] for a in approxs])
    return U, y, [a.M for a in approxs]


def _check_build_pre(data: Dataset, approxs: list[ApproxSet]) -> None:
    if len(data) < 1:
        raise UsageError("training requires at least one data point")
    if len(approxs) != len(data):
        raise UsageError("approxs must align with the dataset")


def _ineq_rows(n: int, blocks: dict[str, slice], pred_cols: np.ndarray,
               ytil: np.ndarray, M_list: list[int]) -> tuple[np.ndarray, np.ndarray]:
    """Split-absolute-value rows plus nonnegativity rows.

    pred_cols[(i,j), :] holds the coefficients of the model prediction at
    approximation point (i, j) with respect to the model-weight block.
    """
    total_M = pred_cols.shape[0]
    N = len(M_list)
    wcols = blocks["w"] if "w" in blocks else blocks["alpha"]
    bcol = blocks["b"].start
    gcol = blocks["gamma"].start
    xi0 = blocks["xi"].start
    m = 2 * total_M + 1 + N
    G = np.zeros((m, n))
    h = np.zeros(m)
    owner = np.repeat(np.arange(N), M_list)
    r = 0
    for idx in range(total_M):
        for s in (+1.0, -1.0):
            G[r, wcols] = -s * pred_cols[idx]
            G[r, bcol] = -s
            G[r, gcol] = -1.0
            G[r, xi0 + owner[idx]] = -1.0
            h[r] = -s * ytil[idx]
            r += 1
    G[r, gcol] = -1.0
    r += 1
    for i in range(N):
        G[r + i, xi0 + i] = -1.0
    return G, h


def build_qp_linear(data: Dataset, approxs: list[ApproxSet], cfg: TrainConfig) -> QpProblem:
    """Variables (w, b, gamma, xi_1..xi_N); cost gamma + tau*||w||^2 + rho*sum(xi)."""
    _check_build_pre(data, approxs)
    Util, ytil, M_list = _stack_approxs(approxs)
    N, d = len(data), data.d
    n = d + 2 + N
    blocks = {"w": slice(0, d), "b": slice(d, d + 1),
              "gamma": slice(d + 1, d + 2), "xi": slice(d + 2, n)}
    P = np.zeros((n, n))
    P[np.arange(d), np.arange(d)] = 2.0 * cfg.tau
    q = np.zeros(n)
    q[d + 1] = 1.0
    q[d + 2:] = cfg.rho
    G, h = _ineq_rows(n, blocks, Util, ytil, M_list)
    meta = {"kind": "linear", "N": N, "d": d, "M_list": M_list,
            "pred_inputs": Util, "ytilde": ytil,
            "tau": cfg.tau, "rho": cfg.rho}
    return QpProblem(P=P, q=q, G=G, h=h, n_vars=n, blocks=blocks, meta=meta)


def build_qp_kernel(data: Dataset, approxs: list[ApproxSet], cfg: TrainConfig,
                    k: KernelSpec) -> QpProblem:
    """Variables (alpha_{k,h}, b, gamma, xi); quadratic term tau * alpha' G alpha
    with G the Gram matrix over all N*M approximation inputs."""
    _check_build_pre(data, approxs)
    Util, ytil, M_list = _stack_approxs(approxs)
    N = len(data)
    nA = Util.shape[0]
    gram = gram_matrix(k, Util)
    if not np.all(np.isfinite(gram)):
        raise NumericError("Gram matrix contains non-finite entries")
    n = nA + 2 + N
    blocks = {"alpha": slice(0, nA), "b": slice(nA, nA + 1),
              "gamma": slice(nA + 1, nA + 2), "xi": slice(nA + 2, n)}
    P = np.zeros((n, n))
    P[:nA, :nA] = cfg.tau * (gram + gram.T)  # symmetrized: 0.5 x'Px = tau a'Ga
    q = np.zeros(n)
    q[nA + 1] = 1.0
    q[nA + 2:] = cfg.rho
    G, h = _ineq_rows(n, blocks, gram, ytil, M_list)
    meta = {"kind": "kernel", "N": N, "d": data.d, "M_list": M_list,
            "pred_inputs": Util, "ytilde": ytil, "gram": gram, "kernel": k,
            "tau": cfg.tau, "rho": cfg.rho}
    return QpProblem(P=P, q=q, G=G, h=h, n_vars=n, blocks=blocks, meta=meta)


# ---------------------------------------------------------------------------
# compilation to the solver form


@dataclass
class _Compiled:
    A: sp.csc_matrix          # inequality rows (nonnegative cone)
    h: np.ndarray
    n: int                    # reduced variable count
    quad: slice               # quadratically-penalized block (w or v)
    b_col: int
    g_col: int
    xi: slice
    tau: float
    rho: float
    c_lin: np.ndarray         # linear part of the cost (gamma + rho*xi)
    pred_B: np.ndarray        # predictions at approx points: B x (+0) ; includes b column
    ytilde: np.ndarray
    M_list: list[int]
    lift: Any                 # callable reduced x -> full x
    kind: str
    reduced_rank: int | None = None


def _compile(p: QpProblem) -> _Compiled:
    if p._compiled is not None:
        return p._compiled
    meta = p.meta
    if not meta:
        raise UsageError("QpProblem lacks builder metadata; use build_qp_* to construct it")
    N = meta["N"]
    M_list = meta["M_list"]
    ytil = meta["ytilde"]
    tau, rho = meta["tau"], meta["rho"]
    if meta["kind"] == "linear":
        d = meta["d"]
        n = p.n_vars
        quad = slice(0, d)
        b_col, g_col = d, d + 1
        xi = slice(d + 2, n)
        A = sp.csc_matrix(p.G)
        h = p.h.copy()
        pred_cols = meta["pred_inputs"]
        lift = lambda x: x
        rank = None
    else:
        gram = meta["gram"]
        nA = gram.shape[0]
        evals, evecs = np.linalg.eigh(gram)
        cut = max(evals[-1], 0.0) * _EIG_RELCUT
        keep = evals > cut
        lam = evals[keep]
        V = evecs[:, keep]
        r = int(lam.size)
        L = V * np.sqrt(lam)[None, :]          # gram @ alpha = L v, v = sqrt(lam) V' alpha
        back = V / np.sqrt(lam)[None, :]       # alpha = back @ v  (minimal representative)
        n = r + 2 + N
        quad = slice(0, r)
        b_col, g_col = r, r + 1
        xi = slice(r + 2, n)
        blocks_red = {"alpha": quad, "b": slice(r, r + 1),
                      "gamma": slice(r + 1, r + 2), "xi": xi}
        G_red, h = _ineq_rows(n, blocks_red, L, ytil, M_list)
        A = sp.csc_matrix(G_red)
        pred_cols = L

        def lift(x, back=back, r=r, nA=nA):
            full = np.empty(nA + 2 + N)
            full[:nA] = back @ x[:r]
            full[nA:] = x[r:]
            return full

        rank = r
    c_lin = np.zeros(n)
    c_lin[g_col] = 1.0
    c_lin[xi] = rho
    total_M = pred_cols.shape[0]
    pred_B = np.zeros((total_M, n))
    pred_B[:, quad] = pred_cols
    pred_B[:, b_col] = 1.0
    comp = _Compiled(A=A, h=h, n=n, quad=quad, b_col=b_col, g_col=g_col, xi=xi,
                     tau=tau, rho=rho, c_lin=c_lin, pred_B=pred_B, ytilde=ytil,
                     M_list=M_list, lift=lift, kind=meta["kind"], reduced_rank=rank)
    p._compiled = comp
    return comp


def _settings(cfg: TrainConfig) -> clarabel.DefaultSettings:
    st = clarabel.DefaultSettings()
    st.verbose = False
    st.max_iter = cfg.max_iter
    tol = max(cfg.solver_tol * 0.1, 1e-12)
    st.tol_gap_abs = tol
    st.tol_gap_rel = tol
    st.tol_feas = tol
    return st


def _clarabel(P: sp.csc_matrix, q: np.ndarray, A: sp.csc_matrix, b: np.ndarray,
              cones, cfg: TrainConfig, accept: tuple[str, ...] = ("Solved",),
              nonneg_rows: int = 0) -> tuple[np.ndarray, float, int, str]:
    solver = clarabel.DefaultSolver(P, q, A, b, cones, _settings(cfg))
    sol = solver.solve()
    status = str(sol.status)
    if status not in accept:
        raise SolverFailure(f"solver returned status {status}")
    x = np.asarray(sol.x)
    if status != "Solved" and nonneg_rows:
        # stalled statuses are acceptable only when the iterate is feasible
        viol = float(np.max((A @ x - b)[:nonneg_rows], initial=0.0))
        if not np.all(np.isfinite(x)) or viol > 1e4 * cfg.solver_tol * (1.0 + float(np.abs(b).max())):
            raise SolverFailure(f"stalled solve ({status}) left an infeasible iterate")
    return x, float(sol.obj_val), int(sol.iterations), status


def _quad_P(comp: _Compiled, n: int | None = None) -> sp.csc_matrix:
    n = comp.n if n is None else n
    diag = np.zeros(n)
    diag[comp.quad] = 2.0 * comp.tau
    return sp.csc_matrix(sp.diags(diag))


def _cost_value(comp: _Compiled, x: np.ndarray) -> float:
    return float(comp.tau * np.sum(x[comp.quad] ** 2) + comp.c_lin @ x)


def _soc_cost_rows(comp: _Compiled, cap: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Rows encoding cost <= cap: tau*||z||^2 + c_lin'x <= cap as a second-order
    cone ||(2*sqrt(tau)*z, 1 - s)|| <= 1 + s with s = cap - c_lin'x."""
    nq = comp.quad.stop - comp.quad.start
    A = np.zeros((nq + 2, n))
    b = np.zeros(nq + 2)
    A[0, :comp.c_lin.size] = comp.c_lin
    b[0] = 1.0 + cap
    root = 2.0 * math.sqrt(comp.tau)
    for j, col in enumerate(range(comp.quad.start, comp.quad.stop)):
        A[1 + j, col] = -root
    A[nq + 1, :comp.c_lin.size] = -comp.c_lin
    b[nq + 1] = 1.0 - cap
    return A, b


def solve_qp(p: QpProblem, cfg: TrainConfig) -> RawSolution:
    """Solve the training QP to the configured tolerance (deterministic)."""
    comp = _compile(p)
    q = np.zeros(comp.n)
    q[comp.g_col] = 1.0
    q[comp.xi] = cfg.rho
    x, obj, iters, status = _clarabel(_quad_P(comp), q, comp.A, comp.h,
                                      [clarabel.NonnegativeConeT(comp.h.size)], cfg)
    viol = float(np.max(comp.A @ x - comp.h, initial=0.0))
    return RawSolution(x=comp.lift(x), objective=obj, iterations=iters,
                       status=status, max_violation=viol)


def _stage_solve(comp: _Compiled, objective_col: int, cap_cost: float,
                 extra_rows: list[tuple[np.ndarray, float]], n: int,
                 cfg: TrainConfig) -> tuple[np.ndarray, int]:
    """Linear-objective re-solve under the original constraints, the cost cap
    (second-order cone), and optional extra linear rows."""
    m0 = comp.h.size
    pad = n - comp.n
    A_main = sp.hstack([comp.A, sp.csc_matrix((m0, pad))]) if pad else comp.A
    rows = [A_main]
    rhs = [comp.h]
    for coefs, b in extra_rows:
        rows.append(sp.csc_matrix(coefs[None, :]))
        rhs.append(np.array([b]))
    soc_A, soc_b = _soc_cost_rows(comp, cap_cost, n)
    rows.append(sp.csc_matrix(soc_A))
    rhs.append(soc_b)
    A = sp.csc_matrix(sp.vstack(rows))
    b = np.concatenate(rhs)
    cones = [clarabel.NonnegativeConeT(m0 + len(extra_rows)),
             clarabel.SecondOrderConeT(soc_A.shape[0])]
    q = np.zeros(n)
    q[objective_col] = 1.0
    # refinement stages sit on a degenerate optimal face by construction, so
    # stalled-but-feasible iterates are accepted (and verified)
    x, _, iters, _ = _clarabel(sp.csc_matrix((n, n)), q, A, b, cones, cfg,
                               accept=("Solved", "AlmostSolved", "InsufficientProgress"),
                               nonneg_rows=m0 + len(extra_rows))
    return x, iters


def tie_break(p: QpProblem, optimal_value: float, cfg: TrainConfig) -> SvrSolution:
    """Lexicographic refinement: min gamma under cost <= optimal*(1+tol), then
    min |b| additionally under gamma <= gamma*(1+tol)+tol.  On numerical
    infeasibility the tolerance is widened once by 10x before failing.
    """
    comp = _compile(p)
    iters_total = 0
    stages = []

    def run_gamma(tol: float):
        cap = optimal_value * (1.0 + tol)
        return _stage_solve(comp, comp.g_col, cap, [], comp.n, cfg), cap

    tol = cfg.solver_tol
    try:
        (x_g, it_g), cap_cost = run_gamma(tol)
    except SolverFailure:
        tol = 10.0 * cfg.solver_tol
        (x_g, it_g), cap_cost = run_gamma(tol)
        stages.append("gamma-widened")
    iters_total += it_g
    stages.append("gamma")
    gamma_star = float(x_g[comp.g_col])
    gamma_cap = gamma_star * (1.0 + tol) + tol

    # min |b|: add t with  b <= t, -b <= t, gamma <= gamma_cap
    n_ext = comp.n + 1
    t_col = comp.n
    row_g = np.zeros(n_ext)
    row_g[comp.g_col] = 1.0
    row_p = np.zeros(n_ext)
    row_p[comp.b_col] = 1.0
    row_p[t_col] = -1.0
    row_m = np.zeros(n_ext)
    row_m[comp.b_col] = -1.0
    row_m[t_col] = -1.0
    extra = [(row_g, gamma_cap), (row_p, 0.0), (row_m, 0.0)]
    try:
        x_b, it_b = _stage_solve(comp, t_col, cap_cost, extra, n_ext, cfg)
        x_red = x_b[:comp.n]
        iters_total += it_b
        stages.append("b")
    except SolverFailure:
        try:
            x_b, it_b = _stage_solve(comp, t_col,
                                     optimal_value * (1.0 + 10.0 * cfg.solver_tol),
                                     extra, n_ext, cfg)
            x_red = x_b[:comp.n]
            iters_total += it_b
            stages.append("b-widened")
        except SolverFailure:
            x_red = x_g
            stages.append("b-skipped")

    return _assemble(p, comp, x_red, iters_total, stages)


def _assemble(p: QpProblem, comp: _Compiled, x_red: np.ndarray,
              iterations: int, stages: list[str]) -> SvrSolution:
    gamma = max(0.0, float(x_red[comp.g_col]))
    b = float(x_red[comp.b_col])
    # complementary structure: slacks follow from theta
    resid = comp.ytilde - comp.pred_B @ x_red
    marg = np.abs(resid) - gamma
    slacks = np.zeros(len(comp.M_list))
    pos = 0
    for i, M in enumerate(comp.M_list):
        slacks[i] = max(0.0, float(np.max(marg[pos:pos + M])))
        pos += M
    objective = float(comp.tau * np.sum(x_red[comp.quad] ** 2)
                      + gamma + comp.rho * np.sum(slacks))
    viol = float(np.max(comp.A @ x_red - comp.h, initial=0.0))
    if comp.kind == "linear":
        predictor = LinearPredictor(w=x_red[comp.quad].copy(), b=b, gamma=gamma)
    else:
        x_full = comp.lift(x_red)
        nA = p.meta["gram"].shape[0]
        predictor = KernelPredictor(alphas=x_full[:nA], anchors=p.meta["pred_inputs"],
                                    b=b, gamma=gamma, kernel=p.meta["kernel"])
    diag = {"iterations": iterations, "tie_break_stages": stages,
            "max_violation": viol, "reduced_rank": comp.reduced_rank}
    return SvrSolution(predictor=predictor, slacks=slacks,
                       objective=objective, diagnostics=diag)


def train(data: Dataset, region, approx, cfg: TrainConfig,
          kernel: KernelSpec | None = None) -> SvrSolution:
    """Materialize the approximation sets, build and solve the QP, tie-break."""
    from .regions import make_approxs

    if len(data) < 1:
        raise UsageError("training requires at least one data point")
    approxs = make_approxs(approx, region, data.points)
    if kernel is None:
        qp = build_qp_linear(data, approxs, cfg)
    else:
        qp = build_qp_kernel(data, approxs, cfg, kernel)
    raw = solve_qp(qp, cfg)
    sol = tie_break(qp, raw.objective, cfg)
    sol.diagnostics["main_iterations"] = raw.iterations
    sol.diagnostics["main_objective"] = raw.objective
    return sol
