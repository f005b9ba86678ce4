"""Experiment harness: synthetic data, validation oracles, persistence and
the task runners behind the CLI.

Outputs are deterministic for a fixed config and seed: no timestamps are
written, floats are serialized with 17 significant digits, and all
randomness derives from named Philox substreams (see rng.py).
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from . import __version__
from .complexity import ComplexityReport, complexity, empirical_adversarial_risk
from .config import RunConfig
from .containment import containment_flags
from .data_model import (Dataset, KernelPredictor, KernelSpec, LinearPredictor,
                         Predictor)
from .epsilon_bounds import (Certificate, SweepEntry, certify, lambda_sweep,
                             ood_bound)
from .errors import UsageError
from .hull_demo import (ShiftSpec, convex_hull, hull_r_sweep,
                        ood_shift_experiment, sample_disk)
from .regions import RegionSpec, approx_within_region, make_approxs, scale_region
from .rng import RNG_SCHEME, make_rng
from .svr_train import SvrSolution, train


@dataclass(frozen=True)
class ValidationReport:
    n_fresh: int
    risk: float
    std_error: float
    eps_lo: float | None
    eps_hi: float | None
    covered: bool | None


def sinc(u: np.ndarray) -> np.ndarray:
    """sin(u)/u with the removable singularity filled (value 1 at 0)."""
    return np.sinc(np.asarray(u, dtype=float) / np.pi)


def gen_sinc(N: int, seed: int, noise_scale: float = 1.0) -> Dataset:
    """Synthetic regression data: u uniform on [-5, 5] and
    y = sinc(u) + (0.05 + 0.1 |sin u|) * e with standard normal e."""
    if N < 1:
        raise UsageError("N must be >= 1")
    rng = make_rng(seed, "data")
    u = rng.uniform(-5.0, 5.0, N)
    e = rng.standard_normal(N)
    y = sinc(u) + noise_scale * (0.05 + 0.1 * np.abs(np.sin(u))) * e
    return Dataset.from_arrays(u[:, None], y)


def sinc_sampler(n: int, rng: np.random.Generator) -> Dataset:
    u = rng.uniform(-5.0, 5.0, n)
    e = rng.standard_normal(n)
    y = sinc(u) + (0.05 + 0.1 * np.abs(np.sin(u))) * e
    return Dataset.from_arrays(u[:, None], y)


def validate(predictor: Predictor, region: RegionSpec, sampler, n_fresh: int,
             seed: int, grid_resolution: int = 41,
             certificate: Certificate | None = None) -> ValidationReport:
    """Monte Carlo estimate of the adversarial risk on fresh draws.

    ``sampler(n, rng) -> Dataset`` must be independent of the training data;
    the rng comes from the dedicated "validate" stream.  When a certificate
    is given, ``covered`` flags whether the estimate (widened by two standard
    errors) falls inside its interval.
    """
    if n_fresh < 1000:
        raise UsageError("n_fresh must be >= 1e3")
    rng = make_rng(seed, "validate")
    fresh = sampler(n_fresh, rng)
    misses, _ = containment_flags(fresh, predictor, region, grid_resolution)
    risk = float(np.mean(misses))
    se = math.sqrt(max(risk * (1.0 - risk), 0.0) / n_fresh)
    covered = None
    eps_lo = eps_hi = None
    if certificate is not None:
        eps_lo, eps_hi = certificate.eps_lo, certificate.eps_hi
        lo = (eps_lo or 0.0) - 2.0 * se
        hi = eps_hi + 2.0 * se
        covered = bool(lo <= risk <= hi) if certificate.eps_lo is not None \
            else bool(risk <= hi)
    return ValidationReport(n_fresh=n_fresh, risk=risk, std_error=se,
                            eps_lo=eps_lo, eps_hi=eps_hi, covered=covered)


# ---------------------------------------------------------------------------
# serialization (17 significant digits, byte-deterministic)


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise UsageError("cannot serialize non-finite float")
    return format(x, ".17g")


def _to_json(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}  {json.dumps(str(k))}: {_to_json(v, indent + 1)}'
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}  {_to_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    raise UsageError(f"cannot serialize {type(obj).__name__}")


def dump_json(obj, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_to_json(obj) + "\n")


def dump_csv(path: str, header: list[str], rows: list[list]) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(["" if v is None else
                        _fmt_float(v) if isinstance(v, float) else v for v in row])


def report_to_dict(r: ComplexityReport, verbose: bool = False) -> dict:
    d = {"s_star": r.s_star, "eta": r.eta, "kappa": r.kappa,
         "tol": r.equality_tol, "grid_indeterminate": r.grid_indeterminate}
    if verbose:
        d["cond_i"] = list(r.cond_i)
        d["cond_ii"] = list(r.cond_ii)
        d["cond_iii"] = list(r.cond_iii)
        d["indeterminate_points"] = list(r.indeterminate_points)
    return d


def certificate_to_dict(c: Certificate, verbose: bool = False) -> dict:
    d = {"N": c.N, "beta": c.beta, "s_star": c.s_star, "eps_lo": c.eps_lo,
         "eps_hi": c.eps_hi, "regime": c.regime, "config_hash": c.config_hash}
    if c.report is not None:
        d["complexity"] = report_to_dict(c.report, verbose)
    return d


def certificate_from_dict(d: dict) -> Certificate:
    rep = None
    if "complexity" in d and "cond_i" in d["complexity"]:
        cd = d["complexity"]
        from .complexity import report_from_flags
        rep = report_from_flags(cd["cond_i"], cd["cond_ii"], cd["cond_iii"],
                                cd["tol"], cd["grid_indeterminate"],
                                cd.get("indeterminate_points", ()))
    return Certificate(N=int(d["N"]), beta=float(d["beta"]), s_star=int(d["s_star"]),
                       eps_lo=None if d["eps_lo"] is None else float(d["eps_lo"]),
                       eps_hi=float(d["eps_hi"]), regime=d["regime"],
                       report=rep, config_hash=d.get("config_hash"))


def predictor_to_dict(p: Predictor) -> dict:
    if isinstance(p, LinearPredictor):
        return {"type": "linear", "w": list(p.w), "b": p.b, "gamma": p.gamma}
    return {"type": "kernel", "alphas": list(p.alphas),
            "anchors": [list(a) for a in p.anchors], "b": p.b, "gamma": p.gamma,
            "kernel": {"kind": p.kernel.kind, "sigma": p.kernel.sigma}}


def predictor_from_dict(d: dict) -> Predictor:
    if d["type"] == "linear":
        return LinearPredictor(w=np.array(d["w"]), b=d["b"], gamma=d["gamma"])
    return KernelPredictor(alphas=np.array(d["alphas"]), anchors=np.array(d["anchors"]),
                           b=d["b"], gamma=d["gamma"],
                           kernel=KernelSpec(**d["kernel"]))


def load_dataset_csv(path: str) -> Dataset:
    """CSV with header u1,...,ud,y; comma separator, UTF-8, no index column."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise UsageError(f"cannot read dataset: {exc}") from exc
    if not rows:
        raise UsageError("empty dataset file")
    header = rows[0]
    d = len(header) - 1
    if d < 1 or header != [f"u{i+1}" for i in range(d)] + ["y"]:
        raise UsageError("dataset header must be u1,...,ud,y")
    try:
        arr = np.array([[float(v) for v in row] for row in rows[1:]])
    except ValueError as exc:
        raise UsageError(f"non-numeric dataset entry: {exc}") from exc
    if arr.size == 0:
        raise UsageError("dataset has no rows")
    return Dataset.from_arrays(arr[:, :d], arr[:, d])


def save_dataset_csv(data: Dataset, path: str) -> None:
    U, y = data.as_arrays()
    header = [f"u{i+1}" for i in range(data.d)] + ["y"]
    rows = [[float(v) for v in U[i]] + [float(y[i])] for i in range(len(data))]
    dump_csv(path, header, rows)


# ---------------------------------------------------------------------------
# task runners


def _metadata(cfg: RunConfig) -> dict:
    return {"rng": RNG_SCHEME, "seed": cfg.seed, "config_hash": cfg.source_hash,
            "package_version": __version__}


def _load_data(cfg: RunConfig) -> Dataset:
    if cfg.dataset.path is not None:
        return load_dataset_csv(cfg.dataset.path)
    return gen_sinc(cfg.dataset.n, cfg.seed)


def default_complexity_tol(sol: SvrSolution) -> float:
    """1e-6 * (1 + gamma*): dominates the solver's constraint residual."""
    return 1e-6 * (1.0 + sol.predictor.gamma)


def _train_and_report(cfg: RunConfig):
    data = _load_data(cfg)
    sol = train(data, cfg.region, cfg.approx, cfg.train, kernel=cfg.kernel)
    return data, sol


def _certificate_for(cfg: RunConfig, data: Dataset, sol: SvrSolution,
                     region: RegionSpec) -> tuple[Certificate, ComplexityReport, bool]:
    if cfg.beta is None:
        raise UsageError("this task requires 'beta' in the config")
    approxs = make_approxs(cfg.approx, cfg.region, data.points)
    tol = default_complexity_tol(sol)
    rep = complexity(data, sol.predictor, region, approxs, tol, cfg.grid_resolution)
    subset = all(approx_within_region(region, pt, a)
                 for pt, a in zip(data.points, approxs))
    cert = certify(rep, len(data), cfg.beta, subset, config_hash=cfg.source_hash)
    return cert, rep, subset


def _out_path(cfg: RunConfig, out_override: str | None, default: str) -> str:
    return out_override or cfg.out or default


def _interval_str(c: Certificate) -> str:
    lo = "-" if c.eps_lo is None else f"{c.eps_lo:.4g}"
    return f"[{lo}, {c.eps_hi:.4g}]"


def run_train(cfg: RunConfig, out: str | None = None, verbose: bool = False) -> str:
    data, sol = _train_and_report(cfg)
    path = _out_path(cfg, out, "predictor.json")
    dump_json({"predictor": predictor_to_dict(sol.predictor),
               "objective": sol.objective,
               "slacks": list(sol.slacks) if verbose else None,
               "diagnostics": {k: v for k, v in sol.diagnostics.items()
                               if isinstance(v, (int, float, str, list, tuple, type(None)))},
               "metadata": _metadata(cfg)}, path)
    return (f"trained N={len(data)} gamma*={sol.predictor.gamma:.6g} "
            f"objective={sol.objective:.6g} -> {path}")


def run_certify(cfg: RunConfig, out: str | None = None, verbose: bool = False) -> str:
    data, sol = _train_and_report(cfg)
    cert, rep, subset = _certificate_for(cfg, data, sol, cfg.region)
    path = _out_path(cfg, out, "certificate.json")
    dump_json({"certificate": certificate_to_dict(cert, verbose),
               "gamma_star": sol.predictor.gamma,
               "empirical_adversarial_risk": empirical_adversarial_risk(rep, len(data)),
               "metadata": _metadata(cfg)}, path)
    return (f"certified N={len(data)} gamma*={sol.predictor.gamma:.4g} "
            f"s*={cert.s_star} eps={_interval_str(cert)} ({cert.regime}) -> {path}")


def run_sweep_lambda(cfg: RunConfig, out: str | None = None,
                     verbose: bool = False) -> str:
    if cfg.lambda_grid is None:
        raise UsageError("sweep-lambda requires 'lambda_grid' in the config")
    if cfg.beta is None:
        raise UsageError("sweep-lambda requires 'beta' in the config")
    data, sol = _train_and_report(cfg)
    approxs = make_approxs(cfg.approx, cfg.region, data.points)
    entries = lambda_sweep(data, sol.predictor, cfg.region, approxs,
                           list(cfg.lambda_grid), cfg.beta,
                           default_complexity_tol(sol), cfg.grid_resolution,
                           config_hash=cfg.source_hash)
    path = _out_path(cfg, out, "lambda_sweep.json")
    csv_path = os.path.splitext(path)[0] + ".csv"
    dump_json({"entries": [{"lambda": e.lam,
                            "certificate": certificate_to_dict(e.certificate, verbose)}
                           for e in entries],
               "gamma_star": sol.predictor.gamma,
               "metadata": _metadata(cfg)}, path)
    dump_csv(csv_path, ["param", "s_star", "eps_lo", "eps_hi", "bound"],
             [[e.lam, e.s_star, e.certificate.eps_lo, e.certificate.eps_hi, None]
              for e in entries])
    last = entries[-1].certificate
    return (f"lambda sweep x{len(entries)}: s* {entries[0].s_star}..{last.s_star} "
            f"eps_hi(max)={last.eps_hi:.4g} -> {path}, {csv_path}")


def run_ood(cfg: RunConfig, out: str | None = None, verbose: bool = False) -> str:
    if cfg.ood is None:
        raise UsageError("ood requires the 'ood' section in the config")
    if cfg.beta is None:
        raise UsageError("ood requires 'beta' in the config")
    data, sol = _train_and_report(cfg)
    approxs = make_approxs(cfg.approx, cfg.region, data.points)
    tol = default_complexity_tol(sol)
    sweep = []
    for R in cfg.ood.R_grid:
        ball = RegionSpec(kind="ball", norm="l2", radius_rule=float(R), scale=1.0)
        rep = complexity(data, sol.predictor, ball, approxs, tol, cfg.grid_resolution)
        sweep.append((float(R), certify(rep, len(data), cfg.beta, False,
                                        config_hash=cfg.source_hash)))
    ob = ood_bound(sweep, cfg.ood.mu, cfg.beta)
    path = _out_path(cfg, out, "ood_bound.json")
    csv_path = os.path.splitext(path)[0] + ".csv"
    dump_json({"mu": ob.mu, "confidence": ob.confidence,
               "best": {"R": ob.best_R, "bound": ob.best_bound,
                        "s_star": ob.s_stars[ob.best_index]},
               "curve": [{"R": R, "s_star": s, "eps_hi": e, "bound": b}
                         for R, s, e, b in zip(ob.R_grid, ob.s_stars, ob.eps_his, ob.bounds)],
               "metadata": _metadata(cfg)}, path)
    dump_csv(csv_path, ["param", "s_star", "eps_lo", "eps_hi", "bound"],
             [[R, s, None, e, b]
              for R, s, e, b in zip(ob.R_grid, ob.s_stars, ob.eps_his, ob.bounds)])
    return (f"ood: best bound {ob.best_bound:.4g} at R={ob.best_R:.4g} "
            f"(confidence {ob.confidence:.6g}) -> {path}, {csv_path}")


def run_validate(cfg: RunConfig, out: str | None = None, verbose: bool = False) -> str:
    if cfg.dataset.generator is None:
        raise UsageError("validate requires a generator dataset (fresh draws)")
    data, sol = _train_and_report(cfg)
    cert, rep, subset = _certificate_for(cfg, data, sol, cfg.region)
    vr = validate(sol.predictor, cfg.region, sinc_sampler, cfg.n_fresh,
                  cfg.seed, cfg.grid_resolution, certificate=cert)
    path = _out_path(cfg, out, "validation.json")
    dump_json({"certificate": certificate_to_dict(cert, verbose),
               "validation": {"n_fresh": vr.n_fresh, "risk": vr.risk,
                              "std_error": vr.std_error, "covered": vr.covered},
               "gamma_star": sol.predictor.gamma,
               "metadata": _metadata(cfg)}, path)
    return (f"validate: risk={vr.risk:.4g} (+/-{vr.std_error:.2g}) "
            f"eps={_interval_str(cert)} covered={vr.covered} -> {path}")


def run_hull_demo(n: int, mu: float, h: int, r_step: float, beta: float | None,
                  mc_samples: int, seed: int, shift_kinds: list[str],
                  out: str | None = None) -> str:
    if n < 3:
        raise UsageError("hull demo needs n >= 3")
    if h < 1 or mu <= 0:
        raise UsageError("need h >= 1 and mu > 0")
    beta = beta if beta is not None else 1e-3 / h
    pts = sample_disk(n, make_rng(seed, "data"))
    hull = convex_hull(pts)
    R_grid = [mu + r_step * mu * i for i in range(h)]
    sweep = hull_r_sweep(pts, hull, R_grid, beta)
    ob = ood_bound(sweep, mu, beta)
    shifts = {}
    for kind in shift_kinds:
        res = ood_shift_experiment(hull, ShiftSpec(kind, mu, mc_samples, seed))
        shifts[kind] = {"risk": res.risk, "std_error": res.std_error,
                        res.param_name: res.param_value}
    path = out or "hull_demo.json"
    csv_path = os.path.splitext(path)[0] + ".csv"
    dump_json({"n": n, "mu": mu, "h": h, "beta": beta,
               "confidence": ob.confidence,
               "hull_vertices": len(hull.vertices),
               "perimeter": hull.perimeter,
               "best": {"R": ob.best_R, "bound": ob.best_bound},
               "curve": [{"R": R, "s_star": s, "eps_hi": e, "bound": b}
                         for R, s, e, b in zip(ob.R_grid, ob.s_stars, ob.eps_his, ob.bounds)],
               "shifts": shifts,
               "metadata": {"rng": RNG_SCHEME, "seed": seed,
                            "package_version": __version__}}, path)
    dump_csv(csv_path, ["param", "s_star", "eps_lo", "eps_hi", "bound"],
             [[R, s, None, e, b]
              for R, s, e, b in zip(ob.R_grid, ob.s_stars, ob.eps_his, ob.bounds)])
    risks = ", ".join(f"{k}={v['risk']:.4g}" for k, v in shifts.items())
    return (f"hull demo: best bound {ob.best_bound:.4g} at R={ob.best_R:.4g}; "
            f"{risks} -> {path}, {csv_path}")
