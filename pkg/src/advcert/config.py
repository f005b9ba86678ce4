"""Run configuration: a single strict JSON document.

Unknown keys are rejected (fail fast) so silent typos cannot change an
experiment.  Region and approximation specs are embedded fragments of the
same document.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass

from .data_model import KernelSpec
from .errors import UsageError
from .regions import FiniteApproxSpec, RegionSpec
from .svr_train import TrainConfig

_TASKS = ("train", "certify", "sweep-lambda", "ood", "validate")


@dataclass(frozen=True)
class DatasetSpec:
    path: str | None = None
    generator: str | None = None
    n: int | None = None


@dataclass(frozen=True)
class OodConfig:
    mu: float
    R_grid: tuple[float, ...]


@dataclass(frozen=True)
class RunConfig:
    dataset: DatasetSpec
    train: TrainConfig
    region: RegionSpec
    approx: FiniteApproxSpec
    beta: float | None = None
    kernel: KernelSpec | None = None
    lambda_grid: tuple[float, ...] | None = None
    ood: OodConfig | None = None
    grid_resolution: int = 41
    seed: int = 0
    out: str | None = None
    n_fresh: int = 50_000
    task: str | None = None
    source_hash: str | None = None


def _section(raw: dict, name: str, allowed: set[str], required: set[str]) -> dict:
    if not isinstance(raw, dict):
        raise UsageError(f"config section {name!r} must be an object")
    unknown = set(raw) - allowed
    if unknown:
        raise UsageError(f"unknown keys in {name!r}: {sorted(unknown)}")
    missing = required - set(raw)
    if missing:
        raise UsageError(f"missing keys in {name!r}: {sorted(missing)}")
    return raw


def _parse_dataset(raw: dict) -> DatasetSpec:
    _section(raw, "dataset", {"path", "generator", "n"}, set())
    if ("path" in raw) == ("generator" in raw):
        raise UsageError("dataset needs exactly one of 'path' or 'generator'")
    if "path" in raw:
        if not os.path.exists(raw["path"]):
            raise UsageError(f"dataset file not found: {raw['path']}")
        return DatasetSpec(path=raw["path"])
    if raw["generator"] != "sinc":
        raise UsageError(f"unknown generator {raw['generator']!r}")
    n = int(raw.get("n", 0))
    if n < 1:
        raise UsageError("generator dataset needs n >= 1")
    return DatasetSpec(generator="sinc", n=n)


def _parse_region(raw: dict) -> RegionSpec:
    _section(raw, "region", {"kind", "norm", "radius_rule", "scale"}, {"kind"})
    return RegionSpec(**raw)


def _parse_approx(raw: dict) -> FiniteApproxSpec:
    _section(raw, "approx", {"scheme", "inflation", "offsets"}, {"scheme"})
    if "offsets" in raw:
        raw = dict(raw)
        raw["offsets"] = tuple((tuple(du), dy) for du, dy in raw["offsets"])
    return FiniteApproxSpec(**raw)


def parse_config(raw: dict, source_text: str | None = None) -> RunConfig:
    allowed = {"task", "dataset", "train", "kernel", "region", "approx", "beta",
               "lambda_grid", "ood", "grid_resolution", "seed", "out", "n_fresh"}
    _section(raw, "config", allowed, {"dataset", "train", "region", "approx"})
    task = raw.get("task")
    if task is not None and task not in _TASKS:
        raise UsageError(f"unknown task {task!r}")
    tr = _section(dict(raw["train"]), "train",
                  {"tau", "rho", "solver_tol", "max_iter"}, {"tau", "rho"})
    kern = None
    if raw.get("kernel") is not None:
        kr = _section(dict(raw["kernel"]), "kernel", {"kind", "sigma"}, {"sigma"})
        kern = KernelSpec(**kr)
    beta = raw.get("beta")
    if beta is not None:
        beta = float(beta)
        if not (0.0 < beta < 1.0):
            raise UsageError("beta must lie in (0, 1)")
    lam = raw.get("lambda_grid")
    if lam is not None:
        lam = tuple(float(x) for x in lam)
    ood = None
    if raw.get("ood") is not None:
        od = _section(dict(raw["ood"]), "ood", {"mu", "R_grid"}, {"mu", "R_grid"})
        ood = OodConfig(mu=float(od["mu"]), R_grid=tuple(float(r) for r in od["R_grid"]))
    src = source_text if source_text is not None else json.dumps(raw, sort_keys=True)
    return RunConfig(
        dataset=_parse_dataset(dict(raw["dataset"])),
        train=TrainConfig(**tr),
        region=_parse_region(dict(raw["region"])),
        approx=_parse_approx(dict(raw["approx"])),
        beta=beta,
        kernel=kern,
        lambda_grid=lam,
        ood=ood,
        grid_resolution=int(raw.get("grid_resolution", 41)),
        seed=int(raw.get("seed", 0)),
        out=raw.get("out"),
        n_fresh=int(raw.get("n_fresh", 50_000)),
        task=task,
        source_hash=hashlib.sha256(src.encode()).hexdigest()[:16],
    )


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config is not valid JSON: {exc}") from exc
    return parse_config(raw, source_text=text)
