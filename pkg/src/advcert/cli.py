"""Command-line surface.

Exit codes: 0 success, 2 configuration/usage error, 3 solver failure,
4 I/O error.  Each subcommand echoes a one-line summary and writes its
JSON/CSV outputs to --out (or the config's 'out', or a task default).
"""

from __future__ import annotations

import sys

import click

from .config import RunConfig, load_config
from .errors import SolverFailure, UsageError
from . import harness

EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def _run(fn, *args, **kwargs) -> None:
    try:
        click.echo(fn(*args, **kwargs))
    except UsageError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    except SolverFailure as exc:
        click.echo(f"solver failure: {exc}", err=True)
        sys.exit(EXIT_SOLVER)
    except OSError as exc:
        click.echo(f"i/o error: {exc}", err=True)
        sys.exit(EXIT_IO)


def _load(config_path: str, data: str | None, seed: int | None, task: str) -> RunConfig:
    cfg = load_config(config_path)
    if cfg.task is not None and cfg.task != task:
        raise UsageError(f"config task {cfg.task!r} does not match subcommand {task!r}")
    if data is not None:
        from dataclasses import replace
        from .config import DatasetSpec
        import os
        if not os.path.exists(data):
            raise UsageError(f"dataset file not found: {data}")
        cfg = replace(cfg, dataset=DatasetSpec(path=data))
    if seed is not None:
        from dataclasses import replace
        cfg = replace(cfg, seed=seed)
    return cfg


def _common(fn):
    fn = click.option("--config", "config_path", required=True,
                      type=click.Path(), help="run configuration (JSON)")(fn)
    fn = click.option("--data", default=None, type=click.Path(),
                      help="override: dataset CSV path")(fn)
    fn = click.option("--out", default=None, type=click.Path(),
                      help="override: output path")(fn)
    fn = click.option("--seed", default=None, type=int, help="override: seed")(fn)
    fn = click.option("--verbose", is_flag=True,
                      help="include per-point flags in outputs")(fn)
    return fn


@click.group()
def main():
    """Adversarially robust SVR training and risk certification."""


def _make_command(name, runner, doc):
    @main.command(name=name, help=doc)
    @_common
    def _cmd(config_path, data, out, seed, verbose, _runner=runner, _name=name):
        def task():
            cfg = _load(config_path, data, seed, _name)
            return _runner(cfg, out=out, verbose=verbose)
        _run(task)


_make_command("train", harness.run_train,
              "Train a predictor and persist it.")
_make_command("certify", harness.run_certify,
              "Train, compute the adversarial complexity, emit a certificate.")
_make_command("sweep-lambda", harness.run_sweep_lambda,
              "Risk-vs-lambda sweep for the scaled region family.")
_make_command("ood", harness.run_ood,
              "Out-of-distribution bound over a grid of ball radii.")
_make_command("validate", harness.run_validate,
              "Certify, then check coverage against fresh Monte Carlo draws.")


@main.command(name="hull-demo", help="Convex-hull out-of-distribution demo.")
@click.option("--n", default=500, type=int, help="number of disk points")
@click.option("--mu", default=1e-3, type=float, help="Wasserstein budget")
@click.option("--h", "h_count", default=30, type=int, help="number of tested radii")
@click.option("--r-step", default=2.0, type=float,
              help="R grid spacing as a multiple of mu")
@click.option("--beta", default=None, type=float,
              help="per-radius confidence parameter (default 1e-3/h)")
@click.option("--mc-samples", default=100_000, type=int,
              help="Monte Carlo sample size for the shift experiments")
@click.option("--shift", default="both",
              type=click.Choice(["both", "annulus", "band", "none"]),
              help="which mass-shift constructions to evaluate")
@click.option("--seed", default=0, type=int)
@click.option("--out", default=None, type=click.Path())
def hull_demo(n, mu, h_count, r_step, beta, mc_samples, shift, seed, out):
    kinds = {"both": ["annulus_to_boundary", "boundary_band_radial"],
             "annulus": ["annulus_to_boundary"],
             "band": ["boundary_band_radial"],
             "none": []}[shift]
    _run(harness.run_hull_demo, n, mu, h_count, r_step, beta, mc_samples,
         seed, kinds, out=out)


if __name__ == "__main__":
    main()
