"""Command-line interface.

Subcommands mirror the pipeline stages plus ``serve`` for the review
service. Options can come from a TOML config file (--config); command-line
flags win over config values. Exit codes: 0 success, 1 usage error, 2 data
error, 3 partial failure in non-strict mode.
"""

from __future__ import annotations

import sys

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

import click

from .geo import RasterError
from .pipeline import STAGES, PipelineConfig, PipelineError, run_stage
from .scoring import FIELD_STRATEGIES


def _build_config(
    config: str | None,
    manifest: str | None,
    out: str | None,
    strategy: tuple[str, ...],
    t_bnd: float | None,
    t_ext: float | None,
    workers: int | None,
    seed: int | None,
    strict: bool | None,
    split_fraction: float | None = None,
) -> PipelineConfig:
    base: dict = {}
    if config:
        with open(config, "rb") as f:
            base = tomllib.load(f)

    def pick(flag, key, default):
        if flag is not None and flag != ():
            return flag
        return base.get(key, default)

    manifest = pick(manifest, "manifest", None)
    out = pick(out, "out", None)
    if not manifest or not out:
        raise click.UsageError("--manifest and --out are required (flag or config file)")
    return PipelineConfig(
        manifest_path=str(manifest),
        output_dir=str(out),
        t_bnd=float(pick(t_bnd, "t_bnd", 0.2)),
        t_ext=float(pick(t_ext, "t_ext", 0.4)),
        strategies=tuple(pick(strategy, "strategies", FIELD_STRATEGIES)),
        split_fraction=float(pick(split_fraction, "split_fraction", 0.7)),
        seed=int(pick(seed, "seed", 0)),
        workers=int(pick(workers, "workers", 1)),
        strict=bool(pick(strict, "strict", False)),
    )


def _stage_options(fn):
    options = [
        click.option("--config", type=click.Path(exists=True), default=None,
                     help="TOML config file; flags override its values."),
        click.option("--manifest", type=click.Path(), default=None),
        click.option("--out", type=click.Path(), default=None),
        click.option("--strategy", multiple=True,
                     help=f"Strategy id (repeatable). Valid: {', '.join(FIELD_STRATEGIES)}"),
        click.option("--t-bnd", type=float, default=None, help="Boundary threshold."),
        click.option("--t-ext", type=float, default=None, help="Extent threshold."),
        click.option("--split-fraction", type=float, default=None),
        click.option("--workers", type=int, default=None),
        click.option("--seed", type=int, default=None),
        click.option("--strict/--no-strict", default=None),
    ]
    for opt in reversed(options):
        fn = opt(fn)
    return fn


@click.group()
def cli():
    """Field instance generation, pseudo-label selection, and evaluation."""


def _make_stage_command(stage: str):
    @cli.command(name=stage)
    @_stage_options
    def _cmd(config, manifest, out, strategy, t_bnd, t_ext, split_fraction,
             workers, seed, strict):
        cfg = _build_config(
            config, manifest, out, strategy, t_bnd, t_ext, workers, seed, strict,
            split_fraction,
        )
        code, failures = run_stage(stage, cfg)
        for msg in failures:
            click.echo(f"FAILED {msg}", err=True)
        sys.exit(code)

    _cmd.__name__ = stage.replace("-", "_")
    return _cmd


for _stage in STAGES:
    _make_stage_command(_stage)


@cli.command()
@click.option("--manifest", type=click.Path(exists=True), required=True)
@click.option("--select-dir", type=click.Path(exists=True), required=True,
              help="Output directory of the select stage (<out>/select).")
@click.option("--store", type=click.Path(), required=True,
              help="Directory for the decision log and exports.")
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(manifest, select_dir, store, host, port):
    """Run the pseudo-label review service."""
    import uvicorn

    from .review import ReviewStore, create_app

    app = create_app(ReviewStore(select_dir, manifest, store))
    uvicorn.run(app, host=host, port=port)


def main():
    try:
        cli(standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except click.exceptions.Abort:
        sys.exit(1)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except (PipelineError, RasterError, FileNotFoundError) as exc:
        click.echo(f"data error: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    main()
