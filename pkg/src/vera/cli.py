"""Command-line entry points.

Subcommands mirror the module operations: ``validate``, ``compile``,
``simulate``, ``fit``, ``models``, ``traits``, ``serve``. Results print
as JSON; ``simulate`` and ``fit`` additionally write a CSV table and a
rendered PNG next to each other when ``--out`` is given.
"""

from __future__ import annotations

import json
import sys
import warnings as _warnings
from dataclasses import asdict
from pathlib import Path

import click

from .calibration import fit_result_to_dict, import_observations, recommend_parameters
from .compiler import (
    CompileError,
    CompileWarning,
    InvalidModelError,
    compile_model,
    spec_to_dict,
)
from .engine import RunConfig, ensemble_mean, run_ode, run_stochastic, timeseries_to_dict
from .library import ModelLibrary, NotFoundError
from .model import ModelFormatError, model_from_json, validate_model
from .traits import TraitFormatError, TraitStore


def _load_model(path: str):
    try:
        return model_from_json(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise click.ClickException(f"cannot read {path}: {exc}")
    except ModelFormatError as exc:
        raise click.ClickException(str(exc))


def _emit(doc) -> None:
    click.echo(json.dumps(doc, indent=2))


@click.group()
def main():
    """Model, simulate, and calibrate agent-based population dynamics."""


@main.command()
@click.argument("model_path")
def validate(model_path):
    """Print the validation report; exit 1 if the model has violations."""
    model = _load_model(model_path)
    report = validate_model(model)
    _emit({"valid": not report, "violations": [asdict(v) for v in report]})
    if report:
        sys.exit(1)


@main.command()
@click.argument("model_path")
def compile(model_path):
    """Compile a model and print its reaction inventory and archetype."""
    model = _load_model(model_path)
    with _warnings.catch_warnings(record=True) as caught:
        _warnings.simplefilter("always", CompileWarning)
        try:
            spec = compile_model(model)
        except (InvalidModelError, CompileError) as exc:
            raise click.ClickException(str(exc))
    doc = spec_to_dict(spec)
    doc["warnings"] = [str(w.message) for w in caught]
    _emit(doc)


@main.command()
@click.argument("model_path")
@click.option("--duration", type=float, required=True, help="Model time to simulate.")
@click.option("--dt", type=float, required=True, help="Step size.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option(
    "--engine",
    type=click.Choice(["stochastic", "ode"]),
    default="stochastic",
    show_default=True,
)
@click.option("--runs", type=int, default=1, show_default=True, help="Ensemble size (stochastic).")
@click.option("--record-every", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Write CSV + PNG here.")
def simulate(model_path, duration, dt, seed, engine, runs, record_every, out):
    """Run a model and print the trajectory as JSON."""
    model = _load_model(model_path)
    try:
        with _warnings.catch_warnings():
            _warnings.simplefilter("ignore", CompileWarning)
            spec = compile_model(model)
        config = RunConfig(duration=duration, dt=dt, seed=seed, record_every=record_every)
        if engine == "ode":
            ts = run_ode(spec, config)
        elif runs > 1:
            ts = ensemble_mean(spec, config, runs)
        else:
            ts = run_stochastic(spec, config)
    except (InvalidModelError, CompileError, ValueError) as exc:
        raise click.ClickException(str(exc))
    if out:
        from .report import write_run_report

        for path in write_run_report(ts, out):
            click.echo(f"wrote {path}", err=True)
    _emit(timeseries_to_dict(ts))


@main.command()
@click.argument("model_path")
@click.argument("obs_path")
@click.option("--free", required=True, help="Comma-separated parameter paths, e.g. birth_rate@kudzu.")
@click.option("--budget", type=int, required=True, help="Max objective evaluations.")
@click.option("--dt", type=float, default=None, help="ODE step for fitting runs.")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Write CSV + PNG here.")
def fit(model_path, obs_path, free, budget, dt, out):
    """Recommend parameter values that better match observed data."""
    model = _load_model(model_path)
    try:
        with open(obs_path, encoding="utf-8") as stream:
            obs = import_observations(stream, provenance=obs_path)
    except OSError as exc:
        raise click.ClickException(f"cannot read {obs_path}: {exc}")
    except ValueError as exc:
        raise click.ClickException(str(exc))
    paths = [p for p in free.split(",") if p]
    try:
        result = recommend_parameters(model, obs, paths, budget, dt=dt)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    if out:
        from .report import write_fit_report

        for path in write_fit_report(result, out):
            click.echo(f"wrote {path}", err=True)
    _emit(fit_result_to_dict(result))


# -- model library ----------------------------------------------------------


@main.group()
@click.option(
    "--library",
    "library_path",
    default="vera_library",
    show_default=True,
    help="Library directory.",
)
@click.pass_context
def models(ctx, library_path):
    """Manage the model library."""
    ctx.obj = ModelLibrary(library_path)


@models.command("list")
@click.option("--filter", "query", default=None, help="Name substring or tag.")
@click.pass_obj
def models_list(library, query):
    _emit({"models": [asdict(s) for s in library.list(query)]})


@models.command("save")
@click.argument("model_path")
@click.option("--tags", default=None, help="Comma-separated tags.")
@click.pass_obj
def models_save(library, model_path, tags):
    model = _load_model(model_path)
    tag_list = [t for t in tags.split(",") if t] if tags else None
    try:
        stored = library.save(model, tags=tag_list)
    except InvalidModelError as exc:
        raise click.ClickException(str(exc))
    _emit({"id": stored})


@models.command("copy")
@click.argument("model_id")
@click.argument("new_name")
@click.pass_obj
def models_copy(library, model_id, new_name):
    try:
        _emit({"id": library.copy(model_id, new_name)})
    except NotFoundError as exc:
        raise click.ClickException(str(exc.model_id))


# -- trait store --------------------------------------------------------------


@main.group()
@click.option(
    "--store",
    "store_path",
    default="vera_traits.csv",
    show_default=True,
    help="Trait store file (canonical trait CSV).",
)
@click.pass_context
def traits(ctx, store_path):
    """Manage the species trait store."""
    ctx.obj = store_path


@traits.command("import")
@click.argument("csv_path")
@click.pass_obj
def traits_import(store_path, csv_path):
    """Merge a trait CSV into the store file."""
    store = TraitStore()
    try:
        if Path(store_path).exists():
            with open(store_path, encoding="utf-8") as stream:
                store.ingest(stream)
        with open(csv_path, encoding="utf-8") as stream:
            report = store.ingest(stream)
    except OSError as exc:
        raise click.ClickException(str(exc))
    except TraitFormatError as exc:
        raise click.ClickException(str(exc))
    with open(store_path, "w", encoding="utf-8", newline="") as stream:
        store.dump_csv(stream)
    _emit(
        {
            "loaded": report.loaded,
            "errors": [asdict(e) for e in report.errors],
            "store": store_path,
            "total": len(store),
        }
    )


@traits.command("lookup")
@click.argument("query")
@click.pass_obj
def traits_lookup(store_path, query):
    """Query the store: exact species id first, then name substrings."""
    store = TraitStore()
    if Path(store_path).exists():
        with open(store_path, encoding="utf-8") as stream:
            store.ingest(stream)
    _emit(
        {
            "matches": [
                {
                    "species_id": r.species_id,
                    "common_name": r.common_name,
                    "lifespan_years": r.lifespan,
                    "body_mass_g": r.body_mass,
                    "offspring_count": r.offspring_count,
                    "reproductive_maturity_years": r.reproductive_maturity,
                }
                for r in store.lookup(query)
            ]
        }
    )


@main.command()
@click.option("--library", "library_path", default="vera_library", show_default=True)
@click.option("--traits", "traits_csv", default=None, help="Trait CSV ingested at startup.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--time-cap", type=float, default=60.0, show_default=True, help="Per-run wall-clock cap (s).")
def serve(library_path, traits_csv, host, port, time_cap):
    """Start the HTTP service."""
    import uvicorn

    from .api import create_app

    app = create_app(library_path, traits_csv=traits_csv, sim_time_cap=time_cap)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
