# gradedeck/cli.py
import json
import logging
import os
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import click

from .core.config import cfg, learner_defaults, report_defaults
from .core.errors import GradeDeckError
from .data.dataset import Stage, preprocess, summarize
from .data.ingest import load_csv, write_dataset_csv, write_raw_csv, write_schema_yaml
from .data.synth import SynthSpec, generate_raw
from .learners.base import ALGORITHMS, LearnerSettings
from .orchestrator import RunConfig, describe_error, resolve_schema, run_analysis, run_pipeline
from .schemas import DatasetSchema, GridProfile, load_grid_config, load_schema_config
from .tools.ensemble import NullOn
from .tools.reports import analysis_render, load_report, report_render
from .tools.tuning import grid_for

log = logging.getLogger(__name__)

STAGE_CHOICE = click.Choice([s.value for s in Stage])
PROFILE_CHOICE = click.Choice([p.value for p in GridProfile])
ALGORITHM_CHOICE = click.Choice([a.value for a in ALGORITHMS], case_sensitive=False)


def _configure_logging(verbose: int) -> None:
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(message)s")
    logging.getLogger("gradedeck").setLevel(level)


def _schema_refs(schema: Optional[str], schema_name: Optional[str]) -> Tuple[Optional[str], Optional[str]]:
    """`--schema` takes either a packaged schema name or a schema file path."""
    if schema and os.path.isfile(schema):
        return schema_name, schema
    return schema_name or schema, None


def _guarded(fn: Callable[[], Any]) -> Any:
    try:
        return fn()
    except GradeDeckError as exc:
        raise click.ClickException(describe_error(exc)) from exc
    except FileNotFoundError as exc:
        raise click.ClickException(str(exc)) from exc


def _echo_files(files: List[Path]) -> None:
    for path in files:
        click.echo(f"  wrote {path}")


@click.group()
@click.option("--verbose", "-v", count=True, help="-v for progress, -vv for per-grid-point detail.")
def cli(verbose: int):
    """GradeDeck: ensemble selection for early Weak-student prediction."""
    _configure_logging(verbose)


@cli.command()
@click.argument("input_path", type=click.Path(dir_okay=False))
@click.option("--schema", "schema", required=True, help="Packaged schema name or schema YAML file.")
@click.option("--schema-name", default=None, help="Schema to pick from a multi-schema file.")
@click.option("--stage", type=STAGE_CHOICE, default=Stage.STAGE20.value, show_default=True)
@click.option("--output", "output", type=click.Path(dir_okay=False), default=None, help="Write the preprocessed dataset here.")
@click.option("--json-output", is_flag=True, help="Emit JSON instead of human-readable text.")
def ingest(input_path: str, schema: str, schema_name: Optional[str], stage: str, output: Optional[str], json_output: bool):
    """Validate a grade export and summarize the preprocessed stage dataset."""
    name, path = _schema_refs(schema, schema_name)
    config = RunConfig(input_path=input_path, schema_name=name, schema_path=path, stage=Stage(stage))

    def _run():
        resolved = resolve_schema(config)
        ds = preprocess(load_csv(input_path, resolved), config.stage)
        if output:
            write_dataset_csv(ds, output)
        return summarize(ds)

    summary = _guarded(_run)
    if json_output:
        click.echo(json.dumps(summary.model_dump(mode="json"), indent=2))
        return
    click.echo(
        f"{summary.n_students} students, {summary.n_weak} Weak ({summary.weak_fraction:.1%}), "
        f"{summary.n_features} features at {summary.stage.value}"
    )
    click.echo(f"{'feature':<12} {'mean':>7} {'std':>7} {'min':>4} {'max':>4} {'zeros':>5}")
    click.echo("-" * 44)
    for f in summary.features:
        click.echo(f"{f.name:<12} {f.mean:>7.2f} {f.std:>7.2f} {f.min:>4} {f.max:>4} {f.zeros:>5}")
    if output:
        click.echo(f"Preprocessed dataset written to {output}")


@cli.command()
@click.option("--output", "output", type=click.Path(dir_okay=False), required=True, help="CSV file to write.")
@click.option("--schema-output", type=click.Path(dir_okay=False), default=None, help="Schema YAML (default: <output>.schema.yml).")
@click.option("--n-students", type=int, default=200, show_default=True)
@click.option("--n-features", type=int, default=6, show_default=True)
@click.option("--weak-fraction", type=float, default=0.3, show_default=True)
@click.option("--separation", type=float, default=2.0, show_default=True)
@click.option("--n-signal", "n_signal", type=int, default=None, help="Signal features (default: all).")
@click.option("--skew", type=float, default=-4.0, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--profile", type=PROFILE_CHOICE, default=GridProfile.DATASET1.value, show_default=True)
def synth(
    output: str,
    schema_output: Optional[str],
    n_students: int,
    n_features: int,
    weak_fraction: float,
    separation: float,
    n_signal: Optional[int],
    skew: float,
    seed: int,
    profile: str,
):
    """Write a seeded synthetic grade export plus its schema file."""
    spec = SynthSpec(
        n_students=n_students,
        n_features=n_features,
        weak_fraction=weak_fraction,
        separation=separation,
        n_signal_features=n_signal,
        skew=skew,
        seed=seed,
    )
    raw = _guarded(lambda: generate_raw(spec))
    out = Path(output)
    schema_path = Path(schema_output) if schema_output else out.with_suffix(".schema.yml")
    schema = DatasetSchema(
        name=out.stem,
        description=f"synthetic: n={n_students}, weak_fraction={weak_fraction}, separation={separation}, seed={seed}",
        profile=GridProfile(profile),
        features={name: 100.0 for name in raw.feature_names},
        stages={stage: list(feats) for stage, feats in raw.stage_features.items()},
    )
    write_raw_csv(out, raw.student_ids, raw.feature_names, raw.raw_marks, raw.final_grade)
    write_schema_yaml(schema, schema_path)
    n_weak = spec.n_weak()
    click.echo(f"Wrote {n_students} students ({n_weak} Weak) to {out}")
    click.echo(f"Schema written to {schema_path}")


def _run_config(input_path: str, schema: Optional[str], schema_name: Optional[str], **overrides: Any) -> RunConfig:
    name, path = _schema_refs(schema, schema_name)
    return _guarded(
        lambda: RunConfig.from_defaults(input_path=input_path, schema_name=name, schema_path=path, **overrides)
    )


def _common_run_options(fn):
    options = [
        click.argument("input_path", type=click.Path(dir_okay=False)),
        click.option("--schema", "schema", required=True, help="Packaged schema name or schema YAML file."),
        click.option("--schema-name", default=None, help="Schema to pick from a multi-schema file."),
        click.option("--stage", type=STAGE_CHOICE, default=Stage.STAGE20.value, show_default=True),
        click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help="Directory for CSV/JSON artifacts."),
        click.option("--grid", "grid_path", type=click.Path(dir_okay=False), default=None, help="Grid override YAML."),
        click.option("--profile", type=PROFILE_CHOICE, default=None, help="Grid profile (default: the schema's)."),
        click.option("--train-fraction", type=float, default=None),
        click.option("--k-folds", type=int, default=None),
        click.option("--seed", type=int, default=None, help="Master seed."),
        click.option("--n-jobs", type=int, default=None, help="joblib workers; results do not depend on it."),
        click.option("--rf-trees", type=int, default=None, help="Trees per random forest."),
        click.option("--json-output", is_flag=True, help="Emit JSON instead of human-readable text."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


@cli.command()
@_common_run_options
@click.option("--repeats", type=int, default=None, help="Permutation repeats per feature.")
@click.option("--resolution", type=int, default=None, help="Decision grid points per axis.")
def analyze(
    input_path: str,
    schema: str,
    schema_name: Optional[str],
    stage: str,
    out_dir: Optional[str],
    grid_path: Optional[str],
    profile: Optional[str],
    train_fraction: Optional[float],
    k_folds: Optional[int],
    seed: Optional[int],
    n_jobs: Optional[int],
    rf_trees: Optional[int],
    json_output: bool,
    repeats: Optional[int],
    resolution: Optional[int],
):
    """PCA, permutation importance per learner, and an SVM decision grid over PC1/PC2."""
    config = _run_config(
        input_path,
        schema,
        schema_name,
        stage=stage,
        grid_path=grid_path,
        profile=profile,
        train_fraction=train_fraction,
        k_folds=k_folds,
        seed=seed,
        n_jobs=n_jobs,
        learners={"rf_trees": rf_trees},
    )
    result = _guarded(lambda: run_analysis(config, n_repeats=repeats, resolution=resolution))
    text, files = analysis_render(result, out_dir)
    if json_output:
        click.echo(json.dumps(result.to_dict(), indent=2))
        return
    click.echo(text, nl=False)
    _echo_files(files)


@cli.command()
@_common_run_options
@click.option("--tau", "taus", type=float, multiple=True, help="Decision threshold; repeatable.")
@click.option("--tau-preset", is_flag=True, help="Add the schema's tau preset for the stage.")
@click.option("--tau-sweep", is_flag=True, help="Add ensemble metrics over the configured tau grid.")
@click.option("--null-samples", type=int, default=None, help="Monte-Carlo null draws R (up to 1000000).")
@click.option("--null-on", type=click.Choice([n.value for n in NullOn]), default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--extra-splits", type=int, default=None)
@click.option("--exclude", "exclusions", type=ALGORITHM_CHOICE, multiple=True, help="Skip ensembles containing this learner.")
@click.option("--dump-models", "dump_dir", type=click.Path(file_okay=False), default=None, help="Write the initial split's six models here.")
def select(
    input_path: str,
    schema: str,
    schema_name: Optional[str],
    stage: str,
    out_dir: Optional[str],
    grid_path: Optional[str],
    profile: Optional[str],
    train_fraction: Optional[float],
    k_folds: Optional[int],
    seed: Optional[int],
    n_jobs: Optional[int],
    rf_trees: Optional[int],
    json_output: bool,
    taus: Tuple[float, ...],
    tau_preset: bool,
    tau_sweep: bool,
    null_samples: Optional[int],
    null_on: Optional[str],
    alpha: Optional[float],
    extra_splits: Optional[int],
    exclusions: Tuple[str, ...],
    dump_dir: Optional[str],
):
    """Run the full selection pipeline and print the selection table."""
    config = _run_config(
        input_path,
        schema,
        schema_name,
        stage=stage,
        grid_path=grid_path,
        profile=profile,
        train_fraction=train_fraction,
        k_folds=k_folds,
        seed=seed,
        n_jobs=n_jobs,
        learners={"rf_trees": rf_trees},
        taus=list(taus),
        tau_preset=tau_preset,
        tau_sweep=tau_sweep,
        null_samples=null_samples,
        null_on=null_on,
        alpha=alpha,
        extra_splits=extra_splits,
        exclusions=list(exclusions),
    )
    report = _guarded(lambda: run_pipeline(config, dump_dir=dump_dir))
    text, files = report_render(report, out_dir)
    if json_output:
        click.echo(report.to_json(), nl=False)
        return
    click.echo(text, nl=False)
    _echo_files(files)
    if dump_dir:
        click.echo(f"Models written to {dump_dir}")


@cli.command()
@click.argument("report_path", type=click.Path())
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help="Re-write the artifacts here.")
@click.option("--json-output", is_flag=True, help="Emit JSON instead of human-readable text.")
def report(report_path: str, out_dir: Optional[str], json_output: bool):
    """Re-render a saved report.json (or a directory holding one)."""
    loaded = _guarded(lambda: load_report(report_path))
    text, files = report_render(loaded, out_dir)
    if json_output:
        click.echo(loaded.to_json(), nl=False)
        return
    click.echo(text, nl=False)
    _echo_files(files)


@cli.command()
def doctor():
    """Run GradeDeck diagnostics."""
    problems: List[str] = []

    here = os.path.dirname(__file__)
    for d in ["core", "conf", "config", "data", "learners", "tools"]:
        if not os.path.isdir(os.path.join(here, d)):
            problems.append(f"Missing folder: gradedeck/{d}")

    checks: Dict[str, Callable[[], Any]] = {
        "main config": cfg,
        "pipeline defaults": lambda: RunConfig.from_defaults(),
        "learner settings": lambda: LearnerSettings(**learner_defaults()),
        "report settings": report_defaults,
        "dataset schemas": load_schema_config,
        "grid tables": load_grid_config,
    }
    for what, check in checks.items():
        try:
            check()
        except Exception as exc:
            problems.append(f"{what} failed to load: {exc}")

    if not problems:
        for profile in GridProfile:
            for algorithm in ALGORITHMS:
                try:
                    grid_for(algorithm, profile)
                except Exception as exc:
                    problems.append(f"grid {profile.value}/{algorithm.value}: {exc}")

    if problems:
        click.echo("Doctor found issues:")
        for p in problems:
            click.echo(f" - {p}")
        raise click.exceptions.Exit(1)
    click.echo("All green. Configs, schemas and grid tables validate.")


if __name__ == "__main__":
    cli()
