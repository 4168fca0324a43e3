import json
import logging
import os
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Annotated, Optional

import click
import typer
from pydantic import ValidationError

from caufrac import __version__
from caufrac._batch import FractionOptions, fractions_batch
from caufrac._plot import (
    emit_plots,
    render_report,
    write_fractions_csv,
    write_manifest,
)
from caufrac._yaml_utils import dump_json, load_document
from caufrac.arithmetic import Arithmetic
from caufrac.config import RunConfig
from caufrac.empirical import (
    EmpiricalModel,
    ModelDocument,
    from_document,
    to_arithmetic,
)
from caufrac.errors import CaufracError, ConfigError, DuplicateLabelError, SchemaError
from caufrac.fraction import MethodChoice
from caufrac.linguistics import (
    PhraseEntry,
    TableKind,
    build_models,
    load_annotations,
    load_phrases,
    load_specs,
    sniff_table,
)
from caufrac.stats import (
    Alternative,
    CorrelationEntry,
    FractionsReport,
    correlation_table,
    skipped_models,
    summarize_fractions,
)
from caufrac.scenario import scenario_from_document
from caufrac.utils import expand_model_paths

app = typer.Typer()

LOG_ENVIRONMENT = "CAUFRAC_LOG"
LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"
LOG_HANDLER = "caufrac-cli"

logger = logging.getLogger(__name__)


def version_callback(value: bool):
    if value:
        typer.echo(__version__)
        raise typer.Exit()


def configure_logging() -> None:
    """Log to stderr at the level named by CAUFRAC_LOG, WARNING by default."""
    root = logging.getLogger("caufrac")
    for handler in list(root.handlers):
        if handler.get_name() == LOG_HANDLER:
            root.removeHandler(handler)

    name = os.environ.get(LOG_ENVIRONMENT, "WARNING").upper()
    level = logging.getLevelName(name)
    if not isinstance(level, int):
        level = logging.WARNING

    handler = logging.StreamHandler()
    handler.set_name(LOG_HANDLER)
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(level)
    if name != logging.getLevelName(level):
        logger.warning("Unknown log level %s=%s, using WARNING", LOG_ENVIRONMENT, name)


@contextmanager
def diagnostics(file: Path | None = None) -> Iterator[None]:
    """Turn errors into a JSON line on stderr and an exit code.

    caufrac errors carry their own exit code; anything unexpected exits with 2.
    """
    try:
        yield
    except CaufracError as e:
        diagnostic = e.diagnostic(None if file is None else str(file))
        typer.echo(json.dumps(diagnostic, sort_keys=True), err=True)
        raise typer.Exit(code=e.exit_code) from None
    except (typer.Exit, typer.Abort, click.ClickException):
        raise
    except Exception as e:
        logger.debug("Unexpected error", exc_info=True)
        diagnostic = {
            "error": type(e).__name__,
            "file": None if file is None else str(file),
            "location": None,
            "message": str(e),
        }
        typer.echo(json.dumps(diagnostic, sort_keys=True), err=True)
        raise typer.Exit(code=2) from None


@contextmanager
def lp_trace(path: Path | None) -> Iterator[None]:
    """Copy the simplex pivots and tableaux to ``path``."""
    if path is None:
        yield
        return

    try:
        handler = logging.FileHandler(path, mode="w", encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Could not open trace file: {e}", str(path)) from None
    handler.setFormatter(logging.Formatter("%(message)s"))
    lp_logger = logging.getLogger("caufrac._lp")
    level = lp_logger.level
    lp_logger.addHandler(handler)
    lp_logger.setLevel(logging.DEBUG)
    try:
        yield
    finally:
        lp_logger.removeHandler(handler)
        lp_logger.setLevel(level)
        handler.close()


@app.callback()
def main(
    # TODO: typer does not support `<type> | None` yet
    # https://github.com/tiangolo/typer/issues/533
    version: Optional[bool] = typer.Option(  # noqa
        None,
        "--version",
        callback=version_callback,
        is_eager=True,
        help="Print the version and exit",
    ),
):
    """Causal fractions of empirical models"""
    configure_logging()


ConfigOption = Annotated[
    Optional[Path],  # noqa
    typer.Option(..., "--config", help="YAML file of run settings"),
]
OutOption = Annotated[
    Optional[Path],  # noqa
    typer.Option(..., "--out", help="Directory to write output files to"),
]
ArithmeticOption = Annotated[
    Optional[Arithmetic],  # noqa
    typer.Option(..., "--arithmetic", help="Compute with exact rationals or floats"),
]
ToleranceOption = Annotated[
    Optional[float],  # noqa
    typer.Option(..., "--tolerance", help="Comparison slack in float mode"),
]
MethodOption = Annotated[
    Optional[MethodChoice],  # noqa
    typer.Option(..., "--method", help="Algorithm for each fraction"),
]
JobsOption = Annotated[
    Optional[int],  # noqa
    typer.Option(..., "--jobs", help="Worker processes, the CPU count by default"),
]
SectionCapOption = Annotated[
    Optional[int],  # noqa
    typer.Option(..., "--section-cap", help="Most causal sections to enumerate"),
]
WitnessOption = Annotated[
    Optional[bool],  # noqa
    typer.Option(..., "--witness/--no-witness", help="Embed witness models"),
]
ThresholdOption = Annotated[
    Optional[float],  # noqa
    typer.Option(..., "--threshold", help="Fraction counted as high in summaries"),
]
BinsOption = Annotated[
    Optional[int],  # noqa
    typer.Option(..., "--bins", help="Histogram bins on [0, 1]"),
]
AlternativeOption = Annotated[
    Optional[Alternative],  # noqa
    typer.Option(..., "--alternative", help="Alternative hypothesis of p-values"),
]


def _output_dir(settings: RunConfig) -> Path:
    if settings.output is None:
        raise ConfigError("No output directory, pass --out or set output")
    return settings.output


def _load_report(path: Path) -> FractionsReport:
    try:
        return FractionsReport.model_validate(load_document(path))
    except ValidationError as e:
        error = e.errors()[0]
        raise SchemaError(
            f"Invalid fractions report: {error['msg']}",
            ".".join(str(part) for part in error["loc"]),
        ) from None


def _correlations(
    report: FractionsReport, settings: RunConfig
) -> list[CorrelationEntry]:
    if not any(model.phrase_type is not None for model in report.models):
        logger.info("No phrase types in the report, skipping correlations")
        return []
    return correlation_table(report.models, settings.alternative)


def _write_fractions(report: FractionsReport, output: Path) -> None:
    document = report.model_dump(mode="json", exclude_none=True)
    dump_json(document, output / "fractions.json")
    write_fractions_csv(report, output / "fractions.csv")


def _write_analysis(
    report: FractionsReport, settings: RunConfig, output: Path, plots: bool
) -> None:
    summary = summarize_fractions(report.models, settings.threshold, settings.bins)
    correlations = _correlations(report, settings)
    dump_json(summary.model_dump(mode="json"), output / "summary.json")
    dump_json(
        {"correlations": [entry.model_dump(mode="json") for entry in correlations]},
        output / "correlations.json",
    )
    render_report(report, summary, correlations, output / "report.md")
    if plots:
        emit_plots(summary, correlations, output / "plots")


def _fraction_options(settings: RunConfig) -> FractionOptions:
    return FractionOptions(
        method=settings.method,
        section_cap=settings.section_cap,
        tolerance=settings.tolerance,
        include_witness=settings.witness,
    )


@app.command()
def schema(
    output: Annotated[
        Path, typer.Argument(..., help="filename to write the schema to")
    ],
):
    """Write the JSON schema for caufrac documents"""
    assert output.name.endswith(
        ".schema.json"
    ), f"Expected '{output.name}' to end with '.schema.json'"

    match output.name:
        case "caufrac.model.schema.json":
            schema = ModelDocument.model_json_schema()
        case "caufrac.fractions.schema.json":
            schema = FractionsReport.model_json_schema()
        case "caufrac.config.schema.json":
            schema = RunConfig.model_json_schema()
        case _:
            typer.echo(f"Don't know how to create {output.name}")
            raise typer.Exit(code=1)

    output.write_text(json.dumps(schema, indent=2) + "\n")


@app.command()
def validate(
    paths: Annotated[
        list[Path],
        typer.Argument(..., help="Model, scenario and survey CSV files to check"),
    ],
    tolerance: ToleranceOption = None,
    config: ConfigOption = None,
):
    """Check model, scenario and survey files, stopping at the first error"""
    with diagnostics(config):
        settings = RunConfig.load(
            config, command="validate", inputs=paths, tolerance=tolerance
        )

    kinds: dict[Path, TableKind] = {}
    for path in paths:
        if path.suffix == ".csv":
            with diagnostics(path):
                kinds[path] = sniff_table(path)

    # Phrase tables first, so that model specs can be resolved against them
    phrases: dict[str, PhraseEntry] = {}
    ordered = sorted(paths, key=lambda path: kinds.get(path) is not TableKind.phrases)
    for path in ordered:
        with diagnostics(path):
            match kinds.get(path):
                case None:
                    document = load_document(path)
                    if "rows" in document or "scenario" in document:
                        from_document(document, path.stem, settings.tolerance)
                    else:
                        scenario_from_document(document)
                case TableKind.annotations:
                    load_annotations(path)
                case TableKind.phrases:
                    phrases.update(load_phrases(path))
                case TableKind.specs:
                    specs = load_specs(path)
                    if phrases:
                        for spec in specs:
                            spec.word_pairs(phrases)
                    else:
                        logger.warning("No phrase table given, not resolving %s", path)
        typer.echo(f"{path}: ok")


@app.command()
def fractions(
    models: Annotated[
        list[Path],
        typer.Argument(..., help="Model documents, or directories of them"),
    ],
    out: OutOption = None,
    arithmetic: ArithmeticOption = None,
    tolerance: ToleranceOption = None,
    method: MethodOption = None,
    jobs: JobsOption = None,
    section_cap: SectionCapOption = None,
    witness: WitnessOption = None,
    trace: Annotated[
        Optional[Path],  # noqa
        typer.Option(..., "--lp-trace", help="File to write the simplex trace to"),
    ] = None,
    config: ConfigOption = None,
):
    """Compute the causal fractions of models for each of their report orders"""
    with diagnostics(config):
        settings = RunConfig.load(
            config,
            command="fractions",
            inputs=models,
            output=out,
            arithmetic=arithmetic,
            tolerance=tolerance,
            method=method,
            jobs=jobs,
            section_cap=section_cap,
            witness=witness,
        )

    with diagnostics():
        paths = expand_model_paths(settings.inputs)

    loaded: list[EmpiricalModel] = []
    for path in paths:
        with diagnostics(path):
            model = EmpiricalModel.deserialize(path, settings.tolerance)
            if any(other.model_id == model.model_id for other in loaded):
                raise DuplicateLabelError(f"Model id '{model.model_id}' is repeated")
            if settings.arithmetic is not None:
                model = to_arithmetic(model, settings.arithmetic)
            loaded.append(model)

    with diagnostics():
        output = _output_dir(settings)
        # Worker processes do not inherit the trace handler
        jobs_used = 1 if trace is not None else settings.jobs
        with lp_trace(trace):
            reports = fractions_batch(loaded, _fraction_options(settings), jobs_used)

        mode = settings.arithmetic or (
            Arithmetic.floating
            if any(model.arithmetic is Arithmetic.floating for model in loaded)
            else Arithmetic.rational
        )
        report = FractionsReport(
            arithmetic=mode, method=settings.method, models=reports
        )
        _write_fractions(report, output)
        write_manifest(output)


@app.command()
def pipeline(
    annotations: Annotated[
        Path, typer.Argument(..., help="CSV of scores per phrase and combination")
    ],
    phrases: Annotated[
        Path, typer.Argument(..., help="CSV of phrases, their words and ambiguity")
    ],
    specs: Annotated[
        Path, typer.Argument(..., help="CSV assigning phrases to model cells")
    ],
    out: OutOption = None,
    arithmetic: ArithmeticOption = None,
    tolerance: ToleranceOption = None,
    method: MethodOption = None,
    threshold: ThresholdOption = None,
    drop_neutral: Annotated[
        Optional[bool],  # noqa
        typer.Option(
            ..., "--drop-neutral/--keep-neutral", help="Leave out the middle grade"
        ),
    ] = None,
    jobs: JobsOption = None,
    alternative: AlternativeOption = None,
    bins: BinsOption = None,
    section_cap: SectionCapOption = None,
    witness: WitnessOption = None,
    config: ConfigOption = None,
):
    """Build models from survey scores and report their fractions and statistics"""
    with diagnostics(config):
        settings = RunConfig.load(
            config,
            command="pipeline",
            inputs=[annotations, phrases, specs],
            output=out,
            arithmetic=arithmetic,
            tolerance=tolerance,
            method=method,
            threshold=threshold,
            drop_neutral=drop_neutral,
            jobs=jobs,
            alternative=alternative,
            bins=bins,
            section_cap=section_cap,
            witness=witness,
        )
    with diagnostics():
        output = _output_dir(settings)

    with diagnostics(annotations):
        records = load_annotations(annotations)
    with diagnostics(phrases):
        phrase_table = load_phrases(phrases)
    with diagnostics(specs):
        mode = settings.arithmetic or Arithmetic.floating
        models, skips = build_models(
            load_specs(specs), phrase_table, records, settings.drop_neutral, mode
        )

    with diagnostics():
        for model in models:
            model.serialize(output / "models" / f"{model.model_id}.json")

        reports = fractions_batch(models, _fraction_options(settings), settings.jobs)
        report = FractionsReport(
            arithmetic=mode,
            method=settings.method,
            models=reports,
            skipped=skipped_models(skips),
        )
        _write_fractions(report, output)
        _write_analysis(report, settings, output, plots=True)
        write_manifest(output)

    if skips:
        typer.echo(f"Skipped {len(skips)} of {len(skips) + len(models)} models")


@app.command()
def report(
    fractions_path: Annotated[
        Path, typer.Argument(..., help="fractions.json written by an earlier run")
    ],
    out: OutOption = None,
    threshold: ThresholdOption = None,
    bins: BinsOption = None,
    alternative: AlternativeOption = None,
    config: ConfigOption = None,
):
    """Summarize fractions and correlations in summary.json and report.md"""
    with diagnostics(config):
        settings = RunConfig.load(
            config,
            command="report",
            inputs=[fractions_path],
            output=out,
            threshold=threshold,
            bins=bins,
            alternative=alternative,
        )
    with diagnostics(fractions_path):
        loaded = _load_report(fractions_path)
    with diagnostics():
        output = _output_dir(settings)
        _write_analysis(loaded, settings, output, plots=False)
        write_manifest(output)


@app.command()
def plot(
    fractions_path: Annotated[
        Path, typer.Argument(..., help="fractions.json written by an earlier run")
    ],
    out: OutOption = None,
    threshold: ThresholdOption = None,
    bins: BinsOption = None,
    alternative: AlternativeOption = None,
    config: ConfigOption = None,
):
    """Write CSV series and SVG plots of fractions and correlations"""
    with diagnostics(config):
        settings = RunConfig.load(
            config,
            command="plot",
            inputs=[fractions_path],
            output=out,
            threshold=threshold,
            bins=bins,
            alternative=alternative,
        )
    with diagnostics(fractions_path):
        loaded = _load_report(fractions_path)
    with diagnostics():
        output = _output_dir(settings)
        summary = summarize_fractions(loaded.models, settings.threshold, settings.bins)
        emit_plots(summary, _correlations(loaded, settings), output)
        write_manifest(output)


# test with: python -m caufrac
if __name__ == "__main__":
    app()
