"""Files written from fraction reports: CSV series, SVG plots, markdown and the
manifest listing them."""

from __future__ import annotations

import hashlib
import logging
import re
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import pandas as pd
from jinja2 import Template

from caufrac._plot.svg import histogram_svg, scatter_svg
from caufrac._yaml_utils import dump_json, write_bytes, write_text
from caufrac.linguistics import PhraseType
from caufrac.stats import CorrelationEntry, FractionsReport, FractionSummary

logger = logging.getLogger(__name__)

REPORT_TEMPLATE = Path(__file__).parent / "report.md.jinja"
MANIFEST = "manifest.json"


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", text).strip("_") or "order"


def _phrase_type_name(phrase_type: PhraseType | None) -> str:
    return "all" if phrase_type is None else phrase_type.value


def write_csv(rows: Sequence[dict[str, Any]], columns: Sequence[str], path: Path):
    frame = pd.DataFrame(list(rows), columns=list(columns))
    write_text(path, frame.to_csv(index=False, lineterminator="\n"))


def emit_plots(
    summary: FractionSummary,
    correlations: Sequence[CorrelationEntry],
    output: Path,
) -> list[Path]:
    """Write a histogram per phrase type and order, and a scatter plot per
    computed correlation, each as CSV and SVG.

    Histograms share their count axis so that orders can be compared.
    """
    written: list[Path] = []
    y_max = max((max(h.counts, default=0) for h in summary.histograms), default=0)
    for histogram in summary.histograms:
        name = (
            f"histogram_{_phrase_type_name(histogram.phrase_type)}_"
            f"{_slug(histogram.label)}"
        )
        rows = [
            {"bin_start": left, "bin_end": right, "models": count}
            for left, right, count in zip(
                histogram.edges, histogram.edges[1:], histogram.counts, strict=True
            )
        ]
        write_csv(rows, ["bin_start", "bin_end", "models"], output / f"{name}.csv")
        write_bytes(
            output / f"{name}.svg",
            histogram_svg(
                f"{histogram.label} ({_phrase_type_name(histogram.phrase_type)})",
                histogram.edges,
                histogram.counts,
                y_max,
            ),
        )
        written += [output / f"{name}.csv", output / f"{name}.svg"]

    for entry in correlations:
        if not entry.points:
            continue
        name = f"scatter_{entry.phrase_type.value}_{entry.count.value}"
        rows = [
            {
                "model_id": point.model_id,
                f"{entry.count.value}_homonymous": point.homonymous,
                "fraction": point.fraction,
            }
            for point in entry.points
        ]
        write_csv(
            rows,
            ["model_id", f"{entry.count.value}_homonymous", "fraction"],
            output / f"{name}.csv",
        )
        write_bytes(
            output / f"{name}.svg",
            scatter_svg(
                f"{entry.label} ({entry.phrase_type.value})",
                [(point.homonymous, point.fraction) for point in entry.points],
                f"homonymous words ({entry.count.value})",
            ),
        )
        written += [output / f"{name}.csv", output / f"{name}.svg"]

    if correlations:
        write_csv(
            [
                entry.model_dump(mode="json", exclude={"points"})
                for entry in correlations
            ],
            [
                "phrase_type",
                "label",
                "count",
                "n",
                "rho_homonymous",
                "rho_polysemous",
                "p_value",
                "method",
                "reason",
            ],
            output / "correlations.csv",
        )
        written.append(output / "correlations.csv")

    logger.info("Wrote %d plot files to %s", len(written), output)
    return written


def write_fractions_csv(report: FractionsReport, path: Path) -> None:
    """One row per model and order."""
    rows = [
        {
            "model_id": model.model_id,
            "phrase_type": _phrase_type_name(model.phrase_type),
            "order": entry.label,
            "gamma": entry.gamma,
            "method": entry.method.value,
        }
        for model in report.models
        for entry in model.fractions
    ]
    write_csv(rows, ["model_id", "phrase_type", "order", "gamma", "method"], path)


def render_report(
    report: FractionsReport,
    summary: FractionSummary,
    correlations: Sequence[CorrelationEntry],
    path: Path,
) -> None:
    with open(REPORT_TEMPLATE) as template:
        text = Template(template.read()).render(
            report=report,
            summary=summary,
            correlations=correlations,
            phrase_type_name=_phrase_type_name,
        )
    write_text(path, text.rstrip("\n") + "\n")


def write_manifest(output: Path) -> Path:
    """List every file under ``output`` with its kind and SHA-256, sorted by path."""
    files = sorted(
        (
            path
            for path in output.rglob("*")
            if path.is_file() and path.relative_to(output).as_posix() != MANIFEST
        ),
        key=lambda path: path.relative_to(output).as_posix(),
    )
    entries = [
        {
            "path": path.relative_to(output).as_posix(),
            "kind": path.suffix.lstrip("."),
            "sha256": hashlib.sha256(path.read_bytes()).hexdigest(),
        }
        for path in files
    ]
    manifest = output / MANIFEST
    dump_json({"files": entries}, manifest)
    return manifest
