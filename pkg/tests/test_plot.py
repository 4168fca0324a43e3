import hashlib
import json

from lxml import etree

from caufrac._plot import emit_plots, render_report, write_manifest
from caufrac._plot.svg import SVG_NAMESPACE, histogram_svg, scatter_svg
from caufrac.arithmetic import Arithmetic
from caufrac.fraction import Method, MethodChoice
from caufrac.linguistics import AmbiguityCounts, PhraseType
from caufrac.orders import Chain, NoSignalling
from caufrac.stats import (
    FractionEntry,
    FractionsReport,
    ModelReport,
    SkippedModel,
    correlation_table,
    summarize_fractions,
)

SVG = f"{{{SVG_NAMESPACE}}}"


def model_report(model_id: str, homonymous: int, s_v: str) -> ModelReport:
    return ModelReport(
        model_id=model_id,
        phrase_type=PhraseType.subject_verb,
        ambiguity=AmbiguityCounts(homonymous, 0, 2 - homonymous, 2),
        fractions=[
            FractionEntry(
                order=Chain(first="S", second="V"),
                label="S->V",
                gamma=s_v,
                method=Method.closed_form,
            ),
            FractionEntry(
                order=NoSignalling(), label="NS", gamma="1/5", method=Method.lp
            ),
        ],
    )


REPORTS = [
    model_report("a", 0, "1/5"),
    model_report("b", 1, "1/2"),
    model_report("c", 2, "1"),
]


def test_histogram_svg():
    root = etree.fromstring(histogram_svg("S->V", [0.0, 0.5, 1.0], [1, 0], 4))
    assert root.tag == f"{SVG}svg"
    assert root.find(f"{SVG}title").text == "S->V"
    # Empty bins draw no bar
    assert len(root.findall(f".//{SVG}rect")) == 1


def test_scatter_svg():
    root = etree.fromstring(scatter_svg("S->V", [(0, 0.2), (1, 0.5)], "words"))
    assert len(root.findall(f".//{SVG}circle")) == 2


def test_histograms_only(tmp_path):
    summary = summarize_fractions(REPORTS, bins=4)
    written = emit_plots(summary, [], tmp_path)
    assert sorted(path.name for path in written) == [
        "histogram_subject_verb_NS.csv",
        "histogram_subject_verb_NS.svg",
        "histogram_subject_verb_S_V.csv",
        "histogram_subject_verb_S_V.svg",
    ]
    assert (tmp_path / "histogram_subject_verb_S_V.csv").read_text() == (
        "bin_start,bin_end,models\n"
        "0.0,0.25,1\n"
        "0.25,0.5,0\n"
        "0.5,0.75,1\n"
        "0.75,1.0,1\n"
    )


def test_histograms_share_count_axis(tmp_path):
    summary = summarize_fractions(REPORTS, bins=4)
    emit_plots(summary, [], tmp_path)

    def top_tick(name: str) -> str:
        root = etree.parse(str(tmp_path / name)).getroot()
        ticks = [
            element.text
            for element in root.iter(f"{SVG}text")
            if element.get("text-anchor") == "end"
        ]
        return ticks[-1]

    # NS puts all three models in one bin
    assert top_tick("histogram_subject_verb_S_V.svg") == "3"
    assert top_tick("histogram_subject_verb_NS.svg") == "3"


def test_scatter_plots_and_correlations(tmp_path):
    summary = summarize_fractions(REPORTS)
    correlations = correlation_table(REPORTS)
    written = emit_plots(summary, correlations, tmp_path)
    names = {path.name for path in written}
    # Verb-object entries have no points
    assert {
        "scatter_subject_verb_total.csv",
        "scatter_subject_verb_verb.svg",
        "scatter_subject_verb_noun.csv",
        "correlations.csv",
    } <= names
    assert not any("verb_object" in name for name in names)
    assert (tmp_path / "scatter_subject_verb_total.csv").read_text() == (
        "model_id,total_homonymous,fraction\na,0,0.2\nb,1,0.5\nc,2,1.0\n"
    )
    header = (tmp_path / "correlations.csv").read_text().splitlines()[0]
    assert header == (
        "phrase_type,label,count,n,rho_homonymous,rho_polysemous,p_value,method,reason"
    )


def test_render_report(tmp_path):
    report = FractionsReport(
        arithmetic=Arithmetic.rational,
        method=MethodChoice.auto,
        models=REPORTS,
        skipped=[SkippedModel(model_id="d", reason="sv3: MissingCombinationError")],
    )
    summary = summarize_fractions(REPORTS)
    path = tmp_path / "report.md"
    render_report(report, summary, correlation_table(REPORTS), path)
    text = path.read_text()
    assert text.startswith("# Causal fractions\n")
    assert "3 models, rational arithmetic, method auto." in text
    assert "| subject_verb | S->V | 3 | 0.5000 | 0.3333 |" in text
    assert "| subject_verb | S->V | total | 3 | 1.0000 | -1.0000 |" in text
    assert "- d: sv3: MissingCombinationError" in text
    assert text.endswith("\n") and not text.endswith("\n\n")


def test_render_report_without_correlations(tmp_path):
    report = FractionsReport(
        arithmetic=Arithmetic.floating, method=MethodChoice.lp, models=[]
    )
    path = tmp_path / "report.md"
    render_report(report, summarize_fractions([]), [], path)
    text = path.read_text()
    assert "0 models, float arithmetic, method lp." in text
    assert "Rank correlations" not in text
    assert "Skipped models" not in text


def test_manifest(tmp_path):
    (tmp_path / "plots").mkdir()
    (tmp_path / "plots" / "b.svg").write_text("<svg/>")
    (tmp_path / "a.json").write_text("{}")
    manifest = write_manifest(tmp_path)
    files = json.loads(manifest.read_text())["files"]
    assert [(f["path"], f["kind"]) for f in files] == [
        ("a.json", "json"),
        ("plots/b.svg", "svg"),
    ]
    assert files[0]["sha256"] == hashlib.sha256(b"{}").hexdigest()
    # Rewriting does not list the manifest itself
    assert write_manifest(tmp_path).read_text() == manifest.read_text()
