from fractions import Fraction as F
from pathlib import Path

import pytest

from caufrac.arithmetic import Arithmetic
from caufrac.empirical import from_table
from caufrac.errors import (
    CellMismatchError,
    DegenerateError,
    DuplicateLabelError,
    MissingCombinationError,
    MissingMetaError,
    SchemaError,
    TypeMixError,
    UnresolvedPhraseError,
)
from caufrac.linguistics import (
    AnnotationRecord,
    BellModelSpec,
    PhraseDistribution,
    PhraseType,
    TableKind,
    aggregate_phrases,
    aggregate_scores,
    ambiguity_counts,
    build_bell_model,
    build_models,
    load_annotations,
    load_phrases,
    load_specs,
    phrase_type_of,
    sniff_table,
)

INPUT = Path(__file__).parent / "pipeline" / "input"


def scores(phrase_id: str, worker_id: str, *values: int) -> list[AnnotationRecord]:
    return [
        AnnotationRecord(
            worker_id=worker_id, phrase_id=phrase_id, combination_id=c, score=score
        )
        for c, score in enumerate(values, start=1)
    ]


@pytest.fixture
def phrases():
    return load_phrases(INPUT / "phrases.csv")


@pytest.fixture
def specs():
    return {spec.model_id: spec for spec in load_specs(INPUT / "specs.csv")}


def test_single_annotator():
    distribution = aggregate_scores(scores("sv1", "w1", 0, 5, 6, 5))
    assert distribution.probs == (0, F(5, 16), F(6, 16), F(5, 16))
    assert distribution.n_annotators == 1


def test_equal_scores_give_uniform_distribution():
    distribution = aggregate_scores(scores("sv1", "w1", 7, 7, 7, 7))
    assert distribution.probs == (F(1, 4),) * 4


def test_scores_are_averaged_per_combination():
    records = scores("sv1", "w1", 6, 2, 0, 0) + scores("sv1", "w2", 2, 6, 0, 0)
    distribution = aggregate_scores(records)
    assert distribution.probs == (F(1, 2), F(1, 2), 0, 0)
    assert distribution.n_annotators == 2


def test_uneven_annotators_per_combination():
    # w2 only scored the first combination
    records = scores("sv1", "w1", 2, 2, 2, 2) + scores("sv1", "w2", 6)
    assert aggregate_scores(records).probs == (F(4, 10), F(2, 10), F(2, 10), F(2, 10))


def test_float_aggregation():
    distribution = aggregate_scores(
        scores("sv1", "w1", 0, 5, 6, 5), arithmetic=Arithmetic.floating
    )
    assert distribution.probs == pytest.approx((0, 5 / 16, 6 / 16, 5 / 16))
    assert all(isinstance(p, float) for p in distribution.probs)


def test_missing_combination():
    with pytest.raises(MissingCombinationError) as excinfo:
        aggregate_scores(scores("sv1", "w1", 1, 2, 3))
    assert excinfo.value.location == "sv1"


def test_all_zero_scores():
    with pytest.raises(DegenerateError):
        aggregate_scores(scores("sv1", "w1", 0, 0, 0, 0))


def test_records_of_several_phrases():
    with pytest.raises(SchemaError):
        aggregate_scores(scores("sv1", "w1", 1, 1, 1, 1) + scores("sv2", "w1", 1))


def test_drop_neutral():
    records = scores("sv1", "w1", 4, 4, 4, 4) + scores("sv1", "w2", 7, 1, 1, 1)
    kept = aggregate_scores(records)
    assert kept.probs == (F(11, 26), F(5, 26), F(5, 26), F(5, 26))
    dropped = aggregate_scores(records, drop_neutral=True)
    assert dropped.probs == (F(7, 10), F(1, 10), F(1, 10), F(1, 10))
    assert dropped.n_annotators == 1


def test_drop_neutral_can_empty_a_combination():
    records = scores("sv1", "w1", 4, 3, 3, 3)
    with pytest.raises(MissingCombinationError):
        aggregate_scores(records, drop_neutral=True)


def test_aggregate_phrases_reports_failures():
    records = scores("sv1", "w1", 1, 2, 3, 4) + scores("sv2", "w1", 0, 0, 0, 0)
    distributions, failures = aggregate_phrases(records)
    assert list(distributions) == ["sv1"]
    assert failures["sv2"].startswith("DegenerateError")


def distributions(*phrase_ids: str, probs=(F(1, 4),) * 4):
    return {
        phrase_id: PhraseDistribution(phrase_id, probs, 1) for phrase_id in phrase_ids
    }


def test_build_model(phrases, specs):
    dists = distributions("sv1", "sv2", "sv3", "sv4")
    model = build_bell_model(specs["sv_plant_paper"], phrases, dists)
    assert model.model_id == "sv_plant_paper"
    assert model.scenario.event_ids == ("S", "V")
    assert model.scenario.event("S").inputs == ("plant", "paper")
    assert model.scenario.event("V").inputs == ("bore", "launch")
    assert model.scenario.order == ()
    assert model.meta == {
        "phrase_type": "subject_verb",
        "nouns": {"plant": "homonymous", "paper": "polysemous"},
        "verbs": {"bore": "homonymous", "launch": "polysemous"},
        "cells": {"00": "sv1", "01": "sv2", "10": "sv3", "11": "sv4"},
    }
    assert phrase_type_of(model) is PhraseType.subject_verb


def test_verb_object_model_puts_verb_first(phrases, specs):
    dists = distributions("vo1", "vo2", "vo3", "vo4")
    model = build_bell_model(specs["vo_bore_launch"], phrases, dists)
    assert model.scenario.event_ids == ("V", "O")
    assert model.scenario.event("V").inputs == ("bore", "launch")
    assert model.scenario.event("O").inputs == ("plant", "paper")


def test_float_distribution_is_kept(phrases, specs):
    dists = distributions("sv1", "sv3", "sv4", probs=(0.25,) * 4)
    dists["sv2"] = PhraseDistribution("sv2", (0.21, 0.13, 0.51, 0.15), 3)
    model = build_bell_model(
        specs["sv_plant_paper"], phrases, dists, Arithmetic.floating
    )
    assert model.arithmetic is Arithmetic.floating
    row = model.row(("plant", "launch"))
    assert [row[o] for o in model.outputs] == [0.21, 0.13, 0.51, 0.15]


def test_phrase_of_other_type(phrases):
    spec = BellModelSpec(
        model_id="mixed",
        phrase_type=PhraseType.verb_object,
        cell_phrase_ids={"00": "vo1", "01": "vo2", "10": "vo3", "11": "sv4"},
    )
    with pytest.raises(TypeMixError) as excinfo:
        spec.word_pairs(phrases)
    assert excinfo.value.location == "mixed.cell_11"


def test_unknown_phrase(phrases):
    spec = BellModelSpec(
        model_id="missing",
        phrase_type=PhraseType.subject_verb,
        cell_phrase_ids={"00": "sv1", "01": "sv2", "10": "sv3", "11": "sv9"},
    )
    with pytest.raises(UnresolvedPhraseError):
        spec.word_pairs(phrases)


def test_cells_must_share_words(phrases):
    spec = BellModelSpec(
        model_id="swapped",
        phrase_type=PhraseType.subject_verb,
        cell_phrase_ids={"00": "sv1", "01": "sv2", "10": "sv4", "11": "sv3"},
    )
    with pytest.raises(CellMismatchError) as excinfo:
        spec.word_pairs(phrases)
    assert excinfo.value.location == "swapped.cell_10"


def test_cells_must_use_two_words_per_event(phrases):
    spec = BellModelSpec(
        model_id="repeated",
        phrase_type=PhraseType.subject_verb,
        cell_phrase_ids={"00": "sv1", "01": "sv2", "10": "sv1", "11": "sv2"},
    )
    with pytest.raises(CellMismatchError):
        spec.word_pairs(phrases)


def test_phrase_without_scores(phrases, specs):
    with pytest.raises(UnresolvedPhraseError):
        build_bell_model(specs["sv_plant_paper"], phrases, distributions("sv1"))


def test_ambiguity_counts(phrases, specs):
    dists = distributions("sv1", "sv2", "sv3", "sv4")
    counts = ambiguity_counts(build_bell_model(specs["sv_plant_paper"], phrases, dists))
    assert (
        counts.noun_homonymous,
        counts.verb_homonymous,
        counts.noun_polysemous,
        counts.verb_polysemous,
    ) == (1, 1, 1, 1)
    assert counts.homonymous == counts.polysemous == 2


def test_ambiguity_counts_need_meta(phrases, specs):
    model = build_bell_model(
        specs["vo_bore_launch"], phrases, distributions("vo1", "vo2", "vo3", "vo4")
    )
    bare = from_table(model.scenario, model.table())
    with pytest.raises(MissingMetaError):
        ambiguity_counts(bare)
    assert phrase_type_of(bare) is None


def test_load_survey_tables(phrases, specs):
    assert len(phrases) == 8
    assert phrases["vo3"].sense_glosses[0] == "set off the factory"
    assert phrases["vo3"].words == ("launch", "plant")
    assert list(specs) == ["vo_bore_launch", "sv_plant_paper"]
    records = load_annotations(INPUT / "annotations.csv")
    assert len(records) == 48
    assert records[0] == AnnotationRecord(
        worker_id="w1", phrase_id="sv1", combination_id=1, score=0
    )


def test_bad_annotation_row(tmp_path):
    path = tmp_path / "annotations.csv"
    path.write_text(
        "worker_id,phrase_id,combination_id,score\nw1,sv1,1,3\nw1,sv1,2,9\n"
    )
    with pytest.raises(SchemaError) as excinfo:
        load_annotations(path)
    assert excinfo.value.location == f"{path}:3"
    assert "score" in excinfo.value.message


def test_missing_column(tmp_path):
    path = tmp_path / "annotations.csv"
    path.write_text("worker_id,phrase_id,score\nw1,sv1,3\n")
    with pytest.raises(SchemaError) as excinfo:
        load_annotations(path)
    assert excinfo.value.location == f"{path}:1"


def test_empty_annotations(tmp_path):
    path = tmp_path / "annotations.csv"
    path.write_text("worker_id,phrase_id,combination_id,score\n")
    with pytest.raises(SchemaError):
        load_annotations(path)


def test_missing_file(tmp_path):
    with pytest.raises(SchemaError):
        load_phrases(tmp_path / "phrases.csv")


def test_repeated_phrase(tmp_path):
    lines = (INPUT / "phrases.csv").read_text().splitlines()
    path = tmp_path / "phrases.csv"
    path.write_text("\n".join([*lines, lines[1]]) + "\n")
    with pytest.raises(DuplicateLabelError) as excinfo:
        load_phrases(path)
    assert excinfo.value.location == f"{path}:10"


def test_unknown_phrase_type(tmp_path):
    path = tmp_path / "specs.csv"
    path.write_text(
        "model_id,phrase_type,cell_00,cell_01,cell_10,cell_11\n"
        "m,adjective_noun,a,b,c,d\n"
    )
    with pytest.raises(SchemaError) as excinfo:
        load_specs(path)
    assert excinfo.value.location == f"{path}:2"


@pytest.mark.parametrize(
    "name,kind",
    [
        ("annotations.csv", TableKind.annotations),
        ("phrases.csv", TableKind.phrases),
        ("specs.csv", TableKind.specs),
    ],
)
def test_sniff_table(name, kind):
    assert sniff_table(INPUT / name) is kind


def test_sniff_unknown_table(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(SchemaError):
        sniff_table(path)


def test_build_models(phrases, specs):
    records = load_annotations(INPUT / "annotations.csv")
    models, skips = build_models(list(specs.values()), phrases, records)
    assert [model.model_id for model in models] == ["sv_plant_paper", "vo_bore_launch"]
    assert skips == []
    first = models[0].row(("plant", "bore"))
    assert [first[o] for o in models[0].outputs] == [0, F(1, 7), 0, F(6, 7)]


def test_build_models_skips_phrases_without_scores(phrases, specs):
    records = [
        record
        for record in load_annotations(INPUT / "annotations.csv")
        if not (record.phrase_id == "sv3" and record.combination_id == 2)
    ]
    models, skips = build_models(list(specs.values()), phrases, records)
    assert [model.model_id for model in models] == ["vo_bore_launch"]
    assert [skip.model_id for skip in skips] == ["sv_plant_paper"]
    assert "sv3" in skips[0].reason
    assert "MissingCombinationError" in skips[0].reason


def test_build_models_rejects_bad_specs(phrases):
    spec = BellModelSpec(
        model_id="missing",
        phrase_type=PhraseType.subject_verb,
        cell_phrase_ids={"00": "sv1", "01": "sv2", "10": "sv3", "11": "sv9"},
    )
    with pytest.raises(UnresolvedPhraseError):
        build_models([spec], phrases, scores("sv1", "w1", 1, 1, 1, 1))
