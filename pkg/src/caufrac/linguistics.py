"""Empirical models of two-word phrases from crowdsourced plausibility scores.

Annotators score each of the four sense combinations of a phrase on an eight
grade scale. Scores are averaged per combination and normalized to a distribution,
and four phrases that share their words crosswise form one model: an event per
word position whose input is the word and whose output is its sense.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, TypeVar

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from caufrac.arithmetic import Arithmetic, Number
from caufrac.empirical import EmpiricalModel, from_table
from caufrac.errors import (
    CellMismatchError,
    DegenerateError,
    DuplicateLabelError,
    InputError,
    MissingCombinationError,
    MissingMetaError,
    SchemaError,
    TypeMixError,
    UnresolvedPhraseError,
)
from caufrac.scenario import CausalScenario, Event

logger = logging.getLogger(__name__)

COMBINATIONS = (1, 2, 3, 4)
NEUTRAL_SCORE = 4
SENSES = ("0", "1")
CELLS = ("00", "01", "10", "11")


class PhraseType(str, Enum):
    subject_verb = "subject_verb"
    verb_object = "verb_object"

    @property
    def event_ids(self) -> tuple[str, str]:
        """Events of the first and second word of the phrase."""
        match self:
            case PhraseType.subject_verb:
                return ("S", "V")
            case PhraseType.verb_object:
                return ("V", "O")


class Ambiguity(str, Enum):
    #: Unrelated meanings, e.g. a factory plant and a potted plant
    homonymous = "homonymous"
    #: Related senses, e.g. paper as material and paper as newspaper
    polysemous = "polysemous"


class AnnotationRecord(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    worker_id: str
    phrase_id: str
    combination_id: int = Field(ge=1, le=4, description="Sense combination 1-4")
    score: int = Field(ge=0, le=7, description="Grade on the 8 point scale")


class PhraseEntry(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    phrase_id: str
    phrase_type: PhraseType
    noun: str
    verb: str
    noun_ambiguity: Ambiguity
    verb_ambiguity: Ambiguity
    sense_glosses: tuple[str, str, str, str] = Field(
        description="Description of each sense combination"
    )

    @property
    def words(self) -> tuple[str, str]:
        """The phrase's words in event order."""
        match self.phrase_type:
            case PhraseType.subject_verb:
                return (self.noun, self.verb)
            case PhraseType.verb_object:
                return (self.verb, self.noun)


@dataclass(frozen=True)
class PhraseDistribution:
    phrase_id: str
    #: Probability of each combination, in combination order
    probs: tuple[Number, Number, Number, Number]
    n_annotators: int


class BellModelSpec(BaseModel):
    """Four phrases arranged as the cells of a two event model.

    Cell ``"ab"`` holds the phrase made of word ``a`` of the first event and word
    ``b`` of the second.
    """

    model_config = ConfigDict(frozen=True, extra="forbid", protected_namespaces=())

    model_id: str
    phrase_type: PhraseType
    cell_phrase_ids: dict[str, str] = Field(
        description="Phrase id per cell, keyed 00, 01, 10 and 11"
    )

    def word_pairs(
        self, phrases: Mapping[str, PhraseEntry]
    ) -> tuple[tuple[str, str], tuple[str, str]]:
        """Words of the first and second event, read from the cells.

        Raises:
            UnresolvedPhraseError: If a cell names an unknown phrase
            TypeMixError: If a cell phrase has another phrase type
            CellMismatchError: If the cells do not share their words crosswise

        """
        words: dict[str, tuple[str, str]] = {}
        for cell in CELLS:
            phrase = _resolve(self, cell, phrases)
            words[cell] = phrase.words

        first = (words["00"][0], words["10"][0])
        second = (words["00"][1], words["01"][1])
        for cell in CELLS:
            expected = (first[int(cell[0])], second[int(cell[1])])
            if words[cell] != expected:
                raise CellMismatchError(
                    f"Cell {cell} holds '{' '.join(words[cell])}', expected "
                    f"'{' '.join(expected)}'",
                    f"{self.model_id}.cell_{cell}",
                )
        if first[0] == first[1] or second[0] == second[1]:
            raise CellMismatchError(
                f"Cells repeat a word: {first}, {second}", self.model_id
            )

        return first, second


def _resolve(
    spec: BellModelSpec, cell: str, phrases: Mapping[str, PhraseEntry]
) -> PhraseEntry:
    location = f"{spec.model_id}.cell_{cell}"
    try:
        phrase_id = spec.cell_phrase_ids[cell]
    except KeyError:
        raise SchemaError(f"No phrase for cell {cell}", location) from None
    try:
        phrase = phrases[phrase_id]
    except KeyError:
        raise UnresolvedPhraseError(
            f"Unknown phrase '{phrase_id}'", location
        ) from None
    if phrase.phrase_type is not spec.phrase_type:
        raise TypeMixError(
            f"Phrase '{phrase_id}' is {phrase.phrase_type.value}, model is "
            f"{spec.phrase_type.value}",
            location,
        )
    return phrase


def aggregate_scores(
    records: Sequence[AnnotationRecord],
    drop_neutral: bool = False,
    arithmetic: Arithmetic = Arithmetic.rational,
) -> PhraseDistribution:
    """Average the scores of each combination and normalize the averages.

    Args:
        records: Scores for a single phrase
        drop_neutral: Leave out records with the middle grade
        arithmetic: Arithmetic of the resulting probabilities

    """
    phrase_ids = {record.phrase_id for record in records}
    if len(phrase_ids) != 1:
        raise SchemaError(f"Expected records of one phrase, got {sorted(phrase_ids)}")
    (phrase_id,) = phrase_ids

    kept = [
        record
        for record in records
        if not (drop_neutral and record.score == NEUTRAL_SCORE)
    ]
    scores: dict[int, list[int]] = {c: [] for c in COMBINATIONS}
    for record in kept:
        scores[record.combination_id].append(record.score)

    missing = [c for c in COMBINATIONS if not scores[c]]
    if missing:
        raise MissingCombinationError(
            f"No scores for combinations {missing}", phrase_id
        )

    means = [Fraction(sum(scores[c]), len(scores[c])) for c in COMBINATIONS]
    total = sum(means)
    if total == 0:
        raise DegenerateError("Every combination has a mean score of 0", phrase_id)

    probs = tuple(arithmetic.convert(mean / total) for mean in means)
    return PhraseDistribution(
        phrase_id=phrase_id,
        probs=probs,  # type: ignore
        n_annotators=len({record.worker_id for record in kept}),
    )


def aggregate_phrases(
    records: Iterable[AnnotationRecord],
    drop_neutral: bool = False,
    arithmetic: Arithmetic = Arithmetic.rational,
) -> tuple[dict[str, PhraseDistribution], dict[str, str]]:
    """Aggregate the scores of every phrase.

    Returns:
        Distributions by phrase id, and the reason for each phrase that could not
        be aggregated

    """
    grouped: dict[str, list[AnnotationRecord]] = {}
    for record in records:
        grouped.setdefault(record.phrase_id, []).append(record)

    distributions: dict[str, PhraseDistribution] = {}
    failures: dict[str, str] = {}
    for phrase_id in sorted(grouped):
        try:
            distributions[phrase_id] = aggregate_scores(
                grouped[phrase_id], drop_neutral, arithmetic
            )
        except (MissingCombinationError, DegenerateError) as e:
            logger.warning("Skipping phrase %s: %s", phrase_id, e)
            failures[phrase_id] = f"{type(e).__name__}: {e}"

    return distributions, failures


def build_bell_model(
    spec: BellModelSpec,
    phrases: Mapping[str, PhraseEntry],
    dists: Mapping[str, PhraseDistribution],
    arithmetic: Arithmetic = Arithmetic.rational,
) -> EmpiricalModel:
    """Model whose row for the words of a cell is the distribution of its phrase.

    The model declares no order between its events; meta records the phrase type,
    the ambiguity of each word and the phrase in each cell.
    """
    first, second = spec.word_pairs(phrases)
    first_id, second_id = spec.phrase_type.event_ids
    scenario = CausalScenario(
        events=(
            Event(id=first_id, inputs=first, outputs=SENSES),
            Event(id=second_id, inputs=second, outputs=SENSES),
        )
    )

    table = []
    nouns: dict[str, str] = {}
    verbs: dict[str, str] = {}
    for cell in CELLS:
        phrase = phrases[spec.cell_phrase_ids[cell]]
        try:
            distribution = dists[phrase.phrase_id]
        except KeyError:
            raise UnresolvedPhraseError(
                f"No scores for phrase '{phrase.phrase_id}'",
                f"{spec.model_id}.cell_{cell}",
            ) from None
        table.append([arithmetic.convert(p) for p in distribution.probs])
        for labels, word, ambiguity in (
            (nouns, phrase.noun, phrase.noun_ambiguity),
            (verbs, phrase.verb, phrase.verb_ambiguity),
        ):
            if labels.setdefault(word, ambiguity.value) != ambiguity.value:
                raise CellMismatchError(
                    f"'{word}' is labelled both {labels[word]} and {ambiguity.value}",
                    f"{spec.model_id}.cell_{cell}",
                )

    meta = {
        "phrase_type": spec.phrase_type.value,
        "nouns": nouns,
        "verbs": verbs,
        "cells": {cell: spec.cell_phrase_ids[cell] for cell in CELLS},
    }
    return from_table(scenario, table, arithmetic, meta=meta, model_id=spec.model_id)


@dataclass(frozen=True)
class AmbiguityCounts:
    noun_homonymous: int
    verb_homonymous: int
    noun_polysemous: int
    verb_polysemous: int

    @property
    def homonymous(self) -> int:
        return self.noun_homonymous + self.verb_homonymous

    @property
    def polysemous(self) -> int:
        return self.noun_polysemous + self.verb_polysemous


def ambiguity_counts(model: EmpiricalModel) -> AmbiguityCounts:
    """Count homonymous and polysemous words per role from the model's meta.

    Raises:
        MissingMetaError: If the model carries no ambiguity labels

    """
    meta = model.meta or {}
    counts: dict[str, int] = {}
    for role in ("nouns", "verbs"):
        labels = meta.get(role)
        if not isinstance(labels, dict) or not labels:
            raise MissingMetaError(
                f"Model has no ambiguity labels for {role}", model.model_id
            )
        for ambiguity in Ambiguity:
            counts[f"{role[:-1]}_{ambiguity.value}"] = sum(
                label == ambiguity.value for label in labels.values()
            )

    return AmbiguityCounts(**counts)


def phrase_type_of(model: EmpiricalModel) -> PhraseType | None:
    try:
        return PhraseType((model.meta or {}).get("phrase_type"))
    except ValueError:
        return None


T = TypeVar("T", bound=BaseModel)


def _read_records(
    path: Path, columns: Sequence[str]
) -> list[tuple[int, dict[str, Any]]]:
    """Rows of a CSV file with their line numbers, every value as a string."""
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except FileNotFoundError:
        raise SchemaError(f"No such file: {path}", str(path)) from None
    except (OSError, ValueError) as e:
        raise SchemaError(f"Could not read {path.name}: {e}", str(path)) from None

    missing = [column for column in columns if column not in frame.columns]
    if missing:
        raise SchemaError(f"Missing columns {missing}", f"{path}:1")

    # Line 1 is the header
    return [
        (line, {column: row[column] for column in columns})
        for line, (_, row) in enumerate(frame.iterrows(), start=2)
    ]


def _validate(cls: type[T], fields: dict[str, Any], location: str) -> T:
    try:
        return cls.model_validate(fields)
    except ValidationError as e:
        error = e.errors()[0]
        field = ".".join(str(part) for part in error["loc"])
        raise SchemaError(f"{field}: {error['msg']}", location) from None
    except InputError as e:
        raise type(e)(e.message, location) from None


def load_annotations(path: Path) -> list[AnnotationRecord]:
    """Read ``worker_id,phrase_id,combination_id,score`` records."""
    columns = list(AnnotationRecord.model_fields)
    records = [
        _validate(AnnotationRecord, fields, f"{path}:{line}")
        for line, fields in _read_records(path, columns)
    ]
    if not records:
        raise SchemaError("No annotation records", str(path))
    return records


def load_phrases(path: Path) -> dict[str, PhraseEntry]:
    """Read phrase entries keyed by phrase id, glosses in columns gloss1-gloss4."""
    glosses = [f"gloss{c}" for c in COMBINATIONS]
    columns = [
        "phrase_id",
        "phrase_type",
        "noun",
        "verb",
        "noun_ambiguity",
        "verb_ambiguity",
        *glosses,
    ]
    phrases: dict[str, PhraseEntry] = {}
    for line, fields in _read_records(path, columns):
        location = f"{path}:{line}"
        fields["sense_glosses"] = tuple(fields.pop(gloss) for gloss in glosses)
        phrase = _validate(PhraseEntry, fields, location)
        if phrase.phrase_id in phrases:
            raise DuplicateLabelError(
                f"Phrase '{phrase.phrase_id}' is listed twice", location
            )
        phrases[phrase.phrase_id] = phrase

    return phrases


def load_specs(path: Path) -> list[BellModelSpec]:
    """Read ``model_id,phrase_type,cell_00,cell_01,cell_10,cell_11`` rows."""
    columns = ["model_id", "phrase_type", *(f"cell_{cell}" for cell in CELLS)]
    specs: list[BellModelSpec] = []
    seen: set[str] = set()
    for line, fields in _read_records(path, columns):
        location = f"{path}:{line}"
        fields["cell_phrase_ids"] = {cell: fields.pop(f"cell_{cell}") for cell in CELLS}
        spec = _validate(BellModelSpec, fields, location)
        if spec.model_id in seen:
            raise DuplicateLabelError(
                f"Model '{spec.model_id}' is listed twice", location
            )
        seen.add(spec.model_id)
        specs.append(spec)

    return specs


@dataclass(frozen=True)
class Skip:
    """A model left out of a run, with the reason."""

    model_id: str
    reason: str


def build_models(
    specs: Sequence[BellModelSpec],
    phrases: Mapping[str, PhraseEntry],
    records: Iterable[AnnotationRecord],
    drop_neutral: bool = False,
    arithmetic: Arithmetic = Arithmetic.rational,
) -> tuple[list[EmpiricalModel], list[Skip]]:
    """Aggregate the scores and build a model per spec.

    Models that use a phrase whose scores could not be aggregated are skipped;
    any other problem with the inputs is raised.
    """
    for spec in specs:
        spec.word_pairs(phrases)

    distributions, failures = aggregate_phrases(records, drop_neutral, arithmetic)

    models: list[EmpiricalModel] = []
    skips: list[Skip] = []
    for spec in sorted(specs, key=lambda spec: spec.model_id):
        failed = [
            f"{phrase_id}: {failures[phrase_id]}"
            for phrase_id in spec.cell_phrase_ids.values()
            if phrase_id in failures
        ]
        if failed:
            logger.warning("Skipping model %s: %s", spec.model_id, "; ".join(failed))
            skips.append(Skip(spec.model_id, "; ".join(failed)))
            continue
        models.append(build_bell_model(spec, phrases, distributions, arithmetic))

    return models, skips


class TableKind(str, Enum):
    annotations = "annotations"
    phrases = "phrases"
    specs = "specs"


def sniff_table(path: Path) -> TableKind:
    """Tell survey CSV files apart by their header."""
    try:
        columns = set(pd.read_csv(path, nrows=0).columns)
    except (OSError, ValueError) as e:
        raise SchemaError(f"Could not read {path.name}: {e}", str(path)) from None

    if "worker_id" in columns:
        return TableKind.annotations
    if "gloss1" in columns:
        return TableKind.phrases
    if "cell_00" in columns:
        return TableKind.specs
    raise SchemaError(
        f"Header {sorted(columns)} is not an annotation, phrase or spec table",
        f"{path}:1",
    )
