"""Empirical models: one outcome distribution per joint input.

Models are immutable. Every row is dense, listing each joint output assignment in
canonical order (zeros included), and all entries share one arithmetic mode.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Any

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from caufrac._yaml_utils import dump_json, load_document
from caufrac.arithmetic import (
    DEFAULT_TOLERANCE,
    Arithmetic,
    Number,
    close,
    format_number,
    mode_of,
    parse_probability,
)
from caufrac.errors import (
    DomainMismatchError,
    NegativeEntryError,
    NormalizationError,
    NotLowersetError,
    SchemaError,
    ShapeError,
)
from caufrac.scenario import Assignment, CausalFunction, CausalScenario, Lowerset

logger = logging.getLogger(__name__)


def join_labels(assignment: Assignment) -> str:
    return ",".join(assignment)


@dataclass(frozen=True)
class Distribution:
    """Probabilities of joint output assignments."""

    support: dict[Assignment, Number]

    def __getitem__(self, outputs: Assignment) -> Number:
        return self.support[outputs]

    @property
    def zero(self) -> Number:
        """Zero in the arithmetic of the entries."""
        return type(next(iter(self.support.values())))(0)

    def total(self) -> Number:
        return sum(self.support.values(), start=self.zero)


@dataclass(frozen=True)
class EmpiricalModel:
    """A family of outcome distributions indexed by joint inputs.

    Build these with `from_table` or `from_rows`, which check that rows are total
    and normalized.
    """

    scenario: CausalScenario
    #: Row per joint input, in canonical input order
    rows: dict[Assignment, Distribution]
    arithmetic: Arithmetic = Arithmetic.rational
    #: Opaque labels carried along for reporting, never read by the numerics
    meta: dict[str, Any] | None = field(default=None, compare=False)
    model_id: str | None = field(default=None, compare=False)

    @property
    def inputs(self) -> list[Assignment]:
        return list(self.rows)

    @cached_property
    def outputs(self) -> list[Assignment]:
        return self.scenario.output_space()

    def row(self, inputs: Assignment) -> Distribution:
        try:
            return self.rows[tuple(inputs)]
        except KeyError:
            raise DomainMismatchError(
                f"{inputs} is not a joint input of events {self.scenario.event_ids}"
            ) from None

    def probability(self, inputs: Assignment, outputs: Assignment) -> Number:
        return self.row(inputs)[tuple(outputs)]

    def table(self) -> list[list[Number]]:
        return [[row[o] for o in self.outputs] for row in self.rows.values()]

    def with_scenario(self, scenario: CausalScenario) -> EmpiricalModel:
        """Reinterpret the same rows on a scenario with identical events."""
        if scenario.events != self.scenario.events:
            raise ShapeError("Scenarios differ in their events or alphabets")
        return replace(self, scenario=scenario)

    def with_order(self, order: Iterable[tuple[str, str]]) -> EmpiricalModel:
        return self.with_scenario(self.scenario.with_order(order))

    @classmethod
    def deserialize(
        cls, path: Path, tolerance: float = DEFAULT_TOLERANCE
    ) -> EmpiricalModel:
        """Load a model from a JSON or YAML document.

        ``tolerance`` is the row sum slack of float models.
        """
        logger.debug("Loading model from %s", path)
        return from_document(
            load_document(path), default_id=path.stem, tolerance=tolerance
        )

    def serialize(self, path: Path) -> None:
        """Write the model to a JSON document."""
        dump_json(to_document(self), path)


def _lowerset_members(
    scenario: CausalScenario, target: Lowerset | Iterable[str]
) -> frozenset[str]:
    members = frozenset(
        target.members if isinstance(target, Lowerset) else target
    )
    if not scenario.is_lowerset(members):
        raise NotLowersetError(
            f"{sorted(members)} is not a lowerset of {list(scenario.order)}"
        )
    return members


def project(
    distribution: Distribution,
    events: Sequence[str],
    target: Iterable[str],
    outputs: Sequence[Assignment],
) -> Distribution:
    """Sum a distribution over the outputs of events outside ``target``.

    Args:
        distribution: Distribution keyed by outputs of ``events``
        events: Event ids the distribution is keyed by, in order
        target: Event ids to keep
        outputs: Joint outputs of the kept events, in the order they should appear

    """
    keep = [k for k, id in enumerate(events) if id in set(target)]
    support = dict.fromkeys(outputs, distribution.zero)
    for assignment, p in distribution.support.items():
        key = tuple(assignment[k] for k in keep)
        support[key] = support[key] + p
    return Distribution(support)


def marginalize(
    model: EmpiricalModel, inputs: Assignment, target: Lowerset | Iterable[str]
) -> Distribution:
    """Marginal distribution of one row on the outputs of a lowerset."""
    members = _lowerset_members(model.scenario, target)
    return project(
        model.row(inputs),
        model.scenario.event_ids,
        members,
        model.scenario.output_space(members),
    )


@dataclass(frozen=True)
class MarginalReport:
    lowerset: Lowerset
    #: Marginals keyed by the inputs on the lowerset, then by the inputs outside it
    per_context: dict[Assignment, dict[Assignment, Distribution]]
    #: Largest disagreement within each group of inputs sharing lowerset inputs
    group_discrepancy: dict[Assignment, Number]
    max_discrepancy: Number
    compatible: bool


def check_compatibility(
    model: EmpiricalModel,
    target: Lowerset | Iterable[str],
    tolerance: float = DEFAULT_TOLERANCE,
) -> MarginalReport:
    """Check that marginals on ``target`` do not depend on inputs outside it."""
    scenario = model.scenario
    members = _lowerset_members(scenario, target)
    inside = [k for k, id in enumerate(scenario.event_ids) if id in members]
    outside = [k for k, id in enumerate(scenario.event_ids) if id not in members]
    outputs = scenario.output_space(members)

    per_context: dict[Assignment, dict[Assignment, Distribution]] = {}
    for inputs in model.inputs:
        on = tuple(inputs[k] for k in inside)
        off = tuple(inputs[k] for k in outside)
        per_context.setdefault(on, {})[off] = marginalize(model, inputs, members)

    zero = model.arithmetic.zero
    group_discrepancy: dict[Assignment, Number] = {}
    for on, contexts in per_context.items():
        worst = zero
        for o in outputs:
            values = [marginal[o] for marginal in contexts.values()]
            worst = max(worst, max(values) - min(values))
        group_discrepancy[on] = worst

    max_discrepancy = max(group_discrepancy.values(), default=zero)
    return MarginalReport(
        lowerset=Lowerset(members=members),
        per_context=per_context,
        group_discrepancy=group_discrepancy,
        max_discrepancy=max_discrepancy,
        compatible=max_discrepancy <= model.arithmetic.tolerance(tolerance),
    )


def from_table(
    scenario: CausalScenario,
    table: Sequence[Sequence[Number | int | str]],
    arithmetic: Arithmetic | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    meta: dict[str, Any] | None = None,
    model_id: str | None = None,
) -> EmpiricalModel:
    """Build a model from a row-major table.

    Rows follow the canonical joint input order and columns the canonical joint
    output order. Without an explicit ``arithmetic`` the model is rational unless
    some entry is a float.
    """
    inputs = scenario.input_space()
    outputs = scenario.output_space()
    if len(table) != len(inputs) or any(len(row) != len(outputs) for row in table):
        raise ShapeError(
            f"Expected a {len(inputs)}x{len(outputs)} table, got "
            f"{len(table)} rows of lengths {sorted({len(row) for row in table})}"
        )

    parsed = [
        [
            parse_probability(p, f"{join_labels(i)} -> {join_labels(o)}")
            for o, p in zip(outputs, row, strict=True)
        ]
        for i, row in zip(inputs, table, strict=True)
    ]
    mode = arithmetic or mode_of(p for row in parsed for p in row)
    slack = mode.tolerance(tolerance)

    rows: dict[Assignment, Distribution] = {}
    for i, row in zip(inputs, parsed, strict=True):
        values = [mode.convert(p) for p in row]
        for o, p in zip(outputs, values, strict=True):
            if p < 0:
                raise NegativeEntryError(
                    f"Negative probability {format_number(p)}",
                    f"{join_labels(i)} -> {join_labels(o)}",
                )
        total = sum(values, start=mode.zero)
        if not close(total, mode.one, slack):
            raise NormalizationError(
                f"Row sums to {format_number(total)}, expected 1", join_labels(i)
            )
        rows[i] = Distribution(dict(zip(outputs, values, strict=True)))

    return EmpiricalModel(scenario, rows, mode, meta=meta, model_id=model_id)


def from_rows(
    scenario: CausalScenario,
    rows: Mapping[str, Mapping[str, Number | int | str]],
    arithmetic: Arithmetic | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    meta: dict[str, Any] | None = None,
    model_id: str | None = None,
) -> EmpiricalModel:
    """Build a model from rows keyed by comma-joined labels.

    Output entries that are left out are zero; every joint input needs a row.
    """
    inputs = {join_labels(i) for i in scenario.input_space()}
    outputs = [join_labels(o) for o in scenario.output_space()]
    missing = sorted(inputs - set(rows))
    if missing:
        raise ShapeError(f"No row for inputs {missing}", missing[0])
    unknown = sorted(set(rows) - inputs)
    if unknown:
        raise ShapeError(f"Unknown inputs {unknown}", unknown[0])

    table: list[list[Number | int | str]] = []
    for i in scenario.input_space():
        row = rows[join_labels(i)]
        extra = sorted(set(row) - set(outputs))
        if extra:
            raise ShapeError(f"Unknown outputs {extra}", join_labels(i))
        table.append([row.get(o, 0) for o in outputs])

    return from_table(scenario, table, arithmetic, tolerance, meta, model_id)


def from_section(scenario: CausalScenario, f: CausalFunction) -> EmpiricalModel:
    """Point distributions on the outputs of a deterministic function."""
    outputs = scenario.output_space()
    table = [[int(f(i) == o) for o in outputs] for i in scenario.input_space()]
    return from_table(scenario, table, Arithmetic.rational)


def from_csv(
    scenario: CausalScenario,
    path: Path,
    arithmetic: Arithmetic | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> EmpiricalModel:
    """Read a table laid out with joint inputs as row labels and joint outputs as
    column labels, e.g. ``"0,1"``.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, index_col=0)
    except (OSError, ValueError) as e:
        raise SchemaError(f"Could not read {path.name}: {e}", str(path)) from None

    rows = {
        str(label): {str(column): value for column, value in row.items()}
        for label, row in frame.iterrows()
    }
    return from_rows(scenario, rows, arithmetic, tolerance, model_id=path.stem)


def to_arithmetic(model: EmpiricalModel, arithmetic: Arithmetic) -> EmpiricalModel:
    if model.arithmetic is arithmetic:
        return model
    rows = {
        i: Distribution({o: arithmetic.convert(p) for o, p in row.support.items()})
        for i, row in model.rows.items()
    }
    return replace(model, rows=rows, arithmetic=arithmetic)


def mix(
    models: Sequence[EmpiricalModel], weights: Sequence[Number | int]
) -> EmpiricalModel:
    """Convex combination of models on the same events."""
    if not models or len(models) != len(weights):
        raise ShapeError("Need one weight per model")
    scenario = models[0].scenario
    if any(model.scenario.events != scenario.events for model in models):
        raise ShapeError("Mixed models must share events and alphabets")

    floating = any(isinstance(w, float) for w in weights) or any(
        model.arithmetic is Arithmetic.floating for model in models
    )
    mode = Arithmetic.floating if floating else Arithmetic.rational
    converted = [mode.convert(w) for w in weights]
    if any(w < 0 for w in converted):
        raise NegativeEntryError("Mixture weights must be nonnegative")
    if not close(sum(converted, start=mode.zero), mode.one, mode.tolerance()):
        raise NormalizationError("Mixture weights must sum to 1")

    table = [
        [
            sum(
                (
                    w * mode.convert(model.probability(i, o))
                    for w, model in zip(converted, models, strict=True)
                ),
                start=mode.zero,
            )
            for o in scenario.output_space()
        ]
        for i in scenario.input_space()
    ]
    return from_table(scenario, table, mode)


def relabel(
    model: EmpiricalModel,
    event: str,
    inputs: Mapping[str, str] | None = None,
    outputs: Mapping[str, str] | None = None,
) -> EmpiricalModel:
    """Permute the input and/or output labels of one event.

    The alphabets keep their order, so the rows and columns of the table move.
    """
    index = model.scenario.index(event)
    spec = model.scenario.event(event)
    input_map = dict(inputs or {})
    output_map = dict(outputs or {})
    for mapping, alphabet in ((input_map, spec.inputs), (output_map, spec.outputs)):
        for label in alphabet:
            mapping.setdefault(label, label)
        if sorted(mapping.values()) != sorted(alphabet) or set(mapping) != set(
            alphabet
        ):
            raise ShapeError(f"{mapping} is not a permutation of {alphabet}", event)

    def move(assignment: Assignment, mapping: dict[str, str]) -> Assignment:
        moved = list(assignment)
        moved[index] = mapping[moved[index]]
        return tuple(moved)

    rows = {
        move(i, input_map): Distribution(
            {move(o, output_map): p for o, p in row.support.items()}
        )
        for i, row in model.rows.items()
    }
    table = [
        [rows[i][o] for o in model.outputs] for i in model.scenario.input_space()
    ]
    return from_table(model.scenario, table, model.arithmetic, meta=model.meta)


class ModelDocument(BaseModel):
    """On-disk form of an empirical model."""

    model_config = ConfigDict(extra="forbid", protected_namespaces=())

    model_id: str | None = Field(
        default=None, description="Identifier, defaults to the file stem"
    )
    scenario: CausalScenario
    rows: dict[str, dict[str, str | int | float]] = Field(
        description='Row per joint input, e.g. {"0,1": {"0,0": "6/13", ...}}'
    )
    meta: dict[str, Any] | None = Field(
        default=None, description="Free-form labels, e.g. phrase ambiguity tags"
    )


def from_document(
    document: dict[str, Any],
    default_id: str | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> EmpiricalModel:
    try:
        parsed = ModelDocument.model_validate(document)
    except ValidationError as e:
        error = e.errors()[0]
        raise SchemaError(
            f"Invalid model document: {error['msg']}",
            ".".join(str(part) for part in error["loc"]),
        ) from None

    return from_rows(
        parsed.scenario,
        parsed.rows,
        tolerance=tolerance,
        meta=parsed.meta,
        model_id=parsed.model_id or default_id,
    )


def to_document(model: EmpiricalModel) -> dict[str, Any]:
    document = ModelDocument(
        model_id=model.model_id,
        scenario=model.scenario,
        rows={
            join_labels(i): {
                join_labels(o): format_number(p) for o, p in row.support.items()
            }
            for i, row in model.rows.items()
        },
        meta=model.meta,
    )
    return document.model_dump(mode="json", exclude_none=True)
