"""Causal scenarios and the sections of their event sheaf.

A scenario is a finite poset of events, each with an input and an output alphabet.
Joint assignments are always tuples listed in the scenario's declared event order,
so tables built from the same scenario compare equal element for element.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations, product
from math import prod
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from typing_extensions import Self

from caufrac.errors import (
    CycleError,
    DomainMismatchError,
    DuplicateLabelError,
    EmptyAlphabetError,
    NotBelowError,
    NotLowersetError,
    SchemaError,
    SizeLimitError,
    UnknownEventError,
)

Assignment = tuple[str, ...]

DEFAULT_SECTION_CAP = 10**6


class Event(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    id: str = Field(description="Short label of the event, e.g. A, S or V")
    inputs: tuple[str, ...] = Field(description="Ordered input alphabet")
    outputs: tuple[str, ...] = Field(description="Ordered output alphabet")

    @model_validator(mode="after")
    def _check_alphabets(self) -> Self:
        for name, alphabet in (("inputs", self.inputs), ("outputs", self.outputs)):
            location = f"{self.id}.{name}"
            if not alphabet:
                raise EmptyAlphabetError(
                    f"Event '{self.id}' has an empty {name} alphabet", location
                )
            if len(set(alphabet)) != len(alphabet):
                raise DuplicateLabelError(
                    f"Event '{self.id}' repeats a label in {alphabet}", location
                )
            if any("," in label for label in alphabet):
                # Commas join labels in document keys
                raise SchemaError(f"Labels may not contain ',': {alphabet}", location)

        return self


def _find_cycle(
    ids: Iterable[str], order: Iterable[tuple[str, str]]
) -> list[str] | None:
    successors: dict[str, list[str]] = {id: [] for id in ids}
    for before, after in order:
        if before != after:
            successors[before].append(after)

    visited: set[str] = set()
    path: list[str] = []

    def visit(node: str) -> list[str] | None:
        path.append(node)
        for successor in successors[node]:
            if successor in path:
                return path[path.index(successor) :] + [successor]
            if successor not in visited:
                cycle = visit(successor)
                if cycle is not None:
                    return cycle
        path.pop()
        visited.add(node)
        return None

    for id in successors:
        if id not in visited:
            cycle = visit(id)
            if cycle is not None:
                return cycle

    return None


class CausalScenario(BaseModel):
    """Events with their alphabets and the order between them.

    `order` holds directed pairs ``(before, after)``; only the reflexive-transitive
    closure matters, so covering pairs are enough.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    events: tuple[Event, ...] = Field(description="Events in declared order")
    order: tuple[tuple[str, str], ...] = Field(
        default=(), description="Directed pairs (before, after) between event ids"
    )

    @model_validator(mode="after")
    def _check_order(self) -> Self:
        ids = [event.id for event in self.events]
        if len(set(ids)) != len(ids):
            raise DuplicateLabelError(f"Event ids are not unique: {ids}", "events")

        for pair in self.order:
            for id in pair:
                if id not in ids:
                    raise UnknownEventError(
                        f"Order refers to undeclared event '{id}'", f"order.{pair}"
                    )

        cycle = _find_cycle(ids, self.order)
        if cycle is not None:
            raise CycleError(
                "Order is not a partial order, it contains the cycle "
                + " -> ".join(cycle),
                "order",
            )

        return self

    @cached_property
    def event_ids(self) -> tuple[str, ...]:
        return tuple(event.id for event in self.events)

    @cached_property
    def closure(self) -> dict[str, frozenset[str]]:
        predecessors: dict[str, set[str]] = {id: set() for id in self.event_ids}
        for before, after in self.order:
            predecessors[after].add(before)

        down_sets: dict[str, frozenset[str]] = {}
        for id in self.event_ids:
            seen = {id}
            stack = [id]
            while stack:
                for before in predecessors[stack.pop()]:
                    if before not in seen:
                        seen.add(before)
                        stack.append(before)
            down_sets[id] = frozenset(seen)

        return down_sets

    def event(self, id: str) -> Event:
        for event in self.events:
            if event.id == id:
                return event

        raise UnknownEventError(f"No event '{id}' in scenario {self.event_ids}")

    def index(self, id: str) -> int:
        self.event(id)
        return self.event_ids.index(id)

    def down_set(self, id: str) -> frozenset[str]:
        """Events at or below ``id``."""
        self.event(id)
        return self.closure[id]

    def leq(self, lower: str, upper: str) -> bool:
        return lower in self.down_set(upper)

    def sort_ids(self, ids: Iterable[str]) -> tuple[str, ...]:
        """Put event ids into declared order."""
        members = set(ids)
        for id in members:
            self.event(id)
        return tuple(id for id in self.event_ids if id in members)

    def is_lowerset(self, ids: Iterable[str]) -> bool:
        members = set(ids)
        return all(self.down_set(id) <= members for id in members)

    def lowerset(self, ids: Iterable[str]) -> Lowerset:
        members = frozenset(ids)
        if not self.is_lowerset(members):
            raise NotLowersetError(
                f"{sorted(members)} is not downward closed under {list(self.order)}"
            )
        return Lowerset(members=members)

    def input_space(self, ids: Iterable[str] | None = None) -> list[Assignment]:
        """Joint input assignments of the given events (all by default)."""
        selected = self.event_ids if ids is None else self.sort_ids(ids)
        return list(product(*(self.event(id).inputs for id in selected)))

    def output_space(self, ids: Iterable[str] | None = None) -> list[Assignment]:
        """Joint output assignments of the given events (all by default)."""
        selected = self.event_ids if ids is None else self.sort_ids(ids)
        return list(product(*(self.event(id).outputs for id in selected)))

    def with_order(self, order: Iterable[tuple[str, str]]) -> CausalScenario:
        """The same events under another order."""
        return CausalScenario(events=self.events, order=tuple(order))

    def locale_element(
        self,
        ids: Iterable[str] | None = None,
        inputs: Mapping[str, Iterable[str]] | None = None,
    ) -> LocaleElement:
        """Build a validated locale element.

        Args:
            ids: Events of the lowerset, all events by default
            inputs: Input restriction per event, the full alphabet when omitted

        """
        lowerset = self.lowerset(self.event_ids if ids is None else ids)
        inputs = inputs or {}
        restriction: dict[str, tuple[str, ...]] = {}
        for id in self.sort_ids(lowerset.members):
            alphabet = self.event(id).inputs
            chosen = set(inputs.get(id, alphabet))
            if not chosen <= set(alphabet):
                raise DomainMismatchError(
                    f"Inputs {sorted(chosen)} are not all in {alphabet}", id
                )
            restriction[id] = tuple(label for label in alphabet if label in chosen)

        unknown = set(inputs) - lowerset.members
        if unknown:
            raise DomainMismatchError(
                f"Input restriction for events outside the lowerset: {sorted(unknown)}"
            )

        return LocaleElement(lowerset=lowerset, input_restriction=restriction)


def scenario_from_document(document: dict[str, Any]) -> CausalScenario:
    """Validate a scenario document, e.g. ``{"events": [...], "order": [...]}``."""
    try:
        return CausalScenario.model_validate(document)
    except ValidationError as e:
        error = e.errors()[0]
        raise SchemaError(
            f"Invalid scenario document: {error['msg']}",
            ".".join(str(part) for part in error["loc"]),
        ) from None


class Lowerset(BaseModel):
    model_config = ConfigDict(frozen=True)

    members: frozenset[str] = Field(description="Downward closed set of event ids")


class LocaleElement(BaseModel):
    """A lowerset paired with a nonempty input restriction for each of its events.

    Build these with `CausalScenario.locale_element` so that the lowerset and
    alphabets are checked against the scenario; `input_restriction` is kept in
    declared event order.
    """

    model_config = ConfigDict(frozen=True)

    lowerset: Lowerset
    input_restriction: dict[str, tuple[str, ...]]

    @model_validator(mode="after")
    def _check_restriction(self) -> Self:
        if set(self.input_restriction) != self.lowerset.members:
            raise DomainMismatchError(
                f"Input restriction covers {sorted(self.input_restriction)}, "
                f"lowerset is {sorted(self.lowerset.members)}"
            )
        for id, labels in self.input_restriction.items():
            if not labels:
                raise EmptyAlphabetError(f"Empty input restriction for '{id}'", id)

        return self

    @property
    def event_ids(self) -> tuple[str, ...]:
        return tuple(self.input_restriction)

    def domain(self) -> list[Assignment]:
        return list(product(*self.input_restriction.values()))


def lowersets(scenario: CausalScenario) -> list[Lowerset]:
    """All lowersets of the scenario, by size and then lexicographically."""
    ids = sorted(scenario.event_ids)
    # combinations of sorted ids walk each size in lexicographic label order
    return [
        Lowerset(members=frozenset(subset))
        for size in range(len(ids) + 1)
        for subset in combinations(ids, size)
        if scenario.is_lowerset(subset)
    ]


def locale_le(lower: LocaleElement, upper: LocaleElement) -> bool:
    """Locale order: lowerset inclusion and inclusion of every input set."""
    if not lower.lowerset.members <= upper.lowerset.members:
        return False
    return all(
        set(labels) <= set(upper.input_restriction[id])
        for id, labels in lower.input_restriction.items()
    )


def locale_join(
    scenario: CausalScenario, first: LocaleElement, second: LocaleElement
) -> LocaleElement:
    ids = first.lowerset.members | second.lowerset.members
    inputs = {
        id: set(first.input_restriction.get(id, ()))
        | set(second.input_restriction.get(id, ()))
        for id in ids
    }
    return scenario.locale_element(ids, inputs)


def locale_meet(
    scenario: CausalScenario, first: LocaleElement, second: LocaleElement
) -> LocaleElement:
    """Greatest locale element below both.

    Events whose input sets are disjoint are dropped, together with everything
    above them, so that what remains is still a lowerset.
    """
    overlap = {
        id: set(first.input_restriction[id]) & set(second.input_restriction[id])
        for id in first.lowerset.members & second.lowerset.members
    }
    candidates = {id for id, labels in overlap.items() if labels}
    kept = {id for id in candidates if scenario.down_set(id) <= candidates}
    return scenario.locale_element(kept, {id: overlap[id] for id in kept})


@dataclass(frozen=True)
class CausalFunction:
    """A deterministic assignment of joint outputs to joint inputs.

    `table` lists ``(inputs, outputs)`` pairs in canonical input order, both keyed
    by `events` in declared order.
    """

    events: tuple[str, ...]
    table: tuple[tuple[Assignment, Assignment], ...]

    @cached_property
    def mapping(self) -> dict[Assignment, Assignment]:
        return dict(self.table)

    def __call__(self, inputs: Assignment) -> Assignment:
        return self.mapping[inputs]

    @classmethod
    def from_mapping(
        cls, events: Iterable[str], mapping: Mapping[Assignment, Assignment]
    ) -> CausalFunction:
        return cls(tuple(events), tuple(mapping.items()))


def _satisfies_causality(
    scenario: CausalScenario,
    events: tuple[str, ...],
    mapping: Mapping[Assignment, Assignment],
) -> bool:
    for id in events:
        below = [k for k, other in enumerate(events) if scenario.leq(other, id)]
        seen: dict[Assignment, Assignment] = {}
        for inputs, outputs in mapping.items():
            key = tuple(inputs[k] for k in below)
            value = tuple(outputs[k] for k in below)
            if seen.setdefault(key, value) != value:
                return False

    return True


def is_causal_function(
    f: CausalFunction,
    scenario: CausalScenario,
    elem: LocaleElement | None = None,
) -> bool:
    """Whether inputs of later events never influence outputs of earlier ones.

    For each event, inputs that agree on its down-set must give outputs that agree
    on its down-set.

    Args:
        f: Function to test
        scenario: Scenario whose order applies
        elem: Domain of ``f``, all events with full inputs by default

    """
    elem = elem or scenario.locale_element()
    if f.events != elem.event_ids:
        raise DomainMismatchError(
            f"Function is defined on events {f.events}, expected {elem.event_ids}"
        )
    if set(f.mapping) != set(elem.domain()) or len(f.table) != len(f.mapping):
        raise DomainMismatchError("Function is not total on its input domain")

    outputs = set(scenario.output_space(elem.event_ids))
    for value in f.mapping.values():
        if value not in outputs:
            raise DomainMismatchError(f"{value} is not a joint output assignment")

    return _satisfies_causality(scenario, f.events, f.mapping)


def section_count(scenario: CausalScenario, elem: LocaleElement) -> int:
    """Number of causal functions on ``elem``, without enumerating them."""
    return prod(
        len(scenario.event(id).outputs)
        ** prod(
            len(elem.input_restriction[other])
            for other in elem.event_ids
            if scenario.leq(other, id)
        )
        for id in elem.event_ids
    )


def enumerate_sections(
    scenario: CausalScenario,
    elem: LocaleElement,
    cap: int = DEFAULT_SECTION_CAP,
) -> list[CausalFunction]:
    """All causal functions on a locale element, in a deterministic order.

    Each event's output is chosen as a function of the inputs in its down-set, so
    every combination of those per-event functions is causal and distinct.

    Raises:
        SizeLimitError: If there are more than ``cap`` sections

    """
    if not scenario.is_lowerset(elem.lowerset.members):
        raise NotLowersetError(f"{sorted(elem.lowerset.members)} is not a lowerset")

    count = section_count(scenario, elem)
    if count > cap:
        raise SizeLimitError(f"{count} sections exceed the cap of {cap}")

    events = elem.event_ids
    positions: list[list[int]] = []
    choices: list[list[dict[Assignment, str]]] = []
    for id in events:
        below = [k for k, other in enumerate(events) if scenario.leq(other, id)]
        domain = list(product(*(elem.input_restriction[events[k]] for k in below)))
        positions.append(below)
        choices.append(
            [
                dict(zip(domain, values, strict=True))
                for values in product(
                    scenario.event(id).outputs, repeat=len(domain)
                )
            ]
        )

    joint = elem.domain()
    sections: list[CausalFunction] = []
    for lookups in product(*choices):
        table = tuple(
            (
                inputs,
                tuple(
                    lookup[tuple(inputs[k] for k in below)]
                    for below, lookup in zip(positions, lookups, strict=True)
                ),
            )
            for inputs in joint
        )
        sections.append(CausalFunction(events, table))

    return sections


def restrict_section(
    f: CausalFunction, source: LocaleElement, target: LocaleElement
) -> CausalFunction:
    """Restrict a section on ``source`` to the smaller locale element ``target``.

    Inputs of events outside ``target`` are fixed to the first allowed label; the
    outputs kept do not depend on them because ``f`` is causal.
    """
    if not locale_le(target, source):
        raise NotBelowError("Target locale element is not below the source")
    if f.events != source.event_ids:
        raise DomainMismatchError(
            f"Function is defined on events {f.events}, expected {source.event_ids}"
        )

    kept = [k for k, id in enumerate(source.event_ids) if id in target.lowerset.members]
    filler = [labels[0] for labels in source.input_restriction.values()]
    mapping: dict[Assignment, Assignment] = {}
    for inputs in target.domain():
        extended = list(filler)
        for k, label in zip(kept, inputs, strict=True):
            extended[k] = label
        outputs = f(tuple(extended))
        mapping[inputs] = tuple(outputs[k] for k in kept)

    return CausalFunction.from_mapping(target.event_ids, mapping)
