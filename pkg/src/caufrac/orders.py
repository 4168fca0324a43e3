"""Causal orders that a fraction can be computed against.

Orders serialize as a tagged union discriminated by class name, e.g.
``{"type": "Chain", "first": "S", "second": "V"}``.
"""

from __future__ import annotations

from typing import (
    Annotated,
    Any,
    Union,
    get_args,
)

from pydantic import BaseModel, ConfigDict, Discriminator, Field, Tag, computed_field

from caufrac.errors import UnknownEventError
from caufrac.scenario import CausalScenario


class TaggedModel(BaseModel):
    """Base class for members of tagged unions discriminated by the class name.

    Instances serialize with a computed ``type`` field holding the class name, and
    `as_tagged_union` builds a union that uses it to pick the class when
    deserializing.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    @computed_field  # type: ignore
    @property
    def type(self) -> str:
        return self.__class__.__name__

    @classmethod
    def _tag(cls):
        return Annotated[cls, Tag(cls.__name__)]

    @staticmethod
    def discriminator():
        return Field(discriminator=Discriminator(TaggedModel._get_type_name))

    @staticmethod
    def _get_type_name(x: TaggedModel | dict[str, Any]) -> str | None:
        """Name of the class an instance or serialized `dict` belongs to.

        The ``type`` key is removed from serialized input so that the remaining
        fields can be passed to the class. Anything else gives `None`, which pydantic
        reports as a validation error.
        """
        match x:
            case TaggedModel():
                return x.__class__.__name__
            case dict() as serialized:
                return serialized.pop("type", None)
            case _:
                return None


def as_tagged_union(union: Any):
    """Tag each member of a `Union` of `TaggedModel` with its class name."""
    members = get_args(union)

    return Annotated[
        Union[tuple(cls._tag() for cls in members)],  # type: ignore # noqa: UP007
        TaggedModel.discriminator(),
    ]


class CausalOrderSpec(TaggedModel):
    """A causal order over the events of a scenario."""

    def relation(self, scenario: CausalScenario) -> tuple[tuple[str, str], ...]:
        raise NotImplementedError(self)

    def label(self, scenario: CausalScenario) -> str:
        raise NotImplementedError(self)

    def scenario_for(self, scenario: CausalScenario) -> CausalScenario:
        """The scenario's events under this order."""
        return scenario.with_order(self.relation(scenario))


class Chain(CausalOrderSpec):
    """``first`` precedes ``second``; any other events stay unordered."""

    first: str = Field(description="Event id of the cause")
    second: str = Field(description="Event id of the effect")

    def relation(self, scenario: CausalScenario) -> tuple[tuple[str, str], ...]:
        for id in (self.first, self.second):
            if id not in scenario.event_ids:
                raise UnknownEventError(f"Chain refers to undeclared event '{id}'")
        return ((self.first, self.second),)

    def label(self, scenario: CausalScenario) -> str:
        return f"{self.first}->{self.second}"


class NoSignalling(CausalOrderSpec):
    """The antichain: no event influences another."""

    def relation(self, scenario: CausalScenario) -> tuple[tuple[str, str], ...]:
        return ()

    def label(self, scenario: CausalScenario) -> str:
        return "NS"


class GeneralOrder(CausalOrderSpec):
    order: tuple[tuple[str, str], ...] = Field(
        description="Directed pairs (before, after) between event ids"
    )

    def relation(self, scenario: CausalScenario) -> tuple[tuple[str, str], ...]:
        # Validates against the scenario's events and rejects cycles
        return scenario.with_order(self.order).order

    def label(self, scenario: CausalScenario) -> str:
        if not self.order:
            return "NS"
        return ",".join(f"{before}->{after}" for before, after in self.order)


CausalOrder = as_tagged_union(Union[Chain, NoSignalling, GeneralOrder])  # noqa: UP007
