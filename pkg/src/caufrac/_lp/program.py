from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum

from caufrac.arithmetic import Number
from caufrac.errors import ShapeError


class Relation(str, Enum):
    le = "<="
    eq = "="
    ge = ">="

    def flipped(self) -> Relation:
        match self:
            case Relation.le:
                return Relation.ge
            case Relation.ge:
                return Relation.le
            case Relation.eq:
                return Relation.eq


@dataclass(frozen=True)
class Constraint:
    coefficients: tuple[Number, ...]
    relation: Relation
    constant: Number


@dataclass(frozen=True)
class LinearProgram:
    """Maximize ``objective . x`` subject to the constraints, with ``x >= 0``."""

    variables: tuple[str, ...]
    objective: tuple[Number, ...]
    constraints: tuple[Constraint, ...] = ()

    def __post_init__(self):
        n = len(self.variables)
        if len(set(self.variables)) != n:
            raise ShapeError("Variable names must be unique")
        if len(self.objective) != n:
            raise ShapeError(f"Objective has {len(self.objective)} entries, not {n}")
        for k, constraint in enumerate(self.constraints):
            if len(constraint.coefficients) != n:
                raise ShapeError(
                    f"Constraint {k} has {len(constraint.coefficients)} "
                    f"coefficients, not {n}"
                )


class ProgramBuilder:
    """Assemble a `LinearProgram` from sparse rows over named variables."""

    def __init__(self, variables: Sequence[str]):
        self.variables = tuple(variables)
        self._index = {name: k for k, name in enumerate(self.variables)}
        self._objective: dict[str, Number] = {}
        self._constraints: list[Constraint] = []

    def maximize(self, terms: Mapping[str, Number]) -> None:
        self._objective = dict(terms)

    def add(
        self, terms: Mapping[str, Number], relation: Relation, constant: Number
    ) -> None:
        row: list[Number] = [0] * len(self.variables)
        for name, coefficient in terms.items():
            row[self._index[name]] += coefficient
        self._constraints.append(Constraint(tuple(row), relation, constant))

    def build(self) -> LinearProgram:
        return LinearProgram(
            variables=self.variables,
            objective=tuple(self._objective.get(name, 0) for name in self.variables),
            constraints=tuple(self._constraints),
        )


class LPStatus(str, Enum):
    optimal = "optimal"
    unbounded = "unbounded"
    infeasible = "infeasible"


@dataclass(frozen=True)
class LPSolution:
    status: LPStatus
    objective_value: Number | None = None
    assignment: dict[str, Number] = field(default_factory=dict)
