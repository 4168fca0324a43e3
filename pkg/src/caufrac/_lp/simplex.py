"""Dense two-phase simplex over rationals or floats.

Rational mode pivots with Bland's rule throughout, so it always terminates and is
exact. Float mode uses the largest reduced cost and falls back to Bland's rule
after a run of degenerate pivots; entries within the pivot tolerance count as zero.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from fractions import Fraction

from caufrac._lp.program import LinearProgram, LPSolution, LPStatus, Relation
from caufrac.arithmetic import Arithmetic, Number
from caufrac.errors import NumericalInstabilityError, SolverError

logger = logging.getLogger(__name__)

PIVOT_TOLERANCE = 1e-12
VERIFY_TOLERANCE = 1e-9
MAX_ITERATIONS = 10_000
# Consecutive degenerate pivots in float mode before switching to Bland's rule
DEGENERATE_LIMIT = 50


class Tableau:
    """Constraint rows in canonical form for the current basis.

    Each solve owns its own tableau.
    """

    def __init__(
        self,
        rows: list[list[Number]],
        rhs: list[Number],
        basis: list[int],
        names: list[str],
        arithmetic: Arithmetic,
        tolerance: float,
        max_iterations: int,
    ):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis
        self.names = names
        self.arithmetic = arithmetic
        self.eps = arithmetic.tolerance(tolerance)
        self.floating = arithmetic is Arithmetic.floating
        self.max_iterations = max_iterations
        self.iterations = 0

    def reduced_costs(self, cost: Sequence[Number]) -> list[Number]:
        reduced = list(cost)
        for row, column in zip(self.rows, self.basis, strict=True):
            weight = cost[column]
            if weight:
                reduced = [r - weight * a for r, a in zip(reduced, row, strict=True)]
        return reduced

    def value(self, cost: Sequence[Number]) -> Number:
        return sum(
            (cost[column] * b for column, b in zip(self.basis, self.rhs, strict=True)),
            start=self.arithmetic.zero,
        )

    def pivot(self, r: int, c: int) -> None:
        leaving = self.basis[r]
        element = self.rows[r][c]
        pivot_row = [a / element for a in self.rows[r]]
        self.rows[r] = pivot_row
        self.rhs[r] = self.rhs[r] / element
        for i, row in enumerate(self.rows):
            factor = row[c]
            if i != r and factor:
                self.rows[i] = [
                    a - factor * p for a, p in zip(row, pivot_row, strict=True)
                ]
                self.rhs[i] = self.rhs[i] - factor * self.rhs[r]
                if self.floating and abs(self.rhs[i]) <= self.eps:
                    self.rhs[i] = 0.0
        self.basis[r] = c

        logger.debug(
            "pivot %d: %s enters, %s leaves",
            self.iterations,
            self.names[c],
            self.names[leaving],
        )
        if logger.isEnabledFor(logging.DEBUG):
            logger.debug("tableau after pivot %d:\n%s", self.iterations, self.dump())

    def optimize(self, cost: Sequence[Number], allowed: Sequence[bool]) -> bool:
        """Pivot until no allowed column improves ``cost``.

        Returns:
            False if the objective is unbounded along some column

        """
        degenerate = 0
        while True:
            self.iterations += 1
            if self.iterations > self.max_iterations:
                message = f"No optimum after {self.max_iterations} pivots"
                if self.floating:
                    raise NumericalInstabilityError(
                        message + ", rerun with rational arithmetic"
                    )
                raise SolverError(message)

            reduced = self.reduced_costs(cost)
            candidates = [
                j for j, ok in enumerate(allowed) if ok and reduced[j] > self.eps
            ]
            if not candidates:
                return True

            bland = (
                not self.floating or degenerate >= DEGENERATE_LIMIT
            )
            if bland:
                column = candidates[0]
            else:
                column = max(candidates, key=lambda j: reduced[j])

            row = self._leaving_row(column)
            if row is None:
                return False

            ratio = self.rhs[row] / self.rows[row][column]
            degenerate = degenerate + 1 if ratio <= self.eps else 0
            self.pivot(row, column)

    def _leaving_row(self, column: int) -> int | None:
        # Minimum ratio, ties broken by the smallest basic column (Bland)
        best: int | None = None
        best_ratio: Number = self.arithmetic.zero
        for i, row in enumerate(self.rows):
            if row[column] > self.eps:
                ratio = self.rhs[i] / row[column]
                if (
                    best is None
                    or ratio < best_ratio - self.eps
                    or (
                        abs(ratio - best_ratio) <= self.eps
                        and self.basis[i] < self.basis[best]
                    )
                ):
                    best, best_ratio = i, ratio
        return best

    def drop_row(self, r: int) -> None:
        del self.rows[r]
        del self.rhs[r]
        del self.basis[r]

    def dump(self) -> str:
        """Text rendering of the tableau for audit traces."""
        header = ["basis"] + self.names + ["rhs"]
        lines = [header]
        for row, column, b in zip(self.rows, self.basis, self.rhs, strict=True):
            lines.append([self.names[column]] + [str(a) for a in row] + [str(b)])
        widths = [max(len(line[k]) for line in lines) for k in range(len(header))]
        return "\n".join(
            " ".join(cell.rjust(w) for cell, w in zip(line, widths, strict=True))
            for line in lines
        )


def solve(
    lp: LinearProgram,
    arithmetic: Arithmetic = Arithmetic.rational,
    tolerance: float = PIVOT_TOLERANCE,
    max_iterations: int = MAX_ITERATIONS,
) -> LPSolution:
    """Maximize a linear program with the two-phase simplex method.

    Raises:
        NumericalInstabilityError: In float mode, if the result fails verification
            or pivoting does not converge

    """
    convert = arithmetic.convert
    zero, one = arithmetic.zero, arithmetic.one
    n = len(lp.variables)

    rows: list[list[Number]] = []
    rhs: list[Number] = []
    relations: list[Relation] = []
    for constraint in lp.constraints:
        coefficients = [convert(a) for a in constraint.coefficients]
        constant = convert(constraint.constant)
        relation = constraint.relation
        if constant < 0:
            coefficients = [-a for a in coefficients]
            constant = -constant
            relation = relation.flipped()
        rows.append(coefficients)
        rhs.append(constant)
        relations.append(relation)

    names = list(lp.variables)
    slack_columns: list[int | None] = []
    for k, relation in enumerate(relations):
        match relation:
            case Relation.le:
                names.append(f"slack_{k}")
            case Relation.ge:
                names.append(f"surplus_{k}")
            case Relation.eq:
                slack_columns.append(None)
                continue
        slack_columns.append(len(names) - 1)

    first_artificial = len(names)
    artificial_columns: list[int | None] = []
    for k, relation in enumerate(relations):
        if relation is Relation.le:
            artificial_columns.append(None)
        else:
            names.append(f"artificial_{k}")
            artificial_columns.append(len(names) - 1)

    width = len(names)
    basis: list[int] = []
    for k, relation in enumerate(relations):
        row = rows[k] + [zero] * (width - n)
        slack = slack_columns[k]
        if slack is not None:
            row[slack] = one if relation is Relation.le else -one
        artificial = artificial_columns[k]
        if artificial is not None:
            row[artificial] = one
            basis.append(artificial)
        else:
            assert slack is not None
            basis.append(slack)
        rows[k] = row

    tableau = Tableau(rows, rhs, basis, names, arithmetic, tolerance, max_iterations)
    is_artificial = [j >= first_artificial for j in range(width)]

    if any(is_artificial):
        phase_one = [-one if artificial else zero for artificial in is_artificial]
        tableau.optimize(phase_one, [True] * width)
        if tableau.value(phase_one) < -tableau.eps:
            logger.debug("infeasible: phase one optimum %s", tableau.value(phase_one))
            return LPSolution(LPStatus.infeasible)

        # Drive zero-level artificials out of the basis, dropping redundant rows
        for r in reversed(range(len(tableau.basis))):
            if not is_artificial[tableau.basis[r]]:
                continue
            replacement = next(
                (
                    j
                    for j in range(first_artificial)
                    if abs(tableau.rows[r][j]) > tableau.eps
                ),
                None,
            )
            if replacement is None:
                tableau.drop_row(r)
            else:
                tableau.pivot(r, replacement)

    phase_two = [convert(c) for c in lp.objective] + [zero] * (width - n)
    if not tableau.optimize(phase_two, [not flag for flag in is_artificial]):
        return LPSolution(LPStatus.unbounded)

    values: list[Number] = [zero] * width
    for column, b in zip(tableau.basis, tableau.rhs, strict=True):
        values[column] = b
    if arithmetic is Arithmetic.floating:
        values = [0.0 if abs(v) <= tableau.eps else v for v in values]

    solution = LPSolution(
        LPStatus.optimal,
        objective_value=tableau.value(phase_two),
        assignment=dict(zip(lp.variables, values[:n], strict=True)),
    )
    logger.debug(
        "optimal after %d iterations: %s", tableau.iterations, solution.objective_value
    )

    if arithmetic is Arithmetic.floating and not verify(lp, solution):
        raise NumericalInstabilityError(
            "Float simplex result fails verification, rerun with rational arithmetic"
        )

    return solution


def verify(
    lp: LinearProgram, solution: LPSolution, tolerance: float | None = None
) -> bool:
    """Independently check an optimal solution against every constraint.

    Exact when every number involved is rational, otherwise within ``tolerance``
    (default `VERIFY_TOLERANCE`).
    """
    if solution.status is not LPStatus.optimal or solution.objective_value is None:
        return False
    if set(solution.assignment) != set(lp.variables):
        return False

    x = [solution.assignment[name] for name in lp.variables]
    numbers = [*x, solution.objective_value, *lp.objective]
    for constraint in lp.constraints:
        numbers.extend(constraint.coefficients)
        numbers.append(constraint.constant)
    if tolerance is None:
        exact = all(isinstance(v, Fraction | int) for v in numbers)
        slack: Number = Fraction(0) if exact else VERIFY_TOLERANCE
    else:
        slack = tolerance

    if any(v < -slack for v in x):
        return False

    for constraint in lp.constraints:
        lhs = sum((a * v for a, v in zip(constraint.coefficients, x, strict=True)), 0)
        match constraint.relation:
            case Relation.le:
                holds = lhs <= constraint.constant + slack
            case Relation.ge:
                holds = lhs >= constraint.constant - slack
            case Relation.eq:
                holds = abs(lhs - constraint.constant) <= slack
        if not holds:
            return False

    value = sum((c * v for c, v in zip(lp.objective, x, strict=True)), 0)
    return abs(value - solution.objective_value) <= slack
