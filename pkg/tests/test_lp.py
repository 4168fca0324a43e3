import logging
from dataclasses import replace
from fractions import Fraction as F

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from caufrac._lp import (
    Constraint,
    LinearProgram,
    LPSolution,
    LPStatus,
    ProgramBuilder,
    Relation,
    solve,
    verify,
)
from caufrac.arithmetic import Arithmetic
from caufrac.errors import ShapeError


def program(objective, *rows) -> LinearProgram:
    names = tuple(f"x{k}" for k in range(len(objective)))
    builder = ProgramBuilder(names)
    builder.maximize(dict(zip(names, objective, strict=True)))
    for *coefficients, relation, constant in rows:
        builder.add(dict(zip(names, coefficients, strict=True)), relation, constant)
    return builder.build()


def test_single_bound():
    solution = solve(program([1], [1, Relation.le, 5]))
    assert solution.status is LPStatus.optimal
    assert solution.objective_value == 5


def test_redundant_constraint():
    solution = solve(program([1], [1, Relation.le, 3], [1, Relation.le, 2]))
    assert solution.objective_value == 2


def test_two_variable_vertex():
    lp = program([1, 1], [1, 2, Relation.le, 4], [3, 1, Relation.le, 6])
    solution = solve(lp)
    assert solution.objective_value == F(14, 5)
    assert solution.assignment == {"x0": F(8, 5), "x1": F(6, 5)}
    assert verify(lp, solution)


def test_equality_and_lower_bounds():
    # maximize -x - y with x + y = 3, x >= 1
    lp = program([-1, -1], [1, 1, Relation.eq, 3], [1, 0, Relation.ge, 1])
    solution = solve(lp)
    assert solution.status is LPStatus.optimal
    assert solution.objective_value == -3
    assert verify(lp, solution)


def test_negative_constant_is_flipped():
    # -x <= -2 is x >= 2
    lp = program([-1], [-1, Relation.le, -2])
    assert solve(lp).objective_value == -2


def test_infeasible():
    lp = program([1], [1, Relation.le, 1], [1, Relation.ge, 2])
    assert solve(lp).status is LPStatus.infeasible


def test_unbounded():
    assert solve(program([1, 0], [0, 1, Relation.le, 1])).status is (
        LPStatus.unbounded
    )


def test_redundant_equalities():
    lp = program(
        [1, 1], [1, 1, Relation.eq, 1], [2, 2, Relation.eq, 2], [1, 0, Relation.le, 1]
    )
    solution = solve(lp)
    assert solution.objective_value == 1
    assert verify(lp, solution)


def test_float_mode():
    lp = program([1, 1], [1, 2, Relation.le, 4], [3, 1, Relation.le, 6])
    solution = solve(lp, Arithmetic.floating)
    assert solution.objective_value == pytest.approx(2.8)
    assert verify(lp, solution)


def test_verify_rejects_violated_constraint():
    lp = program([1, 1], [1, 2, Relation.le, 4], [3, 1, Relation.le, 6])
    solution = solve(lp)
    perturbed = replace(
        solution, assignment={"x0": F(2), "x1": F(6, 5)}, objective_value=F(16, 5)
    )
    assert not verify(lp, perturbed)


def test_verify_rejects_misstated_objective():
    lp = program([1, 1], [1, 2, Relation.le, 4], [3, 1, Relation.le, 6])
    solution = solve(lp)
    assert not verify(lp, replace(solution, objective_value=F(3)))


def test_verify_rejects_non_optimal_status():
    lp = program([1], [1, Relation.le, 5])
    assert not verify(lp, LPSolution(LPStatus.infeasible))


def test_shape_mismatch():
    with pytest.raises(ShapeError):
        LinearProgram(
            variables=("x", "y"),
            objective=(1, 1),
            constraints=(Constraint((1,), Relation.le, 1),),
        )


def test_trace_logs_pivots(caplog):
    lp = program([1, 1], [1, 2, Relation.le, 4], [3, 1, Relation.le, 6])
    with caplog.at_level(logging.DEBUG, logger="caufrac._lp"):
        solve(lp)
    assert "enters" in caplog.text
    assert "rhs" in caplog.text


SETTINGS = settings(
    max_examples=500, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)

coefficient = st.integers(min_value=0, max_value=6)


@st.composite
def bounded_programs(draw):
    """Maximize c.x with A x <= b, A > 0 columnwise and b >= 0."""
    n = draw(st.integers(min_value=1, max_value=8))
    m = draw(st.integers(min_value=1, max_value=5))
    objective = draw(st.lists(st.integers(-3, 6), min_size=n, max_size=n))
    rows = [draw(st.lists(coefficient, min_size=n, max_size=n)) for _ in range(m)]
    # A positive entry in every column keeps the program bounded
    for k in range(n):
        if not any(row[k] for row in rows):
            rows[draw(st.integers(0, m - 1))][k] = draw(st.integers(1, 6))
    constants = draw(st.lists(st.integers(0, 10), min_size=m, max_size=m))
    return objective, rows, constants


def primal(objective, rows, constants) -> LinearProgram:
    return program(
        objective,
        *([*row, Relation.le, b] for row, b in zip(rows, constants, strict=True)),
    )


def dual(objective, rows, constants) -> LinearProgram:
    # minimize b.y subject to A^T y >= c, as a maximization of -b.y
    columns = list(zip(*rows, strict=True))
    return program(
        [-b for b in constants],
        *(
            [*column, Relation.ge, c]
            for column, c in zip(columns, objective, strict=True)
        ),
    )


@SETTINGS
@given(bounded_programs())
def test_primal_equals_dual(case):
    primal_solution = solve(primal(*case))
    dual_solution = solve(dual(*case))
    assert primal_solution.status is LPStatus.optimal
    assert dual_solution.status is LPStatus.optimal
    assert primal_solution.objective_value == -dual_solution.objective_value
    assert verify(primal(*case), primal_solution)


@SETTINGS
@given(bounded_programs(), st.integers(1, 9), st.integers(1, 9))
def test_row_scaling_invariance(case, numerator, denominator):
    objective, rows, constants = case
    scale = F(numerator, denominator)
    scaled = (
        objective,
        [[a * scale for a in row] for row in rows],
        [b * scale for b in constants],
    )
    expected = solve(primal(*case)).objective_value
    assert solve(primal(*scaled)).objective_value == expected


@SETTINGS
@given(bounded_programs())
def test_float_agrees_with_rational(case):
    exact = solve(primal(*case))
    approximate = solve(primal(*case), Arithmetic.floating)
    assert approximate.objective_value == pytest.approx(
        float(exact.objective_value), abs=1e-9
    )
