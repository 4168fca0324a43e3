"""Causal fractions of empirical models.

The causal fraction of a model ``e`` for an order is the largest ``gamma`` in
[0, 1] such that ``gamma * w <= e`` entry by entry for some family ``w`` compatible
with the order, i.e. whose marginals on each lowerset only depend on the inputs of
that lowerset.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from enum import Enum

from caufrac._lp import LPStatus, ProgramBuilder, Relation, solve, verify
from caufrac.arithmetic import (
    DEFAULT_TOLERANCE,
    Arithmetic,
    Number,
    close,
    format_number,
    parse_probability,
)
from caufrac.empirical import (
    EmpiricalModel,
    check_compatibility,
    from_table,
    join_labels,
    marginalize,
)
from caufrac.errors import (
    CrossCheckError,
    InfeasibleError,
    ShapeError,
    SolverError,
)
from caufrac.orders import CausalOrderSpec, Chain, GeneralOrder, NoSignalling
from caufrac.scenario import (
    DEFAULT_SECTION_CAP,
    Assignment,
    CausalScenario,
    enumerate_sections,
    lowersets,
)

logger = logging.getLogger(__name__)


class Method(str, Enum):
    """How a reported fraction was obtained"""

    closed_form = "closed_form"
    upper_bound = "upper_bound"
    lp = "lp"


class MethodChoice(str, Enum):
    """Algorithm requested for a fraction"""

    #: Closed form for two binary events under a chain, linear program otherwise
    auto = "auto"
    closed = "closed"
    lp = "lp"
    #: Only the marginal discrepancy bound, no witness
    bound = "bound"


class Formulation(Enum):
    """Linear programs for the causal fraction"""

    #: Witness ranges over all families compatible with the order
    MARGINAL = "marginal"
    #: Witness ranges over mixtures of deterministic causal functions
    SECTIONS = "sections"


@dataclass(frozen=True)
class FractionResult:
    order: CausalOrderSpec
    #: Display label of the order, e.g. "S->V" or "NS"
    label: str
    gamma: Number
    method: Method
    #: Compatible family attaining gamma, omitted when gamma is 0 or only bounded
    witness: EmpiricalModel | None = None


def is_bell222(scenario: CausalScenario) -> bool:
    """Whether there are two events, each with binary inputs and outputs."""
    return len(scenario.events) == 2 and all(
        len(event.inputs) == 2 and len(event.outputs) == 2 for event in scenario.events
    )


def upper_bound_fraction(model: EmpiricalModel, order: CausalOrderSpec) -> Number:
    """Bound the fraction by the largest marginal disagreement.

    For every lowerset of the order, inputs that agree on the lowerset must give the
    same marginal there up to ``1 - gamma``, so ``gamma`` is at most one minus the
    largest such difference in any single output.
    """
    ordered = model.with_scenario(order.scenario_for(model.scenario))
    worst = model.arithmetic.zero
    for lowerset in lowersets(ordered.scenario):
        report = check_compatibility(ordered, lowerset)
        worst = max(worst, report.max_discrepancy)
    return model.arithmetic.one - worst


def bell222_fraction(model: EmpiricalModel, order: CausalOrderSpec) -> FractionResult:
    """Closed form fraction of a two event, binary model under a chain.

    For each input of the cause the difference of its marginals across the inputs
    of the effect limits gamma; the witness keeps the largest common marginal of
    the cause and the model's own conditional for the effect.

    Raises:
        ShapeError: If the model is not binary on two events or the order is not
            a chain

    """
    scenario = model.scenario
    if not is_bell222(scenario):
        raise ShapeError(
            "Closed form needs two events with binary inputs and outputs, got "
            + ", ".join(
                f"{e.id}({len(e.inputs)},{len(e.outputs)})" for e in scenario.events
            )
        )
    if not isinstance(order, Chain):
        raise ShapeError(f"Closed form needs a chain order, got {order.type}")

    ordered = order.scenario_for(scenario)
    ordered_model = model.with_scenario(ordered)
    cause, effect = order.first, order.second
    kx, ky = scenario.index(cause), scenario.index(effect)
    mode = model.arithmetic
    outputs_x = scenario.event(cause).outputs
    inputs_x = scenario.event(cause).inputs
    inputs_y = scenario.event(effect).inputs

    def joint(ix: str, iy: str) -> Assignment:
        labels = ["", ""]
        labels[kx], labels[ky] = ix, iy
        return tuple(labels)

    # marginals[ix][iy] is the distribution of the cause's output
    marginals = {
        ix: {
            iy: marginalize(ordered_model, joint(ix, iy), {cause}) for iy in inputs_y
        }
        for ix in inputs_x
    }

    gamma = mode.one
    for ix in inputs_x:
        for o in outputs_x:
            first, second = (marginals[ix][iy][(o,)] for iy in inputs_y)
            gamma = min(gamma, mode.one - abs(first - second))

    logger.debug("closed form %s: gamma = %s", order.label(scenario), gamma)
    label = order.label(scenario)
    if gamma == 0:
        return FractionResult(order, label, gamma, Method.closed_form)

    table = []
    for ix, iy in ((i[kx], i[ky]) for i in scenario.input_space()):
        common = {
            o: min(marginals[ix][y][(o,)] for y in inputs_y) for o in outputs_x
        }
        # Smallest common marginal, first in output order on ties
        pinned = min(outputs_x, key=lambda o: common[o])
        share = min(common[pinned] / gamma, mode.one)
        cause_marginal = {
            o: share if o == pinned else mode.one - share for o in outputs_x
        }

        row = ordered_model.row(joint(ix, iy))
        entries = []
        for o in scenario.output_space():
            denominator = marginals[ix][iy][(o[kx],)]
            if denominator == 0:
                conditional = mode.one / len(scenario.event(effect).outputs)
            else:
                conditional = row[o] / denominator
            entries.append(cause_marginal[o[kx]] * conditional)
        table.append(entries)

    witness = from_table(ordered, table, mode, model_id=_witness_id(model, label))
    return FractionResult(order, label, gamma, Method.closed_form, witness)


def _witness_id(model: EmpiricalModel, label: str) -> str | None:
    if model.model_id is None:
        return None
    return f"{model.model_id}.witness.{label}"


def _cell_name(inputs: Assignment, outputs: Assignment) -> str:
    return f"c[{join_labels(inputs)}|{join_labels(outputs)}]"


def _marginal_program(
    model: EmpiricalModel, families: Iterable[frozenset[str]]
) -> tuple[ProgramBuilder, dict[tuple[Assignment, Assignment], str]]:
    """Compatible-family program over the cells of the model.

    ``c[i|o]`` is ``gamma`` times the witness; cells where the model is zero are
    left out since they are forced to zero.
    """
    scenario = model.scenario
    cells = {
        (i, o): _cell_name(i, o)
        for i in model.inputs
        for o in model.outputs
        if model.probability(i, o) > 0
    }
    builder = ProgramBuilder(["gamma", *cells.values()])
    one = model.arithmetic.one
    builder.maximize({"gamma": one})

    for (i, o), name in cells.items():
        builder.add({name: one}, Relation.le, model.probability(i, o))

    for i in model.inputs:
        terms = {cells[(i, o)]: one for o in model.outputs if (i, o) in cells}
        terms["gamma"] = -one
        builder.add(terms, Relation.eq, model.arithmetic.zero)

    ids = scenario.event_ids
    for members in families:
        if not members or len(members) == len(ids):
            continue
        inside = [k for k, id in enumerate(ids) if id in members]
        groups: dict[Assignment, list[Assignment]] = {}
        for i in model.inputs:
            groups.setdefault(tuple(i[k] for k in inside), []).append(i)

        for group in groups.values():
            representative, *others = group
            for marginal in scenario.output_space(members):
                matching = [
                    o for o in model.outputs if tuple(o[k] for k in inside) == marginal
                ]
                for other in others:
                    terms: dict[str, Number] = {}
                    for o in matching:
                        if (representative, o) in cells:
                            name = cells[(representative, o)]
                            terms[name] = terms.get(name, 0) + one
                        if (other, o) in cells:
                            name = cells[(other, o)]
                            terms[name] = terms.get(name, 0) - one
                    if terms:
                        builder.add(terms, Relation.eq, model.arithmetic.zero)

    return builder, cells


def _solve_gamma(
    builder: ProgramBuilder, model: EmpiricalModel
) -> dict[str, Number]:
    lp = builder.build()
    logger.debug(
        "solving %d variables under %d constraints",
        len(lp.variables),
        len(lp.constraints),
    )
    solution = solve(lp, model.arithmetic)
    match solution.status:
        case LPStatus.infeasible:
            raise InfeasibleError(
                "Fraction program is infeasible although gamma = 0 always is feasible"
            )
        case LPStatus.unbounded:
            raise SolverError("Fraction program is unbounded")
    if not verify(lp, solution):
        raise SolverError("Fraction program solution fails verification")
    return solution.assignment


def lp_fraction(
    model: EmpiricalModel,
    order: CausalOrderSpec,
    formulation: Formulation = Formulation.MARGINAL,
    cap: int = DEFAULT_SECTION_CAP,
    tolerance: float = DEFAULT_TOLERANCE,
) -> FractionResult:
    """Fraction of the model by linear programming.

    Args:
        model: Model to decompose
        order: Order the witness must be compatible with
        formulation: `Formulation.MARGINAL` optimizes over all compatible
            families, `Formulation.SECTIONS` over mixtures of the deterministic
            causal functions of the order
        cap: Largest number of sections to enumerate
        tolerance: Row sum tolerance of a float witness

    """
    ordered = model.with_scenario(order.scenario_for(model.scenario))
    label = order.label(model.scenario)
    mode = model.arithmetic

    match formulation:
        case Formulation.MARGINAL:
            families = [lowerset.members for lowerset in lowersets(ordered.scenario)]
            builder, cells = _marginal_program(ordered, families)
            assignment = _solve_gamma(builder, ordered)
            gamma = assignment["gamma"]
            scaled = {
                cell: assignment[name] for cell, name in cells.items()
            }
        case Formulation.SECTIONS:
            gamma, scaled = _sections_fraction(ordered, cap)

    gamma = mode.convert(gamma)
    logger.debug("lp %s (%s): gamma = %s", label, formulation.value, gamma)
    if gamma <= mode.tolerance(tolerance):
        return FractionResult(order, label, mode.zero, Method.lp)

    table = [
        [mode.convert(scaled.get((i, o), mode.zero)) / gamma for o in ordered.outputs]
        for i in ordered.inputs
    ]
    witness = from_table(
        ordered.scenario,
        table,
        mode,
        tolerance=tolerance,
        model_id=_witness_id(model, label),
    )
    return FractionResult(order, label, gamma, Method.lp, witness)


def _sections_fraction(
    model: EmpiricalModel, cap: int
) -> tuple[Number, dict[tuple[Assignment, Assignment], Number]]:
    scenario = model.scenario
    sections = enumerate_sections(scenario, scenario.locale_element(), cap)
    names = [f"w[{k}]" for k in range(len(sections))]
    one = model.arithmetic.one

    builder = ProgramBuilder(names)
    builder.maximize(dict.fromkeys(names, one))
    for i in model.inputs:
        for o in model.outputs:
            terms = {
                name: one
                for name, f in zip(names, sections, strict=True)
                if f(i) == o
            }
            if terms:
                builder.add(terms, Relation.le, model.probability(i, o))

    assignment = _solve_gamma(builder, model)
    gamma = sum((assignment[name] for name in names), start=model.arithmetic.zero)
    scaled: dict[tuple[Assignment, Assignment], Number] = {}
    for name, f in zip(names, sections, strict=True):
        weight = assignment[name]
        if weight:
            for i in model.inputs:
                key = (i, f(i))
                scaled[key] = scaled.get(key, model.arithmetic.zero) + weight
    return gamma, scaled


def nosignalling_fraction(
    model: EmpiricalModel, tolerance: float = DEFAULT_TOLERANCE
) -> FractionResult:
    """Fraction for the order in which no event influences another.

    For two events the answer is cross-checked against a program that imposes the
    lowerset constraints of both chains at once.

    Raises:
        CrossCheckError: If the two programs disagree

    """
    result = lp_fraction(model, NoSignalling(), tolerance=tolerance)

    ids = model.scenario.event_ids
    if len(ids) == 2:
        chains = (
            Chain(first=ids[0], second=ids[1]),
            Chain(first=ids[1], second=ids[0]),
        )
        families = {
            lowerset.members
            for chain in chains
            for lowerset in lowersets(chain.scenario_for(model.scenario))
        }
        builder, _ = _marginal_program(model, sorted(families, key=sorted))
        both = model.arithmetic.convert(_solve_gamma(builder, model)["gamma"])
        if not close(both, result.gamma, model.arithmetic.tolerance(tolerance)):
            raise CrossCheckError(
                f"No-signalling fraction {format_number(result.gamma)} differs from "
                f"{format_number(both)} with both chains imposed",
                model.model_id,
            )

    return result


def witness_check(
    model: EmpiricalModel,
    gamma: Number | int | str,
    witness: EmpiricalModel,
    tolerance: float = DEFAULT_TOLERANCE,
) -> bool:
    """Whether ``gamma * witness <= model`` in every entry and the witness is
    compatible with its own scenario's order.

    Exact when model, witness and gamma are all rational.

    Raises:
        ShapeError: If the witness has other events or alphabets than the model

    """
    if witness.scenario.events != model.scenario.events:
        raise ShapeError("Witness and model differ in their events or alphabets")

    value = parse_probability(gamma)
    if value == 0:
        return True
    if value < 0 or value > 1:
        return False

    floating = (
        isinstance(value, float)
        or model.arithmetic is Arithmetic.floating
        or witness.arithmetic is Arithmetic.floating
    )
    mode = Arithmetic.floating if floating else Arithmetic.rational
    slack = mode.tolerance(tolerance)
    value = mode.convert(value)

    for i in model.inputs:
        for o in model.outputs:
            scaled = value * mode.convert(witness.probability(i, o))
            if scaled > mode.convert(model.probability(i, o)) + slack:
                logger.debug(
                    "witness exceeds model at %s -> %s",
                    join_labels(i),
                    join_labels(o),
                )
                return False

    return all(
        check_compatibility(witness, lowerset, tolerance).compatible
        for lowerset in lowersets(witness.scenario)
    )


def report_orders(scenario: CausalScenario) -> list[CausalOrderSpec]:
    """Orders reported for a scenario.

    Both chains and no-signalling for two events; otherwise the declared order and
    no-signalling.
    """
    ids = scenario.event_ids
    if len(ids) == 2:
        return [
            Chain(first=ids[0], second=ids[1]),
            Chain(first=ids[1], second=ids[0]),
            NoSignalling(),
        ]
    if not scenario.order:
        return [NoSignalling()]

    return [GeneralOrder(order=scenario.order), NoSignalling()]


def compute_fraction(
    model: EmpiricalModel,
    order: CausalOrderSpec,
    method: MethodChoice = MethodChoice.auto,
    cap: int = DEFAULT_SECTION_CAP,
    tolerance: float = DEFAULT_TOLERANCE,
) -> FractionResult:
    match method:
        case MethodChoice.bound:
            return FractionResult(
                order,
                order.label(model.scenario),
                upper_bound_fraction(model, order),
                Method.upper_bound,
            )
        case MethodChoice.closed:
            # No-signalling has no closed form
            if isinstance(order, NoSignalling):
                return nosignalling_fraction(model, tolerance)
            return bell222_fraction(model, order)
        case MethodChoice.lp:
            if isinstance(order, NoSignalling):
                return nosignalling_fraction(model, tolerance)
            return lp_fraction(model, order, cap=cap, tolerance=tolerance)
        case MethodChoice.auto:
            if isinstance(order, Chain) and is_bell222(model.scenario):
                return bell222_fraction(model, order)
            return compute_fraction(model, order, MethodChoice.lp, cap, tolerance)


def full_report(
    model: EmpiricalModel,
    method: MethodChoice = MethodChoice.auto,
    orders: Sequence[CausalOrderSpec] | None = None,
    cap: int = DEFAULT_SECTION_CAP,
    tolerance: float = DEFAULT_TOLERANCE,
) -> list[FractionResult]:
    """Fractions of a model for each of its report orders.

    Without explicit ``orders`` the model must be binary on two events, and the
    results are for both chains and then no-signalling.
    """
    if orders is None:
        if not is_bell222(model.scenario):
            raise ShapeError(
                "Full report needs two events with binary inputs and outputs"
            )
        orders = report_orders(model.scenario)

    return [compute_fraction(model, order, method, cap, tolerance) for order in orders]
