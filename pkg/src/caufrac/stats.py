"""Statistics over the fractions of many models.

Reports are kept as pydantic documents so that ``caufrac report`` and ``caufrac
plot`` can work from the ``fractions.json`` written by an earlier run.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping, Sequence
from enum import Enum
from functools import cache
from itertools import permutations
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.stats import rankdata
from scipy.stats import t as t_distribution

from caufrac.arithmetic import Arithmetic, format_number, parse_probability
from caufrac.empirical import EmpiricalModel, to_document
from caufrac.errors import (
    ConstantInputError,
    InputError,
    MissingMetaError,
    SampleSizeError,
    ShapeError,
)
from caufrac.fraction import FractionResult, Method, MethodChoice
from caufrac.linguistics import (
    AmbiguityCounts,
    PhraseType,
    Skip,
    ambiguity_counts,
    phrase_type_of,
)
from caufrac.orders import CausalOrder

logger = logging.getLogger(__name__)

#: Largest sample whose p-value is found by enumerating every permutation
EXACT_PERMUTATION_LIMIT = 9
DEFAULT_THRESHOLD = 0.7
DEFAULT_BINS = 20
#: Order whose fraction is correlated with ambiguity, per phrase type
CORRELATED_ORDERS = {
    PhraseType.subject_verb: "S->V",
    PhraseType.verb_object: "O->V",
}
# Relative slack when comparing permuted correlations with the observed one
_TIE_SLACK = 1e-12


class Alternative(str, Enum):
    two_sided = "two-sided"
    greater = "greater"
    less = "less"


class CorrelationMethod(str, Enum):
    t_approximation = "t_approximation"
    exact_permutation = "exact_permutation"


class CorrelationResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    rho: float = Field(ge=-1, le=1)
    p_value: float = Field(ge=0, le=1)
    n: int
    method: CorrelationMethod


@cache
def _permutations(n: int) -> np.ndarray:
    return np.array(list(permutations(range(n))), dtype=np.intp)


def _t_p_value(rho: float, n: int, alternative: Alternative) -> float:
    df = n - 2
    if abs(rho) >= 1:
        t = math.copysign(math.inf, rho)
    else:
        t = rho * math.sqrt(df / (1 - rho * rho))

    match alternative:
        case Alternative.two_sided:
            p = 2 * t_distribution.sf(abs(t), df)
        case Alternative.greater:
            p = t_distribution.sf(t, df)
        case Alternative.less:
            p = t_distribution.cdf(t, df)
    return min(1.0, max(0.0, float(p)))


def _permutation_p_value(
    dx: np.ndarray, dy: np.ndarray, scale: float, rho: float, alternative: Alternative
) -> float:
    rhos = (dy[_permutations(len(dy))] @ dx) / scale
    slack = _TIE_SLACK * max(1.0, abs(rho))
    match alternative:
        case Alternative.two_sided:
            extreme = np.abs(rhos) >= abs(rho) - slack
        case Alternative.greater:
            extreme = rhos >= rho - slack
        case Alternative.less:
            extreme = rhos <= rho + slack
    return int(np.count_nonzero(extreme)) / len(rhos)


def spearman(
    x: Sequence[float],
    y: Sequence[float],
    alternative: Alternative = Alternative.two_sided,
) -> CorrelationResult:
    """Spearman's rank correlation with tied values given their mean rank.

    The p-value is exact, by enumerating every pairing, for at most
    `EXACT_PERMUTATION_LIMIT` samples and uses Student's t approximation above.

    >>> spearman([1, 2, 3], [10, 20, 30]).rho
    1.0

    Raises:
        SampleSizeError: If there are fewer than 3 samples
        ConstantInputError: If either sample has a single distinct value

    """
    if len(x) != len(y):
        raise ShapeError(f"Samples differ in length: {len(x)} and {len(y)}")
    n = len(x)
    if n < 3:
        raise SampleSizeError(f"Need at least 3 samples, got {n}")

    rx = rankdata(np.asarray(x, dtype=float))
    ry = rankdata(np.asarray(y, dtype=float))
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise ConstantInputError("Ranks have zero variance, one sample is constant")

    scale = math.sqrt(sxx * syy)
    rho = max(-1.0, min(1.0, float(dx @ dy) / scale))

    if n <= EXACT_PERMUTATION_LIMIT:
        p_value = _permutation_p_value(dx, dy, scale, rho, alternative)
        method = CorrelationMethod.exact_permutation
    else:
        p_value = _t_p_value(rho, n, alternative)
        method = CorrelationMethod.t_approximation

    return CorrelationResult(rho=rho, p_value=p_value, n=n, method=method)


class FractionEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    order: CausalOrder
    label: str = Field(description="Display label of the order, e.g. S->V or NS")
    gamma: str | float = Field(description='Fraction, "p/q" in rational mode')
    method: Method
    witness: dict[str, Any] | None = Field(
        default=None, description="Model document of the witness attaining gamma"
    )

    @property
    def value(self) -> float:
        return float(parse_probability(self.gamma))


class ModelReport(BaseModel):
    model_config = ConfigDict(extra="forbid", protected_namespaces=())

    model_id: str
    phrase_type: PhraseType | None = None
    ambiguity: AmbiguityCounts | None = None
    fractions: list[FractionEntry]

    def fraction(self, label: str) -> FractionEntry | None:
        return next((entry for entry in self.fractions if entry.label == label), None)


class SkippedModel(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    model_id: str
    reason: str


class FractionsReport(BaseModel):
    """Fractions of every model in a run, sorted by model id."""

    model_config = ConfigDict(extra="forbid")

    arithmetic: Arithmetic
    method: MethodChoice
    models: list[ModelReport]
    skipped: list[SkippedModel] = Field(default_factory=list)


def model_report(
    model: EmpiricalModel,
    results: Sequence[FractionResult],
    include_witness: bool = False,
) -> ModelReport:
    """Collect the fractions of one model with its phrase labels, if any."""
    try:
        ambiguity = ambiguity_counts(model)
    except MissingMetaError:
        ambiguity = None

    return ModelReport(
        model_id=model.model_id or "",
        phrase_type=phrase_type_of(model),
        ambiguity=ambiguity,
        fractions=[
            FractionEntry(
                order=result.order,
                label=result.label,
                gamma=format_number(result.gamma),
                method=result.method,
                witness=(
                    to_document(result.witness)
                    if include_witness and result.witness is not None
                    else None
                ),
            )
            for result in results
        ],
    )


def skipped_models(skips: Sequence[Skip]) -> list[SkippedModel]:
    return [SkippedModel(model_id=skip.model_id, reason=skip.reason) for skip in skips]


class OrderHistogram(BaseModel):
    phrase_type: PhraseType | None
    label: str
    n: int
    edges: list[float]
    counts: list[int]
    median: float
    share_above: float = Field(description="Share of fractions above the threshold")


class DominantShares(BaseModel):
    """How often each order has the largest fraction of a model."""

    phrase_type: PhraseType | None
    n: int
    shares: dict[str, float]


class FractionSummary(BaseModel):
    threshold: float
    bins: int
    histograms: list[OrderHistogram]
    dominant: list[DominantShares]


def _phrase_type_key(phrase_type: PhraseType | None) -> str:
    return "" if phrase_type is None else phrase_type.value


def summarize_fractions(
    reports: Sequence[ModelReport],
    threshold: float = DEFAULT_THRESHOLD,
    bins: int = DEFAULT_BINS,
) -> FractionSummary:
    """Histogram, median and share above ``threshold`` per phrase type and order.

    Bins split [0, 1] evenly and are closed on the left, the last one on both
    sides, so fractions of exactly 1 land in the top bin.
    """
    ordered = sorted(reports, key=lambda report: report.model_id)

    values: dict[tuple[str, str], list[float]] = {}
    types: dict[str, PhraseType | None] = {}
    winners: dict[str, list[str]] = {}
    labels: dict[str, list[str]] = {}
    for report in ordered:
        key = _phrase_type_key(report.phrase_type)
        types[key] = report.phrase_type
        known = labels.setdefault(key, [])
        for entry in report.fractions:
            values.setdefault((key, entry.label), []).append(entry.value)
            if entry.label not in known:
                known.append(entry.label)
        if report.fractions:
            # max keeps the first of equal fractions
            best = max(report.fractions, key=lambda entry: entry.value)
            winners.setdefault(key, []).append(best.label)

    histograms: list[OrderHistogram] = []
    for key in sorted(labels):
        for label in labels[key]:
            # Float solves can land a hair outside [0, 1]
            sample = np.clip(np.asarray(values[(key, label)], dtype=float), 0.0, 1.0)
            counts, edges = np.histogram(sample, bins=bins, range=(0.0, 1.0))
            histograms.append(
                OrderHistogram(
                    phrase_type=types[key],
                    label=label,
                    n=len(sample),
                    edges=[round(float(edge), 12) for edge in edges],
                    counts=[int(count) for count in counts],
                    median=float(np.median(sample)),
                    share_above=int(np.count_nonzero(sample > threshold))
                    / len(sample),
                )
            )

    dominant = [
        DominantShares(
            phrase_type=types[key],
            n=len(winners[key]),
            shares={
                label: winners[key].count(label) / len(winners[key])
                for label in labels[key]
            },
        )
        for key in sorted(winners)
    ]

    return FractionSummary(
        threshold=threshold, bins=bins, histograms=histograms, dominant=dominant
    )


class CountKind(str, Enum):
    total = "total"
    verb = "verb"
    noun = "noun"

    def homonymous(self, counts: AmbiguityCounts) -> int:
        match self:
            case CountKind.total:
                return counts.homonymous
            case CountKind.verb:
                return counts.verb_homonymous
            case CountKind.noun:
                return counts.noun_homonymous


class CorrelationPoint(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    model_id: str
    homonymous: int
    fraction: float


class CorrelationEntry(BaseModel):
    """Rank correlation of one order's fractions with a count of ambiguous words.

    Each word is either homonymous or polysemous, so the polysemous count is a
    decreasing function of the homonymous one and its correlation has the
    opposite sign.
    """

    phrase_type: PhraseType
    label: str
    count: CountKind
    n: int
    rho_homonymous: float | None = None
    rho_polysemous: float | None = None
    p_value: float | None = None
    method: CorrelationMethod | None = None
    reason: str | None = Field(
        default=None, description="Why the correlation could not be computed"
    )
    points: list[CorrelationPoint] = Field(default_factory=list)


def correlation_table(
    reports: Sequence[ModelReport],
    alternative: Alternative = Alternative.two_sided,
    orders: Mapping[PhraseType, str] = CORRELATED_ORDERS,
) -> list[CorrelationEntry]:
    """Correlate fractions with total, verb and noun homonymous counts.

    Gives an entry for each count and phrase type, subject-verb first. Entries
    that cannot be computed carry a reason instead of a coefficient.

    Raises:
        MissingMetaError: If a model has a phrase type but no ambiguity labels

    """
    for report in reports:
        if report.phrase_type is None or report.ambiguity is None:
            raise MissingMetaError(
                "Model has no phrase type or ambiguity labels", report.model_id
            )

    entries: list[CorrelationEntry] = []
    for count in CountKind:
        for phrase_type in PhraseType:
            label = orders[phrase_type]
            points = []
            for report in sorted(reports, key=lambda report: report.model_id):
                entry = report.fraction(label)
                if report.phrase_type is not phrase_type or entry is None:
                    continue
                assert report.ambiguity is not None
                points.append(
                    CorrelationPoint(
                        model_id=report.model_id,
                        homonymous=count.homonymous(report.ambiguity),
                        fraction=entry.value,
                    )
                )

            correlation = CorrelationEntry(
                phrase_type=phrase_type,
                label=label,
                count=count,
                n=len(points),
                points=points,
            )
            try:
                result = spearman(
                    [point.fraction for point in points],
                    [point.homonymous for point in points],
                    alternative,
                )
            except InputError as e:
                logger.info("No %s correlation for %s: %s", count.value, label, e)
                correlation.reason = f"{type(e).__name__}: {e.message}"
            else:
                correlation.rho_homonymous = result.rho
                # 0.0 rather than -0.0
                correlation.rho_polysemous = -result.rho if result.rho else 0.0
                correlation.p_value = result.p_value
                correlation.method = result.method
            entries.append(correlation)

    return entries
