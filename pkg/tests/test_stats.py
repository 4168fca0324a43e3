import math

import numpy as np
import pytest

from caufrac.errors import ConstantInputError, MissingMetaError, SampleSizeError
from caufrac.fraction import Method
from caufrac.linguistics import AmbiguityCounts, PhraseType
from caufrac.orders import Chain, NoSignalling
from caufrac.stats import (
    Alternative,
    CorrelationMethod,
    CountKind,
    FractionEntry,
    ModelReport,
    _t_p_value,
    correlation_table,
    spearman,
    summarize_fractions,
)


def test_spearman_with_ties():
    result = spearman([1, 2, 2, 4], [1, 3, 2, 4])
    assert result.rho == pytest.approx(math.sqrt(0.9))
    assert result.p_value == pytest.approx(1 / 6)
    assert result.n == 4
    assert result.method is CorrelationMethod.exact_permutation


def test_spearman_perfect_agreement():
    result = spearman([1, 2, 3], [10, 20, 30])
    assert result.rho == 1
    assert result.p_value == pytest.approx(1 / 3)


def test_spearman_one_sided():
    greater = spearman([1, 2, 3], [10, 20, 30], Alternative.greater)
    less = spearman([1, 2, 3], [10, 20, 30], Alternative.less)
    assert greater.p_value == pytest.approx(1 / 6)
    assert less.p_value == 1


def test_spearman_of_sample_with_itself():
    x = [0.3, 0.1, 0.9, 0.5, 0.7]
    assert spearman(x, x).rho == pytest.approx(1)
    assert spearman(x, x[::-1]).rho == pytest.approx(spearman(x[::-1], x).rho)
    assert spearman(x, [-v for v in x]).rho == pytest.approx(-1)


def test_spearman_ignores_monotone_transforms():
    x = [0.2, 0.5, 0.1, 0.9, 0.4, 0.3]
    y = [3, 1, 2, 6, 4, 5]
    plain = spearman(x, y)
    transformed = spearman([math.exp(v) for v in x], [v**3 for v in y])
    assert transformed.rho == pytest.approx(plain.rho)
    assert transformed.p_value == pytest.approx(plain.p_value)


def test_spearman_needs_three_samples():
    with pytest.raises(SampleSizeError):
        spearman([1, 2], [2, 1])


def test_spearman_of_constant_sample():
    with pytest.raises(ConstantInputError):
        spearman([1, 2, 3], [5, 5, 5])


def test_exact_and_approximate_p_values_agree():
    x = list(range(1, 10))
    y = [2, 5, 1, 4, 3, 8, 6, 9, 7]
    result = spearman(x, y)
    assert result.method is CorrelationMethod.exact_permutation
    assert result.rho == pytest.approx(1 - 6 * 28 / 720)
    approximate = _t_p_value(result.rho, 9, Alternative.two_sided)
    assert result.p_value == pytest.approx(approximate, abs=0.05)


def test_large_samples_use_t_approximation():
    rng = np.random.default_rng(0)
    x = rng.random(30)
    result = spearman(x, x + rng.random(30))
    assert result.method is CorrelationMethod.t_approximation
    assert 0 < result.rho < 1
    assert result.p_value < 0.05


def entry(label: str, gamma: str) -> FractionEntry:
    first, _, second = label.partition("->")
    order = NoSignalling() if label == "NS" else Chain(first=first, second=second)
    return FractionEntry(order=order, label=label, gamma=gamma, method=Method.lp)


def report(
    model_id: str,
    phrase_type: PhraseType | None = PhraseType.subject_verb,
    ambiguity: tuple[int, int, int, int] | None = (1, 1, 1, 1),
    **gammas: str,
) -> ModelReport:
    return ModelReport(
        model_id=model_id,
        phrase_type=phrase_type,
        ambiguity=None if ambiguity is None else AmbiguityCounts(*ambiguity),
        fractions=[
            entry(label.replace("_", "->"), gamma) for label, gamma in gammas.items()
        ],
    )


def test_summary_of_full_fractions():
    reports = [report(f"m{k}", S_V="1", V_S="1", NS="1") for k in range(3)]
    summary = summarize_fractions(reports, threshold=0.7, bins=4)
    assert [h.label for h in summary.histograms] == ["S->V", "V->S", "NS"]
    for histogram in summary.histograms:
        assert histogram.counts == [0, 0, 0, 3]
        assert histogram.edges == [0.0, 0.25, 0.5, 0.75, 1.0]
        assert histogram.share_above == 1
        assert histogram.median == 1
    # Ties go to the first order
    assert summary.dominant[0].shares == {"S->V": 1.0, "V->S": 0.0, "NS": 0.0}


def test_summary_median_and_share():
    reports = [report("a", S_V="1/5"), report("b", S_V="4/5")]
    (histogram,) = summarize_fractions(reports, threshold=0.7).histograms
    assert histogram.median == pytest.approx(0.5)
    assert histogram.share_above == 0.5
    assert histogram.n == 2
    assert sum(histogram.counts) == 2


def test_summary_does_not_depend_on_model_order():
    reports = [
        report("a", S_V="1/5", V_S="1/2"),
        report("b", S_V="4/5", V_S="1/3"),
        report("c", S_V="13/42", V_S="1"),
    ]
    assert summarize_fractions(reports) == summarize_fractions(reports[::-1])


def test_summary_by_phrase_type():
    reports = [
        report("sv", S_V="1/2", V_S="1"),
        report("vo", PhraseType.verb_object, V_O="1/2", O_V="1"),
        report("bare", None, None, A_B="0"),
    ]
    summary = summarize_fractions(reports)
    assert [(h.phrase_type, h.label) for h in summary.histograms] == [
        (None, "A->B"),
        (PhraseType.subject_verb, "S->V"),
        (PhraseType.subject_verb, "V->S"),
        (PhraseType.verb_object, "V->O"),
        (PhraseType.verb_object, "O->V"),
    ]
    assert [d.shares for d in summary.dominant] == [
        {"A->B": 1.0},
        {"S->V": 0.0, "V->S": 1.0},
        {"V->O": 0.0, "O->V": 1.0},
    ]


def test_empty_summary():
    summary = summarize_fractions([])
    assert summary.histograms == []
    assert summary.dominant == []


def test_correlation_with_homonymous_words():
    ambiguities = [(0, 0, 2, 2), (1, 0, 1, 2), (1, 1, 1, 1), (2, 2, 0, 0)]
    reports = [
        report(f"m{k}", ambiguity=counts, S_V=f"{sum(counts[:2])}/4")
        for k, counts in enumerate(ambiguities)
    ]
    entries = correlation_table(reports)
    assert [(e.count, e.phrase_type) for e in entries] == [
        (count, phrase_type) for count in CountKind for phrase_type in PhraseType
    ]

    total = entries[0]
    assert total.n == 4
    assert total.rho_homonymous == pytest.approx(1)
    assert total.rho_polysemous == pytest.approx(-1)
    assert total.p_value == pytest.approx(1 / 12)
    assert [point.homonymous for point in total.points] == [0, 1, 2, 4]

    verb = entries[2]
    assert verb.count is CountKind.verb
    assert 0 < verb.rho_homonymous < 1

    # No verb-object models
    assert entries[1].n == 0
    assert entries[1].rho_homonymous is None
    assert entries[1].reason.startswith("SampleSizeError")


def test_correlation_of_constant_counts():
    reports = [report(f"m{k}", S_V=f"{k}/3") for k in range(4)]
    entries = correlation_table(reports)
    assert entries[0].reason.startswith("ConstantInputError")
    assert entries[0].n == 4


def test_correlation_uses_object_to_verb_for_verb_object():
    reports = [
        report(f"m{k}", PhraseType.verb_object, (k, 0, 2 - k, 2), O_V=f"{k}/2")
        for k in range(3)
    ]
    entries = correlation_table(reports)
    assert entries[1].label == "O->V"
    assert entries[1].rho_homonymous == pytest.approx(1)


def test_correlation_needs_ambiguity_labels():
    with pytest.raises(MissingMetaError):
        correlation_table([report("bare", None, None, A_B="1")])
