"""Inter-annotator agreement and pipeline precision/recall.

Three statistics per judgment matrix: total agreement (the unanimity
fraction), Fleiss' kappa, and PABAK. Kappa is reported alongside PABAK
because imbalanced label distributions can drive kappa negative even when
annotators almost always agree; PABAK corrects for that prevalence effect.
Here PABAK is 2 * total_agreement - 1, the binary-category form.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from lexsel.annotate.store import Judgment
from lexsel.annotate.tasks import task_ref


@dataclass(frozen=True)
class AgreementReport:
    n_items: int
    n_annotators: int
    total_agreement: float
    fleiss_kappa: float | None
    pabak: float

    def to_json(self) -> dict:
        return {
            "n_items": self.n_items,
            "n_annotators": self.n_annotators,
            "total_agreement": self.total_agreement,
            "fleiss_kappa": self.fleiss_kappa,
            "pabak": self.pabak,
        }


def agreement(matrix: Sequence[Sequence[object]]) -> AgreementReport:
    """Agreement statistics over an n_items x k label matrix.

    total_agreement is the fraction of rows whose k labels are identical.
    Fleiss' kappa uses mean per-row pairwise agreement against expected
    agreement P_e from the pooled label distribution; it is undefined
    (None) exactly when P_e = 1, i.e. only one label occurs anywhere.
    """
    if not matrix:
        raise ValueError("empty judgment matrix")
    k = len(matrix[0])
    if k < 2:
        raise ValueError(f"need >= 2 annotators, matrix rows have {k}")
    for i, row in enumerate(matrix):
        if len(row) != k:
            raise ValueError(f"ragged matrix: row {i} has {len(row)} labels, expected {k}")

    n = len(matrix)
    unanimous = 0
    pairwise_sum = 0.0
    pooled: Counter = Counter()
    for row in matrix:
        counts = Counter(row)
        pooled.update(counts)
        if len(counts) == 1:
            unanimous += 1
        pairwise_sum += sum(c * (c - 1) for c in counts.values()) / (k * (k - 1))

    total_agreement = unanimous / n
    p_bar = pairwise_sum / n
    total_labels = n * k
    p_e = sum((c / total_labels) ** 2 for c in pooled.values())
    kappa = None if p_e >= 1.0 else (p_bar - p_e) / (1.0 - p_e)
    return AgreementReport(
        n_items=n,
        n_annotators=k,
        total_agreement=total_agreement,
        fleiss_kappa=kappa,
        pabak=2.0 * total_agreement - 1.0,
    )


def judgment_matrix(
    judgments: Iterable[Judgment],
    annotator_ids: Sequence[str] | None = None,
) -> tuple[list[list[str]], list[str], list[str]]:
    """Latest-wins matrix from journal entries, complete rows only.

    Rows are items (task-id prefixes shared across annotators), columns are
    annotators; an item enters the matrix once every annotator has judged
    it. Returns (matrix, item refs, annotator column order).
    """
    latest: dict[tuple[str, str], str] = {}
    for j in judgments:
        latest[(task_ref(j.task_id), j.annotator_id)] = j.value
    observed = sorted({a for _, a in latest})
    annotators = list(annotator_ids) if annotator_ids is not None else observed
    refs = sorted({ref for ref, _ in latest})
    matrix = []
    kept_refs = []
    for ref in refs:
        if all((ref, a) in latest for a in annotators):
            matrix.append([latest[(ref, a)] for a in annotators])
            kept_refs.append(ref)
    return matrix, kept_refs, annotators


def precision_recall(
    concepts: Sequence,
    variation_flags: Mapping[tuple[str, str, str], Sequence[bool]],
    missing_flags: Mapping[tuple[str, str], Sequence[bool]],
) -> tuple[float, float]:
    """Pipeline quality from expert feedback.

    ``variation_flags[(lemma, pos, variation)]`` holds one boolean per
    annotator: does this variation genuinely belong to the concept?
    ``missing_flags[(lemma, pos)]`` holds one boolean per annotator: is a
    key variation missing from the concept? A variation counts accurate on
    a strict majority of True; a concept counts complete on a strict
    majority of False. Precision is accurate/all variations, recall is
    complete/all concepts.
    """
    if not concepts:
        raise ValueError("no concepts to score")
    n_variations = 0
    n_accurate = 0
    n_complete = 0
    for concept in concepts:
        for variation in concept.variation_lemmas():
            key = (concept.lemma, concept.pos, variation)
            flags = variation_flags.get(key)
            if not flags:
                raise ValueError(f"variation {key} has no match flags")
            n_variations += 1
            if sum(bool(f) for f in flags) * 2 > len(flags):
                n_accurate += 1
        flags = missing_flags.get((concept.lemma, concept.pos))
        if not flags:
            raise ValueError(f"concept ({concept.lemma}, {concept.pos}) has no missing flags")
        if sum(1 for f in flags if not f) * 2 > len(flags):
            n_complete += 1
    return n_accurate / n_variations, n_complete / len(concepts)


def rule_correct_fraction(rule_flags: Mapping[str, Sequence[bool]]) -> float:
    """Fraction of rules judged correct by a strict majority of annotators."""
    if not rule_flags:
        raise ValueError("no rule flags")
    correct = 0
    for ref, flags in rule_flags.items():
        if not flags:
            raise ValueError(f"rule {ref} has no flags")
        if sum(bool(f) for f in flags) * 2 > len(flags):
            correct += 1
    return correct / len(rule_flags)
