"""Concept mining: find source lexemes with multiple target-language variations.

The pipeline aggregates alignment links into a one-to-many map from source
(lemma, POS) tuples to target lemmas, then filters by per-variation occurrence
count, by the entropy of the renormalized variation distribution, and by
source word sense to keep polysemous splits from masquerading as concept
variation.
"""

from __future__ import annotations

import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from lexsel.corpus import Corpus
from lexsel.errors import MiningError

log = logging.getLogger(__name__)

MIN_COUNT = 50
MIN_VARIATIONS = 2
ENTROPY_THRESHOLD = 0.69


@dataclass(frozen=True)
class Variation:
    """One target-language variation of a concept."""

    lemma: str
    count: int
    probability: float
    majority_sense_fraction: float = 1.0


@dataclass(frozen=True)
class Concept:
    """A source (lemma, POS) tuple with its surviving variations."""

    lemma: str
    pos: str
    variations: tuple[Variation, ...]
    entropy: float
    majority_sense: str | None = None
    example_refs: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    @property
    def key(self) -> tuple[str, str]:
        return (self.lemma, self.pos)

    def variation_lemmas(self) -> tuple[str, ...]:
        return tuple(v.lemma for v in self.variations)


@dataclass
class _TargetStats:
    """Mutable accumulator for one (source tuple, target lemma) cell."""

    count: int = 0
    senses: Counter = field(default_factory=Counter)
    pair_ids: list[str] = field(default_factory=list)


LexemeMap = dict[tuple[str, str], dict[str, _TargetStats]]


def build_lexeme_map(corpus: Corpus) -> LexemeMap:
    """Aggregate alignment links into (source lemma, POS) -> target lemma counts.

    Counting is over lemmas, not surfaces; the source token's sense id (when
    present) is tallied per cell, and sentence pair ids are recorded once per
    pair in first-seen order.
    """
    mapping: LexemeMap = {}
    n_links = 0
    for pair in corpus.pairs:
        for i, j in sorted(pair.alignment):
            n_links += 1
            src = pair.source_tokens[i]
            tgt = pair.target_tokens[j]
            cell = mapping.setdefault((src.lemma, src.pos), {}).setdefault(
                tgt.lemma, _TargetStats()
            )
            cell.count += 1
            if src.sense_id is not None:
                cell.senses[src.sense_id] += 1
            if pair.id not in cell.pair_ids:
                cell.pair_ids.append(pair.id)
    if n_links == 0:
        raise MiningError(
            "corpus has no alignment links; run the aligner or attach_alignments first"
        )
    return mapping


def variation_probability(counts: Sequence[int], i: int) -> float:
    """Conditional probability of variation ``i`` given its siblings' counts."""
    total = sum(counts)
    if total <= 0:
        raise ValueError("variation counts are all zero")
    if not (0 <= i < len(counts)):
        raise IndexError(f"variation index {i} out of range for {len(counts)} counts")
    return counts[i] / total


def concept_entropy(counts: Sequence[int]) -> float:
    """Entropy in nats of the variation distribution derived from ``counts``."""
    if not counts:
        raise ValueError("cannot compute entropy of an empty count sequence")
    if any(c <= 0 for c in counts):
        raise ValueError("all counts must be positive")
    total = sum(counts)
    return -sum((c / total) * math.log(c / total) for c in counts)


def _majority_sense(cells: dict[str, _TargetStats]) -> str | None:
    pooled: Counter = Counter()
    for cell in cells.values():
        pooled.update(cell.senses)
    if not pooled:
        return None
    # deterministic tie-break: highest count, then lexicographically smallest
    return min(pooled.items(), key=lambda kv: (-kv[1], kv[0]))[0]


def _sense_fraction(cell: _TargetStats, majority: str | None) -> float:
    annotated = sum(cell.senses.values())
    if majority is None or annotated == 0:
        return 1.0
    return cell.senses.get(majority, 0) / annotated


def extract_concepts(
    corpus: Corpus,
    min_count: int = MIN_COUNT,
    min_variations: int = MIN_VARIATIONS,
    entropy_threshold: float = ENTROPY_THRESHOLD,
    sense_filter: bool = True,
) -> list[Concept]:
    """Run the full mining pipeline and return concepts sorted by entropy.

    Filters, in order: (1) per-variation occurrence count >= ``min_count``
    and >= ``min_variations`` surviving variations; (2) entropy of the
    renormalized surviving distribution >= ``entropy_threshold``; (3) when
    ``sense_filter`` is on and the corpus carries sense annotations, drop
    variations whose occurrences carry the tuple's majority sense in a
    minority of (sense-annotated) cases, then re-apply (1) and (2).

    Output order is entropy descending, ties by lemma then POS, so runs are
    diffable.
    """
    mapping = build_lexeme_map(corpus)

    have_senses = any(
        cell.senses for cells in mapping.values() for cell in cells.values()
    )
    if sense_filter and not have_senses:
        log.warning("sense filter requested but corpus has no sense annotations; skipping")
        sense_filter = False

    def survivors(cells: dict[str, _TargetStats]) -> dict[str, _TargetStats] | None:
        kept = {t: c for t, c in cells.items() if c.count >= min_count}
        if len(kept) < min_variations:
            return None
        counts = [kept[t].count for t in kept]
        if concept_entropy(counts) < entropy_threshold:
            return None
        return kept

    concepts = []
    for (lemma, pos), cells in sorted(mapping.items()):
        kept = survivors(cells)
        if kept is None:
            continue

        majority = None
        fractions = {t: 1.0 for t in kept}
        if sense_filter:
            majority = _majority_sense(kept)
            fractions = {t: _sense_fraction(c, majority) for t, c in kept.items()}
            kept = {t: c for t, c in kept.items() if fractions[t] >= 0.5}
            if len(kept) < min_variations:
                continue
            kept = survivors(kept)
            if kept is None:
                continue

        total = sum(c.count for c in kept.values())
        variations = tuple(
            sorted(
                (
                    Variation(
                        lemma=t,
                        count=c.count,
                        probability=c.count / total,
                        majority_sense_fraction=fractions.get(t, 1.0),
                    )
                    for t, c in kept.items()
                ),
                key=lambda v: (-v.probability, v.lemma),
            )
        )
        concepts.append(
            Concept(
                lemma=lemma,
                pos=pos,
                variations=variations,
                entropy=concept_entropy([v.count for v in variations]),
                majority_sense=majority,
                example_refs={t: tuple(kept[t].pair_ids) for t in sorted(kept)},
            )
        )

    concepts.sort(key=lambda c: (-c.entropy, c.lemma, c.pos))
    return concepts


def save_concepts_jsonl(concepts: Sequence[Concept], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for c in concepts:
            obj = {
                "lemma": c.lemma,
                "pos": c.pos,
                "entropy": c.entropy,
                "variations": [
                    {
                        "lemma": v.lemma,
                        "count": v.count,
                        "probability": v.probability,
                        "majority_sense_fraction": v.majority_sense_fraction,
                    }
                    for v in c.variations
                ],
                "majority_sense": c.majority_sense,
                "example_refs": {t: list(refs) for t, refs in c.example_refs.items()},
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def load_concepts_jsonl(path: str | Path) -> list[Concept]:
    concepts = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            concepts.append(
                Concept(
                    lemma=obj["lemma"],
                    pos=obj["pos"],
                    variations=tuple(
                        Variation(
                            lemma=v["lemma"],
                            count=v["count"],
                            probability=v["probability"],
                            majority_sense_fraction=v.get("majority_sense_fraction", 1.0),
                        )
                        for v in obj["variations"]
                    ),
                    entropy=obj["entropy"],
                    majority_sense=obj.get("majority_sense"),
                    example_refs={
                        t: tuple(refs) for t, refs in obj.get("example_refs", {}).items()
                    },
                )
            )
    return concepts
