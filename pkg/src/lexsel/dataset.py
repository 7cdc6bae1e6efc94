"""Selection test-set construction: filtering, sampling, and finalization.

From mined concepts, keep those whose variation usage is close to uniform,
sample a fixed number of concepts and sentences per concept (every variation
represented at least once), and accept an item into the final dataset only
when a majority of annotators independently reproduce the gold variation
from source-side context alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from random import Random
from typing import Mapping, Sequence

from lexsel.corpus import Corpus, SentencePair
from lexsel.errors import DatasetError
from lexsel.mine import Concept

MAX_DEVIATION = 0.20
MAX_CONCEPTS = 20
PER_CONCEPT = 10

STATUS_CANDIDATE = "candidate"
STATUS_ACCEPTED = "accepted"
STATUS_REJECTED = "rejected"

ACCEPTANCE_RULE = "strict majority of annotator judgments equals the gold variation"


@dataclass(frozen=True)
class SelectionItem:
    """One lexical-selection task instance.

    Candidates are stored in canonical (lexicographic) order; presentation
    shuffling is applied downstream, per annotator or per evaluation seed.
    ``concept_index`` marks the concept occurrence in the source sentence so
    interfaces can highlight it.
    """

    id: str
    concept: tuple[str, str]
    source_tokens: tuple[str, ...]
    candidates: tuple[str, ...]
    gold: str
    pair_ref: str
    concept_index: int = 0

    def __post_init__(self):
        if len(self.candidates) < 2:
            raise ValueError(f"item {self.id}: needs >= 2 candidates")
        if self.gold not in self.candidates:
            raise ValueError(f"item {self.id}: gold {self.gold!r} not among candidates")
        if tuple(sorted(self.candidates)) != self.candidates:
            raise ValueError(f"item {self.id}: candidates must be in canonical order")

    @property
    def source_text(self) -> str:
        return " ".join(self.source_tokens)


@dataclass(frozen=True)
class DatasetSplit:
    """Items with their acceptance status after annotator review."""

    language_pair: tuple[str, str]
    items: tuple[SelectionItem, ...]
    status: Mapping[str, str] = field(default_factory=dict)
    acceptance_rule: str = ACCEPTANCE_RULE

    def accepted_items(self) -> tuple[SelectionItem, ...]:
        return tuple(i for i in self.items if self.status.get(i.id) == STATUS_ACCEPTED)

    @property
    def acceptance_fraction(self) -> float:
        if not self.items:
            return 0.0
        return len(self.accepted_items()) / len(self.items)


def uniformity_filter(
    concepts: Sequence[Concept], max_deviation: float = MAX_DEVIATION
) -> list[Concept]:
    """Keep concepts whose every variation probability is within
    ``max_deviation`` of uniform (1/k). The comparison is inclusive: a
    deviation of exactly ``max_deviation`` passes."""
    kept = []
    for concept in concepts:
        k = len(concept.variations)
        if all(abs(v.probability - 1.0 / k) <= max_deviation for v in concept.variations):
            kept.append(concept)
    return kept


def _usable_pairs(
    concept: Concept, pairs_by_id: Mapping[str, SentencePair]
) -> dict[str, list[SentencePair]]:
    """Per-variation sentence pools, excluding pairs referenced by more than
    one variation of the same concept (their gold would be ambiguous)."""
    ref_count: dict[str, int] = {}
    for refs in concept.example_refs.values():
        for ref in refs:
            ref_count[ref] = ref_count.get(ref, 0) + 1
    pools: dict[str, list[SentencePair]] = {}
    for variation in concept.variation_lemmas():
        pool = []
        for ref in concept.example_refs.get(variation, ()):
            if ref_count[ref] == 1 and ref in pairs_by_id:
                pool.append(pairs_by_id[ref])
        pools[variation] = sorted(pool, key=lambda p: p.id)
    return pools


def _concept_token_index(pair: SentencePair, concept: Concept, gold: str) -> int:
    for i, j in sorted(pair.alignment):
        src = pair.source_tokens[i]
        if (src.lemma, src.pos) == concept.key and pair.target_tokens[j].lemma == gold:
            return i
    for i, tok in enumerate(pair.source_tokens):
        if tok.lemma == concept.lemma:
            return i
    return 0


def sample_task(
    concepts: Sequence[Concept],
    corpus: Corpus,
    max_concepts: int = MAX_CONCEPTS,
    per_concept: int = PER_CONCEPT,
    seed: int = 0,
) -> list[SelectionItem]:
    """Sample concepts and per-concept sentences into selection items.

    Uniformly samples ``min(max_concepts, len(concepts))`` concepts with the
    given seed. For each, one sentence per variation is selected first (the
    coverage constraint), then remaining slots up to ``per_concept`` are
    filled by seeded uniform sampling without replacement. When a concept has
    fewer usable sentences than ``per_concept``, all of them are used;
    coverage always takes priority.
    """
    rng = Random(seed)
    ordered = sorted(concepts, key=lambda c: c.key)
    if len(ordered) > max_concepts:
        chosen = rng.sample(ordered, max_concepts)
        chosen.sort(key=lambda c: c.key)
    else:
        chosen = ordered

    pairs_by_id = {p.id: p for p in corpus.pairs}
    items: list[SelectionItem] = []
    for concept in chosen:
        pools = _usable_pairs(concept, pairs_by_id)
        for variation, pool in pools.items():
            if not pool:
                raise DatasetError(
                    f"concept {concept.lemma}/{concept.pos}: variation {variation!r} "
                    "has no usable sentences, cannot satisfy variation coverage"
                )
        picked: list[tuple[SentencePair, str]] = []
        picked_ids: set[str] = set()
        for variation in sorted(pools):
            pair = rng.choice(pools[variation])
            picked.append((pair, variation))
            picked_ids.add(pair.id)
        remaining = [
            (pair, variation)
            for variation in sorted(pools)
            for pair in pools[variation]
            if pair.id not in picked_ids
        ]
        n_fill = min(max(per_concept - len(picked), 0), len(remaining))
        if n_fill:
            picked.extend(rng.sample(remaining, n_fill))

        candidates = tuple(sorted(concept.variation_lemmas()))
        concept_items = [
            SelectionItem(
                id=f"{concept.lemma}|{concept.pos}|{pair.id}",
                concept=concept.key,
                source_tokens=tuple(t.surface for t in pair.source_tokens),
                candidates=candidates,
                gold=gold,
                pair_ref=pair.id,
                concept_index=_concept_token_index(pair, concept, gold),
            )
            for pair, gold in picked
        ]
        concept_items.sort(key=lambda item: item.id)
        items.extend(concept_items)
    return items


def finalize(
    items: Sequence[SelectionItem],
    judgments: Mapping[str, Sequence[str]],
    language_pair: tuple[str, str] = ("und", "und"),
) -> DatasetSplit:
    """Accept each item whose gold variation won a strict majority of its
    annotator judgments; reject the rest as lacking sufficient context."""
    status = {}
    for item in items:
        votes = judgments.get(item.id, ())
        if not votes:
            raise DatasetError(f"item {item.id} has no judgments")
        n_gold = sum(1 for v in votes if v == item.gold)
        status[item.id] = STATUS_ACCEPTED if n_gold * 2 > len(votes) else STATUS_REJECTED
    return DatasetSplit(language_pair=language_pair, items=tuple(items), status=status)


def check_gold_recoverable(split: DatasetSplit, corpus: Corpus) -> list[str]:
    """Ids of accepted items whose gold lemma is absent from the referenced
    target sentence; empty means the dataset is consistent with its corpus."""
    pairs_by_id = {p.id: p for p in corpus.pairs}
    bad = []
    for item in split.accepted_items():
        pair = pairs_by_id.get(item.pair_ref)
        if pair is None or item.gold not in {t.lemma for t in pair.target_tokens}:
            bad.append(item.id)
    return bad


def save_items_jsonl(
    items: Sequence[SelectionItem],
    path: str | Path,
    language_pair: tuple[str, str] = ("und", "und"),
    status: Mapping[str, str] | None = None,
) -> None:
    status = status or {}
    with open(path, "w", encoding="utf-8") as fh:
        meta = {"_meta": {"source_lang": language_pair[0], "target_lang": language_pair[1]}}
        fh.write(json.dumps(meta, ensure_ascii=False) + "\n")
        for item in items:
            obj = {
                "id": item.id,
                "concept": {"lemma": item.concept[0], "pos": item.concept[1]},
                "source_text": item.source_text,
                "source_tokens": list(item.source_tokens),
                "candidates": list(item.candidates),
                "gold": item.gold,
                "pair_ref": item.pair_ref,
                "concept_index": item.concept_index,
                "status": status.get(item.id, STATUS_CANDIDATE),
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def load_items_jsonl(
    path: str | Path,
) -> tuple[list[SelectionItem], dict[str, str], tuple[str, str]]:
    """Returns (items, status map, language pair)."""
    items = []
    status = {}
    language_pair = ("und", "und")
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "_meta" in obj:
                meta = obj["_meta"]
                language_pair = (meta.get("source_lang", "und"), meta.get("target_lang", "und"))
                continue
            try:
                item = SelectionItem(
                    id=obj["id"],
                    concept=(obj["concept"]["lemma"], obj["concept"]["pos"]),
                    source_tokens=tuple(obj["source_tokens"]),
                    candidates=tuple(obj["candidates"]),
                    gold=obj["gold"],
                    pair_ref=obj["pair_ref"],
                    concept_index=obj.get("concept_index", 0),
                )
            except (KeyError, TypeError) as exc:
                raise DatasetError(f"{path}: bad dataset record ({exc})") from exc
            items.append(item)
            status[item.id] = obj.get("status", STATUS_CANDIDATE)
    return items, status, language_pair


def save_split(split: DatasetSplit, path: str | Path) -> None:
    save_items_jsonl(split.items, path, split.language_pair, split.status)


def load_split(path: str | Path) -> DatasetSplit:
    items, status, language_pair = load_items_jsonl(path)
    return DatasetSplit(language_pair=language_pair, items=tuple(items), status=status)
