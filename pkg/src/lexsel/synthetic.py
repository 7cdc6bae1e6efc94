"""Deterministic synthetic corpus generator with planted concepts.

Builds a parallel corpus with exact alignments in which a known set of
concepts (source lemmas with several equally-used target variations, all
occurrences sharing one word sense) is planted alongside distractors that
each violate one mining filter: single-variation lexemes, variations below
the occurrence threshold, skewed low-entropy distributions, and polysemous
splits carrying a different sense. Used by the test suite to check the miner
recovers exactly the planted set, and by the kernel benchmark for realistic
input sizes.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Mapping

from lexsel.corpus import AnnotatedToken, Corpus, SentencePair

POS = "NOUN"


@dataclass(frozen=True)
class PlantedConcept:
    """Expected miner output for one planted concept."""

    lemma: str
    pos: str
    variation_counts: Mapping[str, int]
    sense: str


def _token(lemma: str, index: int, sense: str | None = None, pos: str = "X") -> AnnotatedToken:
    return AnnotatedToken(surface=lemma, lemma=lemma, pos=pos, sense_id=sense, index=index)


class _Builder:
    def __init__(self, seed: int, n_fillers: int = 40):
        self.rng = random.Random(seed)
        self.fillers = [(f"filler{i}", f"vul{i}") for i in range(n_fillers)]
        self.occurrences: list[tuple[str | None, str | None, str | None]] = []

    def add_occurrences(self, source: str, target: str, sense: str | None, count: int):
        self.occurrences.extend([(source, target, sense)] * count)

    def add_filler_pairs(self, count: int):
        self.occurrences.extend([(None, None, None)] * count)

    def build(self, language_pair: tuple[str, str]) -> Corpus:
        self.rng.shuffle(self.occurrences)
        pairs = []
        for n, (source, target, sense) in enumerate(self.occurrences):
            n_lead = self.rng.randint(1, 3)
            n_tail = self.rng.randint(1, 4)
            lead = [self.fillers[self.rng.randrange(len(self.fillers))] for _ in range(n_lead)]
            tail = [self.fillers[self.rng.randrange(len(self.fillers))] for _ in range(n_tail)]
            if source is None:
                # filler-only pair
                words = lead + tail
                src = [_token(s, i) for i, (s, _) in enumerate(words)]
                tgt = [_token(t, i) for i, (_, t) in enumerate(words)]
                links = frozenset((i, i) for i in range(len(words)))
            else:
                src = []
                tgt = []
                for i, (s, _) in enumerate(lead):
                    src.append(_token(s, i))
                src.append(_token(source, len(lead), sense=sense, pos=POS))
                for off, (s, _) in enumerate(tail):
                    src.append(_token(s, len(lead) + 1 + off))
                for i, (_, t) in enumerate(lead):
                    tgt.append(_token(t, i))
                tgt.append(_token(target, len(lead), pos=POS))
                for off, (_, t) in enumerate(tail):
                    tgt.append(_token(t, len(lead) + 1 + off))
                links = frozenset((i, i) for i in range(len(src)))
            pairs.append(
                SentencePair(
                    id=f"syn:{n}",
                    source_tokens=tuple(src),
                    target_tokens=tuple(tgt),
                    alignment=links,
                    provenance="synthetic",
                )
            )
        return Corpus(language_pair=language_pair, pairs=tuple(pairs))


def generate(
    n_concepts: int = 10,
    n_pairs: int = 5000,
    seed: int = 0,
    base_count: int = 60,
) -> tuple[Corpus, tuple[PlantedConcept, ...]]:
    """Generate a corpus of at least ``n_pairs`` pairs with planted concepts.

    Returns the corpus and the expected mining result: the planted concepts
    (with 2-4 uniformly used variations each) plus one polysemous lexeme
    whose minority-sense variation the sense filter should strip, leaving a
    clean two-variation concept. Distractors are included but not expected.
    """
    builder = _Builder(seed)
    expected = []

    for k in range(n_concepts):
        lemma = f"word{k}"
        sense = f"sense{k}"
        n_var = 2 + (k % 3)
        counts = {}
        for v in range(n_var):
            target = f"var{k}_{v}"
            builder.add_occurrences(lemma, target, sense, base_count)
            counts[target] = base_count
        expected.append(PlantedConcept(lemma=lemma, pos=POS, variation_counts=counts, sense=sense))

    # polysemous lexeme: two majority-sense variations survive, the
    # minority-sense one is stripped by the sense filter
    builder.add_occurrences("wordpoly", "varpoly_a", "sensepoly_main", 75)
    builder.add_occurrences("wordpoly", "varpoly_b", "sensepoly_main", 75)
    builder.add_occurrences("wordpoly", "varpoly_alt", "sensepoly_alt", base_count)
    expected.append(
        PlantedConcept(
            lemma="wordpoly",
            pos=POS,
            variation_counts={"varpoly_a": 75, "varpoly_b": 75},
            sense="sensepoly_main",
        )
    )

    # distractors, none of which should survive mining:
    # one variation only
    builder.add_occurrences("distsolo", "dvar_solo", "dsense0", 70)
    # second variation below the occurrence threshold
    builder.add_occurrences("distlow", "dvar_low_a", "dsense1", 70)
    builder.add_occurrences("distlow", "dvar_low_b", "dsense1", 30)
    # skewed distribution, entropy below the threshold
    builder.add_occurrences("distskew", "dvar_skew_a", "dsense2", 450)
    builder.add_occurrences("distskew", "dvar_skew_b", "dsense2", base_count)
    # pure polysemy: each variation belongs to a different sense
    builder.add_occurrences("distsense", "dvar_sense_a", "dsense3a", base_count)
    builder.add_occurrences("distsense", "dvar_sense_b", "dsense3b", base_count)

    remaining = n_pairs - len(builder.occurrences)
    if remaining > 0:
        builder.add_filler_pairs(remaining)

    corpus = builder.build(("en", "xx"))
    return corpus, tuple(expected)
