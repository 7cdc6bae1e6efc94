"""Built-in statistical word aligner.

An EM-trained lexical translation model (the classic one-to-one translation
table with a NULL source token) estimating p(target_lemma | source_lemma).
It exists so the mining pipeline can run end-to-end without external neural
alignment tooling; the miner's occurrence-count threshold is the defense
against the noisier links this model produces.

The per-iteration expectation sweep is the hot loop and runs on the kernel
backend selected in :mod:`lexsel._kernels`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from lexsel import _kernels
from lexsel.corpus import Corpus, SentencePair
from lexsel.errors import LexselError

NULL_TOKEN = "<NULL>"
UNKNOWN_PROB_FLOOR = 1e-12
DEFAULT_ITERATIONS = 5
SERIALIZE_MIN_PROB = 1e-6


@dataclass(frozen=True)
class TranslationTable:
    """Sparse p(target_lemma | source_lemma) table.

    ``probs`` maps each source lemma (including :data:`NULL_TOKEN`) to its
    distribution over co-occurring target lemmas. Freshly trained tables are
    normalized per source lemma; tables reloaded from disk may sum to less
    than 1 because serialization drops probabilities below
    :data:`SERIALIZE_MIN_PROB`.
    """

    probs: dict[str, dict[str, float]]
    log_likelihood_history: tuple[float, ...] = field(default=())

    def prob(self, source_lemma: str, target_lemma: str) -> float:
        p = self.probs.get(source_lemma, {}).get(target_lemma, UNKNOWN_PROB_FLOOR)
        return max(p, UNKNOWN_PROB_FLOOR)

    def validate(self, tol: float = 1e-9) -> None:
        """Check per-source normalization; raises on violation."""
        for source, dist in self.probs.items():
            total = sum(dist.values())
            if any(p < 0.0 for p in dist.values()):
                raise ValueError(f"negative probability under source {source!r}")
            if abs(total - 1.0) > tol:
                raise ValueError(f"distribution for {source!r} sums to {total}, not 1")


def _encode(corpus: Corpus):
    """Encode lemma sequences as int arrays with NULL prepended to each source."""
    src_vocab: dict[str, int] = {NULL_TOKEN: 0}
    tgt_vocab: dict[str, int] = {}
    src_sents = []
    tgt_sents = []
    for pair in corpus.pairs:
        src_ids = [0]
        for tok in pair.source_tokens:
            src_ids.append(src_vocab.setdefault(tok.lemma, len(src_vocab)))
        tgt_ids = []
        for tok in pair.target_tokens:
            tgt_ids.append(tgt_vocab.setdefault(tok.lemma, len(tgt_vocab)))
        src_sents.append(src_ids)
        tgt_sents.append(tgt_ids)
    return src_vocab, tgt_vocab, src_sents, tgt_sents


def _flatten(sents: list[list[int]]):
    offsets = np.zeros(len(sents) + 1, dtype=np.int64)
    for i, s in enumerate(sents):
        offsets[i + 1] = offsets[i] + len(s)
    concat = np.empty(int(offsets[-1]), dtype=np.int32)
    pos = 0
    for s in sents:
        concat[pos:pos + len(s)] = s
        pos += len(s)
    return concat, offsets


def train_model1(corpus: Corpus, iterations: int = DEFAULT_ITERATIONS) -> TranslationTable:
    """Train the lexical translation table with ``iterations`` EM sweeps.

    Starts from a uniform distribution over the target lemmas observed with
    each source lemma; training operates on lemmas with a NULL source token
    prepended to every sentence. The returned table records the corpus
    log-likelihood of the table state *before* each sweep, so the history is
    non-decreasing.
    """
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    if not corpus.pairs:
        raise LexselError("cannot train the aligner on an empty corpus")

    src_vocab, tgt_vocab, src_sents, tgt_sents = _encode(corpus)
    src_concat, src_off = _flatten(src_sents)
    tgt_concat, tgt_off = _flatten(tgt_sents)

    cooc: set[tuple[int, int]] = set()
    for src_ids, tgt_ids in zip(src_sents, tgt_sents):
        for s in set(src_ids):
            for t in set(tgt_ids):
                cooc.add((s, t))
    rows = sorted(cooc)
    pair_src = np.array([s for s, _ in rows], dtype=np.int32)
    pair_tgt = np.array([t for _, t in rows], dtype=np.int32)

    fanout = np.zeros(len(src_vocab), dtype=np.int64)
    for s, _ in rows:
        fanout[s] += 1
    probs = np.array([1.0 / fanout[s] for s, _ in rows], dtype=np.float64)

    history = []
    for _ in range(iterations):
        probs, loglik = _kernels.em_iteration(
            src_concat, src_off, tgt_concat, tgt_off, pair_src, pair_tgt, probs
        )
        history.append(loglik)

    src_names = {i: lemma for lemma, i in src_vocab.items()}
    tgt_names = {i: lemma for lemma, i in tgt_vocab.items()}
    table: dict[str, dict[str, float]] = {}
    for r, (s, t) in enumerate(rows):
        table.setdefault(src_names[s], {})[tgt_names[t]] = float(probs[r])
    return TranslationTable(probs=table, log_likelihood_history=tuple(history))


def align_pair(table: TranslationTable, pair: SentencePair) -> set[tuple[int, int]]:
    """Greedy per-target-token alignment under the translation table.

    Each target token links to its argmax source token; a NULL argmax emits
    no link. Ties go to the smaller source index, with NULL winning ties
    against every real token. Unknown lemma pairs fall back to a floor
    probability, so this never raises.
    """
    links: set[tuple[int, int]] = set()
    for tgt in pair.target_tokens:
        best_prob = table.prob(NULL_TOKEN, tgt.lemma)
        best_index = None
        for i, src in enumerate(pair.source_tokens):
            p = table.prob(src.lemma, tgt.lemma)
            if p > best_prob:
                best_prob = p
                best_index = i
        if best_index is not None:
            links.add((best_index, tgt.index))
    return links


def align_corpus(table: TranslationTable, corpus: Corpus) -> list[set[tuple[int, int]]]:
    """Alignments for every pair, in corpus order."""
    return [align_pair(table, pair) for pair in corpus.pairs]


def format_pharaoh(links: set[tuple[int, int]]) -> str:
    return " ".join(f"{i}-{j}" for i, j in sorted(links))


def save_table_jsonl(table: TranslationTable, path: str | Path) -> None:
    """Write {source, target, prob} triples, dropping probabilities < 1e-6."""
    with open(path, "w", encoding="utf-8") as fh:
        for source in sorted(table.probs):
            dist = table.probs[source]
            for target in sorted(dist):
                p = dist[target]
                if p >= SERIALIZE_MIN_PROB:
                    fh.write(json.dumps(
                        {"source": source, "target": target, "prob": p},
                        ensure_ascii=False,
                    ) + "\n")


def load_table_jsonl(path: str | Path) -> TranslationTable:
    probs: dict[str, dict[str, float]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            probs.setdefault(obj["source"], {})[obj["target"]] = float(obj["prob"])
    return TranslationTable(probs=probs)
