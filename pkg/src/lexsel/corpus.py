"""Parallel corpus loading and per-token annotation ingestion.

A corpus is an immutable collection of sentence pairs. Plain-text loaders
produce unannotated tokens (lemma = lowercased surface, POS "X"); richer
annotations are attached afterwards from CoNLL-U files and Pharaoh-format
alignment files produced by external tools, or by the built-in aligner.

Canonical on-disk form is JSONL, one sentence pair per line, preceded by a
single metadata line carrying the language pair so a file round-trips without
out-of-band information.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator

from lexsel.errors import CorpusFormatError


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _split_off_punct(chunk: str) -> list[str]:
    """Peel leading/trailing punctuation off a whitespace chunk."""
    lead = []
    trail = []
    while chunk and _is_punct(chunk[0]):
        lead.append(chunk[0])
        chunk = chunk[1:]
    while chunk and _is_punct(chunk[-1]):
        trail.append(chunk[-1])
        chunk = chunk[:-1]
    return lead + ([chunk] if chunk else []) + trail[::-1]


def tokenize(text: str, tokenizer: str = "default") -> list[str]:
    """Split ``text`` into surface tokens using a named tokenizer.

    "default" splits on whitespace and peels leading/trailing punctuation into
    separate tokens; "whitespace" splits on whitespace only.
    """
    if tokenizer == "whitespace":
        return text.split()
    if tokenizer == "default":
        out: list[str] = []
        for chunk in text.split():
            out.extend(_split_off_punct(chunk))
        return out
    raise ValueError(f"unknown tokenizer {tokenizer!r}")


@dataclass(frozen=True)
class AnnotatedToken:
    """One token with its linguistic annotations."""

    surface: str
    lemma: str
    pos: str = "X"
    sense_id: str | None = None
    index: int = 0

    def __post_init__(self):
        if not self.surface:
            raise ValueError("token surface must be non-empty")
        if not self.lemma:
            raise ValueError("token lemma must be non-empty")


@dataclass(frozen=True)
class SentencePair:
    """A source/target sentence pair with word-level alignment links."""

    id: str
    source_tokens: tuple[AnnotatedToken, ...]
    target_tokens: tuple[AnnotatedToken, ...]
    alignment: frozenset[tuple[int, int]]
    provenance: str = ""

    def __post_init__(self):
        for side_name, side in (("source", self.source_tokens), ("target", self.target_tokens)):
            for pos, tok in enumerate(side):
                if tok.index != pos:
                    raise ValueError(
                        f"pair {self.id}: {side_name} token {tok.surface!r} has index "
                        f"{tok.index}, expected {pos}"
                    )
        for i, j in self.alignment:
            if not (0 <= i < len(self.source_tokens)) or not (0 <= j < len(self.target_tokens)):
                raise ValueError(f"pair {self.id}: alignment link {i}-{j} out of range")

    @property
    def source_text(self) -> str:
        return " ".join(t.surface for t in self.source_tokens)

    @property
    def target_text(self) -> str:
        return " ".join(t.surface for t in self.target_tokens)


@dataclass(frozen=True)
class Corpus:
    """An immutable parallel corpus for one language pair."""

    language_pair: tuple[str, str]
    pairs: tuple[SentencePair, ...]

    def __post_init__(self):
        seen = set()
        for pair in self.pairs:
            if pair.id in seen:
                raise ValueError(f"duplicate sentence pair id {pair.id!r}")
            seen.add(pair.id)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[SentencePair]:
        return iter(self.pairs)


def _plain_tokens(surfaces: Iterable[str]) -> tuple[AnnotatedToken, ...]:
    return tuple(
        AnnotatedToken(surface=s, lemma=s.lower(), pos="X", sense_id=None, index=i)
        for i, s in enumerate(surfaces)
    )


def load_parallel(
    source_path: str | Path,
    target_path: str | Path | None = None,
    format: str = "moses-two-file",
    source_lang: str = "und",
    target_lang: str = "und",
    provenance: str | None = None,
    tokenizer: str = "default",
) -> Corpus:
    """Load a plain-text parallel corpus.

    "moses-two-file" expects two line-aligned files; "tsv" expects a single
    UTF-8 file with tab-separated [source, target] columns and ignores
    ``target_path``. Tokens are tokenized surfaces with lemma = lowercased
    surface, POS "X", no senses, and an empty alignment.
    """
    source_path = Path(source_path)
    if provenance is None:
        provenance = source_path.stem

    rows: list[tuple[str, str]] = []
    if format == "moses-two-file":
        if target_path is None:
            raise CorpusFormatError("moses-two-file format needs a target file")
        src_lines = source_path.read_text(encoding="utf-8").splitlines()
        tgt_lines = Path(target_path).read_text(encoding="utf-8").splitlines()
        if len(src_lines) != len(tgt_lines):
            raise CorpusFormatError(
                f"line count mismatch: {len(src_lines)} source lines vs "
                f"{len(tgt_lines)} target lines"
            )
        rows = list(zip(src_lines, tgt_lines))
    elif format == "tsv":
        for row_no, line in enumerate(source_path.read_text(encoding="utf-8").splitlines()):
            cols = line.split("\t")
            if len(cols) < 2:
                raise CorpusFormatError(f"tsv row {row_no} has {len(cols)} column(s), need >= 2")
            rows.append((cols[0], cols[1]))
    else:
        raise CorpusFormatError(f"unknown corpus format {format!r}")

    pairs = []
    for line_no, (src, tgt) in enumerate(rows):
        pairs.append(
            SentencePair(
                id=f"{provenance}:{line_no}",
                source_tokens=_plain_tokens(tokenize(src, tokenizer)),
                target_tokens=_plain_tokens(tokenize(tgt, tokenizer)),
                alignment=frozenset(),
                provenance=provenance,
            )
        )
    return Corpus(language_pair=(source_lang, target_lang), pairs=tuple(pairs))


def _read_conllu_blocks(path: Path) -> list[list[list[str]]]:
    """Read a CoNLL-U file into blocks of 10-column rows.

    Comments are ignored; multiword-token ranges (1-2) and empty nodes (1.1)
    are skipped so the remaining rows map one-to-one onto surface tokens.
    """
    blocks: list[list[list[str]]] = []
    current: list[list[str]] = []
    started = False
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.rstrip("\n")
        if not line.strip():
            if started:
                blocks.append(current)
                current = []
                started = False
            continue
        if line.startswith("#"):
            started = True
            continue
        started = True
        cols = line.split("\t")
        if len(cols) < 10:
            cols = cols + ["_"] * (10 - len(cols))
        tok_id = cols[0]
        if "-" in tok_id or "." in tok_id:
            continue
        current.append(cols)
    if started and current:
        blocks.append(current)
    elif current:
        blocks.append(current)
    return blocks


def _misc_sense(misc: str) -> str | None:
    if misc in ("", "_"):
        return None
    for part in misc.split("|"):
        if part.startswith("Sense="):
            return part[len("Sense="):]
    return None


def attach_conllu(
    corpus: Corpus,
    side: str,
    path: str | Path,
    allow_token_mismatch: bool = False,
) -> Corpus:
    """Replace lemma/POS (and sense, when present) of one side from CoNLL-U.

    The file must contain one sentence block per corpus pair, in order.
    Token counts must agree with the corpus tokenization unless
    ``allow_token_mismatch`` is set, in which case rows are applied
    positionally up to the shorter length.
    """
    if side not in ("source", "target"):
        raise ValueError(f"side must be 'source' or 'target', got {side!r}")
    blocks = _read_conllu_blocks(Path(path))
    if len(blocks) != len(corpus.pairs):
        raise CorpusFormatError(
            f"block count mismatch: {len(blocks)} CoNLL-U sentences vs "
            f"{len(corpus.pairs)} corpus pairs"
        )

    new_pairs = []
    for pair, block in zip(corpus.pairs, blocks):
        tokens = pair.source_tokens if side == "source" else pair.target_tokens
        if len(block) != len(tokens) and not allow_token_mismatch:
            raise CorpusFormatError(
                f"token count mismatch in sentence {pair.id}: {len(block)} CoNLL-U rows "
                f"vs {len(tokens)} tokens (pass allow_token_mismatch to override)"
            )
        new_tokens = list(tokens)
        for pos_idx, (tok, cols) in enumerate(zip(tokens, block)):
            lemma = cols[2]
            upos = cols[3]
            new_tokens[pos_idx] = replace(
                tok,
                lemma=lemma if lemma not in ("", "_") else tok.surface.lower(),
                pos=upos if upos not in ("", "_") else "X",
                sense_id=_misc_sense(cols[9]),
            )
        kwargs = {("source_tokens" if side == "source" else "target_tokens"): tuple(new_tokens)}
        new_pairs.append(replace(pair, **kwargs))
    return Corpus(language_pair=corpus.language_pair, pairs=tuple(new_pairs))


def parse_pharaoh_line(line: str, line_no: int) -> set[tuple[int, int]]:
    """Parse one line of space-separated "i-j" links; duplicates collapse."""
    links: set[tuple[int, int]] = set()
    for token in line.split():
        parts = token.split("-")
        if len(parts) != 2:
            raise CorpusFormatError(f"line {line_no}: malformed alignment token {token!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise CorpusFormatError(f"line {line_no}: malformed alignment token {token!r}") from None
        links.add((i, j))
    return links


def attach_alignments(corpus: Corpus, path: str | Path) -> Corpus:
    """Replace each pair's alignment from a Pharaoh-format file (one line per pair)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if len(lines) != len(corpus.pairs):
        raise CorpusFormatError(
            f"line count mismatch: {len(lines)} alignment lines vs {len(corpus.pairs)} pairs"
        )
    new_pairs = []
    for line_no, (pair, line) in enumerate(zip(corpus.pairs, lines)):
        links = parse_pharaoh_line(line, line_no)
        for i, j in links:
            if not (0 <= i < len(pair.source_tokens)) or not (0 <= j < len(pair.target_tokens)):
                raise CorpusFormatError(f"line {line_no}: link {i}-{j} out of range")
        new_pairs.append(replace(pair, alignment=frozenset(links)))
    return Corpus(language_pair=corpus.language_pair, pairs=tuple(new_pairs))


def _token_to_json(tok: AnnotatedToken) -> dict:
    return {"surface": tok.surface, "lemma": tok.lemma, "pos": tok.pos, "sense": tok.sense_id}


def _token_from_json(obj: dict, index: int) -> AnnotatedToken:
    return AnnotatedToken(
        surface=obj["surface"],
        lemma=obj["lemma"],
        pos=obj.get("pos", "X"),
        sense_id=obj.get("sense"),
        index=index,
    )


def save_corpus_jsonl(corpus: Corpus, path: str | Path) -> None:
    """Write the corpus in its canonical JSONL form."""
    with open(path, "w", encoding="utf-8") as fh:
        meta = {"_meta": {"source_lang": corpus.language_pair[0],
                          "target_lang": corpus.language_pair[1]}}
        fh.write(json.dumps(meta, ensure_ascii=False) + "\n")
        for pair in corpus.pairs:
            obj = {
                "id": pair.id,
                "source": [_token_to_json(t) for t in pair.source_tokens],
                "target": [_token_to_json(t) for t in pair.target_tokens],
                "alignment": [list(link) for link in sorted(pair.alignment)],
                "provenance": pair.provenance,
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def load_corpus_jsonl(path: str | Path) -> Corpus:
    """Load a corpus saved by :func:`save_corpus_jsonl`.

    Files without the leading metadata line are accepted; the language pair
    then defaults to ("und", "und").
    """
    language_pair = ("und", "und")
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "_meta" in obj:
                meta = obj["_meta"]
                language_pair = (meta.get("source_lang", "und"), meta.get("target_lang", "und"))
                continue
            try:
                pairs.append(
                    SentencePair(
                        id=obj["id"],
                        source_tokens=tuple(
                            _token_from_json(t, i) for i, t in enumerate(obj["source"])
                        ),
                        target_tokens=tuple(
                            _token_from_json(t, i) for i, t in enumerate(obj["target"])
                        ),
                        alignment=frozenset((i, j) for i, j in obj.get("alignment", [])),
                        provenance=obj.get("provenance", ""),
                    )
                )
            except (KeyError, TypeError) as exc:
                raise CorpusFormatError(f"line {line_no}: bad corpus record ({exc})") from exc
    return Corpus(language_pair=language_pair, pairs=tuple(pairs))
