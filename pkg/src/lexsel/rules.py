"""Rule generation: one prompt per concept, answered by a chat model with
a JSON object mapping each variation to an English usage description.

Responses are cached content-addressed by (model, concept, prompt hash),
so regeneration is free until the template or context sentences change.
Parsing tolerates exactly one fenced code block or stray prose around one
JSON object; anything looser fails and triggers the single re-prompt.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from lexsel.corpus import Corpus
from lexsel.endpoint import ChatClient, assemble_messages
from lexsel.errors import GenerationFailedError, LexselError
from lexsel.mine import Concept

log = logging.getLogger(__name__)

PER_VARIATION = 50
MAX_TOKENS = 50

VERIFIED_LABELS = ("correct", "incorrect", "unlabeled")

_SYSTEM_TEMPLATE = (
    "Please only return a json with the following keys {translations} and no other text.\n"
    "For each key the value should be a string in English explaining how the meaning and "
    "usage of that {language} word is different from the others.\n"
    "The string should also include a brief example in {language} of the word being used "
    "with an English translation.\n"
    "Please include the transliteration from {language} to Latin characters if necessary."
)

_USER_TEMPLATE = (
    'When translating the concept "{concept}" from English to {language}, what is the '
    "difference in meaning between {translations} and in which contexts should they be "
    "used?\nHere are sentences where each word is used in-context to help you: {sentences}"
)

_RESTATEMENT = (
    "Please only return a json object with exactly the following keys {translations} "
    "and no other text."
)


@dataclass(frozen=True)
class RuleSet:
    """Per-variation English descriptions for one concept.

    ``raw_ref`` points at the cache entry holding the raw model response;
    ``verified`` carries human labels once rule verification has run.
    """

    concept: tuple[str, str]
    rules: Mapping[str, str]
    generator: str
    verified: Mapping[str, str] | None = None
    raw_ref: str | None = None


def format_translations(variations: Sequence[str]) -> str:
    return ", ".join(f'"{v}"' for v in variations)


def select_context_sentences(
    concept: Concept,
    corpus: Corpus,
    per_variation: int = PER_VARIATION,
    max_tokens: int = MAX_TOKENS,
) -> dict[str, list[str]]:
    """Per-variation context sentences: the longest source sentences under
    ``max_tokens`` whitespace tokens, up to ``per_variation`` each."""
    pairs_by_id = {p.id: p for p in corpus.pairs}
    out: dict[str, list[str]] = {}
    for variation in concept.variation_lemmas():
        qualifying = []
        for ref in concept.example_refs.get(variation, ()):
            pair = pairs_by_id.get(ref)
            if pair is None:
                raise LexselError(
                    f"concept {concept.lemma}/{concept.pos}: example ref {ref!r} "
                    "does not resolve in the corpus"
                )
            text = pair.source_text
            n_tokens = len(text.split())
            if n_tokens < max_tokens:
                qualifying.append((n_tokens, pair.id, text))
        qualifying.sort(key=lambda q: (-q[0], q[1]))
        if not qualifying:
            log.warning(
                "no qualifying context sentences",
                extra={"concept": concept.lemma, "variation": variation},
            )
        out[variation] = [text for _, _, text in qualifying[:per_variation]]
    return out


def _sentences_block(context: Mapping[str, Sequence[str]]) -> str:
    parts = []
    for variation, sentences in context.items():
        if sentences:
            body = "\n".join(f"- {s}" for s in sentences)
        else:
            body = "(no examples)"
        parts.append(f"{variation}:\n{body}")
    return "\n\n" + "\n\n".join(parts)


def build_rule_prompt(
    concept: Concept, context: Mapping[str, Sequence[str]], target_language: str
) -> tuple[str, str]:
    if not context:
        raise ValueError("empty context: nothing to build a rule prompt from")
    translations = format_translations(list(context))
    system_text = _SYSTEM_TEMPLATE.format(translations=translations, language=target_language)
    user_text = _USER_TEMPLATE.format(
        concept=concept.lemma,
        language=target_language,
        translations=translations,
        sentences=_sentences_block(context),
    )
    return system_text, user_text


_FENCE = re.compile(r"```[a-zA-Z]*\n?(.*?)```", re.DOTALL)


def _extract_json(raw: str) -> dict:
    """One JSON object out of a model response. Accepts a single fenced
    block, or one object with prose around it; anything else raises."""
    blocks = _FENCE.findall(raw)
    if len(blocks) > 1:
        raise ValueError(f"expected one fenced block, found {len(blocks)}")
    text = blocks[0] if blocks else raw
    text = text.strip()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError:
        start, end = text.find("{"), text.rfind("}")
        if start < 0 or end <= start:
            raise ValueError("no JSON object in response") from None
        obj = json.loads(text[start : end + 1])
    if not isinstance(obj, dict):
        raise ValueError(f"expected a JSON object, got {type(obj).__name__}")
    return obj


def _validated_rules(raw: str, expected: Sequence[str]) -> dict[str, str]:
    obj = _extract_json(raw)
    if set(obj) != set(expected):
        raise ValueError(
            f"rule keys {sorted(obj)} do not match variations {sorted(expected)}"
        )
    bad = [k for k, v in obj.items() if not isinstance(v, str)]
    if bad:
        raise ValueError(f"non-string rule values for {sorted(bad)}")
    return {k: obj[k] for k in expected}


def cache_key(model: str, concept_key: tuple[str, str], system_text: str, user_text: str) -> str:
    text = "\x1f".join([model, concept_key[0], concept_key[1], system_text, user_text])
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class RuleCache:
    """Content-addressed response cache, optionally directory-backed.

    get_or_create serializes concurrent requests for one key so duplicate
    in-flight generations coalesce into a single endpoint call."""

    def __init__(self, directory: str | Path | None = None):
        self._dir = Path(directory) if directory is not None else None
        if self._dir is not None:
            self._dir.mkdir(parents=True, exist_ok=True)
        self._mem: dict[str, dict] = {}
        self._key_locks: dict[str, threading.Lock] = {}
        self._lock = threading.Lock()

    def _file(self, key: str) -> Path | None:
        return self._dir / f"{key}.json" if self._dir is not None else None

    def get(self, key: str) -> dict | None:
        with self._lock:
            if key in self._mem:
                return self._mem[key]
        path = self._file(key)
        if path is not None and path.exists():
            value = json.loads(path.read_text(encoding="utf-8"))
            with self._lock:
                self._mem[key] = value
            return value
        return None

    def get_or_create(self, key: str, factory) -> dict:
        existing = self.get(key)
        if existing is not None:
            return existing
        with self._lock:
            key_lock = self._key_locks.setdefault(key, threading.Lock())
        with key_lock:
            existing = self.get(key)
            if existing is not None:
                return existing
            value = factory()
            with self._lock:
                self._mem[key] = value
            path = self._file(key)
            if path is not None:
                path.write_text(
                    json.dumps(value, ensure_ascii=False, indent=2), encoding="utf-8"
                )
            return value


def generate_rules(
    client: ChatClient,
    concept: Concept,
    corpus: Corpus,
    target_language: str,
    cache: RuleCache | None = None,
    per_variation: int = PER_VARIATION,
    max_tokens: int = MAX_TOKENS,
) -> RuleSet:
    """Prompt the model for this concept's rules, with one re-prompt on a
    malformed response and a structured failure after the second."""
    context = select_context_sentences(concept, corpus, per_variation, max_tokens)
    system_text, user_text = build_rule_prompt(concept, context, target_language)
    expected = list(context)
    model = client.config.model_name
    key = cache_key(model, concept.key, system_text, user_text)

    def _call_endpoint() -> dict:
        supports_system = client.config.supports_system_role
        first = client.complete(assemble_messages(system_text, user_text, supports_system))
        try:
            rules = _validated_rules(first, expected)
        except ValueError as first_err:
            retry_user = user_text + "\n\n" + _RESTATEMENT.format(
                translations=format_translations(expected)
            )
            second = client.complete(
                assemble_messages(system_text, retry_user, supports_system)
            )
            try:
                rules = _validated_rules(second, expected)
            except ValueError as second_err:
                raise GenerationFailedError(
                    f"rule generation for {concept.lemma}/{concept.pos} failed twice: "
                    f"{first_err}; then {second_err}",
                    responses=(first, second),
                ) from second_err
            return {"rules": rules, "raw_response": second}
        return {"rules": rules, "raw_response": first}

    if cache is None:
        value = _call_endpoint()
    else:
        value = cache.get_or_create(key, _call_endpoint)
    return RuleSet(concept=concept.key, rules=value["rules"], generator=model, raw_ref=key)


def generate_rules_bulk(
    client: ChatClient,
    concepts: Sequence[Concept],
    corpus: Corpus,
    target_language: str,
    cache: RuleCache | None = None,
    max_workers: int = 4,
    strict: bool = False,
) -> list[RuleSet]:
    """Rules for many concepts, deduplicated by concept key; failures are
    logged and skipped unless strict."""
    seen: dict[tuple[str, str], Concept] = {}
    for concept in concepts:
        seen.setdefault(concept.key, concept)
    results: dict[tuple[str, str], RuleSet] = {}

    def _one(concept: Concept):
        return concept.key, generate_rules(
            client, concept, corpus, target_language, cache=cache
        )

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = [pool.submit(_one, c) for c in seen.values()]
        for future in futures:
            try:
                concept_key, ruleset = future.result()
            except GenerationFailedError:
                if strict:
                    raise
                log.warning("rule generation failed, skipping concept", exc_info=True)
                continue
            results[concept_key] = ruleset
    return [results[c.key] for c in seen.values() if c.key in results]


def with_verification(ruleset: RuleSet, labels: Mapping[str, str]) -> RuleSet:
    for variation, label in labels.items():
        if variation not in ruleset.rules:
            raise ValueError(f"verification label for unknown variation {variation!r}")
        if label not in VERIFIED_LABELS:
            raise ValueError(f"unknown verification label {label!r}")
    merged = {v: labels.get(v, "unlabeled") for v in ruleset.rules}
    return RuleSet(
        concept=ruleset.concept,
        rules=ruleset.rules,
        generator=ruleset.generator,
        verified=merged,
        raw_ref=ruleset.raw_ref,
    )


def save_rules_jsonl(rulesets: Sequence[RuleSet], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rs in rulesets:
            obj = {
                "concept": {"lemma": rs.concept[0], "pos": rs.concept[1]},
                "generator": rs.generator,
                "rules": dict(rs.rules),
                "raw_response_ref": rs.raw_ref,
                "verified": dict(rs.verified) if rs.verified is not None else None,
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def load_rules_jsonl(path: str | Path) -> list[RuleSet]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            out.append(
                RuleSet(
                    concept=(obj["concept"]["lemma"], obj["concept"]["pos"]),
                    rules=obj["rules"],
                    generator=obj["generator"],
                    verified=obj.get("verified"),
                    raw_ref=obj.get("raw_response_ref"),
                )
            )
    return out
