"""Lexical-selection evaluation: prompting, answer parsing, baselines.

Model answers are matched to a candidate variation in two stages: an exact
substring match on the raw text, then token-level Levenshtein-ratio
matching above a strict threshold on case-folded text. Failures after the
single re-prompt count as incorrect; the accuracy denominator is always
the full item set.
"""

from __future__ import annotations

import json
import logging
import re
import statistics
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from random import Random
from typing import Callable, Mapping, Sequence

from lexsel import _kernels
from lexsel.corpus import tokenize
from lexsel.dataset import SelectionItem
from lexsel.endpoint import ChatClient, assemble_messages
from lexsel.errors import DatasetError, EndpointError, LexselError
from lexsel.rules import RuleSet, format_translations
from lexsel.seeding import derive_seed

log = logging.getLogger(__name__)

FUZZY_THRESHOLD = 0.7
DEFAULT_SEEDS = (1, 2, 3)

SETTING_NO_RULES = "no_rules"
SETTING_SELF_RULES = "self_rules"
SETTING_EXTERNAL_RULES = "external_rules"
SETTING_NMT = "nmt"
SETTING_BASELINE = "frequency_baseline"
SETTINGS = (
    SETTING_NO_RULES,
    SETTING_SELF_RULES,
    SETTING_EXTERNAL_RULES,
    SETTING_NMT,
    SETTING_BASELINE,
)
RULE_SETTINGS = (SETTING_SELF_RULES, SETTING_EXTERNAL_RULES)

PARSE_STATUSES = ("exact", "fuzzy", "retry_exact", "retry_fuzzy", "failed")

_BACKTICK_SPAN = re.compile(r"```(.*?)```", re.DOTALL)

_SELECT_CORE = (
    'select the best translation of "{concept}" in "{source}" from the '
    "following list: {translations}.\n"
    "Carefully explain your reasoning first and then enclose your final answer "
    "like this ```answer```."
)

_RULES_SYSTEM_TEMPLATE = (
    'Here are rules for how to translate "{concept}" in {language}:{rules}'
)

_RETRY_TEMPLATE = (
    "Please enclose your selected translation from {translations} with 3 back ticks."
)


@dataclass(frozen=True)
class EvalRecord:
    item_id: str
    setting: str
    model: str
    seed: int
    presented_order: tuple[str, ...]
    raw_output: str
    parsed_prediction: str | None
    parse_status: str
    correct: bool

    def __post_init__(self):
        if self.parse_status not in PARSE_STATUSES:
            raise ValueError(f"unknown parse_status {self.parse_status!r}")
        if self.parse_status == "failed" and self.correct:
            raise ValueError("a failed parse can never be correct")
        if self.correct and self.parsed_prediction is None:
            raise ValueError("a correct record needs a prediction")


@dataclass(frozen=True)
class RunReport:
    setting: str
    model: str
    seeds: tuple[int, ...]
    accuracy_mean: float
    accuracy_std: float
    per_seed_accuracy: tuple[float, ...]
    per_concept: Mapping[str, float] = field(default_factory=dict)
    position_bias: Mapping[int, tuple[float, ...]] = field(default_factory=dict)
    records: tuple[EvalRecord, ...] = ()


def levenshtein_ratio(a: str, b: str) -> float:
    """Similarity in [0, 1] on case-folded strings: ((|a|+|b|) - D) / (|a|+|b|)
    with insert/delete cost 1 and substitution cost 2. Two empty strings
    are identical (ratio 1)."""
    a, b = a.casefold(), b.casefold()
    total = len(a) + len(b)
    if total == 0:
        return 1.0
    return (total - _kernels.edit_distance(a, b)) / total


def _match(
    text: str,
    candidates: Sequence[str],
    threshold: float = FUZZY_THRESHOLD,
    tokenizer: str = "default",
) -> tuple[str | None, str]:
    """Two-stage candidate match: (candidate or None, 'substring' | 'ratio'
    | 'none'). Substring matching is on the raw text; several substring
    hits resolve to the longest, ties to the earliest in canonical order.
    The ratio stage requires a token strictly above the threshold."""
    if not candidates:
        raise ValueError("no candidates to match against")
    hits = [c for c in candidates if c in text]
    if hits:
        return min(hits, key=lambda c: (-len(c), c)), "substring"
    best: str | None = None
    best_ratio = 0.0
    for token in tokenize(text, tokenizer):
        for candidate in sorted(candidates):
            ratio = levenshtein_ratio(token, candidate)
            if ratio > best_ratio:
                best, best_ratio = candidate, ratio
    if best is not None and best_ratio > threshold:
        return best, "ratio"
    return None, "none"


def fuzzy_select(
    text: str,
    candidates: Sequence[str],
    threshold: float = FUZZY_THRESHOLD,
    tokenizer: str = "default",
) -> str | None:
    value, _ = _match(text, candidates, threshold, tokenizer)
    return value


def parse_answer(
    raw: str, candidates: Sequence[str], threshold: float = FUZZY_THRESHOLD
) -> tuple[str | None, str]:
    """Match the last triple-backtick span against the candidates.

    Single-attempt statuses only: exact (substring), fuzzy (ratio), or
    failed; the evaluation loop upgrades a successful second attempt to
    retry_exact / retry_fuzzy.
    """
    spans = _BACKTICK_SPAN.findall(raw)
    if not spans:
        return None, "failed"
    value, kind = _match(spans[-1], candidates, threshold)
    if kind == "substring":
        return value, "exact"
    if kind == "ratio":
        return value, "fuzzy"
    return None, "failed"


def presentation_order(item: SelectionItem, order_seed: int) -> tuple[str, ...]:
    order = list(item.candidates)
    Random(derive_seed(order_seed, item.id)).shuffle(order)
    return tuple(order)


def retry_sentence(presented: Sequence[str]) -> str:
    return _RETRY_TEMPLATE.format(translations=format_translations(presented))


def build_selection_prompt(
    item: SelectionItem,
    setting: str,
    rules: RuleSet | None = None,
    order_seed: int = 0,
    target_language: str = "the target language",
) -> tuple[str, str, tuple[str, ...]]:
    """(system text, user text, presented candidate order) for one item.

    Candidate order is a permutation seeded by (order_seed, item id). Rule
    settings put the rules in the system text, keyed to the presented
    candidates in presentation order.
    """
    if setting not in (SETTING_NO_RULES, *RULE_SETTINGS):
        raise ValueError(f"no selection prompt for setting {setting!r}")
    if (setting in RULE_SETTINGS) != (rules is not None):
        raise ValueError(f"setting {setting!r} and rules={rules is not None} disagree")
    presented = presentation_order(item, order_seed)
    core = _SELECT_CORE.format(
        concept=item.concept[0],
        source=item.source_text,
        translations=format_translations(presented),
    )
    if setting == SETTING_NO_RULES:
        return "", "Please " + core, presented
    missing = [c for c in presented if c not in rules.rules]
    if missing:
        raise LexselError(
            f"rules for {item.concept} missing candidates {missing}"
        )
    rule_json = json.dumps(
        {c: rules.rules[c] for c in presented}, ensure_ascii=False
    )
    system_text = _RULES_SYSTEM_TEMPLATE.format(
        concept=item.concept[0], language=target_language, rules=rule_json
    )
    return system_text, "Based on the provided rules, please " + core, presented


def _query_chat_model(
    client: ChatClient,
    item: SelectionItem,
    setting: str,
    rules: RuleSet | None,
    seed: int,
    threshold: float,
    target_language: str,
) -> EvalRecord:
    system_text, user_text, presented = build_selection_prompt(
        item, setting, rules=rules, order_seed=seed, target_language=target_language
    )
    supports_system = client.config.supports_system_role

    def _complete(user: str) -> str | None:
        try:
            return client.complete(assemble_messages(system_text, user, supports_system))
        except EndpointError as e:
            log.warning(
                "endpoint failure, recording as failed",
                extra={"item": item.id, "error": str(e)},
            )
            return None

    raw = _complete(user_text)
    if raw is None:
        return _record(item, setting, client.config.model_name, seed, presented,
                       "<transport-error>", None, "failed")
    value, status = parse_answer(raw, presented, threshold)
    if status == "failed":
        retry_user = user_text + "\n" + retry_sentence(presented)
        raw2 = _complete(retry_user)
        if raw2 is None:
            raw2 = "<transport-error>"
        raw = raw + "\n--- retry ---\n" + raw2
        value, status2 = parse_answer(raw2, presented, threshold)
        status = {"exact": "retry_exact", "fuzzy": "retry_fuzzy"}.get(status2, "failed")
        if status == "failed":
            value = None
    return _record(item, setting, client.config.model_name, seed, presented, raw, value, status)


def _record(
    item: SelectionItem,
    setting: str,
    model: str,
    seed: int,
    presented: tuple[str, ...],
    raw: str,
    value: str | None,
    status: str,
) -> EvalRecord:
    return EvalRecord(
        item_id=item.id,
        setting=setting,
        model=model,
        seed=seed,
        presented_order=presented,
        raw_output=raw,
        parsed_prediction=value,
        parse_status=status,
        correct=status != "failed" and value == item.gold,
    )


def _build_report(
    setting: str,
    model: str,
    seeds: Sequence[int],
    records: Sequence[EvalRecord],
    items: Sequence[SelectionItem],
) -> RunReport:
    records = sorted(records, key=lambda r: (r.seed, r.item_id))
    n_items = len(items)
    per_seed = []
    for seed in seeds:
        n_correct = sum(1 for r in records if r.seed == seed and r.correct)
        per_seed.append(n_correct / n_items if n_items else 0.0)

    concept_of = {item.id: f"{item.concept[0]}|{item.concept[1]}" for item in items}
    concept_totals: Counter = Counter()
    concept_correct: Counter = Counter()
    for record in records:
        key = concept_of[record.item_id]
        concept_totals[key] += 1
        if record.correct:
            concept_correct[key] += 1
    per_concept = {
        key: concept_correct[key] / total for key, total in sorted(concept_totals.items())
    }

    position_counts: dict[int, Counter] = defaultdict(Counter)
    for record in records:
        if record.parsed_prediction is None:
            continue
        k = len(record.presented_order)
        position_counts[k][record.presented_order.index(record.parsed_prediction)] += 1
    position_bias = {}
    for k, counts in sorted(position_counts.items()):
        total = sum(counts.values())
        position_bias[k] = tuple(counts.get(i, 0) / total for i in range(k))

    return RunReport(
        setting=setting,
        model=model,
        seeds=tuple(seeds),
        accuracy_mean=statistics.fmean(per_seed) if per_seed else 0.0,
        accuracy_std=statistics.pstdev(per_seed) if per_seed else 0.0,
        per_seed_accuracy=tuple(per_seed),
        per_concept=per_concept,
        position_bias=position_bias,
        records=tuple(records),
    )


def frequency_baseline(
    items: Sequence[SelectionItem],
    concept_counts: Mapping[tuple[str, str], Mapping[str, int]] | None = None,
) -> RunReport:
    """Predict each concept's most common gold variation for every item.

    Counts default to the gold distribution over the given items, i.e. the
    accepted dataset itself; ties break by canonical candidate order.
    """
    if concept_counts is None:
        tallies: dict[tuple[str, str], Counter] = defaultdict(Counter)
        for item in items:
            tallies[item.concept][item.gold] += 1
        concept_counts = tallies
    predictions = {}
    for concept, counts in concept_counts.items():
        if not counts:
            raise DatasetError(f"concept {concept} has no counts for the baseline")
        predictions[concept] = min(counts, key=lambda v: (-counts[v], v))
    records = []
    for item in items:
        if item.concept not in predictions:
            raise DatasetError(f"no counts for concept {item.concept}")
        prediction = predictions[item.concept]
        records.append(
            _record(item, SETTING_BASELINE, SETTING_BASELINE, 0, item.candidates,
                    "", prediction, "exact")
        )
    return _build_report(SETTING_BASELINE, SETTING_BASELINE, (0,), records, items)


def _evaluate_nmt(
    items: Sequence[SelectionItem],
    translations: Mapping[str, str],
    seeds: Sequence[int],
    threshold: float,
    tokenizer: str,
) -> RunReport:
    records = []
    for item in items:
        if item.id not in translations:
            raise DatasetError(f"no translation supplied for item {item.id}")
        value, kind = _match(translations[item.id], item.candidates, threshold, tokenizer)
        status = {"substring": "exact", "ratio": "fuzzy"}.get(kind, "failed")
        for seed in seeds:
            records.append(
                _record(item, SETTING_NMT, "nmt", seed, item.candidates,
                        translations[item.id], value, status)
            )
    return _build_report(SETTING_NMT, "nmt", seeds, records, items)


def evaluate(
    items: Sequence[SelectionItem],
    setting: str,
    client: ChatClient | None = None,
    translations: Mapping[str, str] | None = None,
    rules: Mapping[tuple[str, str], RuleSet] | None = None,
    seeds: Sequence[int] = DEFAULT_SEEDS,
    threshold: float = FUZZY_THRESHOLD,
    target_language: str = "the target language",
    tokenizer: str = "default",
    max_workers: int = 1,
) -> RunReport:
    """Run one evaluation setting over the items, one pass per seed.

    Seeds drive candidate presentation order. Endpoint transport failures
    become failed records after the client's bounded retries; every item
    contributes to the accuracy denominator regardless of parse outcome.
    """
    if setting not in SETTINGS:
        raise ValueError(f"unknown setting {setting!r}, expected one of {SETTINGS}")
    if not items:
        raise DatasetError("no items to evaluate")
    if setting == SETTING_BASELINE:
        return frequency_baseline(items)
    if setting == SETTING_NMT:
        if translations is None:
            raise DatasetError("nmt setting needs a translations mapping")
        return _evaluate_nmt(items, translations, seeds, threshold, tokenizer)

    if client is None:
        raise DatasetError(f"setting {setting!r} needs a chat endpoint client")
    if (setting in RULE_SETTINGS) and rules is None:
        raise DatasetError(f"setting {setting!r} needs rules")

    def rules_for(item: SelectionItem) -> RuleSet | None:
        if setting == SETTING_NO_RULES:
            return None
        ruleset = rules.get(item.concept)
        if ruleset is None:
            raise LexselError(f"no rules for concept {item.concept}")
        return ruleset

    jobs: list[tuple[int, SelectionItem]] = [
        (seed, item) for seed in seeds for item in items
    ]

    def _run(job: tuple[int, SelectionItem]) -> EvalRecord:
        seed, item = job
        return _query_chat_model(
            client, item, setting, rules_for(item), seed, threshold, target_language
        )

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            records = list(pool.map(_run, jobs))
    else:
        records = [_run(job) for job in jobs]
    return _build_report(setting, client.config.model_name, seeds, records, items)


def load_translations_jsonl(path: str | Path) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            out[obj["item_id"]] = obj["translation_text"]
    return out


def report_to_json(report: RunReport, records_ref: str | None = None) -> dict:
    return {
        "setting": report.setting,
        "model": report.model,
        "seeds": list(report.seeds),
        "accuracy_mean": report.accuracy_mean,
        "accuracy_std": report.accuracy_std,
        "per_seed_accuracy": list(report.per_seed_accuracy),
        "per_concept": dict(report.per_concept),
        "position_bias": {str(k): list(v) for k, v in report.position_bias.items()},
        "records_ref": records_ref,
    }


def save_report(report: RunReport, out_dir: str | Path) -> tuple[Path, Path]:
    """Write report.json and records.jsonl; both byte-deterministic for
    identical inputs (records sorted, keys sorted)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records_path = out / "records.jsonl"
    with open(records_path, "w", encoding="utf-8") as fh:
        for r in report.records:
            fh.write(
                json.dumps(
                    {
                        "item_id": r.item_id,
                        "setting": r.setting,
                        "model": r.model,
                        "seed": r.seed,
                        "presented_order": list(r.presented_order),
                        "raw_output": r.raw_output,
                        "parsed_prediction": r.parsed_prediction,
                        "parse_status": r.parse_status,
                        "correct": r.correct,
                    },
                    ensure_ascii=False,
                    sort_keys=True,
                )
                + "\n"
            )
    report_path = out / "report.json"
    report_path.write_text(
        json.dumps(report_to_json(report, records_ref="records.jsonl"),
                   ensure_ascii=False, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    return report_path, records_path
