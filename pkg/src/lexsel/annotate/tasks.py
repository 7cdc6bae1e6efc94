"""Annotation task construction.

Every annotator sees every item, but item order and candidate order are
shuffled per annotator so positional habits cannot correlate across the
pool. Permutations are derived deterministically from (seed, annotator,
item), so rebuilding a session from the same inputs reproduces it exactly.
Task payloads never contain the gold variation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from random import Random
from typing import Sequence

from lexsel.dataset import SelectionItem
from lexsel.mine import Concept
from lexsel.seeding import derive_seed

KIND_LEXICAL_SELECTION = "lexical_selection"
KIND_RULE_VERIFICATION = "rule_verification"
KIND_VARIATION_PRECISION = "variation_precision"
KIND_VARIATION_RECALL = "variation_recall"
KINDS = (
    KIND_LEXICAL_SELECTION,
    KIND_RULE_VERIFICATION,
    KIND_VARIATION_PRECISION,
    KIND_VARIATION_RECALL,
)

CANNOT_DETERMINE = "cannot_determine"


@dataclass(frozen=True)
class AnnotationTask:
    id: str
    kind: str
    payload: dict
    annotator_id: str
    presentation_seed: int


@dataclass(frozen=True)
class Session:
    """An ordered batch of per-annotator tasks.

    ``tasks`` is serving order: grouped by annotator, each group already in
    that annotator's shuffled presentation order.
    """

    id: str
    kind: str
    annotator_ids: tuple[str, ...]
    tasks: tuple[AnnotationTask, ...]
    seed: int = 0

    def __len__(self) -> int:
        return len(self.tasks)

    def __iter__(self):
        return iter(self.tasks)

    def __getitem__(self, i):
        return self.tasks[i]

    def tasks_for(self, annotator_id: str) -> tuple[AnnotationTask, ...]:
        return tuple(t for t in self.tasks if t.annotator_id == annotator_id)


def task_ref(task_id: str) -> str:
    """Base item reference shared by all annotators' copies of a task."""
    return task_id.rsplit("::", 1)[0]


def _base_payloads(payloads: Sequence, kind: str) -> list[tuple[str, dict]]:
    """Expand inputs into (ref, payload-without-ordering) pairs."""
    out: list[tuple[str, dict]] = []
    if kind == KIND_LEXICAL_SELECTION:
        for item in payloads:
            if not isinstance(item, SelectionItem):
                raise TypeError(f"{kind} session needs SelectionItem inputs, got {type(item)!r}")
            out.append(
                (
                    item.id,
                    {
                        "ref": item.id,
                        "concept": {"lemma": item.concept[0], "pos": item.concept[1]},
                        "source_tokens": list(item.source_tokens),
                        "concept_index": item.concept_index,
                        "candidates": list(item.candidates),
                    },
                )
            )
    elif kind == KIND_RULE_VERIFICATION:
        for ruleset in payloads:
            lemma, pos = ruleset.concept
            for variation in sorted(ruleset.rules):
                ref = f"{lemma}|{pos}|{variation}|rule"
                out.append(
                    (
                        ref,
                        {
                            "ref": ref,
                            "concept": {"lemma": lemma, "pos": pos},
                            "variation": variation,
                            "rule_text": ruleset.rules[variation],
                        },
                    )
                )
    elif kind == KIND_VARIATION_PRECISION:
        for concept in payloads:
            if not isinstance(concept, Concept):
                raise TypeError(f"{kind} session needs Concept inputs, got {type(concept)!r}")
            for variation in concept.variation_lemmas():
                ref = f"{concept.lemma}|{concept.pos}|{variation}|precision"
                out.append(
                    (
                        ref,
                        {
                            "ref": ref,
                            "concept": {"lemma": concept.lemma, "pos": concept.pos},
                            "variation": variation,
                        },
                    )
                )
    elif kind == KIND_VARIATION_RECALL:
        for concept in payloads:
            if not isinstance(concept, Concept):
                raise TypeError(f"{kind} session needs Concept inputs, got {type(concept)!r}")
            ref = f"{concept.lemma}|{concept.pos}|recall"
            out.append(
                (
                    ref,
                    {
                        "ref": ref,
                        "concept": {"lemma": concept.lemma, "pos": concept.pos},
                        "variations": list(concept.variation_lemmas()),
                    },
                )
            )
    else:
        raise ValueError(f"unknown task kind {kind!r}")
    return out


def create_session(
    payloads: Sequence,
    annotator_ids: Sequence[str],
    seed: int = 0,
    kind: str = KIND_LEXICAL_SELECTION,
    session_id: str | None = None,
) -> Session:
    """Build the full cross product of items and annotators.

    Each annotator's item order is a seeded permutation, and for selection
    tasks so is each copy's candidate order, both derived from
    (seed, annotator, item ref).
    """
    annotators = tuple(annotator_ids)
    if not annotators:
        raise ValueError("need at least one annotator id")
    if len(set(annotators)) != len(annotators):
        raise ValueError(f"duplicate annotator ids in {annotators}")

    bases = _base_payloads(payloads, kind)
    if session_id is None:
        session_id = f"session-{derive_seed(seed, kind, *(ref for ref, _ in bases)):016x}"

    tasks: list[AnnotationTask] = []
    for annotator in annotators:
        order = list(bases)
        Random(derive_seed(seed, annotator, "order")).shuffle(order)
        for ref, base_payload in order:
            pseed = derive_seed(seed, annotator, ref)
            payload = dict(base_payload)
            if "candidates" in payload:
                shuffled = list(payload["candidates"])
                Random(pseed).shuffle(shuffled)
                payload["candidates"] = shuffled
            tasks.append(
                AnnotationTask(
                    id=f"{ref}::{annotator}",
                    kind=kind,
                    payload=payload,
                    annotator_id=annotator,
                    presentation_seed=pseed,
                )
            )
    return Session(
        id=session_id, kind=kind, annotator_ids=annotators, tasks=tuple(tasks), seed=seed
    )


def save_session(session: Session, path: str | Path) -> None:
    obj = {
        "id": session.id,
        "kind": session.kind,
        "annotator_ids": list(session.annotator_ids),
        "seed": session.seed,
        "tasks": [
            {
                "id": t.id,
                "kind": t.kind,
                "payload": t.payload,
                "annotator_id": t.annotator_id,
                "presentation_seed": t.presentation_seed,
            }
            for t in session.tasks
        ],
    }
    Path(path).write_text(json.dumps(obj, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")


def load_session(path: str | Path) -> Session:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    tasks = tuple(
        AnnotationTask(
            id=t["id"],
            kind=t["kind"],
            payload=t["payload"],
            annotator_id=t["annotator_id"],
            presentation_seed=t["presentation_seed"],
        )
        for t in obj["tasks"]
    )
    return Session(
        id=obj["id"],
        kind=obj["kind"],
        annotator_ids=tuple(obj["annotator_ids"]),
        tasks=tasks,
        seed=obj.get("seed", 0),
    )
