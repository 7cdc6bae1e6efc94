"""Acceptance gate: one test group per release criterion.

Each criterion gets its own pass/fail line in the terminal summary (see
conftest). Tolerances and runtime budgets are pinned here, up front, so a
regression cannot quietly loosen them:

- hand-derivable values are checked to TOL_EXACT;
- published three-decimal statistics to their rounding resolution;
- agreement matrices rebuilt from rounded proportions to the resolution
  of a 1000-item pool;
- the entropy boundary check must stay interactive (< 1 s) and the
  synthetic-corpus recovery under 30 s.
"""

import json
import time

import pytest

from lexsel import dataset
from lexsel import mine
from lexsel.align import train_model1
from lexsel.annotate.agreement import agreement as compute_agreement
from lexsel.errors import DatasetError
from lexsel.evaluate import (
    SETTING_NO_RULES,
    evaluate,
    fuzzy_select,
    levenshtein_ratio,
)
from lexsel.rules import RuleCache, generate_rules, select_context_sentences

from . import oracles
from .fakes import (
    ScriptedClient,
    first_position_client,
    gold_client,
    no_backticks_client,
)
from .test_dataset import concept_with_pool, make_concept
from .test_eval import make_eval_items
from .test_mine import corpus_of, repeated
from .test_rules import GOOD_RULES, concept_with_sentences, two_variation_fixture

TOL_EXACT = 1e-9
TOL_ENTROPY_PUBLISHED = 1e-3
# The frozen agreement rows carry three-decimal values where T and PABAK
# were rounded independently, so the identity can be off by one unit in
# the last place; the extra 5% absorbs binary representation error.
TOL_ROW_IDENTITY = 1.05e-3
# Rebuilding a matrix from the rounded T compounds both roundings:
# 2 * (T rounding) + (PABAK rounding) = 1.5e-3.
TOL_ROW_REBUILD = 1.55e-3
TOL_KAPPA_PARADOX = 2e-3
TOL_MATRIX_REBUILD = 5e-4
BUDGET_ENTROPY_S = 1.0
BUDGET_MINING_S = 30.0


# criterion 1: entropy filter boundary


def test_criterion_1_entropy_filter_boundary():
    start = time.perf_counter()

    balanced = mine.concept_entropy((50, 50))
    assert balanced == pytest.approx(oracles.LN2, abs=TOL_EXACT)
    assert balanced >= mine.ENTROPY_THRESHOLD

    skewed = mine.concept_entropy((450, 50))
    assert skewed == pytest.approx(0.3251, abs=TOL_ENTROPY_PUBLISHED)
    assert skewed == pytest.approx(oracles.ENTROPY_450_50, abs=TOL_EXACT)
    assert skewed < mine.ENTROPY_THRESHOLD

    corpus = corpus_of(
        repeated("balanced", [("ba", None, 50), ("bb", None, 50)])
        + repeated("skewed", [("sa", None, 450), ("sb", None, 50)])
    )
    concepts = mine.extract_concepts(corpus, sense_filter=False)
    assert [c.lemma for c in concepts] == ["balanced"]

    assert time.perf_counter() - start < BUDGET_ENTROPY_S


# criterion 2: synthetic-corpus mining oracle


def test_criterion_2_planted_concepts_recovered_exactly(planted):
    start = time.perf_counter()
    corpus, expected = planted

    assert len(corpus.pairs) >= 5000
    by_key = {(p.lemma, p.pos): p for p in expected}
    assert len(by_key) >= 10
    for p in expected:
        assert 2 <= len(p.variation_counts) <= 4
        assert all(count >= 60 for count in p.variation_counts.values())

    mined = mine.extract_concepts(corpus)
    mined_keys = {c.key for c in mined}
    precision = len(mined_keys & set(by_key)) / len(mined_keys)
    recall = len(mined_keys & set(by_key)) / len(by_key)
    assert precision == 1.0, f"unplanted concepts mined: {mined_keys - set(by_key)}"
    assert recall == 1.0, f"planted concepts missed: {set(by_key) - mined_keys}"

    brute = oracles.alignment_counts(corpus)
    for concept in mined:
        got = {v.lemma: v.count for v in concept.variations}
        assert got == dict(by_key[concept.key].variation_counts)
        total = sum(got.values())
        for v in concept.variations:
            assert v.count == brute[concept.key][v.lemma]
            assert v.probability == v.count / total

    assert time.perf_counter() - start < BUDGET_MINING_S


# criterion 3: agreement statistics


def _matrix_with_unanimity(total_agreement: float, n_items: int = 1000):
    """3-annotator matrix with the given fraction of unanimous rows."""
    unanimous = round(total_agreement * n_items)
    rows = [["a", "a", "a"] for _ in range(unanimous)]
    rows += [["a", "a", "b"] for _ in range(n_items - unanimous)]
    return rows


def test_criterion_3_pabak_identity_on_published_rows():
    for name, total, kappa, pabak in oracles.AGREEMENT_ROWS:
        assert abs(pabak - (2 * total - 1)) <= TOL_ROW_IDENTITY, name
        report = compute_agreement(_matrix_with_unanimity(total))
        assert report.total_agreement == pytest.approx(total, abs=TOL_MATRIX_REBUILD), name
        assert report.pabak == pytest.approx(
            2 * report.total_agreement - 1, abs=TOL_EXACT), name
        assert report.pabak == pytest.approx(pabak, abs=TOL_ROW_REBUILD), name
        if kappa is None:
            assert report.fleiss_kappa is None, name


def test_criterion_3_high_agreement_negative_kappa_paradox():
    rows = [["correct"] * 3 for _ in range(9)]
    rows.append(["correct", "correct", "incorrect"])
    report = compute_agreement(rows)
    assert report.total_agreement == pytest.approx(0.9, abs=TOL_EXACT)
    assert report.pabak == pytest.approx(0.8, abs=TOL_EXACT)
    assert report.fleiss_kappa == pytest.approx(-0.034, abs=TOL_KAPPA_PARADOX)
    assert report.fleiss_kappa == pytest.approx(oracles.PARADOX_KAPPA, abs=TOL_EXACT)


def test_criterion_3_unanimous_single_label_kappa_undefined():
    report = compute_agreement([["x", "x", "x"]] * 12)
    assert report.total_agreement == 1.0
    assert report.pabak == 1.0
    assert report.fleiss_kappa is None


# criterion 4: fuzzy matcher


def test_criterion_4_ratio_values_and_strict_threshold():
    assert levenshtein_ratio("khorma", "khorma") == pytest.approx(
        oracles.RATIO_IDENTITY, abs=TOL_EXACT)
    assert levenshtein_ratio("khorma", "khorm") == pytest.approx(
        oracles.RATIO_ONE_DELETION, abs=TOL_EXACT)
    assert levenshtein_ratio("rotab", "xyzzy") == pytest.approx(
        oracles.RATIO_DISJOINT, abs=TOL_EXACT)

    # D("aaaaaaabbb", "aaaaaaaaaa") = 6, ratio exactly 0.7: not a match.
    assert levenshtein_ratio("aaaaaaabbb", "aaaaaaaaaa") == pytest.approx(
        0.7, abs=TOL_EXACT)
    assert fuzzy_select("aaaaaaabbb", ["aaaaaaaaaa"]) is None
    assert fuzzy_select("aaaaaaabbb", ["aaaaaaaaaa"], threshold=0.699) == "aaaaaaaaaa"

    # Verbatim-substring stage wins over any ratio, and works on the raw
    # (case-sensitive) text: "Khorma." contains "horma" but not "khorma".
    assert fuzzy_select("the rotab one", ["rota", "rotab"]) == "rotab"
    assert fuzzy_select("Khorma.", ["horma", "khorma"]) == "horma"
    assert fuzzy_select("Khorma.", ["khorma", "tarikh"]) == "khorma"  # via ratio


# criterion 5: dataset construction


def test_criterion_5_uniformity_filter_boundary():
    keep = make_concept("near", (0.69, 0.31))
    drop = make_concept("far", (0.71, 0.29))
    assert dataset.uniformity_filter([keep, drop]) == [keep]


def test_criterion_5_sampling_covers_every_variation():
    concept, corpus = concept_with_pool(
        "w",
        {
            "va": [f"a:{i}" for i in range(8)],
            "vb": [f"b:{i}" for i in range(8)],
            "vc": [f"c:{i}" for i in range(8)],
        },
    )
    items = dataset.sample_task([concept], corpus, per_concept=10, seed=0)
    assert len(items) == 10
    golds = {item.gold for item in items}
    assert golds == {"va", "vb", "vc"}

    starved = mine.Concept(
        lemma="w",
        pos="NOUN",
        variations=concept.variations,
        entropy=concept.entropy,
        example_refs={"va": ("a:0",), "vb": ("b:0",), "vc": ()},
    )
    with pytest.raises(DatasetError, match="variation 'vc' has no usable sentences"):
        dataset.sample_task([starved], corpus)


def test_criterion_5_acceptance_fraction_of_scripted_review():
    candidates = ("va", "vb")
    items = [
        dataset.SelectionItem(
            id=f"w|NOUN|p:{i:03d}",
            concept=("w", "NOUN"),
            source_tokens=("the", "w", "here"),
            candidates=candidates,
            gold="va",
            pair_ref=f"p:{i:03d}",
            concept_index=1,
        )
        for i in range(228)
    ]
    votes = {
        item.id: (["va", "va", "vb"] if i < 180 else ["va", "vb", "vb"])
        for i, item in enumerate(items)
    }
    split = dataset.finalize(items, votes)
    assert len(split.accepted_items()) == 180
    assert round(split.acceptance_fraction * 100, 1) == 78.9


# criterion 6: word aligner


def test_criterion_6_aligner_convergence(toy_parallel_corpus):
    for n in range(1, 11):
        train_model1(toy_parallel_corpus, iterations=n).validate(tol=TOL_EXACT)

    table = train_model1(toy_parallel_corpus, iterations=10)
    assert table.prob("house", "haus") > 0.9
    history = table.log_likelihood_history
    assert len(history) == 10
    for earlier, later in zip(history, history[1:]):
        assert later >= earlier - TOL_EXACT


# criterion 7: end-to-end evaluation with mock endpoints


def test_criterion_7_gold_endpoint_scores_perfectly():
    items = make_eval_items(6)
    report = evaluate(items, SETTING_NO_RULES, client=gold_client(items),
                      seeds=(1, 2, 3))
    assert report.per_seed_accuracy == (1.0, 1.0, 1.0)
    assert report.accuracy_mean == 1.0
    assert report.accuracy_std == 0.0
    assert all(r.parse_status == "exact" for r in report.records)


def test_criterion_7_first_position_bias_is_visible():
    items = make_eval_items(8)
    report = evaluate(items, SETTING_NO_RULES, client=first_position_client(),
                      seeds=(1, 2, 3))
    histogram = report.position_bias[4]
    assert histogram[0] >= 0.99
    assert sum(histogram) == pytest.approx(1.0, abs=TOL_EXACT)


def test_criterion_7_unparseable_endpoint_retries_then_fails():
    items = make_eval_items(5)
    client = no_backticks_client()
    report = evaluate(items, SETTING_NO_RULES, client=client, seeds=(1,))
    assert report.accuracy_mean == 0.0
    assert all(r.parse_status == "failed" for r in report.records)
    assert all("--- retry ---" in r.raw_output for r in report.records)
    assert len(client.calls) == 2 * len(items)


# criterion 8: rule pipeline


def test_criterion_8_context_sentence_selection_rules():
    concept, corpus = concept_with_sentences(
        {
            "khorma": [("k:0", 60), ("k:1", 49), ("k:2", 48), ("k:3", 10)],
            "tarikh": [(f"t:{i}", 20 + (i % 25)) for i in range(120)],
        }
    )
    context = select_context_sentences(concept, corpus)

    khorma = context["khorma"]
    assert len(khorma) == 3  # the 60-token sentence is over the limit
    assert all(len(s.split()) < 50 for s in khorma)
    lengths = [len(s.split()) for s in khorma]
    assert lengths == sorted(lengths, reverse=True)

    tarikh = context["tarikh"]
    assert len(tarikh) == 50  # capped at the 50 longest
    assert min(len(s.split()) for s in tarikh) >= max(
        len(s.split()) for s in tarikh) - 25


def test_criterion_8_rule_generation_parses_and_caches(tmp_path):
    concept, corpus = two_variation_fixture()
    response = "```json\n" + json.dumps(GOOD_RULES) + "\n```"
    cache = RuleCache(tmp_path / "cache")

    client = ScriptedClient(responses=[response])
    ruleset = generate_rules(client, concept, corpus, "Farsi", cache=cache)
    assert ruleset.rules == GOOD_RULES
    assert len(client.calls) == 1

    silent = ScriptedClient(responses=[])
    cached = generate_rules(silent, concept, corpus, "Farsi", cache=cache)
    assert cached.rules == GOOD_RULES
    assert silent.calls == []
