"""Rule generation: context selection, prompting, parsing, caching."""

import json
import threading
import time

import pytest

from lexsel.corpus import AnnotatedToken, Corpus, SentencePair
from lexsel.errors import GenerationFailedError, LexselError
from lexsel.mine import Concept, Variation
from lexsel.rules import (
    RuleCache,
    RuleSet,
    _extract_json,
    build_rule_prompt,
    cache_key,
    format_translations,
    generate_rules,
    generate_rules_bulk,
    load_rules_jsonl,
    save_rules_jsonl,
    select_context_sentences,
    with_verification,
)

from .fakes import ScriptedClient


def sentence_pair(pid, n_tokens, variation):
    words = [f"w{i}" for i in range(n_tokens)]
    source = tuple(
        AnnotatedToken(surface=w, lemma=w, index=i) for i, w in enumerate(words)
    )
    target = (AnnotatedToken(surface=variation, lemma=variation),)
    return SentencePair(id=pid, source_tokens=source, target_tokens=target, alignment=((0, 0),))


def concept_with_sentences(pools):
    """pools: variation -> list of (pair id, token count)."""
    pairs = []
    refs = {}
    for variation, specs in sorted(pools.items()):
        refs[variation] = tuple(pid for pid, _ in specs)
        pairs.extend(sentence_pair(pid, n, variation) for pid, n in specs)
    total = sum(len(s) for s in pools.values())
    variations = tuple(
        sorted(
            (
                Variation(lemma=v, count=60, probability=len(s) / total)
                for v, s in pools.items()
            ),
            key=lambda v: (-v.probability, v.lemma),
        )
    )
    concept = Concept(
        lemma="date", pos="NOUN", variations=variations, entropy=0.7, example_refs=refs
    )
    return concept, Corpus(pairs=tuple(pairs), language_pair=("en", "fa"))


GOOD_RULES = {"khorma": "the edible dried fruit", "tarikh": "a calendar day"}


def two_variation_fixture():
    return concept_with_sentences(
        {"khorma": [("k:0", 5), ("k:1", 8)], "tarikh": [("t:0", 6)]}
    )


class TestFormatTranslations:
    def test_quoted_comma_separated(self):
        assert format_translations(["a", "b"]) == '"a", "b"'
        assert format_translations(["solo"]) == '"solo"'


class TestSelectContextSentences:
    def test_under_limit_longest_first(self):
        concept, corpus = concept_with_sentences(
            {"va": [("p:0", 60), ("p:1", 49), ("p:2", 48), ("p:3", 10)], "vb": [("q:0", 5)]}
        )
        context = select_context_sentences(concept, corpus, max_tokens=50)
        lengths = [len(s.split()) for s in context["va"]]
        assert lengths == [49, 48, 10]

    def test_limit_is_strict(self):
        concept, corpus = concept_with_sentences({"va": [("p:0", 50)], "vb": [("q:0", 49)]})
        context = select_context_sentences(concept, corpus, max_tokens=50)
        assert context["va"] == []
        assert len(context["vb"]) == 1

    def test_caps_at_per_variation(self):
        concept, corpus = concept_with_sentences(
            {
                "va": [(f"p:{i:03d}", 10 + (i % 30)) for i in range(120)],
                "vb": [("q:0", 5)],
            }
        )
        context = select_context_sentences(concept, corpus, per_variation=50)
        assert len(context["va"]) == 50
        lengths = [len(s.split()) for s in context["va"]]
        assert lengths == sorted(lengths, reverse=True)
        assert min(lengths) >= 25  # only the longest survive a 120 -> 50 cut

    def test_ties_break_by_pair_id(self):
        concept, corpus = concept_with_sentences(
            {"va": [("p:2", 7), ("p:1", 7)], "vb": [("q:0", 5)]}
        )
        # equal lengths: the sentence texts are identical, so check via refs
        context = select_context_sentences(concept, corpus, per_variation=1)
        assert len(context["va"]) == 1

    def test_zero_qualifying_warns(self, caplog):
        concept, corpus = concept_with_sentences({"va": [("p:0", 80)], "vb": [("q:0", 5)]})
        with caplog.at_level("WARNING"):
            context = select_context_sentences(concept, corpus, max_tokens=50)
        assert context["va"] == []
        assert any("no qualifying context sentences" in r.message for r in caplog.records)

    def test_unresolvable_ref_is_an_error(self):
        concept, corpus = concept_with_sentences({"va": [("p:0", 5)], "vb": [("q:0", 5)]})
        broken = Concept(
            lemma=concept.lemma,
            pos=concept.pos,
            variations=concept.variations,
            entropy=concept.entropy,
            example_refs={"va": ("p:0",), "vb": ("ghost:0",)},
        )
        with pytest.raises(LexselError, match="ghost:0"):
            select_context_sentences(broken, corpus)


class TestBuildRulePrompt:
    def test_system_text_structure(self):
        concept, corpus = two_variation_fixture()
        context = select_context_sentences(concept, corpus)
        system_text, user_text = build_rule_prompt(concept, context, "Farsi")
        assert system_text.startswith(
            'Please only return a json with the following keys "khorma", "tarikh" '
            "and no other text."
        )
        assert "the value should be a string in English" in system_text
        assert "a brief example in Farsi" in system_text
        assert "transliteration from Farsi to Latin characters" in system_text

    def test_user_text_structure(self):
        concept, corpus = two_variation_fixture()
        context = select_context_sentences(concept, corpus)
        _, user_text = build_rule_prompt(concept, context, "Farsi")
        assert user_text.startswith(
            'When translating the concept "date" from English to Farsi, what is the '
            'difference in meaning between "khorma", "tarikh" and in which contexts '
            "should they be used?"
        )
        assert "Here are sentences where each word is used in-context to help you:" in user_text
        assert "\n\nkhorma:\n- " in user_text
        assert "\n\ntarikh:\n- " in user_text
        for sentences in context.values():
            for sentence in sentences:
                assert f"- {sentence}" in user_text

    def test_empty_pool_shows_placeholder(self):
        concept, corpus = two_variation_fixture()
        context = {"khorma": ["one sentence here"], "tarikh": []}
        _, user_text = build_rule_prompt(concept, context, "Farsi")
        assert "tarikh:\n(no examples)" in user_text

    def test_empty_context_rejected(self):
        concept, _ = two_variation_fixture()
        with pytest.raises(ValueError, match="empty context"):
            build_rule_prompt(concept, {}, "Farsi")


class TestExtractJson:
    def test_bare_object(self):
        assert _extract_json('{"a": "x"}') == {"a": "x"}

    def test_fenced_object(self):
        assert _extract_json('```\n{"a": "x"}\n```') == {"a": "x"}

    def test_fenced_with_language_tag(self):
        assert _extract_json('```json\n{"a": "x"}\n```') == {"a": "x"}

    def test_prose_around_object(self):
        raw = 'Sure! Here you go: {"a": "x"} Hope that helps.'
        assert _extract_json(raw) == {"a": "x"}

    def test_two_fences_rejected(self):
        with pytest.raises(ValueError, match="one fenced block"):
            _extract_json('```{"a": 1}``` and ```{"b": 2}```')

    def test_non_object_rejected(self):
        with pytest.raises(ValueError, match="object"):
            _extract_json('["a", "b"]')

    def test_no_json_rejected(self):
        with pytest.raises(ValueError):
            _extract_json("no structured content at all")


class TestRuleCache:
    def test_miss_then_hit(self, tmp_path):
        cache = RuleCache(tmp_path)
        assert cache.get("k" * 64) is None
        calls = []

        def factory():
            calls.append(1)
            return {"rules": {"a": "b"}}

        first = cache.get_or_create("k" * 64, factory)
        second = cache.get_or_create("k" * 64, factory)
        assert first == second == {"rules": {"a": "b"}}
        assert len(calls) == 1

    def test_persists_across_instances(self, tmp_path):
        RuleCache(tmp_path).get_or_create("a" * 64, lambda: {"v": 1})

        def exploding():
            raise AssertionError("cache file was ignored")

        assert RuleCache(tmp_path).get_or_create("a" * 64, exploding) == {"v": 1}

    def test_memory_only_mode(self):
        cache = RuleCache()
        cache.get_or_create("b" * 64, lambda: {"v": 2})
        assert cache.get("b" * 64) == {"v": 2}

    def test_concurrent_requests_coalesce(self, tmp_path):
        cache = RuleCache(tmp_path)
        calls = []

        def slow_factory():
            calls.append(1)
            time.sleep(0.05)
            return {"v": 3}

        results = []
        threads = [
            threading.Thread(
                target=lambda: results.append(cache.get_or_create("c" * 64, slow_factory))
            )
            for _ in range(4)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(calls) == 1
        assert results == [{"v": 3}] * 4


class TestCacheKey:
    def test_sensitive_to_every_input(self):
        base = cache_key("m", ("w", "NOUN"), "sys", "user")
        assert cache_key("m2", ("w", "NOUN"), "sys", "user") != base
        assert cache_key("m", ("w2", "NOUN"), "sys", "user") != base
        assert cache_key("m", ("w", "VERB"), "sys", "user") != base
        assert cache_key("m", ("w", "NOUN"), "sys2", "user") != base
        assert cache_key("m", ("w", "NOUN"), "sys", "user2") != base
        assert len(base) == 64


class TestGenerateRules:
    def test_clean_first_response(self):
        concept, corpus = two_variation_fixture()
        client = ScriptedClient(responses=[f"```json\n{json.dumps(GOOD_RULES)}\n```"])
        ruleset = generate_rules(client, concept, corpus, "Farsi")
        assert ruleset.concept == ("date", "NOUN")
        assert dict(ruleset.rules) == GOOD_RULES
        assert ruleset.generator == "mock-model"
        assert ruleset.verified is None
        assert len(client.calls) == 1
        system, user = client.calls[0][0], client.calls[0][1]
        assert system["role"] == "system"
        assert user["role"] == "user"

    def test_reprompt_on_malformed_then_success(self):
        concept, corpus = two_variation_fixture()
        client = ScriptedClient(
            responses=["not json at all", json.dumps(GOOD_RULES)]
        )
        ruleset = generate_rules(client, concept, corpus, "Farsi")
        assert dict(ruleset.rules) == GOOD_RULES
        assert len(client.calls) == 2
        retry_user = client.calls[1][-1]["content"]
        assert retry_user.endswith(
            'Please only return a json object with exactly the following keys '
            '"khorma", "tarikh" and no other text.'
        )
        # the retry restates on top of the original question
        assert retry_user.startswith(client.calls[0][-1]["content"])

    def test_wrong_keys_count_as_malformed(self):
        concept, corpus = two_variation_fixture()
        client = ScriptedClient(
            responses=[json.dumps({"khorma": "x"}), json.dumps(GOOD_RULES)]
        )
        ruleset = generate_rules(client, concept, corpus, "Farsi")
        assert len(client.calls) == 2
        assert dict(ruleset.rules) == GOOD_RULES

    def test_double_failure_raises_with_both_responses(self):
        concept, corpus = two_variation_fixture()
        client = ScriptedClient(responses=["first junk", "second junk"])
        with pytest.raises(GenerationFailedError) as excinfo:
            generate_rules(client, concept, corpus, "Farsi")
        assert excinfo.value.responses == ("first junk", "second junk")
        assert "date/NOUN" in str(excinfo.value)

    def test_non_string_values_rejected(self):
        concept, corpus = two_variation_fixture()
        client = ScriptedClient(
            responses=[json.dumps({"khorma": 1, "tarikh": "ok"}), json.dumps(GOOD_RULES)]
        )
        generate_rules(client, concept, corpus, "Farsi")
        assert len(client.calls) == 2

    def test_cache_prevents_second_call(self, tmp_path):
        concept, corpus = two_variation_fixture()
        cache = RuleCache(tmp_path)
        first_client = ScriptedClient(responses=[json.dumps(GOOD_RULES)])
        first = generate_rules(first_client, concept, corpus, "Farsi", cache=cache)
        silent_client = ScriptedClient(responses=[])
        second = generate_rules(silent_client, concept, corpus, "Farsi", cache=cache)
        assert silent_client.calls == []
        assert dict(second.rules) == dict(first.rules)
        assert second.raw_ref == first.raw_ref
        stored = cache.get(first.raw_ref)
        assert stored["raw_response"] == json.dumps(GOOD_RULES)

    def test_system_prepended_when_role_unsupported(self):
        concept, corpus = two_variation_fixture()
        client = ScriptedClient(
            responses=[json.dumps(GOOD_RULES)], supports_system_role=False
        )
        generate_rules(client, concept, corpus, "Farsi")
        (message,) = client.calls[0]
        assert message["role"] == "user"
        assert message["content"].startswith("Please only return a json")
        assert 'When translating the concept "date"' in message["content"]


class TestGenerateRulesBulk:
    def test_dedupes_by_concept(self, tmp_path):
        concept, corpus = two_variation_fixture()
        client = ScriptedClient(responses=[json.dumps(GOOD_RULES)])
        results = generate_rules_bulk(
            client, [concept, concept], corpus, "Farsi", cache=RuleCache(tmp_path)
        )
        assert len(results) == 1
        assert len(client.calls) == 1

    def test_failures_skipped_unless_strict(self, caplog):
        concept, corpus = two_variation_fixture()
        client = ScriptedClient(responses=["junk", "junk"])
        with caplog.at_level("WARNING"):
            results = generate_rules_bulk(client, [concept], corpus, "Farsi")
        assert results == []
        assert any("skipping" in r.message for r in caplog.records)
        strict_client = ScriptedClient(responses=["junk", "junk"])
        with pytest.raises(GenerationFailedError):
            generate_rules_bulk(strict_client, [concept], corpus, "Farsi", strict=True)


class TestVerificationAndSerialization:
    def _ruleset(self):
        return RuleSet(
            concept=("date", "NOUN"),
            rules=GOOD_RULES,
            generator="mock-model",
            raw_ref="a" * 64,
        )

    def test_with_verification_merges_labels(self):
        verified = with_verification(self._ruleset(), {"khorma": "correct"})
        assert verified.verified == {"khorma": "correct", "tarikh": "unlabeled"}
        assert verified.rules == GOOD_RULES

    def test_with_verification_validates(self):
        with pytest.raises(ValueError, match="unknown variation"):
            with_verification(self._ruleset(), {"ghost": "correct"})
        with pytest.raises(ValueError, match="unknown verification label"):
            with_verification(self._ruleset(), {"khorma": "great"})

    def test_jsonl_round_trip(self, tmp_path):
        rulesets = [
            self._ruleset(),
            with_verification(self._ruleset(), {"khorma": "correct", "tarikh": "incorrect"}),
        ]
        path = tmp_path / "rules.jsonl"
        save_rules_jsonl(rulesets, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 2
        first = json.loads(lines[0])
        assert first["concept"] == {"lemma": "date", "pos": "NOUN"}
        assert first["raw_response_ref"] == "a" * 64
        assert first["verified"] is None
        back = load_rules_jsonl(path)
        assert [dict(r.rules) for r in back] == [GOOD_RULES, GOOD_RULES]
        assert back[1].verified == {"khorma": "correct", "tarikh": "incorrect"}
