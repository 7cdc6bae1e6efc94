import time

import pytest

from lexsel import synthetic
from lexsel.corpus import AnnotatedToken, Corpus, SentencePair

# One terminal-summary line per acceptance criterion, emitted whether the
# criterion passed or failed. Keyed by the test-name prefix in
# test_acceptance.py.
CRITERIA = {
    1: "entropy filter boundary",
    2: "synthetic-corpus mining oracle",
    3: "agreement statistics",
    4: "fuzzy matcher",
    5: "dataset construction",
    6: "word aligner",
    7: "end-to-end evaluation with mock endpoints",
    8: "rule pipeline",
}


def _criterion_of(nodeid: str) -> int | None:
    if "test_acceptance.py::" not in nodeid:
        return None
    name = nodeid.split("::")[-1]
    if not name.startswith("test_criterion_"):
        return None
    try:
        return int(name.split("_")[2])
    except (IndexError, ValueError):
        return None


def pytest_sessionstart(session):
    session.config._suite_start_time = time.time()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes: dict[int, bool] = {}
    for status, passed in (("passed", True), ("failed", False), ("error", False)):
        for report in terminalreporter.stats.get(status, []):
            criterion = _criterion_of(getattr(report, "nodeid", ""))
            if criterion is not None:
                outcomes[criterion] = outcomes.get(criterion, True) and passed
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        if number in outcomes:
            verdict = "PASS" if outcomes[number] else "FAIL"
        else:
            verdict = "NOT RUN"
        terminalreporter.write_line(
            f"criterion {number}: {verdict} - {CRITERIA[number]}"
        )
    start = getattr(config, "_suite_start_time", None)
    if start is not None:
        elapsed = time.time() - start
        terminalreporter.write_line(f"suite wall time: {elapsed:.1f}s (budget 120s)")


def make_tokens(text: str, pos: str = "X") -> tuple[AnnotatedToken, ...]:
    return tuple(
        AnnotatedToken(surface=w, lemma=w.lower(), pos=pos, index=i)
        for i, w in enumerate(text.split())
    )


def make_pair(pair_id: str, source: str, target: str, alignment=()) -> SentencePair:
    return SentencePair(
        id=pair_id,
        source_tokens=make_tokens(source),
        target_tokens=make_tokens(target),
        alignment=frozenset(alignment),
        provenance="test",
    )


@pytest.fixture
def toy_parallel_corpus() -> Corpus:
    """Three sentence pairs, no alignments: aligner training input."""
    pairs = (
        make_pair("toy:1", "the house", "das haus"),
        make_pair("toy:2", "the book", "das buch"),
        make_pair("toy:3", "a book", "ein buch"),
    )
    return Corpus(language_pair=("en", "de"), pairs=pairs)


@pytest.fixture(scope="session")
def planted():
    """Deterministic synthetic corpus with its planted concept inventory."""
    return synthetic.generate(seed=0)
