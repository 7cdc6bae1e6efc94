"""Benchmark the compiled kernels against the pure-Python fallback.

Times the two hot loops (EM sweep, weighted edit distance) on synthetic
workloads, checks both backends agree on the numbers, and prints the
speedup. Run from the repo root:

    python3 benchmarks/bench_kernels.py --pairs 3000 --iterations 4
"""

from __future__ import annotations

import argparse
import random
import time

import numpy as np

from lexsel import synthetic
from lexsel._kernels import available_backends

# Benchmarks feed the kernels directly, so they reuse the aligner's
# private corpus encoding rather than duplicating it.
from lexsel.align import _encode, _flatten


def _em_workload(n_pairs: int):
    corpus, _ = synthetic.generate(n_pairs=n_pairs, seed=0)
    src_vocab, _, src_sents, tgt_sents = _encode(corpus)
    src_concat, src_off = _flatten(src_sents)
    tgt_concat, tgt_off = _flatten(tgt_sents)

    cooc = set()
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
    return (src_concat, src_off, tgt_concat, tgt_off, pair_src, pair_tgt), probs


def bench_em(backends, n_pairs: int, iterations: int):
    args, probs0 = _em_workload(n_pairs)
    results = {}
    finals = {}
    for name, module in backends.items():
        start = time.perf_counter()
        probs = probs0
        loglik = float("nan")
        for _ in range(iterations):
            probs, loglik = module.em_iteration(*args, probs)
        results[name] = time.perf_counter() - start
        finals[name] = (probs, loglik)
    if len(finals) == 2:
        drift = float(np.max(np.abs(finals["pure"][0] - finals["compiled"][0])))
        assert drift < 1e-9, f"backends disagree: max prob drift {drift}"
    return results


def bench_edit_distance(backends, n_words: int):
    rng = random.Random(7)
    alphabet = "abcdefghijklmnop"
    words = [
        "".join(rng.choice(alphabet) for _ in range(rng.randint(4, 14)))
        for _ in range(2 * n_words)
    ]
    cases = list(zip(words[::2], words[1::2]))
    results = {}
    totals = {}
    for name, module in backends.items():
        start = time.perf_counter()
        totals[name] = sum(module.edit_distance(a, b) for a, b in cases)
        results[name] = time.perf_counter() - start
    if len(totals) == 2:
        assert totals["pure"] == totals["compiled"], "backends disagree on distances"
    return results


def _report(title: str, results: dict[str, float]):
    print(f"\n{title}")
    for name, elapsed in sorted(results.items()):
        print(f"  {name:>9}: {elapsed * 1000:8.1f} ms")
    if len(results) == 2:
        print(f"  speedup: {results['pure'] / results['compiled']:.1f}x")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--pairs", type=int, default=3000,
                        help="sentence pairs in the EM workload")
    parser.add_argument("--iterations", type=int, default=4,
                        help="EM sweeps to time")
    parser.add_argument("--words", type=int, default=20000,
                        help="word pairs in the edit-distance workload")
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(sorted(backends))}")
    _report(
        f"EM sweep ({args.pairs} pairs x {args.iterations} iterations)",
        bench_em(backends, args.pairs, args.iterations),
    )
    _report(
        f"edit distance ({args.words} word pairs)",
        bench_edit_distance(backends, args.words),
    )


if __name__ == "__main__":
    main()
