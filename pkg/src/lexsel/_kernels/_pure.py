"""Pure-Python implementations of the hot kernels.

Selected at import time by :mod:`lexsel._kernels` when the compiled extension
is unavailable. Semantics are identical to the Cython versions; only speed
differs.
"""

from __future__ import annotations

import math

import numpy as np


def em_iteration(src_concat, src_off, tgt_concat, tgt_off, pair_src, pair_tgt, probs):
    """One EM sweep of a lexical translation model over an encoded corpus.

    Sentences are stored flattened: ``src_concat[src_off[p]:src_off[p+1]]``
    holds the source lemma ids of pair ``p`` (NULL already prepended), and
    likewise for the target side. ``(pair_src[r], pair_tgt[r]) -> probs[r]``
    is the sparse translation table over co-occurring lemma pairs.

    Returns ``(new_probs, log_likelihood)`` where the log-likelihood is that
    of the *input* table, accumulated during the expectation pass.
    """
    index = {}
    for r in range(len(pair_src)):
        index[(int(pair_src[r]), int(pair_tgt[r]))] = r

    counts = np.zeros(len(probs), dtype=np.float64)
    loglik = 0.0
    n_pairs = len(src_off) - 1
    for p in range(n_pairs):
        src = src_concat[src_off[p]:src_off[p + 1]]
        tgt = tgt_concat[tgt_off[p]:tgt_off[p + 1]]
        n_src = len(src)
        for t in tgt:
            t = int(t)
            rows = [index[(int(s), t)] for s in src]
            denom = 0.0
            for r in rows:
                denom += probs[r]
            loglik += math.log(denom / n_src)
            for r in rows:
                counts[r] += probs[r] / denom

    totals = np.zeros(int(pair_src.max()) + 1 if len(pair_src) else 1, dtype=np.float64)
    for r in range(len(pair_src)):
        totals[pair_src[r]] += counts[r]
    new_probs = np.empty_like(counts)
    for r in range(len(pair_src)):
        total = totals[pair_src[r]]
        new_probs[r] = counts[r] / total if total > 0.0 else probs[r]
    return new_probs, loglik


def edit_distance(a: str, b: str) -> int:
    """Edit distance with insert/delete cost 1 and substitution cost 2."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        curr = [i]
        for j, cb in enumerate(b, start=1):
            sub = prev[j - 1] + (0 if ca == cb else 2)
            curr.append(min(prev[j] + 1, curr[j - 1] + 1, sub))
        prev = curr
    return prev[-1]
