# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

Mirrors :mod:`lexsel._kernels._pure` exactly; see that module for the
interface contract.
"""

from libc.math cimport log
from libcpp.unordered_map cimport unordered_map

import numpy as np

cimport numpy as cnp

cnp.import_array()

ctypedef unsigned long long u64


cdef inline u64 _key(long s, long t) nogil:
    return (<u64>s << 32) | <u64>t


def em_iteration(cnp.int32_t[::1] src_concat, cnp.int64_t[::1] src_off,
                 cnp.int32_t[::1] tgt_concat, cnp.int64_t[::1] tgt_off,
                 cnp.int32_t[::1] pair_src, cnp.int32_t[::1] pair_tgt,
                 cnp.float64_t[::1] probs):
    cdef Py_ssize_t n_rows = pair_src.shape[0]
    cdef Py_ssize_t n_pairs = src_off.shape[0] - 1
    cdef unordered_map[u64, long] index
    cdef Py_ssize_t r, p, si, ti, s_begin, s_end, t_begin, t_end
    cdef long row
    cdef double denom, loglik = 0.0
    cdef long max_src = 0

    index.reserve(<size_t>(n_rows * 2))
    for r in range(n_rows):
        index[_key(pair_src[r], pair_tgt[r])] = <long>r
        if pair_src[r] > max_src:
            max_src = pair_src[r]

    counts_arr = np.zeros(n_rows, dtype=np.float64)
    cdef cnp.float64_t[::1] counts = counts_arr
    cdef cnp.float64_t[::1] totals = np.zeros(max_src + 1, dtype=np.float64)
    new_probs_arr = np.empty(n_rows, dtype=np.float64)
    cdef cnp.float64_t[::1] new_probs = new_probs_arr
    cdef double n_src

    with nogil:
        for p in range(n_pairs):
            s_begin = src_off[p]
            s_end = src_off[p + 1]
            t_begin = tgt_off[p]
            t_end = tgt_off[p + 1]
            n_src = <double>(s_end - s_begin)
            for ti in range(t_begin, t_end):
                denom = 0.0
                for si in range(s_begin, s_end):
                    row = index[_key(src_concat[si], tgt_concat[ti])]
                    denom += probs[row]
                loglik += log(denom / n_src)
                for si in range(s_begin, s_end):
                    row = index[_key(src_concat[si], tgt_concat[ti])]
                    counts[row] += probs[row] / denom

        for r in range(n_rows):
            totals[pair_src[r]] += counts[r]
        for r in range(n_rows):
            if totals[pair_src[r]] > 0.0:
                new_probs[r] = counts[r] / totals[pair_src[r]]
            else:
                new_probs[r] = probs[r]

    return new_probs_arr, loglik


def edit_distance(str a, str b):
    """Edit distance with insert/delete cost 1 and substitution cost 2."""
    cdef Py_ssize_t la = len(a), lb = len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la
    cdef cnp.int32_t[::1] ca = np.fromiter((ord(c) for c in a), dtype=np.int32, count=la)
    cdef cnp.int32_t[::1] cb = np.fromiter((ord(c) for c in b), dtype=np.int32, count=lb)
    cdef cnp.int64_t[::1] prev = np.arange(lb + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] curr = np.empty(lb + 1, dtype=np.int64)
    cdef Py_ssize_t i, j
    cdef long sub, best
    with nogil:
        for i in range(1, la + 1):
            curr[0] = i
            for j in range(1, lb + 1):
                sub = prev[j - 1] + (0 if ca[i - 1] == cb[j - 1] else 2)
                best = prev[j] + 1
                if curr[j - 1] + 1 < best:
                    best = curr[j - 1] + 1
                if sub < best:
                    best = sub
                curr[j] = best
            for j in range(lb + 1):
                prev[j] = curr[j]
    return int(prev[lb])
