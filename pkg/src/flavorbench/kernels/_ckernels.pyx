# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled similarity kernels. Mirrors `_pykernels` signatures exactly.

Inputs are C-contiguous float64 arrays with unit-normalized rows; see the
NumPy backend for the shared contracts.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline double _dot(const double* a, const double* b, Py_ssize_t d) nogil:
    cdef double s = 0.0
    cdef Py_ssize_t t
    for t in range(d):
        s += a[t] * b[t]
    return s


cdef inline double _clamp(double x) nogil:
    if x > 1.0:
        return 1.0
    if x < -1.0:
        return -1.0
    return x


def pairwise_cosine_flat(object unit_in):
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] unit = \
        np.ascontiguousarray(unit_in, dtype=np.float64)
    cdef Py_ssize_t n = unit.shape[0]
    cdef Py_ssize_t d = unit.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = \
        np.empty(n * (n - 1) // 2, dtype=np.float64)
    cdef double* base = <double*> unit.data
    cdef double* o = <double*> out.data
    cdef Py_ssize_t i, j, pos = 0
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                o[pos] = _clamp(_dot(base + i * d, base + j * d, d))
                pos += 1
    return out


def group_pair_stats(object unit_in, object starts_in):
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] unit = \
        np.ascontiguousarray(unit_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] starts = \
        np.ascontiguousarray(starts_in, dtype=np.int64)
    cdef Py_ssize_t g = starts.shape[0] - 1
    cdef Py_ssize_t d = unit.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] means = np.full(g, np.nan)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] mins = np.full(g, np.nan)
    cdef double* base = <double*> unit.data
    cdef Py_ssize_t gi, a, b, i, j, cnt
    cdef double s, acc, lo
    with nogil:
        for gi in range(g):
            a = starts[gi]
            b = starts[gi + 1]
            if b - a < 2:
                continue
            acc = 0.0
            lo = 2.0
            cnt = 0
            for i in range(a, b):
                for j in range(i + 1, b):
                    s = _clamp(_dot(base + i * d, base + j * d, d))
                    acc += s
                    if s < lo:
                        lo = s
                    cnt += 1
            means[gi] = acc / cnt
            mins[gi] = lo
    return means, mins


def topk_neighbors(object unit_in, object query_in, int k):
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] unit = \
        np.ascontiguousarray(unit_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] queries = \
        np.ascontiguousarray(query_in, dtype=np.int64)
    cdef Py_ssize_t n = unit.shape[0]
    cdef Py_ssize_t d = unit.shape[1]
    cdef Py_ssize_t nq = queries.shape[0]
    if k <= 0 or k >= n:
        raise ValueError(f"k must be in 1..{n - 1}, got {k}")
    cdef cnp.ndarray[cnp.int64_t, ndim=2, mode="c"] out = \
        np.empty((nq, k), dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] best_sim = np.empty(k, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] best_idx = np.empty(k, dtype=np.int64)
    cdef double* base = <double*> unit.data
    cdef double* bs = <double*> best_sim.data
    cdef cnp.int64_t* bi = <cnp.int64_t*> best_idx.data
    cdef Py_ssize_t qi, q, j, filled, pos, t
    cdef double s
    with nogil:
        for qi in range(nq):
            q = queries[qi]
            filled = 0
            for j in range(n):
                if j == q:
                    continue
                s = _clamp(_dot(base + q * d, base + j * d, d))
                if filled < k:
                    pos = filled
                    # insertion sort keyed by (sim desc, index asc)
                    while pos > 0 and (bs[pos - 1] < s):
                        bs[pos] = bs[pos - 1]
                        bi[pos] = bi[pos - 1]
                        pos -= 1
                    bs[pos] = s
                    bi[pos] = j
                    filled += 1
                elif s > bs[k - 1]:
                    pos = k - 1
                    while pos > 0 and (bs[pos - 1] < s):
                        bs[pos] = bs[pos - 1]
                        bi[pos] = bi[pos - 1]
                        pos -= 1
                    bs[pos] = s
                    bi[pos] = j
                # s == bs[k-1]: later index never displaces an equal earlier one
            for t in range(k):
                out[qi, t] = bi[t]
    return out


def within_cross_means(object unit_in, object codes_in):
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] unit = \
        np.ascontiguousarray(unit_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] codes = \
        np.ascontiguousarray(codes_in, dtype=np.int64)
    cdef Py_ssize_t n = unit.shape[0]
    cdef Py_ssize_t d = unit.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] within = np.full(n, np.nan)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cross = np.full(n, np.nan)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] sizes
    cdef double* base = <double*> unit.data
    cdef Py_ssize_t i, j, m
    cdef double s, wacc, cacc
    # group sizes for rows that belong to a group
    cdef long long code
    sizes = np.zeros(n, dtype=np.int64)
    counts = {}
    for i in range(n):
        code = codes[i]
        if code >= 0:
            counts[code] = counts.get(code, 0) + 1
    for i in range(n):
        code = codes[i]
        sizes[i] = counts.get(code, 0) if code >= 0 else 0
    with nogil:
        for i in range(n):
            if codes[i] < 0:
                continue
            m = sizes[i]
            if m < 2:
                continue
            wacc = 0.0
            cacc = 0.0
            for j in range(n):
                if j == i:
                    continue
                s = _clamp(_dot(base + i * d, base + j * d, d))
                if codes[j] == codes[i]:
                    wacc += s
                else:
                    cacc += s
            within[i] = wacc / (m - 1)
            if n - m > 0:
                cross[i] = cacc / (n - m)
    return within, cross
