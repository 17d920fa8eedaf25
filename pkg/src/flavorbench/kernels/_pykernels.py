"""NumPy implementations of the similarity kernels.

All functions take C-contiguous float64 arrays whose rows are already
unit-normalized; normalization and zero-norm policing happen in the
callers. This module is the fallback backend; `_ckernels` (Cython) mirrors
the same signatures.
"""

import numpy as np

# Row block sized so a (block, n) product stays around 32 MB for n ~ 10k.
_BLOCK_FLOATS = 4 * 1024 * 1024


def pairwise_cosine_flat(unit):
    """Upper-triangle cosines of ``unit @ unit.T`` in row-major (i < j) order.

    Returns a flat array of length n*(n-1)/2, clamped to [-1, 1].
    """
    unit = np.ascontiguousarray(unit, dtype=np.float64)
    n = unit.shape[0]
    out = np.empty(n * (n - 1) // 2, dtype=np.float64)
    if n < 2:
        return out
    block = max(1, _BLOCK_FLOATS // n)
    pos = 0
    for i0 in range(0, n - 1, block):
        i1 = min(i0 + block, n - 1)
        sims = unit[i0:i1] @ unit.T
        for i in range(i0, i1):
            row = sims[i - i0, i + 1 :]
            out[pos : pos + row.size] = row
            pos += row.size
    np.clip(out, -1.0, 1.0, out=out)
    return out


def group_pair_stats(unit, starts):
    """Mean and min pairwise cosine within contiguous row groups.

    ``starts`` has g+1 entries; group i spans rows starts[i]:starts[i+1].
    Groups with fewer than 2 rows yield NaN in both outputs.
    """
    unit = np.ascontiguousarray(unit, dtype=np.float64)
    starts = np.asarray(starts, dtype=np.int64)
    g = starts.shape[0] - 1
    means = np.full(g, np.nan)
    mins = np.full(g, np.nan)
    for gi in range(g):
        a, b = starts[gi], starts[gi + 1]
        m = b - a
        if m < 2:
            continue
        sims = unit[a:b] @ unit[a:b].T
        vals = sims[np.triu_indices(m, 1)]
        np.clip(vals, -1.0, 1.0, out=vals)
        means[gi] = vals.mean()
        mins[gi] = vals.min()
    return means, mins


def topk_neighbors(unit, query_rows, k):
    """Row indices of the k nearest neighbours of each query row.

    Self is excluded. Ordering is by descending cosine with exact ties
    broken by ascending row index, so results are deterministic.
    Returns an int64 array of shape (len(query_rows), k).
    """
    unit = np.ascontiguousarray(unit, dtype=np.float64)
    query_rows = np.asarray(query_rows, dtype=np.int64)
    n = unit.shape[0]
    if not 0 < k < n:
        raise ValueError(f"k must be in 1..{n - 1}, got {k}")
    out = np.empty((query_rows.shape[0], k), dtype=np.int64)
    block = max(1, _BLOCK_FLOATS // n)
    for q0 in range(0, query_rows.shape[0], block):
        q1 = min(q0 + block, query_rows.shape[0])
        sims = unit[query_rows[q0:q1]] @ unit.T
        for qi in range(q0, q1):
            neg = -sims[qi - q0]
            neg[query_rows[qi]] = np.inf
            cand = np.argpartition(neg, k - 1)[:k]
            kth = neg[cand].max()
            better = np.flatnonzero(neg < kth)
            ties = np.flatnonzero(neg == kth)
            chosen = np.concatenate([better, ties[: k - better.size]])
            order = np.lexsort((chosen, neg[chosen]))
            out[qi] = chosen[order]
    return out


def within_cross_means(unit, codes):
    """Per-row mean cosine to same-group rows vs different-group rows.

    ``codes`` assigns an int64 group id per row; -1 marks rows that are
    outside every group (they still count as "cross" comparators for
    grouped rows). Rows whose code is -1 or whose group is a singleton get
    NaN in the within output. The cross mean is NaN when no out-of-group
    comparator exists.
    """
    unit = np.ascontiguousarray(unit, dtype=np.float64)
    codes = np.asarray(codes, dtype=np.int64)
    n = unit.shape[0]
    within = np.full(n, np.nan)
    cross = np.full(n, np.nan)
    total = unit @ unit.sum(axis=0)
    self_dot = np.einsum("ij,ij->i", unit, unit)
    for code in np.unique(codes):
        if code < 0:
            continue
        members = np.flatnonzero(codes == code)
        m = members.size
        if m < 2:
            continue
        gsum = unit[members] @ unit[members].sum(axis=0)
        within[members] = (gsum - self_dot[members]) / (m - 1)
        if n - m > 0:
            cross[members] = (total[members] - gsum) / (n - m)
    np.clip(within, -1.0, 1.0, out=within)
    np.clip(cross, -1.0, 1.0, out=cross)
    return within, cross
