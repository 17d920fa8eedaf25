"""Independent reference implementations the tests check against.

Everything here is deliberately naive: double loops, explicit
enumeration, textbook formulas. Slow is fine; these exist so the
package code is verified against a second, unrelated derivation.
"""

from __future__ import annotations

import itertools
import math


def cosine_oracle(a, b):
    dot = sum(float(x) * float(y) for x, y in zip(a, b))
    na = math.sqrt(sum(float(x) ** 2 for x in a))
    nb = math.sqrt(sum(float(y) ** 2 for y in b))
    return dot / (na * nb)


def pair_cosines_oracle(ids, vectors):
    """All unordered pairs in ascending (id_a, id_b) order."""
    order = sorted(range(len(ids)), key=lambda i: ids[i])
    out = []
    for ai in range(len(order)):
        for bi in range(ai + 1, len(order)):
            ra, rb = order[ai], order[bi]
            out.append((ids[ra], ids[rb], cosine_oracle(vectors[ra], vectors[rb])))
    return out


def midrank_oracle(values):
    """1-based ranks; tied values share the average of their positions."""
    vals = [float(v) for v in values]
    order = sorted(range(len(vals)), key=lambda i: vals[i])
    ranks = [0.0] * len(vals)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and vals[order[j + 1]] == vals[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for pos in range(i, j + 1):
            ranks[order[pos]] = avg
        i = j + 1
    return ranks


def pearson_oracle(x, y):
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def spearman_rho_oracle(x, y):
    return pearson_oracle(midrank_oracle(x), midrank_oracle(y))


def u_count_oracle(a, b):
    """U by direct pair counting: #{a_i > b_j} + 0.5 #{a_i == b_j}."""
    u = 0.0
    for x in a:
        for y in b:
            if x > y:
                u += 1.0
            elif x == y:
                u += 0.5
    return u


def mw_enumeration_oracle(a, b):
    """(u, p_greater, p_less) over every C(n+m, n) group assignment.

    Each assignment splits the pooled values into a new "a" group and
    recomputes U by pair counting, so ties keep their structure.
    """
    pooled = [float(v) for v in a] + [float(v) for v in b]
    n = len(a)
    total = len(pooled)
    u_obs = u_count_oracle(a, b)
    ge = le = count = 0
    for combo in itertools.combinations(range(total), n):
        chosen = set(combo)
        a_star = [pooled[i] for i in combo]
        b_star = [pooled[i] for i in range(total) if i not in chosen]
        u_star = u_count_oracle(a_star, b_star)
        ge += u_star >= u_obs
        le += u_star <= u_obs
        count += 1
    return u_obs, ge / count, le / count


def wilcoxon_enumeration_oracle(deltas):
    """(w, p_greater, p_less) over all 2^n sign assignments.

    Zero deltas are dropped first; W sums the midranks of |delta| over
    the positive ones. The null flips each sign independently.
    """
    nonzero = [float(d) for d in deltas if d != 0.0]
    ranks = midrank_oracle([abs(d) for d in nonzero])
    w_obs = sum(r for d, r in zip(nonzero, ranks) if d > 0)
    ge = le = count = 0
    for signs in itertools.product((0, 1), repeat=len(nonzero)):
        w_star = sum(r for s, r in zip(signs, ranks) if s)
        ge += w_star >= w_obs - 1e-12
        le += w_star <= w_obs + 1e-12
        count += 1
    return w_obs, ge / count, le / count


def knn_purity_oracle(ids, unit_rows, tags, k):
    """Per-cluster purity by explicit neighbour sorting.

    ids and unit_rows are aligned; tags maps id -> set of cluster names.
    Neighbours ranked by (-cosine, id). Returns {cluster: (n, purity)}.
    """
    by_id = {eid: row for eid, row in zip(ids, unit_rows)}
    share = {}
    for eid in ids:
        if not tags.get(eid):
            continue
        scored = []
        for other in ids:
            if other == eid:
                continue
            cos = float(sum(x * y for x, y in zip(by_id[eid], by_id[other])))
            scored.append((-cos, other))
        scored.sort()
        hits = 0
        for _, other in scored[:k]:
            if tags.get(other) and tags[eid] & tags[other]:
                hits += 1
        share[eid] = hits / k
    clusters = sorted({c for t in tags.values() for c in t})
    out = {}
    for cluster in clusters:
        members = [eid for eid in ids if cluster in tags.get(eid, set())]
        if members:
            out[cluster] = (len(members), sum(share[m] for m in members) / len(members))
    return out


def group_mean_oracle(vectors):
    dim = len(vectors[0])
    return [sum(v[j] for v in vectors) / len(vectors) for j in range(dim)]
