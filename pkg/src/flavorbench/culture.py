"""Cultural signature analyses over sparse cuisine tags.

Tags are conservative: most entities carry none, and only distinctive
markers are tagged with one or more of the cluster names. Purity asks how
often a tagged entity's nearest neighbours share a tag with it; lift
normalizes by the chance rate given the cluster's share of the pool.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .corpus import DataFormatError, EmbeddingMatrix
from .stats import Seed, StatResult, cohens_d, mann_whitney_u, wilcoxon_signed_rank

DEFAULT_K = 10


@dataclass(frozen=True)
class CuisineTags:
    """Sparse tag sets over entity ids, with the cluster catalog."""

    catalog: tuple[str, ...]
    tags: dict                       # id -> frozenset of cluster names (non-empty)
    pool_spec: str = ""

    def __post_init__(self):
        object.__setattr__(self, "catalog", tuple(self.catalog))
        if not self.catalog:
            raise ValueError("cuisine catalog is empty")
        if len(set(self.catalog)) != len(self.catalog):
            raise ValueError("duplicate cluster names in catalog")
        checked = {}
        for key, value in self.tags.items():
            eid = int(key)
            tag_set = frozenset(str(v) for v in value)
            if not tag_set:
                continue                      # untagged entities are simply absent
            unknown = sorted(tag_set - set(self.catalog))
            if unknown:
                raise ValueError(f"id {eid}: tags outside catalog: {unknown}")
            checked[eid] = tag_set
        object.__setattr__(self, "tags", checked)

    def tagged_ids(self) -> list[int]:
        return sorted(self.tags)

    def members(self, cluster: str) -> list[int]:
        return sorted(i for i, t in self.tags.items() if cluster in t)


def load_cuisine_tags(path, matrix: EmbeddingMatrix, strict: bool = True) -> CuisineTags:
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    for req in ("clusters", "tags"):
        if req not in doc:
            raise DataFormatError(f"{path}: missing required field {req!r}")
    unknown = [nm for nm in doc["tags"] if nm not in matrix.name_to_id]
    if unknown and strict:
        raise DataFormatError(f"{path}: names not present in matrix: {sorted(unknown)}")
    tags = {matrix.name_to_id[nm]: v for nm, v in doc["tags"].items()
            if nm in matrix.name_to_id}
    return CuisineTags(
        catalog=tuple(doc["clusters"]), tags=tags, pool_spec=doc.get("pool_spec", ""),
    )


def save_cuisine_tags(tags: CuisineTags, path, matrix: EmbeddingMatrix) -> None:
    doc = {
        "pool_spec": tags.pool_spec,
        "clusters": list(tags.catalog),
        "tags": {matrix.name(i): sorted(t) for i, t in sorted(tags.tags.items())},
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class CuisinePurity:
    cluster: str
    n: int
    purity: float
    baseline: float
    lift: float

    def to_dict(self) -> dict:
        return {"cluster": self.cluster, "n": self.n, "purity": self.purity,
                "baseline": self.baseline, "lift": self.lift}


@dataclass(frozen=True)
class PurityReport:
    per_cluster: tuple               # CuisinePurity in catalog order
    mean_purity: float
    mean_lift: float
    k: int
    pool_size: int
    pool_spec: str = ""

    def to_dict(self) -> dict:
        return {
            "per_cluster": [c.to_dict() for c in self.per_cluster],
            "mean_purity": self.mean_purity,
            "mean_lift": self.mean_lift,
            "k": self.k,
            "pool_size": self.pool_size,
            "pool_spec": self.pool_spec,
        }


def lift(purity: float, cluster_size: int, pool_size: int) -> float:
    """Purity over the chance rate of the cluster in its pool."""
    if not 0 < cluster_size <= pool_size:
        raise ValueError(f"cluster_size must be in 1..{pool_size}, got {cluster_size}")
    return float(purity) / (cluster_size / pool_size)


def _tag_masks(tags: CuisineTags, ids) -> np.ndarray:
    if len(tags.catalog) > 64:
        raise ValueError("at most 64 clusters supported")
    bit_of = {name: 1 << i for i, name in enumerate(tags.catalog)}
    out = np.zeros(len(ids), dtype=np.uint64)
    for pos, eid in enumerate(ids):
        for name in tags.tags.get(int(eid), ()):
            out[pos] |= np.uint64(bit_of[name])
    return out


def knn_purity(matrix: EmbeddingMatrix, tags: CuisineTags, pool_ids=None,
               k: int = DEFAULT_K, strict: bool = True) -> PurityReport:
    """Tag-sharing rate among each tagged entity's k nearest neighbours.

    Neighbours come from the full pool (tagged or not), by cosine, self
    excluded, exact ties broken by ascending id. A neighbour matches when
    the tag sets intersect. Per-cluster purity averages over that
    cluster's members; baseline is the cluster's share of the pool;
    lift = purity / baseline. With strict=True a catalog cluster without
    members in the pool is an error; otherwise it is skipped.
    """
    pool = sorted(int(i) for i in matrix.ids) if pool_ids is None else sorted(int(i) for i in pool_ids)
    if len(set(pool)) != len(pool):
        raise ValueError("pool contains duplicate ids")
    pool_arr = np.array(pool, dtype=np.int64)
    rows = matrix.rows_for(pool_arr)
    n_pool = pool_arr.size
    if not 0 < k < n_pool:
        raise ValueError(f"k must be in 1..{n_pool - 1}, got {k}")
    pool_set = set(pool)
    outside = sorted(i for i in tags.tagged_ids() if i not in pool_set)
    if outside:
        raise ValueError(f"tagged ids outside the pool: {outside}")

    unit = matrix.unit_rows(rows)
    masks = _tag_masks(tags, pool_arr)
    query_positions = np.flatnonzero(masks != 0)
    neighbor_rows = kernels.topk_neighbors(unit, query_positions, k)
    neigh_masks = masks[neighbor_rows]                       # (q, k)
    q_masks = masks[query_positions][:, None]
    fractions = ((neigh_masks & q_masks) != 0).mean(axis=1)  # tag-set intersection
    frac_of = {int(pool_arr[pos]): float(fractions[qi]) for qi, pos in enumerate(query_positions)}

    per = []
    for cluster in tags.catalog:
        members = [i for i in tags.members(cluster) if i in pool_set]
        if not members:
            if strict:
                raise ValueError(f"cluster {cluster!r} has no tagged members in the pool")
            continue
        purity = float(np.mean([frac_of[i] for i in members]))
        per.append(CuisinePurity(
            cluster=cluster, n=len(members), purity=purity,
            baseline=len(members) / n_pool,
            lift=lift(purity, len(members), n_pool),
        ))
    if not per:
        raise ValueError("no catalog cluster has members in the pool")
    return PurityReport(
        per_cluster=tuple(per),
        mean_purity=float(np.mean([c.purity for c in per])),
        mean_lift=float(np.mean([c.lift for c in per])),
        k=k, pool_size=n_pool, pool_spec=tags.pool_spec,
    )


@dataclass(frozen=True)
class SubsampledPurityReport:
    per_cluster: dict                 # cluster -> summary dict
    mean_purity: float
    mean_lift: float
    k: int
    target_size: int
    iterations: int
    seed_master: int

    def to_dict(self) -> dict:
        return {
            "per_cluster": self.per_cluster,
            "mean_purity": self.mean_purity,
            "mean_lift": self.mean_lift,
            "k": self.k,
            "target_size": self.target_size,
            "iterations": self.iterations,
            "seed": self.seed_master,
        }


def subsampled_purity(matrix: EmbeddingMatrix, tags: CuisineTags, pool_ids,
                      target_size: int, iterations: int, seed: Seed,
                      k: int = DEFAULT_K) -> SubsampledPurityReport:
    """Purity under repeated without-replacement subsampling of the pool.

    Iteration i subsamples with substream (master, i), keeps only tags
    inside the subsample, and recomputes purity. Clusters absent from an
    iteration contribute no sample for it (counted per cluster). Summaries
    are means and 2.5/97.5 percentile intervals over iterations.
    """
    pool = sorted(int(i) for i in pool_ids)
    if not 1 <= target_size <= len(pool):
        raise ValueError(f"target_size must be in 1..{len(pool)}, got {target_size}")
    if iterations < 2:
        raise ValueError("need at least 2 iterations")
    if not 0 < k < target_size:
        raise ValueError(f"k must be in 1..{target_size - 1}, got {k}")
    pool_arr = np.array(pool, dtype=np.int64)
    purities: dict[str, list[float]] = {c: [] for c in tags.catalog}
    lifts: dict[str, list[float]] = {c: [] for c in tags.catalog}
    for i in range(iterations):
        sub = set(int(x) for x in seed.rng(i).choice(pool_arr, size=target_size, replace=False))
        sub_tags = CuisineTags(
            catalog=tags.catalog,
            tags={eid: t for eid, t in tags.tags.items() if eid in sub},
            pool_spec=tags.pool_spec,
        )
        if not sub_tags.tags:
            continue
        rep = knn_purity(matrix, sub_tags, sorted(sub), k=k, strict=False)
        for c in rep.per_cluster:
            purities[c.cluster].append(c.purity)
            lifts[c.cluster].append(c.lift)
    per: dict[str, dict] = {}
    for cluster in tags.catalog:
        vals = purities[cluster]
        if not vals:
            per[cluster] = {"iterations_present": 0}
            continue
        arr = np.array(vals)
        lo, hi = np.percentile(arr, [2.5, 97.5])
        per[cluster] = {
            "iterations_present": int(arr.size),
            "purity_mean": float(arr.mean()),
            "purity_ci95": [float(lo), float(hi)],
            "lift_mean": float(np.mean(lifts[cluster])),
        }
    present = [p for p in per.values() if p["iterations_present"] > 0]
    if not present:
        raise ValueError("no cluster appeared in any subsample")
    return SubsampledPurityReport(
        per_cluster=per,
        mean_purity=float(np.mean([p["purity_mean"] for p in present])),
        mean_lift=float(np.mean([p["lift_mean"] for p in present])),
        k=k, target_size=target_size, iterations=iterations, seed_master=seed.master,
    )


@dataclass(frozen=True)
class IntraClusterReport:
    per_cluster: dict                 # cluster -> {"n":, "mean_cosine":}
    global_baseline: float            # mean pairwise cosine over the pool
    pool_size: int
    excluded: tuple[str, ...]         # clusters with < 2 members

    def to_dict(self) -> dict:
        return {
            "per_cluster": self.per_cluster,
            "global_baseline": self.global_baseline,
            "pool_size": self.pool_size,
            "excluded": list(self.excluded),
        }


def intra_cluster_similarity(matrix: EmbeddingMatrix, tags: CuisineTags,
                             pool_ids=None) -> IntraClusterReport:
    """Mean pairwise cosine within each cluster vs the whole-pool mean."""
    pool = sorted(int(i) for i in matrix.ids) if pool_ids is None else sorted(int(i) for i in pool_ids)
    pool_set = set(pool)
    member_rows = []
    starts = [0]
    clusters = []
    excluded = []
    for cluster in tags.catalog:
        members = [i for i in tags.members(cluster) if i in pool_set]
        if len(members) < 2:
            excluded.append(cluster)
            continue
        member_rows.extend(matrix.rows_for(members))
        starts.append(len(member_rows))
        clusters.append((cluster, len(members)))
    if not clusters:
        raise ValueError("no cluster has 2 or more members in the pool")
    unit = matrix.unit_rows(np.array(member_rows, dtype=np.int64))
    means, _ = kernels.group_pair_stats(unit, np.array(starts, dtype=np.int64))
    pool_unit = matrix.unit_rows(matrix.rows_for(pool))
    flat = kernels.pairwise_cosine_flat(pool_unit)
    if flat.size == 0:
        raise ValueError("pool too small for a pairwise baseline")
    per = {
        cluster: {"n": n, "mean_cosine": float(means[i])}
        for i, (cluster, n) in enumerate(clusters)
    }
    return IntraClusterReport(
        per_cluster=per, global_baseline=float(flat.mean()),
        pool_size=len(pool), excluded=tuple(excluded),
    )


def paired_cluster_test(values_a: dict, values_b: dict,
                        alternative: str = "greater") -> StatResult:
    """Signed-rank test on per-cluster paired differences (a minus b).

    Both inputs map cluster name -> scalar; only shared clusters enter.
    Used to compare the same per-cluster metric across two spaces.
    """
    shared = sorted(set(values_a) & set(values_b))
    if len(shared) < 2:
        raise ValueError(f"need at least 2 shared clusters, got {len(shared)}")
    deltas = np.array([float(values_a[c]) - float(values_b[c]) for c in shared])
    return wilcoxon_signed_rank(deltas, alternative=alternative)


@dataclass(frozen=True)
class CentroidDistanceResult:
    u_test: StatResult
    d: float
    mean_a: float
    mean_b: float
    n_a: int
    n_b: int

    def to_dict(self) -> dict:
        return {
            "u": self.u_test.statistic, "p_value": self.u_test.p_value,
            "p_method": self.u_test.method, "d": self.d,
            "mean_a": self.mean_a, "mean_b": self.mean_b,
            "n_a": self.n_a, "n_b": self.n_b,
        }


def _centroid_distances(matrix: EmbeddingMatrix, tags: CuisineTags) -> np.ndarray:
    """One cosine distance (1 - cos to own cluster centroid) per (entity,
    cluster) membership, clusters of size >= 2 only, in catalog order."""
    out = []
    for cluster in tags.catalog:
        members = tags.members(cluster)
        if len(members) < 2:
            continue
        vecs = matrix.vectors[matrix.rows_for(members)]
        centroid = vecs.mean(axis=0)
        cnorm = float(np.linalg.norm(centroid))
        if cnorm == 0.0:
            raise ValueError(f"cluster {cluster!r} centroid has zero norm")
        unit_c = centroid / cnorm
        unit_m = matrix.unit_rows(matrix.rows_for(members))
        out.extend(1.0 - np.clip(unit_m @ unit_c, -1.0, 1.0))
    if not out:
        raise ValueError("no cluster has 2 or more tagged members")
    return np.array(out)


def centroid_distance_test(matrix_a: EmbeddingMatrix, tags_a: CuisineTags,
                           matrix_b: EmbeddingMatrix, tags_b: CuisineTags) -> CentroidDistanceResult:
    """Compare per-entity distances to own-cluster centroids across spaces.

    Cohen's d is (a minus b): negative d means space a holds its members
    closer to their centroids. Identical inputs give d = 0 and p = 1 up to
    tie handling.
    """
    da = _centroid_distances(matrix_a, tags_a)
    db = _centroid_distances(matrix_b, tags_b)
    u = mann_whitney_u(da, db, alternative="two_sided")
    try:
        d = cohens_d(da, db)
    except ValueError:
        d = 0.0                       # both distributions degenerate
    return CentroidDistanceResult(
        u_test=u, d=d, mean_a=float(da.mean()), mean_b=float(db.mean()),
        n_a=int(da.size), n_b=int(db.size),
    )


@dataclass(frozen=True)
class CuisineProfileReport:
    clusters: tuple[str, ...]
    axis_names: tuple[str, ...]
    projections: np.ndarray           # (clusters, axes) centroid projections
    p_per_axis: dict                  # axis name -> permutation p
    n_perm: int
    seed_master: int
    statistic: str = "variance_of_centroid_projections"

    def to_dict(self) -> dict:
        return {
            "clusters": list(self.clusters),
            "axis_names": list(self.axis_names),
            "projections": {
                c: {a: float(self.projections[ci, ai]) for ai, a in enumerate(self.axis_names)}
                for ci, c in enumerate(self.clusters)
            },
            "p_per_axis": self.p_per_axis,
            "n_perm": self.n_perm,
            "seed": self.seed_master,
            "statistic": self.statistic,
        }


def cuisine_profiles(matrix: EmbeddingMatrix, tags: CuisineTags, axes: list,
                     n_perm: int = 10_000, seed: Seed = Seed(0)) -> CuisineProfileReport:
    """Axis projections of L2-normalized cluster centroids, with a
    permutation test per axis.

    The statistic is the population variance of the per-cluster centroid
    projections; the null shuffles the tag assignments among the tagged
    entities (shuffle i uses substream (master, i)); p-values use the
    add-one estimator.
    """
    clusters = tags.catalog
    for cluster in clusters:
        if len(tags.members(cluster)) < 2:
            raise ValueError(f"cluster {cluster!r} needs at least 2 members")
    if not axes:
        raise ValueError("need at least one axis")
    names = [a.name for a in axes]
    axis_mat = np.vstack([a.direction for a in axes])          # (a, dim)
    if axis_mat.shape[1] != matrix.dim:
        raise ValueError(f"axis dimension {axis_mat.shape[1]} != matrix dimension {matrix.dim}")
    tagged = tags.tagged_ids()
    vecs = matrix.vectors[matrix.rows_for(tagged)]             # (t, dim)
    masks = _tag_masks(tags, tagged)                           # (t,)

    def profile_vars(mask_arr):
        member = np.zeros((len(clusters), len(tagged)), dtype=np.float64)
        for ci in range(len(clusters)):
            member[ci] = (mask_arr & np.uint64(1 << ci)) != 0
        counts = member.sum(axis=1)
        if (counts == 0).any():
            raise ValueError("permutation produced an empty cluster")   # impossible: sizes preserved
        centroids = (member @ vecs) / counts[:, None]
        norms = np.linalg.norm(centroids, axis=1)
        if (norms == 0.0).any():
            raise ValueError("zero-norm cluster centroid")
        proj = (centroids / norms[:, None]) @ axis_mat.T       # (c, a)
        return proj, proj.var(axis=0)

    observed_proj, observed_var = profile_vars(masks)
    counts_ge = np.zeros(len(names), dtype=np.int64)
    for i in range(n_perm):
        shuffled = seed.rng(i).permutation(masks)
        _, var = profile_vars(shuffled)
        counts_ge += var >= observed_var
    p_per_axis = {
        name: float((1 + counts_ge[ai]) / (n_perm + 1)) for ai, name in enumerate(names)
    }
    return CuisineProfileReport(
        clusters=tuple(clusters), axis_names=tuple(names),
        projections=observed_proj, p_per_axis=p_per_axis,
        n_perm=n_perm, seed_master=seed.master,
    )
