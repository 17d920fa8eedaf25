"""Semantic axes: construction from labeled poles, projection, evaluation.

An axis is the unit-normalized difference between a high-pole centroid
and a low-pole centroid in embedding space. Three constructions:

    ordinal_pole      extreme scale levels form the poles
    binary_centroid   "no" centroid -> "yes" centroid
    tercile_centroid  rank-based bottom/top thirds of a numeric label
                      (ties broken by ascending id; optional log10)

Projection is a plain dot product of the stored vector with the axis
direction; no unit-norm assumption is made about entity vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import EmbeddingMatrix, LabelSet
from .stats import (
    Seed,
    StatResult,
    cohens_d,
    cohens_d_one_sample,
    mann_whitney_u,
    residualize,
    spearman,
    wilcoxon_signed_rank,
)

AXIS_KINDS = ("ordinal_pole", "binary_centroid", "tercile_centroid")

_KIND_FOR_LABELS = {"ordinal": "ordinal_pole", "binary": "binary_centroid", "numeric": "tercile_centroid"}

MIN_TERCILE_N = 6


@dataclass(frozen=True)
class Axis:
    name: str
    kind: str
    direction: np.ndarray            # unit, shape (dim,)
    low_ids: tuple[int, ...]
    high_ids: tuple[int, ...]
    low_pole: str
    high_pole: str
    provenance: str = "full_data"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        direction = np.ascontiguousarray(self.direction, dtype=np.float64)
        object.__setattr__(self, "direction", direction)
        direction.setflags(write=False)
        if self.kind not in AXIS_KINDS:
            raise ValueError(f"unknown axis kind {self.kind!r}")

    def summary(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "low_pole": self.low_pole,
            "high_pole": self.high_pole,
            "low_n": len(self.low_ids),
            "high_n": len(self.high_ids),
            "provenance": self.provenance,
            **{k: v for k, v in self.meta.items()},
        }


def _centroid(matrix: EmbeddingMatrix, ids) -> np.ndarray:
    rows = matrix.rows_for(ids)
    return matrix.vectors[rows].mean(axis=0)


def _direction(matrix: EmbeddingMatrix, low_ids, high_ids, context: str) -> np.ndarray:
    low_c = _centroid(matrix, low_ids)
    high_c = _centroid(matrix, high_ids)
    diff = high_c - low_c
    norm = float(np.linalg.norm(diff))
    if norm < 1e-12:
        raise ValueError(f"{context}: pole centroids coincide; axis direction undefined")
    return diff / norm


def tercile_poles(labels: LabelSet, ids=None) -> tuple[list[int], list[int], dict]:
    """Bottom/top thirds of a numeric label set, n//3 ids per side.

    Sorting is by (value, id ascending) so ties resolve deterministically.
    Returns (low_ids, high_ids, meta with the cut values).
    """
    if labels.kind != "numeric":
        raise ValueError("tercile poles need numeric labels")
    pool = labels.ids() if ids is None else [int(i) for i in ids if int(i) in labels.labels]
    n = len(pool)
    if n < MIN_TERCILE_N:
        raise ValueError(f"tercile axis needs at least {MIN_TERCILE_N} labeled entities, got {n}")
    ranked = sorted(pool, key=lambda eid: (labels.labels[eid], eid))
    third = n // 3
    low = ranked[:third]
    high = ranked[-third:]
    meta = {
        "tercile_n": n,
        "tercile_side": third,
        "low_cut_value": labels.labels[low[-1]],
        "high_cut_value": labels.labels[high[0]],
    }
    return low, high, meta


def build_axis(matrix: EmbeddingMatrix, labels: LabelSet, kind: str | None = None,
               log_transform: bool = False, restrict_ids=None,
               provenance: str = "full_data") -> Axis:
    """Construct an axis from one labeled dimension.

    ``kind`` is inferred from the label kind when omitted. ``restrict_ids``
    limits pole candidates (used by cross-validation to train folds).
    ``log_transform`` applies log10 to numeric labels, dropping nonpositive
    values, before the tercile cut.
    """
    if kind is None:
        try:
            kind = _KIND_FOR_LABELS[labels.kind]
        except KeyError:
            raise ValueError(f"no axis construction for label kind {labels.kind!r}") from None
    if kind not in AXIS_KINDS:
        raise ValueError(f"unknown axis kind {kind!r}")
    if log_transform:
        if labels.kind != "numeric":
            raise ValueError("log_transform applies to numeric labels only")
        labels = labels.log10()
    pool = labels.ids() if restrict_ids is None else sorted(
        int(i) for i in restrict_ids if int(i) in labels.labels
    )
    meta: dict = {}
    if kind == "ordinal_pole":
        if labels.kind != "ordinal":
            raise ValueError("ordinal_pole axis needs ordinal labels")
        low_level, high_level = labels.scale[0], labels.scale[-1]
        low = [i for i in pool if labels.labels[i] == low_level]
        high = [i for i in pool if labels.labels[i] == high_level]
        if not low or not high:
            raise ValueError(
                f"{labels.dimension}: empty extreme level "
                f"({low_level!r}: {len(low)}, {high_level!r}: {len(high)})"
            )
        low_pole, high_pole = low_level, high_level
    elif kind == "binary_centroid":
        if labels.kind != "binary":
            raise ValueError("binary_centroid axis needs binary labels")
        low = [i for i in pool if labels.labels[i] == "no"]
        high = [i for i in pool if labels.labels[i] == "yes"]
        if not low or not high:
            raise ValueError(f"{labels.dimension}: empty class (no: {len(low)}, yes: {len(high)})")
        low_pole, high_pole = "no", "yes"
    else:
        low, high, meta = tercile_poles(labels, pool)
        low_pole, high_pole = "bottom_tercile", "top_tercile"
    if log_transform:
        meta["log10"] = True
    direction = _direction(matrix, low, high, labels.dimension)
    return Axis(
        name=labels.dimension, kind=kind, direction=direction,
        low_ids=tuple(low), high_ids=tuple(high),
        low_pole=low_pole, high_pole=high_pole,
        provenance=provenance, meta=meta,
    )


@dataclass(frozen=True)
class ProjectionSet:
    axis: Axis
    ids: tuple[int, ...]
    values: np.ndarray

    def __getitem__(self, entity_id: int) -> float:
        try:
            return float(self.values[self.ids.index(int(entity_id))])
        except ValueError:
            raise KeyError(f"id {entity_id} has no projection") from None

    def as_dict(self) -> dict:
        return {int(i): float(v) for i, v in zip(self.ids, self.values)}


def project(matrix: EmbeddingMatrix, axis: Axis, ids=None) -> ProjectionSet:
    """Dot product of each selected entity vector with the axis direction."""
    if matrix.dim != axis.direction.shape[0]:
        raise ValueError(
            f"dimension mismatch: matrix {matrix.dim} vs axis {axis.direction.shape[0]}"
        )
    sel = list(matrix.ids) if ids is None else list(ids)
    rows = matrix.rows_for(sel)
    values = matrix.vectors[rows] @ axis.direction
    return ProjectionSet(axis=axis, ids=tuple(int(i) for i in sel), values=values)


@dataclass
class DimensionReport:
    """Effect sizes for one analyzed dimension, JSON-friendly."""

    dimension: str
    analysis: str
    n: int
    rho: float | None = None
    d: float | None = None
    u: float | None = None
    w: float | None = None
    p_value: float | None = None
    cv_mean: float | None = None
    cv_sd: float | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"dimension": self.dimension, "analysis": self.analysis, "n": self.n}
        for key in ("rho", "d", "u", "w", "p_value", "cv_mean", "cv_sd"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        if self.details:
            out["details"] = self.details
        return out


def evaluate_ordinal(matrix: EmbeddingMatrix, labels: LabelSet) -> DimensionReport:
    """Axis from the extreme levels; Spearman of level rank vs projection
    over every labeled entity (pole members included)."""
    axis = build_axis(matrix, labels, kind="ordinal_pole")
    ids = labels.ids()
    proj = project(matrix, axis, ids)
    ranks = np.array([labels.rank_of(labels.labels[i]) for i in ids])
    res = spearman(ranks, proj.values)
    return DimensionReport(
        dimension=labels.dimension, analysis="ordinal_projection", n=len(ids),
        rho=res.statistic, p_value=res.p_value,
        details={"axis": axis.summary(), "p_method": res.method},
    )


def evaluate_binary(matrix: EmbeddingMatrix, labels: LabelSet) -> DimensionReport:
    """Axis no -> yes; Mann-Whitney U and Cohen's d between the projected
    classes (positive d means the yes class projects higher)."""
    axis = build_axis(matrix, labels, kind="binary_centroid")
    ids = labels.ids()
    proj = project(matrix, axis, ids)
    values = proj.values
    yes = values[[labels.labels[i] == "yes" for i in ids]]
    no = values[[labels.labels[i] == "no" for i in ids]]
    ures = mann_whitney_u(yes, no, alternative="two_sided")
    d = cohens_d(yes, no)
    return DimensionReport(
        dimension=labels.dimension, analysis="binary_separation", n=len(ids),
        d=d, u=ures.statistic, p_value=ures.p_value,
        details={"axis": axis.summary(), "p_method": ures.method,
                 "yes_n": int(yes.size), "no_n": int(no.size)},
    )


def evaluate_measured(matrix: EmbeddingMatrix, axis_labels: LabelSet,
                      measured: LabelSet, log_transform: bool = False) -> DimensionReport:
    """Project onto an axis built from ``axis_labels`` and correlate with
    ``measured`` numeric values (Spearman over entities carrying both)."""
    if measured.kind != "numeric":
        raise ValueError("measured labels must be numeric")
    axis = build_axis(matrix, axis_labels, log_transform=log_transform)
    ids = [i for i in measured.ids() if matrix.has_id(i)]
    missing = [i for i in measured.ids() if not matrix.has_id(i)]
    if missing:
        raise KeyError(f"measured ids not in matrix: {missing}")
    if len(ids) < 3:
        raise ValueError(f"need at least 3 measured entities, got {len(ids)}")
    proj = project(matrix, axis, ids)
    values = np.array([measured.labels[i] for i in ids])
    res = spearman(values, proj.values)
    return DimensionReport(
        dimension=f"{axis_labels.dimension}_vs_{measured.dimension}",
        analysis="measured_projection", n=len(ids),
        rho=res.statistic, p_value=res.p_value,
        details={"axis": axis.summary(), "measured": measured.dimension,
                 "units": measured.units, "p_method": res.method},
    )


@dataclass(frozen=True)
class CategoricalDeltaResult:
    dimension: str
    deltas: dict                      # id -> within minus cross
    wilcoxon: StatResult
    d_one_sample: float
    excluded_singletons: tuple[int, ...]

    def report(self) -> DimensionReport:
        return DimensionReport(
            dimension=self.dimension, analysis="categorical_delta", n=len(self.deltas),
            d=self.d_one_sample, w=self.wilcoxon.statistic, p_value=self.wilcoxon.p_value,
            details={
                "p_method": self.wilcoxon.method,
                "sidedness": self.wilcoxon.sidedness,
                "mean_delta": float(np.mean(list(self.deltas.values()))),
                "excluded_singletons": list(self.excluded_singletons),
            },
        )


def categorical_delta(matrix: EmbeddingMatrix, groups: LabelSet,
                      alternative: str = "two_sided") -> CategoricalDeltaResult:
    """Within-group minus cross-group mean cosine per entity.

    For each entity in a group of size >= 2: mean cosine to the other
    members of its group, minus mean cosine to every labeled entity
    outside the group. Singleton-group entities are excluded and noted.
    Wilcoxon signed-rank and a one-sample d summarize the deltas.
    """
    if groups.kind != "categorical":
        raise ValueError("categorical_delta needs categorical labels")
    from . import kernels

    ids = groups.ids()
    values = [groups.labels[i] for i in ids]
    group_names = sorted(set(values))
    code_of = {g: c for c, g in enumerate(group_names)}
    sizes = {g: values.count(g) for g in group_names}
    codes = np.array(
        [code_of[v] if sizes[v] >= 2 else -1 for v in values], dtype=np.int64
    )
    excluded = tuple(i for i, v in zip(ids, values) if sizes[v] < 2)
    if (codes >= 0).sum() == 0:
        raise ValueError("every group is a singleton; deltas undefined")
    unit = matrix.unit_rows(matrix.rows_for(ids))
    within, cross = kernels.within_cross_means(unit, codes)
    deltas = {}
    for pos, eid in enumerate(ids):
        if codes[pos] < 0:
            continue
        if math.isnan(cross[pos]):
            raise ValueError("single group covers all entities; no cross comparators")
        deltas[eid] = float(within[pos] - cross[pos])
    arr = np.array(list(deltas.values()))
    wres = wilcoxon_signed_rank(arr, alternative=alternative)
    d = cohens_d_one_sample(arr)
    return CategoricalDeltaResult(
        dimension=groups.dimension, deltas=deltas, wilcoxon=wres,
        d_one_sample=d, excluded_singletons=excluded,
    )


def classical_mds(dissimilarity: np.ndarray, out_dim: int = 2) -> np.ndarray:
    """Classical (Torgerson) MDS of a symmetric dissimilarity matrix.

    Double-centers the squared dissimilarities, takes the top positive
    eigenpairs, and scales eigenvectors by sqrt(eigenvalue). Dimensions
    beyond the positive spectrum come back as zeros.
    """
    d = np.asarray(dissimilarity, dtype=np.float64)
    k = d.shape[0]
    if d.shape != (k, k):
        raise ValueError("dissimilarity matrix must be square")
    if not np.allclose(d, d.T, atol=1e-12):
        raise ValueError("dissimilarity matrix must be symmetric")
    centering = np.eye(k) - np.ones((k, k)) / k
    b = -0.5 * centering @ (d * d) @ centering
    eigvals, eigvecs = np.linalg.eigh(b)
    order = np.argsort(eigvals)[::-1]
    coords = np.zeros((k, out_dim))
    for axis_i, ev_i in enumerate(order[:out_dim]):
        lam = eigvals[ev_i]
        if lam > 1e-12:
            coords[:, axis_i] = eigvecs[:, ev_i] * math.sqrt(lam)
    return coords


@dataclass(frozen=True)
class GeometryReport:
    axis_names: tuple[str, ...]
    cosine_matrix: np.ndarray        # (k, k), symmetric, unit diagonal
    layout: np.ndarray               # (k, 2) classical MDS of 1 - cosine
    partial: dict                    # axis name -> correlation row
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "axis_names": list(self.axis_names),
            "cosine_matrix": [[float(v) for v in row] for row in self.cosine_matrix],
            "layout": [[float(v) for v in row] for row in self.layout],
            "partial": self.partial,
            "meta": self.meta,
        }


def axis_geometry(axes: list[Axis], matrix: EmbeddingMatrix | None = None,
                  labels_by_axis: dict[str, LabelSet] | None = None) -> GeometryReport:
    """Inter-axis cosine structure, 2-d MDS layout, and partial correlations.

    The layout embeds dissimilarity 1 - cosine. When ``matrix`` and
    ``labels_by_axis`` are given, each labeled axis gets raw Spearman rho
    (label rank vs own projection) and partial rho (own projection
    residualized against every other axis's projections).
    """
    if len(axes) < 2:
        raise ValueError("axis geometry needs at least 2 axes")
    names = [a.name for a in axes]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate axis names: {names}")
    k = len(axes)
    dirs = np.vstack([a.direction for a in axes])
    cos = dirs @ dirs.T
    cos = (cos + cos.T) / 2.0
    np.clip(cos, -1.0, 1.0, out=cos)
    np.fill_diagonal(cos, 1.0)
    layout = classical_mds(1.0 - cos, out_dim=2)
    partial: dict[str, dict] = {}
    if matrix is not None and labels_by_axis:
        proj_all = {a.name: project(matrix, a) for a in axes}
        for axis in axes:
            labels = labels_by_axis.get(axis.name)
            if labels is None or labels.kind not in ("ordinal", "binary", "numeric"):
                continue
            ids = [i for i in labels.ids() if matrix.has_id(i)]
            own = project(matrix, axis, ids).values
            ranks = np.array([labels.rank_of(labels.labels[i]) for i in ids])
            raw = spearman(ranks, own)
            others = [a for a in axes if a.name != axis.name]
            cov = np.column_stack([project(matrix, a, ids).values for a in others])
            resid = residualize(own, cov)
            part = spearman(ranks, resid)
            partial[axis.name] = {
                "n": len(ids),
                "raw_rho": raw.statistic, "raw_p": raw.p_value,
                "partial_rho": part.statistic, "partial_p": part.p_value,
                "covariates": [a.name for a in others],
            }
    return GeometryReport(
        axis_names=tuple(names), cosine_matrix=cos, layout=layout, partial=partial,
        meta={"dissimilarity": "1 - cosine", "layout_method": "classical_mds"},
    )


@dataclass(frozen=True)
class PairedSimilarityResult:
    pairs: tuple                      # (id_a, id_b, cosine)
    mean: float
    baseline_mean: float
    baseline_pairs: int
    lift: float
    seed_master: int

    def to_dict(self) -> dict:
        return {
            "pairs": [[a, b, c] for a, b, c in self.pairs],
            "mean": self.mean,
            "baseline_mean": self.baseline_mean,
            "baseline_pairs": self.baseline_pairs,
            "lift": self.lift,
            "seed": self.seed_master,
        }


def paired_similarity(matrix: EmbeddingMatrix, pairs, seed: Seed,
                      baseline_factor: int = 100) -> PairedSimilarityResult:
    """Mean cosine over given id pairs vs a seeded random-pair baseline.

    The baseline draws len(pairs) * baseline_factor uniform random pairs
    of distinct entities from the matrix. Lift is mean over baseline.
    """
    pair_list = [(int(a), int(b)) for a, b in pairs]
    if not pair_list:
        raise ValueError("need at least one pair")
    for a, b in pair_list:
        if a == b:
            raise ValueError(f"pair ({a}, {b}) is degenerate")
    unit = matrix.unit_rows()
    row_of = {int(i): r for r, i in enumerate(matrix.ids)}
    missing = sorted({i for p in pair_list for i in p if i not in row_of})
    if missing:
        raise KeyError(f"pair ids not in matrix: {missing}")
    cosines = [
        float(np.clip(unit[row_of[a]] @ unit[row_of[b]], -1.0, 1.0)) for a, b in pair_list
    ]
    n = len(matrix)
    if n < 2:
        raise ValueError("baseline needs at least 2 entities")
    m = len(pair_list) * baseline_factor
    rng = seed.rng(0)
    a_idx = rng.integers(0, n, size=m)
    b_idx = rng.integers(0, n - 1, size=m)
    b_idx = b_idx + (b_idx >= a_idx)
    base = np.clip(np.einsum("ij,ij->i", unit[a_idx], unit[b_idx]), -1.0, 1.0)
    mean = float(np.mean(cosines))
    baseline_mean = float(base.mean())
    if baseline_mean == 0.0:
        raise ValueError("baseline mean cosine is zero; lift undefined")
    return PairedSimilarityResult(
        pairs=tuple((a, b, c) for (a, b), c in zip(pair_list, cosines)),
        mean=mean, baseline_mean=baseline_mean, baseline_pairs=m,
        lift=mean / baseline_mean, seed_master=seed.master,
    )


@dataclass(frozen=True)
class PolePlaneResult:
    along: dict                       # id -> signed coordinate on the axis
    planar: dict                      # id -> (p1, p2) in the orthogonal plane
    axis_unit: tuple[float, float, float]
    low_centroid: tuple[float, float, float]
    high_centroid: tuple[float, float, float]

    def to_dict(self) -> dict:
        return {
            "along": {str(k): v for k, v in sorted(self.along.items())},
            "planar": {str(k): list(v) for k, v in sorted(self.planar.items())},
            "axis_unit": list(self.axis_unit),
            "low_centroid": list(self.low_centroid),
            "high_centroid": list(self.high_centroid),
        }


def pole_plane_projection(coords: dict, high_ids, low_ids) -> PolePlaneResult:
    """Decompose 3-d coordinates along a two-centroid axis and its plane.

    ``coords`` maps id -> length-3 coordinates. The axis runs from the low
    centroid (origin of the along coordinate) to the high centroid. Planar
    coordinates live in the plane through the low centroid orthogonal to
    the axis, in a deterministic right-handed basis.
    """
    pts = {int(k): np.asarray(v, dtype=np.float64) for k, v in coords.items()}
    for eid, p in pts.items():
        if p.shape != (3,):
            raise ValueError(f"id {eid}: coordinates must be 3-d")
    high_ids = [int(i) for i in high_ids]
    low_ids = [int(i) for i in low_ids]
    missing = [i for i in high_ids + low_ids if i not in pts]
    if missing:
        raise KeyError(f"pole ids without coordinates: {sorted(set(missing))}")
    if not high_ids or not low_ids:
        raise ValueError("both pole id sets must be non-empty")
    high_c = np.mean([pts[i] for i in high_ids], axis=0)
    low_c = np.mean([pts[i] for i in low_ids], axis=0)
    diff = high_c - low_c
    norm = float(np.linalg.norm(diff))
    if norm < 1e-12:
        raise ValueError("pole centroids coincide; axis undefined")
    u = diff / norm
    ref = np.zeros(3)
    ref[int(np.argmin(np.abs(u)))] = 1.0
    b1 = ref - (ref @ u) * u
    b1 /= np.linalg.norm(b1)
    b2 = np.cross(u, b1)
    along = {}
    planar = {}
    for eid, p in pts.items():
        rel = p - low_c
        along[eid] = float(rel @ u)
        planar[eid] = (float(rel @ b1), float(rel @ b2))
    return PolePlaneResult(
        along=along, planar=planar,
        axis_unit=tuple(float(x) for x in u),
        low_centroid=tuple(float(x) for x in low_c),
        high_centroid=tuple(float(x) for x in high_c),
    )


@dataclass(frozen=True)
class SubsetReport:
    subset: DimensionReport
    complement: DimensionReport

    def to_dict(self) -> dict:
        return {"subset": self.subset.to_dict(), "complement": self.complement.to_dict()}


def subset_report(matrix: EmbeddingMatrix, labels: LabelSet, subset_ids,
                  measured: LabelSet | None = None,
                  log_transform: bool = False) -> SubsetReport:
    """Run the dimension evaluation separately inside and outside a subset.

    The axis is rebuilt per side from that side's entities only. With
    ``measured``, the measured-projection evaluation is used (axis from
    ``labels``, correlation against ``measured``); otherwise the evaluation
    follows the label kind. Precondition failures on either side propagate.
    """
    subset = {int(i) for i in subset_ids}
    missing = sorted(i for i in subset if not matrix.has_id(i))
    if missing:
        raise KeyError(f"subset ids not in matrix: {missing}")

    def _side(side_ids, tag):
        side_matrix = matrix.subset(sorted(side_ids))
        side_labels = LabelSet(
            dimension=labels.dimension, kind=labels.kind,
            labels={i: v for i, v in labels.labels.items() if i in side_ids},
            scale=labels.scale, units=labels.units,
        )
        if measured is not None:
            side_measured = LabelSet(
                dimension=measured.dimension, kind="numeric",
                labels={i: v for i, v in measured.labels.items() if i in side_ids},
                units=measured.units,
            )
            rep = evaluate_measured(side_matrix, side_labels, side_measured,
                                    log_transform=log_transform)
        elif labels.kind == "ordinal":
            rep = evaluate_ordinal(side_matrix, side_labels)
        elif labels.kind == "binary":
            rep = evaluate_binary(side_matrix, side_labels)
        elif labels.kind == "numeric":
            rep = evaluate_measured(side_matrix, side_labels, side_labels,
                                    log_transform=log_transform)
        else:
            raise ValueError(f"no subset evaluation for label kind {labels.kind!r}")
        rep.details["side"] = tag
        rep.details["side_n"] = len(side_ids)
        return rep

    all_ids = {int(i) for i in matrix.ids}
    complement = all_ids - subset
    if not subset:
        raise ValueError("subset is empty")
    if not complement:
        raise ValueError("complement is empty; subset covers the whole matrix")
    return SubsetReport(subset=_side(subset, "subset"), complement=_side(complement, "complement"))
