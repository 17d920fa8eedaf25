"""Repeated k-fold cross-validation of axis recovery.

Per repeat, the labeled entities are shuffled with that repeat's seed
substream and cut into k contiguous blocks (the remainder spread one per
fold). Each fold in turn is held out: the axis is built from the training
entities only (pole membership and tercile cuts recomputed per fold), the
held-out entities are projected, and the metric is computed on all of
them. Folds that cannot support the axis or the metric are skipped and
logged with reasons.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .axes import build_axis, project
from .corpus import EmbeddingMatrix, LabelSet
from .stats import Seed, cohens_d, spearman

SMALL_FOLD_THRESHOLD = 10

METRICS = ("spearman_rho", "cohens_d")


@dataclass(frozen=True)
class CVConfig:
    k: int = 10
    repeats: int = 20
    seed: Seed = Seed(0)
    metric: str = "spearman_rho"
    axis_kind: str | None = None      # inferred from the labels when None
    log_transform: bool = False

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be at least 2")
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}; expected one of {METRICS}")


@dataclass(frozen=True)
class CVCell:
    repeat: int
    fold: int
    value: float
    test_n: int


@dataclass(frozen=True)
class CVSkip:
    repeat: int
    fold: int
    reason: str


@dataclass
class CVReport:
    dimension: str
    metric: str
    k: int
    repeats: int
    seed_master: int
    n: int
    values: list = field(default_factory=list)       # CVCell
    skipped: list = field(default_factory=list)      # CVSkip
    mean: float = float("nan")
    sd: float = float("nan")
    in_sample: float = float("nan")
    high_variance: bool = False
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "metric": self.metric,
            "k": self.k,
            "repeats": self.repeats,
            "seed": self.seed_master,
            "n": self.n,
            "mean": self.mean,
            "sd": self.sd,
            "in_sample": self.in_sample,
            "high_variance": self.high_variance,
            "fold_values": [
                {"repeat": c.repeat, "fold": c.fold, "value": c.value, "test_n": c.test_n}
                for c in self.values
            ],
            "skipped": [
                {"repeat": s.repeat, "fold": s.fold, "reason": s.reason} for s in self.skipped
            ],
            "details": self.details,
        }


def fold_blocks(ids: np.ndarray, k: int) -> list[np.ndarray]:
    """Cut an (already shuffled) id array into k contiguous blocks; the
    first n % k blocks take one extra element."""
    n = ids.shape[0]
    base = n // k
    sizes = [base + (1 if i < n % k else 0) for i in range(k)]
    out = []
    pos = 0
    for size in sizes:
        out.append(ids[pos : pos + size])
        pos += size
    return out


def _metric_value(metric: str, labels: LabelSet, test_ids, projections) -> tuple[float, str | None]:
    """Returns (value, None) or (nan, skip reason)."""
    if metric == "spearman_rho":
        if len(test_ids) < 3:
            return float("nan"), f"test fold too small for rho (n={len(test_ids)})"
        ranks = np.array([labels.rank_of(labels.labels[i]) for i in test_ids])
        if np.unique(ranks).size < 2:
            return float("nan"), "test labels constant"
        if np.unique(projections).size < 2:
            return float("nan"), "test projections constant"
        return spearman(ranks, projections).statistic, None
    # cohens_d: binary labels only
    yes = projections[[labels.labels[i] == "yes" for i in test_ids]]
    no = projections[[labels.labels[i] == "no" for i in test_ids]]
    if yes.size < 2 or no.size < 2:
        return float("nan"), f"test class too small for d (yes={yes.size}, no={no.size})"
    try:
        return cohens_d(yes, no), None
    except ValueError as exc:
        return float("nan"), str(exc)


def cv_evaluate(matrix: EmbeddingMatrix, labels: LabelSet, config: CVConfig) -> CVReport:
    """Repeated k-fold estimate of out-of-sample axis quality.

    Deterministic for a fixed (matrix, labels, config): repeat r shuffles
    with substream (master, r). The full-data axis must be constructible
    (this also yields the in-sample metric recorded on the report).
    """
    if config.metric == "cohens_d" and labels.kind != "binary":
        raise ValueError("cohens_d metric needs binary labels")
    ids = np.array(sorted(i for i in labels.ids() if matrix.has_id(i)), dtype=np.int64)
    missing = [i for i in labels.ids() if not matrix.has_id(i)]
    if missing:
        raise KeyError(f"labeled ids not in matrix: {missing}")
    n = ids.shape[0]
    if config.k > n:
        raise ValueError(f"k={config.k} exceeds labeled entity count {n}")

    # full-data axis doubles as a precondition check and in-sample metric
    full_axis = build_axis(matrix, labels, kind=config.axis_kind,
                           log_transform=config.log_transform)
    eval_labels = labels.log10() if config.log_transform else labels
    eval_ids = [int(i) for i in ids if int(i) in eval_labels.labels]
    full_proj = project(matrix, full_axis, eval_ids).values
    in_sample, reason = _metric_value(config.metric, eval_labels, eval_ids, full_proj)
    if reason is not None:
        raise ValueError(f"in-sample metric undefined: {reason}")

    eval_id_arr = np.array(eval_ids, dtype=np.int64)
    report = CVReport(
        dimension=labels.dimension, metric=config.metric, k=config.k,
        repeats=config.repeats, seed_master=config.seed.master, n=int(eval_id_arr.size),
        in_sample=float(in_sample),
        details={
            "axis_kind": full_axis.kind,
            "log10": config.log_transform,
            "held_out_policy": "metric over all held-out entities",
        },
    )
    if eval_id_arr.size // config.k < SMALL_FOLD_THRESHOLD:
        report.high_variance = True

    for r in range(config.repeats):
        shuffled = config.seed.rng(r).permutation(eval_id_arr)
        for f, test in enumerate(fold_blocks(shuffled, config.k)):
            test_ids = [int(i) for i in test]
            train_ids = np.setdiff1d(eval_id_arr, test, assume_unique=True)
            try:
                axis = build_axis(
                    matrix, eval_labels, kind=config.axis_kind,
                    restrict_ids=train_ids, provenance=f"repeat={r},fold={f}",
                )
            except ValueError as exc:
                report.skipped.append(CVSkip(r, f, f"axis: {exc}"))
                continue
            proj = project(matrix, axis, test_ids).values
            value, reason = _metric_value(config.metric, eval_labels, test_ids, proj)
            if reason is not None:
                report.skipped.append(CVSkip(r, f, reason))
            else:
                report.values.append(CVCell(r, f, float(value), len(test_ids)))

    if not report.values:
        raise ValueError(
            f"every fold was skipped ({len(report.skipped)} folds); "
            f"first reason: {report.skipped[0].reason}"
        )
    vals = np.array([c.value for c in report.values])
    report.mean = float(vals.mean())
    report.sd = float(vals.std(ddof=1)) if vals.size > 1 else float("nan")
    return report
