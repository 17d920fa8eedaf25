from __future__ import annotations

import numpy as np
import pytest

from flavorbench.axes import (
    Axis,
    axis_geometry,
    build_axis,
    categorical_delta,
    classical_mds,
    evaluate_binary,
    evaluate_measured,
    evaluate_ordinal,
    paired_similarity,
    pole_plane_projection,
    project,
    subset_report,
    tercile_poles,
)
from flavorbench.corpus import EmbeddingMatrix, LabelSet
from flavorbench.stats import Seed
from flavorbench.synth import (
    FIVE_LEVELS,
    planted_binary,
    planted_gradient,
    random_matrix,
    shuffled_labels,
)

from conftest import make_matrix


# -------------------------------------------------------------- poles

def test_tercile_poles_deterministic_ties():
    labels = LabelSet(
        dimension="m", kind="numeric",
        labels={i: float(i % 3) for i in range(1, 10)},  # heavy ties
    )
    low, high, meta = tercile_poles(labels)
    assert len(low) == len(high) == 3
    low2, high2, _ = tercile_poles(labels)
    assert low == low2 and high == high2
    assert meta["tercile_side"] == 3
    assert set(low) == {3, 6, 9}  # the value-0 ids, id-ascending


def test_tercile_poles_minimum_n():
    labels = LabelSet(
        dimension="m", kind="numeric", labels={i: float(i) for i in range(5)}
    )
    with pytest.raises(ValueError, match="at least"):
        tercile_poles(labels)


# --------------------------------------------------------------- axis

def test_build_axis_ordinal_direction_is_unit_and_oriented():
    matrix, labels, direction = planted_gradient(120, 40, seed=Seed(1), snr=10.0)
    axis = build_axis(matrix, labels)
    assert axis.kind == "ordinal_pole"
    assert np.linalg.norm(axis.direction) == pytest.approx(1.0, abs=1e-12)
    # recovered direction aligns with the plant
    assert float(axis.direction @ direction) > 0.9
    assert axis.low_pole == FIVE_LEVELS[0]
    assert axis.high_pole == FIVE_LEVELS[-1]


def test_build_axis_rejects_empty_extreme():
    matrix = make_matrix(10, 6)
    labels = LabelSet(
        dimension="d", kind="ordinal",
        labels={i: "moderate" for i in range(1, 11)},
        scale=FIVE_LEVELS,
    )
    with pytest.raises(ValueError, match="empty extreme"):
        build_axis(matrix, labels)


def test_build_axis_identical_poles_error():
    vecs = np.ones((6, 4))
    matrix = EmbeddingMatrix(
        ids=np.arange(1, 7), names=tuple(f"n{i}" for i in range(6)), vectors=vecs
    )
    labels = LabelSet(
        dimension="d", kind="binary",
        labels={i: ("yes" if i > 3 else "no") for i in range(1, 7)},
    )
    with pytest.raises(ValueError, match="centroids coincide"):
        build_axis(matrix, labels)


def test_projection_scales_linearly_but_rho_is_invariant():
    # raw dot products: tripling the vectors triples every projection,
    # leaving rank statistics untouched
    matrix, labels, _ = planted_gradient(90, 30, seed=Seed(2), snr=10.0)
    scaled = EmbeddingMatrix(
        ids=matrix.ids, names=matrix.names, vectors=matrix.vectors * 3.0
    )
    p1 = project(matrix, build_axis(matrix, labels)).values
    p2 = project(scaled, build_axis(scaled, labels)).values
    assert np.allclose(p2, 3.0 * p1, atol=1e-9)
    r1 = evaluate_ordinal(matrix, labels)
    r2 = evaluate_ordinal(scaled, labels)
    assert r2.rho == pytest.approx(r1.rho, abs=1e-12)


def test_project_subset_alignment(small_matrix):
    labels = LabelSet(
        dimension="d", kind="binary",
        labels={i: ("yes" if i <= 6 else "no") for i in range(1, 13)},
    )
    axis = build_axis(small_matrix, labels)
    ps = project(small_matrix, axis, ids=[3, 1, 7])
    assert ps.ids == (3, 1, 7)
    assert ps[3] == pytest.approx(float(ps.values[0]))
    with pytest.raises(KeyError):
        ps[99]


# --------------------------------------------------------- evaluations

def test_evaluate_ordinal_recovers_planted_gradient():
    matrix, labels, _ = planted_gradient(300, 100, seed=Seed(3), snr=10.0)
    report = evaluate_ordinal(matrix, labels)
    assert report.rho > 0.9
    assert report.p_value < 1e-6
    assert report.n == 300


def test_evaluate_ordinal_shuffled_labels_show_nothing():
    matrix, labels, _ = planted_gradient(300, 100, seed=Seed(4), snr=10.0)
    noise = shuffled_labels(labels, seed=Seed(4), stream=77)
    report = evaluate_ordinal(matrix, noise)
    assert abs(report.rho) < 0.25  # loose single-run bound


def test_evaluate_binary_recovers_planted_split():
    matrix, labels, _ = planted_binary(200, 60, seed=Seed(5), snr=10.0)
    report = evaluate_binary(matrix, labels)
    assert report.d > 2.0
    assert report.p_value < 1e-6
    assert report.details["yes_n"] + report.details["no_n"] == 200


def test_evaluate_measured_matches_ordinal_on_same_signal():
    matrix, labels, _ = planted_gradient(150, 50, seed=Seed(6), snr=10.0)
    measured = LabelSet(
        dimension="score", kind="numeric",
        labels={i: float(FIVE_LEVELS.index(labels.labels[i])) for i in labels.ids()},
    )
    rep = evaluate_measured(matrix, labels, measured)
    assert rep.rho > 0.9
    assert rep.dimension.endswith("_vs_score")


def test_evaluate_measured_rejects_missing_ids():
    matrix, labels, _ = planted_gradient(30, 10, seed=Seed(7), snr=10.0)
    measured = LabelSet(
        dimension="score", kind="numeric", labels={1: 1.0, 2: 2.0, 9999: 3.0}
    )
    with pytest.raises(KeyError, match="9999"):
        evaluate_measured(matrix, labels, measured)


# --------------------------------------------------- categorical delta

def test_categorical_delta_planted_groups():
    rng = np.random.default_rng(8)
    centers = rng.normal(size=(3, 20)) * 4.0
    vecs = np.vstack([centers[i % 3] + rng.normal(size=20) for i in range(60)])
    matrix = EmbeddingMatrix(
        ids=np.arange(1, 61), names=tuple(f"e{i}" for i in range(60)), vectors=vecs
    )
    labels = LabelSet(
        dimension="family", kind="categorical",
        labels={i: f"fam{(i - 1) % 3}" for i in range(1, 61)},
    )
    res = categorical_delta(matrix, labels)
    assert all(d > 0 for d in res.deltas.values())
    assert res.wilcoxon.p_value < 1e-4
    assert res.d_one_sample > 1.0
    rep = res.report()
    assert rep.analysis == "categorical_delta"
    assert rep.details["mean_delta"] > 0


def test_categorical_delta_excludes_singletons(small_matrix):
    labels = LabelSet(
        dimension="family", kind="categorical",
        labels={1: "a", 2: "a", 3: "b", 4: "c", 5: "c"},
    )
    res = categorical_delta(small_matrix, labels)
    assert res.excluded_singletons == (3,)
    assert set(res.deltas) == {1, 2, 4, 5}


def test_categorical_delta_all_singletons_error(small_matrix):
    labels = LabelSet(
        dimension="family", kind="categorical", labels={1: "a", 2: "b", 3: "c"}
    )
    with pytest.raises(ValueError, match="singleton"):
        categorical_delta(small_matrix, labels)


# ----------------------------------------------------------------- mds

def test_classical_mds_reproduces_triangle_exactly():
    # 3-4-5 right triangle: planar, so 2-d MDS must reproduce the
    # distances to numerical precision
    d = np.array([
        [0.0, 3.0, 4.0],
        [3.0, 0.0, 5.0],
        [4.0, 5.0, 0.0],
    ])
    coords = classical_mds(d, out_dim=2)
    for i in range(3):
        for j in range(3):
            got = np.linalg.norm(coords[i] - coords[j])
            assert got == pytest.approx(d[i, j], abs=1e-6)


def test_classical_mds_zeros_beyond_positive_spectrum():
    d = np.array([[0.0, 2.0], [2.0, 0.0]])
    coords = classical_mds(d, out_dim=2)
    assert abs(np.linalg.norm(coords[0] - coords[1]) - 2.0) < 1e-9
    assert np.allclose(coords[:, 1], 0.0)  # only one positive eigenvalue


def test_classical_mds_validation():
    with pytest.raises(ValueError, match="square"):
        classical_mds(np.zeros((2, 3)))
    with pytest.raises(ValueError, match="symmetric"):
        classical_mds(np.array([[0.0, 1.0], [2.0, 0.0]]))


# ------------------------------------------------------------ geometry

def _axis_from_direction(name, direction):
    d = np.asarray(direction, dtype=np.float64)
    return Axis(
        name=name, kind="ordinal_pole", direction=d / np.linalg.norm(d),
        low_ids=(1,), high_ids=(2,), low_pole="lo", high_pole="hi",
    )


def test_axis_geometry_orthogonal_axes_layout():
    # mutually orthogonal directions: dissimilarity 1.0 everywhere, an
    # equilateral triangle the 2-d layout reproduces exactly
    a = _axis_from_direction("x", [1, 0, 0, 0])
    b = _axis_from_direction("y", [0, 1, 0, 0])
    c = _axis_from_direction("z", [0, 0, 1, 0])
    rep = axis_geometry([a, b, c])
    cos = rep.cosine_matrix
    assert np.allclose(cos, np.eye(3), atol=1e-12)
    for i in range(3):
        for j in range(i + 1, 3):
            got = np.linalg.norm(rep.layout[i] - rep.layout[j])
            assert got == pytest.approx(1.0, abs=1e-6)
    assert rep.meta["dissimilarity"] == "1 - cosine"


def test_axis_geometry_valid_triangle_reproduced():
    # hand-set dissimilarities 0.5 / 0.4 / 0.3 form a legitimate
    # triangle; build directions with those exact cosines via Cholesky
    gram = np.array([
        [1.0, 0.5, 0.6],
        [0.5, 1.0, 0.7],
        [0.6, 0.7, 1.0],
    ])
    chol = np.linalg.cholesky(gram)
    axes = [_axis_from_direction(n, chol[i]) for i, n in enumerate("abc")]
    rep = axis_geometry(axes)
    assert np.allclose(rep.cosine_matrix, gram, atol=1e-12)
    want = 1.0 - gram
    for i in range(3):
        for j in range(3):
            got = np.linalg.norm(rep.layout[i] - rep.layout[j])
            assert got == pytest.approx(want[i, j], abs=1e-6)


def test_axis_geometry_partial_equals_raw_for_orthogonal_covariate():
    # construct embeddings whose projections on axis B are exactly
    # orthogonal (after centering) to those on axis A
    n, dim = 48, 6
    rng = np.random.default_rng(10)
    base = rng.normal(size=(n, dim))
    base[:, 0] = 0.0
    base[:, 1] = 0.0
    unit = base / np.linalg.norm(base, axis=1, keepdims=True)
    # give every row controlled components on two coordinate axes, with
    # the second series explicitly orthogonalized against the first
    t = np.linspace(-1.0, 1.0, n)
    t -= t.mean()
    u = rng.normal(size=n)
    u -= u.mean()
    u -= (u @ t) / (t @ t) * t
    assert abs(t @ u) < 1e-10
    vecs = unit + np.outer(t, np.eye(dim)[0]) + np.outer(u, np.eye(dim)[1])
    matrix = EmbeddingMatrix(
        ids=np.arange(1, n + 1),
        names=tuple(f"e{i}" for i in range(n)),
        vectors=vecs,
    )
    axis_a = _axis_from_direction("a", np.eye(dim)[0])
    axis_b = _axis_from_direction("b", np.eye(dim)[1])
    proj_a = project(matrix, axis_a).values
    proj_b = project(matrix, axis_b).values
    pa = proj_a - proj_a.mean()
    pb = proj_b - proj_b.mean()
    assert abs(pa @ pb) < 1e-9  # the construction guarantees this
    labels = LabelSet(
        dimension="a", kind="numeric",
        labels={i + 1: float(proj_a[i]) for i in range(n)},
    )
    rep = axis_geometry([axis_a, axis_b], matrix=matrix, labels_by_axis={"a": labels})
    row = rep.partial["a"]
    assert row["partial_rho"] == pytest.approx(row["raw_rho"], abs=1e-9)
    assert row["covariates"] == ["b"]


def test_axis_geometry_needs_two_axes():
    a = _axis_from_direction("x", [1, 0])
    with pytest.raises(ValueError, match="at least 2"):
        axis_geometry([a])
    with pytest.raises(ValueError, match="duplicate"):
        axis_geometry([a, a])


# --------------------------------------------------- paired similarity

def test_paired_similarity_lift_on_identical_pairs():
    rng = np.random.default_rng(11)
    vecs = rng.normal(size=(30, 16))
    vecs[1] = vecs[0]  # identical pair
    vecs[3] = vecs[2]
    matrix = EmbeddingMatrix(
        ids=np.arange(1, 31), names=tuple(f"e{i}" for i in range(30)), vectors=vecs
    )
    res = paired_similarity(matrix, [(1, 2), (3, 4)], seed=Seed(0))
    assert res.mean == pytest.approx(1.0, abs=1e-12)
    assert abs(res.baseline_mean) < 0.5
    assert res.baseline_pairs == 200
    r2 = paired_similarity(matrix, [(1, 2), (3, 4)], seed=Seed(0))
    assert r2.baseline_mean == res.baseline_mean  # seeded baseline


def test_paired_similarity_rejects_bad_pairs(small_matrix):
    with pytest.raises(ValueError, match="degenerate"):
        paired_similarity(small_matrix, [(1, 1)], seed=Seed(0))
    with pytest.raises(KeyError):
        paired_similarity(small_matrix, [(1, 999)], seed=Seed(0))
    with pytest.raises(ValueError):
        paired_similarity(small_matrix, [], seed=Seed(0))


# ----------------------------------------------------------- pole plane

def test_pole_plane_axis_and_plane_decomposition():
    coords = {
        1: (0.0, 0.0, 0.0),
        2: (2.0, 0.0, 0.0),
        3: (1.0, 1.0, 0.0),
        4: (1.0, 0.0, 1.0),
    }
    res = pole_plane_projection(coords, high_ids=[2], low_ids=[1])
    assert res.axis_unit == pytest.approx((1.0, 0.0, 0.0))
    assert res.along[1] == pytest.approx(0.0)
    assert res.along[2] == pytest.approx(2.0)
    assert res.along[3] == pytest.approx(1.0)
    # planar components preserve distance from the axis
    for eid, (x, y, z) in coords.items():
        away = np.hypot(y, z)
        assert np.hypot(*res.planar[eid]) == pytest.approx(away, abs=1e-12)


def test_pole_plane_requires_distinct_centroids():
    coords = {1: (0.0, 0.0, 0.0), 2: (0.0, 0.0, 0.0)}
    with pytest.raises(ValueError, match="coincide"):
        pole_plane_projection(coords, high_ids=[2], low_ids=[1])
    with pytest.raises(KeyError):
        pole_plane_projection(coords, high_ids=[9], low_ids=[1])


# -------------------------------------------------------- subset report

def test_subset_report_runs_both_sides():
    matrix, labels, _ = planted_gradient(120, 40, seed=Seed(12), snr=10.0)
    subset = [i for i in labels.ids() if i % 2 == 0]
    rep = subset_report(matrix, labels, subset)
    assert rep.subset.n == 60 and rep.complement.n == 60
    assert rep.subset.rho > 0.8
    assert rep.complement.rho > 0.8
    d = rep.to_dict()
    assert set(d) == {"subset", "complement"}
