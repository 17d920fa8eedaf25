from __future__ import annotations

import numpy as np
import pytest

from flavorbench.axes import build_axis
from flavorbench.corpus import DataFormatError, EmbeddingMatrix
from flavorbench.culture import (
    CuisineTags,
    centroid_distance_test,
    cuisine_profiles,
    intra_cluster_similarity,
    knn_purity,
    lift,
    load_cuisine_tags,
    paired_cluster_test,
    save_cuisine_tags,
    subsampled_purity,
)
from flavorbench.stats import Seed
from flavorbench.synth import (
    CUISINE_CLUSTERS,
    planted_clusters,
    planted_gradient,
    random_matrix,
)

from conftest import make_matrix
from oracles import knn_purity_oracle


# ---------------------------------------------------------------- tags

def test_cuisine_tags_validation():
    with pytest.raises(ValueError, match="empty"):
        CuisineTags(catalog=(), tags={})
    with pytest.raises(ValueError, match="duplicate"):
        CuisineTags(catalog=("a", "a"), tags={})
    with pytest.raises(ValueError, match="outside catalog"):
        CuisineTags(catalog=("a",), tags={1: {"b"}})
    t = CuisineTags(catalog=("a", "b"), tags={1: {"a"}, 2: {"a", "b"}, 3: ()})
    assert t.tagged_ids() == [1, 2]  # empty tag set means untagged
    assert t.members("a") == [1, 2]
    assert t.members("b") == [2]


def test_cuisine_tags_round_trip(tmp_path, small_matrix):
    tags = CuisineTags(
        catalog=("east", "west"),
        tags={1: {"east"}, 5: {"east", "west"}},
        pool_spec="everything",
    )
    p = tmp_path / "tags.json"
    save_cuisine_tags(tags, p, small_matrix)
    back = load_cuisine_tags(p, small_matrix)
    assert back.catalog == tags.catalog
    assert back.tags == tags.tags
    assert back.pool_spec == "everything"


def test_load_cuisine_tags_lenient_drops_unknown_names(tmp_path, small_matrix):
    p = tmp_path / "tags.json"
    p.write_text('{"clusters": ["east"], "tags": {"item_1": ["east"], "gone": []}}')
    with pytest.raises(DataFormatError, match="gone"):
        load_cuisine_tags(p, small_matrix)
    back = load_cuisine_tags(p, small_matrix, strict=False)
    assert set(back.tags) == {small_matrix.name_to_id["item_1"]}


# ---------------------------------------------------------------- lift

def test_lift_arithmetic():
    assert lift(0.589, 27, 589) == pytest.approx(12.849, abs=0.05)
    assert lift(1.0, 10, 10) == 1.0  # saturated tag
    with pytest.raises(ValueError):
        lift(0.5, 0, 10)
    with pytest.raises(ValueError):
        lift(0.5, 11, 10)


# -------------------------------------------------------------- purity

def test_knn_purity_matches_bruteforce_oracle():
    matrix, tags = planted_clusters(40, 12, seed=Seed(1), n_clusters=4, separation=0.7)
    report = knn_purity(matrix, tags, k=5)
    want = knn_purity_oracle(
        [int(i) for i in matrix.ids],
        matrix.unit_rows().tolist(),
        {i: set(t) for i, t in tags.tags.items()},
        k=5,
    )
    assert len(report.per_cluster) == len(want)
    for cp in report.per_cluster:
        n_ref, purity_ref = want[cp.cluster]
        assert cp.n == n_ref
        assert cp.purity == pytest.approx(purity_ref, abs=1e-12)
        assert cp.lift == pytest.approx(purity_ref / (n_ref / 40), abs=1e-9)


def test_knn_purity_saturated_tag_is_unity():
    matrix = make_matrix(15, 6, seed=2)
    tags = CuisineTags(catalog=("all",), tags={int(i): {"all"} for i in matrix.ids})
    report = knn_purity(matrix, tags, k=4)
    cp = report.per_cluster[0]
    assert cp.purity == 1.0
    assert cp.lift == pytest.approx(1.0)  # baseline n_c/N = 1


def test_knn_purity_planted_clusters_separate():
    matrix, tags = planted_clusters(210, 50, seed=Seed(3), n_clusters=7)
    report = knn_purity(matrix, tags, k=10)
    assert len(report.per_cluster) == 7
    for cp in report.per_cluster:
        assert cp.purity >= 0.9, cp.cluster
        assert cp.lift > 5.0, cp.cluster


def test_knn_purity_random_tags_land_near_baseline():
    matrix = make_matrix(300, 24, seed=4)
    rng = np.random.default_rng(5)
    names = ("a", "b", "c")
    tags = CuisineTags(
        catalog=names,
        tags={int(i): {names[rng.integers(0, 3)]} for i in matrix.ids},
    )
    report = knn_purity(matrix, tags, k=10)
    assert 0.8 <= report.mean_lift <= 1.2


def test_knn_purity_pool_and_strictness(small_matrix):
    tags = CuisineTags(catalog=("x", "ghost"), tags={1: {"x"}, 2: {"x"}})
    with pytest.raises(ValueError, match="ghost"):
        knn_purity(small_matrix, tags, k=3)
    report = knn_purity(small_matrix, tags, k=3, strict=False)
    assert [cp.cluster for cp in report.per_cluster] == ["x"]
    with pytest.raises(ValueError, match="outside the pool"):
        knn_purity(small_matrix, tags, pool_ids=[1, 3, 4], k=2)
    with pytest.raises(ValueError, match="k must be"):
        knn_purity(small_matrix, tags, k=12)


def test_knn_purity_neighbors_come_from_the_whole_pool():
    # untagged entities can still be neighbours; with k=2 and one tagged
    # pair sitting apart, purity picks up the untagged in-between rows
    vecs = np.eye(4).astype(float)
    vecs[1] = [0.9, 0.1, 0.0, 0.0]
    matrix = EmbeddingMatrix(
        ids=np.arange(1, 5), names=("a", "b", "c", "d"), vectors=vecs
    )
    tags = CuisineTags(catalog=("t",), tags={1: {"t"}, 3: {"t"}})
    report = knn_purity(matrix, tags, k=1)
    # id 1's nearest neighbour is untagged id 2, so purity 0 for that member
    cp = report.per_cluster[0]
    assert cp.purity < 1.0


# --------------------------------------------------------- subsampling

def test_subsampled_purity_deterministic_and_bounded():
    matrix, tags = planted_clusters(120, 30, seed=Seed(6), n_clusters=5)
    pool = [int(i) for i in matrix.ids]
    r1 = subsampled_purity(matrix, tags, pool, target_size=80, iterations=10, seed=Seed(7), k=8)
    r2 = subsampled_purity(matrix, tags, pool, target_size=80, iterations=10, seed=Seed(7), k=8)
    assert r1.to_dict() == r2.to_dict()
    for cluster, row in r1.per_cluster.items():
        lo, hi = row["purity_ci95"]
        assert lo <= row["purity_mean"] <= hi
        assert row["iterations_present"] <= 10


def test_subsampled_purity_full_pool_equals_single_report():
    matrix, tags = planted_clusters(60, 16, seed=Seed(8), n_clusters=3)
    pool = [int(i) for i in matrix.ids]
    full = knn_purity(matrix, tags, k=6)
    sub = subsampled_purity(matrix, tags, pool, target_size=60, iterations=3, seed=Seed(9), k=6)
    for cp in full.per_cluster:
        row = sub.per_cluster[cp.cluster]
        assert row["purity_mean"] == pytest.approx(cp.purity, abs=1e-12)
        assert row["purity_ci95"][0] == pytest.approx(cp.purity, abs=1e-12)


def test_subsampled_purity_validation(small_matrix):
    tags = CuisineTags(catalog=("x",), tags={1: {"x"}, 2: {"x"}})
    pool = [int(i) for i in small_matrix.ids]
    with pytest.raises(ValueError, match="target_size"):
        subsampled_purity(small_matrix, tags, pool, target_size=99, iterations=5, seed=Seed(0), k=2)
    with pytest.raises(ValueError, match="iterations"):
        subsampled_purity(small_matrix, tags, pool, target_size=8, iterations=1, seed=Seed(0), k=2)


# ------------------------------------------------------ intra / paired

def test_intra_cluster_similarity_tight_vs_loose():
    matrix, tags = planted_clusters(80, 20, seed=Seed(10), n_clusters=4)
    report = intra_cluster_similarity(matrix, tags)
    assert report.pool_size == 80
    for cluster, row in report.per_cluster.items():
        assert row["mean_cosine"] > report.global_baseline + 0.1


def test_intra_cluster_excludes_small_clusters(small_matrix):
    tags = CuisineTags(catalog=("big", "tiny"), tags={1: {"big"}, 2: {"big"}, 3: {"tiny"}})
    report = intra_cluster_similarity(small_matrix, tags)
    assert report.excluded == ("tiny",)
    assert list(report.per_cluster) == ["big"]


def test_paired_cluster_test_seven_positive_deltas():
    # seven clusters all favoring space a by a hair: W = 28, one-sided
    # exact p = 1/128
    a = {c: 0.5 + 0.01 * (i + 1) for i, c in enumerate(CUISINE_CLUSTERS)}
    b = {c: 0.5 for c in CUISINE_CLUSTERS}
    res = paired_cluster_test(a, b, alternative="greater")
    assert res.statistic == 28.0
    assert res.p_value == pytest.approx(1.0 / 128.0)
    assert res.method == "exact"


def test_paired_cluster_test_requires_shared_clusters():
    with pytest.raises(ValueError, match="shared"):
        paired_cluster_test({"a": 1.0}, {"b": 1.0})


def test_centroid_distance_test_identical_spaces():
    matrix, tags = planted_clusters(60, 16, seed=Seed(11), n_clusters=3)
    res = centroid_distance_test(matrix, tags, matrix, tags)
    assert res.d == pytest.approx(0.0, abs=1e-12)
    assert res.u_test.p_value > 0.9
    assert res.n_a == res.n_b


def test_centroid_distance_test_tight_vs_scattered():
    tight_m, tags = planted_clusters(90, 24, seed=Seed(12), n_clusters=3, separation=1.5)
    loose_m = random_matrix(90, 24, seed=Seed(13))
    res = centroid_distance_test(tight_m, tags, loose_m, tags)
    assert res.d < 0  # tighter space holds members closer
    assert res.u_test.p_value < 1e-3


# ------------------------------------------------------------ profiles

def test_cuisine_profiles_flat_on_random_axis_signal():
    matrix, tags = planted_clusters(70, 16, seed=Seed(14), n_clusters=5)
    grad_matrix, grad_labels, _ = planted_gradient(70, 16, seed=Seed(15), snr=10.0)
    axis = build_axis(grad_matrix, grad_labels)
    report = cuisine_profiles(matrix, tags, [axis], n_perm=200, seed=Seed(16))
    assert report.projections.shape == (5, 1)
    p = report.p_per_axis[axis.name]
    assert 0.0 < p <= 1.0
    d = report.to_dict()
    assert set(d["projections"]) == set(tags.catalog)


def test_cuisine_profiles_detects_axis_aligned_clusters():
    # clusters strung out along e1: centroid projections on an e1 axis
    # vary far more than tag shuffles allow
    rng = np.random.default_rng(17)
    n, dim = 90, 10
    codes = np.arange(n) % 3
    vecs = rng.normal(size=(n, dim)) * 0.1
    vecs[:, 0] += codes * 3.0
    matrix = EmbeddingMatrix(
        ids=np.arange(1, n + 1), names=tuple(f"e{i}" for i in range(n)), vectors=vecs
    )
    tags = CuisineTags(
        catalog=("c0", "c1", "c2"),
        tags={i + 1: {f"c{codes[i]}"} for i in range(n)},
    )
    from flavorbench.axes import Axis

    direction = np.zeros(dim)
    direction[0] = 1.0
    axis = Axis(
        name="spread", kind="ordinal_pole", direction=direction,
        low_ids=(1,), high_ids=(2,), low_pole="lo", high_pole="hi",
    )
    report = cuisine_profiles(matrix, tags, [axis], n_perm=400, seed=Seed(18))
    assert report.p_per_axis["spread"] < 0.02


def test_cuisine_profiles_deterministic():
    matrix, tags = planted_clusters(50, 12, seed=Seed(19), n_clusters=3)
    grad_matrix, grad_labels, _ = planted_gradient(50, 12, seed=Seed(20), snr=10.0)
    axis = build_axis(grad_matrix, grad_labels)
    r1 = cuisine_profiles(matrix, tags, [axis], n_perm=100, seed=Seed(21))
    r2 = cuisine_profiles(matrix, tags, [axis], n_perm=100, seed=Seed(21))
    assert r1.to_dict() == r2.to_dict()
