"""Planted datasets must actually contain what they claim to plant."""

import numpy as np
import pytest

from flavorbench.corpus import cosine
from flavorbench.stats import Seed, spearman
from flavorbench.synth import (
    CUISINE_CLUSTERS,
    FIVE_LEVELS,
    fixture_matrix,
    planted_binary,
    planted_clusters,
    planted_gradient,
    random_matrix,
    shuffled_labels,
)


def test_random_matrix_shape_and_determinism():
    m1 = random_matrix(8, 5, Seed(3))
    m2 = random_matrix(8, 5, Seed(3))
    assert m1.vectors.shape == (8, 5)
    assert list(m1.ids) == list(range(1, 9))
    np.testing.assert_array_equal(m1.vectors, m2.vectors)
    assert not np.allclose(m1.vectors, random_matrix(8, 5, Seed(4)).vectors)


def test_planted_gradient_structure():
    matrix, labels, direction = planted_gradient(50, 40, Seed(11), snr=10.0)
    assert labels.kind == "ordinal"
    assert labels.scale == FIVE_LEVELS
    assert np.linalg.norm(direction) == pytest.approx(1.0)
    # levels cycle: entity i carries level (i-1) mod 5
    assert labels.labels[1] == "none"
    assert labels.labels[5] == "very_high"
    assert labels.labels[6] == "none"
    # projections onto the planted direction must track the levels
    proj = matrix.vectors @ direction
    ranks = np.array([FIVE_LEVELS.index(labels.labels[int(i)]) for i in matrix.ids])
    res = spearman(ranks.astype(float), proj)
    assert res.statistic > 0.9


def test_planted_gradient_validation():
    with pytest.raises(ValueError, match="at least 10"):
        planted_gradient(9, 10, Seed(0))
    with pytest.raises(ValueError, match="snr"):
        planted_gradient(20, 10, Seed(0), snr=0.0)


def test_planted_binary_structure():
    matrix, labels, direction = planted_binary(40, 30, Seed(5), snr=8.0)
    assert labels.kind == "binary"
    assert labels.labels[1] == "no" and labels.labels[2] == "yes"
    proj = matrix.vectors @ direction
    yes = np.array([proj[i] for i in range(40) if labels.labels[i + 1] == "yes"])
    no = np.array([proj[i] for i in range(40) if labels.labels[i + 1] == "no"])
    assert yes.mean() > no.mean() + 0.5


def test_planted_binary_validation():
    with pytest.raises(ValueError, match="at least 4"):
        planted_binary(3, 10, Seed(0))


def test_planted_clusters_tags_and_geometry():
    matrix, tags = planted_clusters(70, 60, Seed(9), n_clusters=7, separation=1.0)
    assert tags.catalog == CUISINE_CLUSTERS
    # members cycle the clusters; every entity carries exactly one tag
    assert tags.tags[1] == frozenset({CUISINE_CLUSTERS[0]})
    assert tags.tags[8] == frozenset({CUISINE_CLUSTERS[0]})
    assert all(len(t) == 1 for t in tags.tags.values())
    # same-cluster pairs are far more aligned than cross-cluster pairs
    same = cosine(matrix.vectors[0], matrix.vectors[7])
    cross = cosine(matrix.vectors[0], matrix.vectors[1])
    assert same > 0.25
    assert abs(cross) < 0.25


def test_planted_clusters_validation():
    with pytest.raises(ValueError, match="cluster names"):
        planted_clusters(20, 10, Seed(0), n_clusters=3, cluster_names=("a",))
    with pytest.raises(ValueError, match="2 members"):
        planted_clusters(5, 10, Seed(0), n_clusters=3, cluster_names=("a", "b", "c"))


def test_shuffled_labels_permutes_assignment_only():
    _, labels, _ = planted_gradient(30, 10, Seed(2))
    shuf = shuffled_labels(labels, Seed(77))
    assert shuf.dimension == "planted_shuffled"
    assert shuf.kind == labels.kind and shuf.scale == labels.scale
    assert sorted(shuf.labels) == sorted(labels.labels)
    assert sorted(shuf.labels.values()) == sorted(labels.labels.values())
    assert shuf.labels != labels.labels  # vanishing chance of identity at n=30

    again = shuffled_labels(labels, Seed(77))
    assert again.labels == shuf.labels
    other_stream = shuffled_labels(labels, Seed(77), stream=1)
    assert other_stream.labels != shuf.labels


def test_fixture_matrix_planted_audit_targets():
    matrix, cmap = fixture_matrix()
    assert len(matrix.ids) == 34
    name_at = {n: i for i, n in enumerate(matrix.names)}

    beef = matrix.vectors[name_at["beef"]]
    near = matrix.vectors[name_at["beef_dried"]]
    stray = matrix.vectors[name_at["beef_braised"]]
    assert cosine(beef, near) > 0.95
    assert abs(cosine(beef, stray)) < 1e-9  # orthogonalized on purpose

    cheddar = matrix.vectors[name_at["cheddar_cheese"]]
    sharp = matrix.vectors[name_at["cheddar_cheese_sharp"]]
    assert cosine(cheddar, sharp) > 0.95

    removed = [oid for oid, cid in cmap.assignments.items() if cid is None]
    removed_names = {cmap.original_names[oid] for oid in removed}
    assert removed_names == {"aluminum_foil", "bleach"}


def test_fixture_matrix_deterministic():
    m1, _ = fixture_matrix()
    m2, _ = fixture_matrix()
    np.testing.assert_array_equal(m1.vectors, m2.vectors)
