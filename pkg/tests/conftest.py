from __future__ import annotations

import sys
from pathlib import Path

# make oracles.py importable regardless of invocation directory
sys.path.insert(0, str(Path(__file__).parent))

import numpy as np
import pytest

from flavorbench.corpus import EmbeddingMatrix


def make_matrix(n, dim, seed=0, ids=None, names=None):
    rng = np.random.default_rng(seed)
    vectors = rng.normal(size=(n, dim))
    if ids is None:
        ids = list(range(1, n + 1))
    if names is None:
        names = [f"item_{i}" for i in ids]
    return EmbeddingMatrix(
        ids=np.array(ids, dtype=np.int64),
        names=tuple(names),
        vectors=vectors,
    )


@pytest.fixture
def small_matrix():
    return make_matrix(12, 8, seed=7)


@pytest.fixture
def fixture_ws(tmp_path):
    from flavorbench.synth import fixture_workspace

    ws = tmp_path / "ws"
    fixture_workspace(ws)
    return ws
