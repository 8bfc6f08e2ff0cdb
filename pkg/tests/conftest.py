import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))  # lets tests import oracles

from contagion_privacy.graph import from_edges, normalize_in_weights  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@st.composite
def weighted_digraphs(draw, min_nodes=2, max_nodes=8, max_edges=16, normalized=True):
    """Random simple digraphs without self-loops; in-weights sum to one when ``normalized``."""
    n = draw(st.integers(min_nodes, max_nodes))
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    chosen = draw(st.lists(st.sampled_from(pairs), min_size=1, max_size=min(max_edges, len(pairs)), unique=True))
    w = draw(st.lists(st.floats(0.05, 1.0), min_size=len(chosen), max_size=len(chosen)))
    g = from_edges(n, chosen, w)
    return normalize_in_weights(g) if normalized else g


@st.composite
def in_trees(draw, max_nodes=13):
    """Edges all point toward node 0; node i > 0 has a single out-edge to a smaller id."""
    n = draw(st.integers(1, max_nodes))
    parents = [draw(st.integers(0, i - 1)) for i in range(1, n)]
    edges = [(i, p) for i, p in zip(range(1, n), parents)]
    raw = draw(st.lists(st.floats(0.05, 1.0), min_size=len(edges), max_size=len(edges)))
    g = from_edges(n, edges, raw) if edges else from_edges(n, np.zeros((0, 2), dtype=int), np.zeros(0))
    return normalize_in_weights(g) if edges else g


@pytest.fixture
def chain3():
    return from_edges(3, [(0, 1), (1, 2)])


@pytest.fixture
def diamond():
    # a=0 -> b=1, c=2 -> d=3, every weight 0.5 (in-sums <= 1)
    return from_edges(4, [(0, 1), (0, 2), (1, 3), (2, 3)], [0.5, 0.5, 0.5, 0.5])
