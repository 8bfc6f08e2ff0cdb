import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from contagion_privacy.graph import prepare_graph
from contagion_privacy.netgen import (CORE_PERIPHERY, KINDS, GeneratorSpec, configuration_model, erdos_renyi,
                                      generate, kronecker_sample, powerlaw_degree_sequence)


def test_kronecker_all_ones_is_complete():
    edges = kronecker_sample([[1, 1], [1, 1]], 3, seed=0)
    assert len(edges) == 64
    assert {tuple(e) for e in edges.tolist()} == {(u, v) for u in range(8) for v in range(8)}


def test_kronecker_zero_is_empty():
    assert len(kronecker_sample([[0, 0], [0, 0]], 4, seed=0)) == 0


def test_kronecker_identity_gives_diagonal():
    edges = kronecker_sample([[1, 0], [0, 1]], 2, seed=5)
    assert sorted(map(tuple, edges.tolist())) == [(0, 0), (1, 1), (2, 2), (3, 3)]


def test_kronecker_expected_edge_count():
    expected = sum(sum(r) for r in CORE_PERIPHERY) ** 9  # 2.2**9
    counts = np.array([len(kronecker_sample(CORE_PERIPHERY, 9, seed=s)) for s in range(20)])
    assert abs(expected - 1207.27) < 0.01
    assert np.all(np.abs(counts - expected) <= 0.10 * expected)
    # the variance of a sum of Bernoullis is at most its mean
    assert abs(counts.mean() - expected) <= 3 * np.sqrt(expected / len(counts))


def test_erdos_renyi_mean_out_degree():
    means = [len(erdos_renyi(500, 5.0, s)) / 500 for s in range(20)]
    assert all(4.3 <= m <= 5.7 for m in means)
    assert 4.8 <= np.mean(means) <= 5.2


def test_erdos_renyi_no_loops():
    e = erdos_renyi(50, 5.0, 1)
    assert (e[:, 0] != e[:, 1]).all()


def test_powerlaw_degenerate_support():
    assert powerlaw_degree_sequence(4, 1.0, 2, 2, seed=0).tolist() == [2, 2, 2, 2]


def test_powerlaw_large_gamma_concentrates():
    d = powerlaw_degree_sequence(10_000, 50.0, 2, 40, seed=1)
    assert np.mean(d == 2) >= 0.99


def test_powerlaw_chi_square():
    n = 100_000
    d = powerlaw_degree_sequence(n, 1.0, 1, 100, seed=2)
    support = np.arange(1, 101)
    pmf = 1.0 / support
    pmf /= pmf.sum()
    observed = np.bincount(d, minlength=101)[1:101]
    _, p = stats.chisquare(observed, pmf * observed.sum())
    assert p > 0.01


def test_powerlaw_even_total():
    for s in range(10):
        assert powerlaw_degree_sequence(101, 1.0, 1, 50, seed=s).sum() % 2 == 0


def test_configuration_model_forced():
    assert configuration_model([0, 1], [1, 0], seed=0).tolist() == [[0, 1]]


def test_configuration_model_empty():
    assert configuration_model([0, 0, 0], [0, 0, 0], seed=0).shape == (0, 2)


@given(st.lists(st.integers(0, 6), min_size=2, max_size=30), st.integers(0, 1000))
def test_configuration_model_never_exceeds_request(out_deg, seed):
    out_deg = np.array(out_deg)
    in_deg = np.random.default_rng(seed).permutation(out_deg)
    edges = configuration_model(in_deg, out_deg, seed)
    realized_out = np.bincount(edges[:, 0], minlength=len(out_deg)) if len(edges) else np.zeros(len(out_deg))
    realized_in = np.bincount(edges[:, 1], minlength=len(out_deg)) if len(edges) else np.zeros(len(out_deg))
    assert (realized_out <= out_deg).all() and (realized_in <= in_deg).all()
    assert len({tuple(e) for e in edges.tolist()}) == len(edges)


def test_powerlaw_graph_degree_cap_and_ccdf():
    spec = GeneratorSpec("power-law", 500, seed=4)
    g = generate(spec)
    _, cap = spec.powerlaw_support
    deg = g.out_degree()
    assert deg.max() <= cap
    ccdf = [(deg >= k).mean() for k in range(deg.max() + 2)]
    assert all(a >= b for a, b in zip(ccdf, ccdf[1:]))


@pytest.mark.parametrize("kind", KINDS)
def test_generate_reproducible_and_preparable(kind):
    a = generate(GeneratorSpec(kind, 500, seed=9))
    b = generate(GeneratorSpec(kind, 500, seed=9))
    np.testing.assert_array_equal(a.src, b.src)
    np.testing.assert_array_equal(a.dst, b.dst)
    g = prepare_graph(a, skip_prune=GeneratorSpec(kind).skip_prune)
    assert g.node_count > 50
    if kind in ("core-periphery", "hierarchical"):
        assert a.node_count == 512


def test_spec_validation():
    with pytest.raises(ValueError):
        GeneratorSpec("small-world")
    with pytest.raises(ValueError):
        GeneratorSpec("core-periphery", kronecker=((1.2, 0), (0, 1)))
