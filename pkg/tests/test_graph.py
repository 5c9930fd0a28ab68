"""Network construction, spectra, and serialization."""

import math

import numpy as np
import pytest

from dpls._util import make_rng, mix_seed
from dpls.errors import GraphError
from dpls.graph import (
    Network,
    build_cycle,
    build_network,
    consensus_rate,
    laplacian_eigenvalues,
    load_network,
    save_network,
)

SEED = 7_7077


def test_cycle_eigenvalues_match_circulant_formula():
    # weighted cycle Laplacian eigenvalues: 2w(1 - cos(2 pi k / n))
    for n in (3, 4, 10, 25):
        w = 0.3
        net = build_cycle(n, w)
        got = np.sort(laplacian_eigenvalues(net))
        expected = np.sort([2 * w * (1 - math.cos(2 * math.pi * k / n)) for k in range(n)])
        assert np.allclose(got, expected, atol=1e-12)


def test_consensus_rate_small_cycle_value():
    # n=3, w=0.3: lambda_2 = lambda_3 = 0.9, so the rate is exactly 0.1
    assert consensus_rate(build_cycle(3, 0.3)) == pytest.approx(0.1, abs=1e-12)


def test_consensus_rate_matches_power_iteration():
    rng = make_rng(SEED)
    net = build_cycle(12, 0.22)
    rate = consensus_rate(net)
    w = net.mixing
    y = rng.standard_normal((12, 1))
    y -= y.mean(axis=0)  # remove the invariant component
    for _ in range(300):
        nxt = w @ y
        ratio = np.linalg.norm(nxt) / np.linalg.norm(y)
        y = nxt
    assert ratio == pytest.approx(rate, rel=1e-6)


def test_mixing_preserves_sums():
    rng = make_rng(mix_seed(SEED, 1))
    net = build_cycle(9, 0.3)
    y = rng.standard_normal((9, 4))
    mixed = net.mixing @ y
    assert np.allclose(mixed.sum(axis=0), y.sum(axis=0), atol=1e-12)


def test_build_network_custom_edges():
    net = build_network(4, [(0, 1, 0.2), (1, 2, 0.2), (2, 3, 0.2), (3, 0, 0.2), (0, 2, 0.1)])
    assert net.degree(0) == 3
    assert net.neighbors(0) == [1, 2, 3]
    assert net.weight(0, 2) == pytest.approx(0.1)
    lap = net.laplacian
    assert np.allclose(lap, lap.T)
    assert np.allclose(lap.sum(axis=1), 0.0, atol=1e-15)


@pytest.mark.parametrize(
    "n,edges",
    [
        (3, [(0, 1, 0.3)]),                              # disconnected
        (3, [(0, 0, 0.3), (1, 2, 0.3)]),                 # self loop
        (3, [(0, 1, 0.3), (0, 1, 0.2), (1, 2, 0.3)]),    # duplicate edge
        (3, [(0, 1, 1.2), (1, 2, 0.3), (0, 2, 0.3)]),    # weight outside (0,1)
        (4, [(0, 1, 0.6), (1, 2, 0.6), (2, 3, 0.6), (3, 0, 0.6)]),  # degree >= 1
    ],
)
def test_build_network_rejects_bad_graphs(n, edges):
    with pytest.raises(GraphError):
        build_network(n, edges)


def test_build_cycle_rejects_bad_weight():
    with pytest.raises(GraphError):
        build_cycle(5, 0.5)  # cycle degrees would reach 1
    with pytest.raises(GraphError):
        build_cycle(2, 0.3)


def test_network_file_round_trip(tmp_path):
    net = build_network(5, [(0, 1, 0.25), (1, 2, 0.3), (2, 3, 0.2), (3, 4, 0.3), (4, 0, 0.15)])
    path = tmp_path / "net.txt"
    save_network(str(path), net)
    back = load_network(str(path))
    assert isinstance(back, Network)
    assert back.n == net.n
    assert back.edges == net.edges
    assert back.weights == net.weights
    assert np.array_equal(back.laplacian, net.laplacian)
