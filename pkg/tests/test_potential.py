import math

import numpy as np
import pytest

from oracles import expand, naive_averaged, naive_density, naive_phi, naive_phi_blocks
from regulattice import INFINITE, BlockPartition, Partition, PotentialConfig, phi_partition, phi_scalar
from regulattice.errors import DomainError, InvariantError
from regulattice.potential import _check_bound, bound_check_stats, phi_block


def test_config_validation():
    with pytest.raises(DomainError):
        PotentialConfig(0.0)
    with pytest.raises(DomainError):
        PotentialConfig(0.6)
    with pytest.raises(DomainError):
        PotentialConfig(0.3, 0.5)
    assert PotentialConfig(0.3).dense
    assert PotentialConfig.for_epsilon(0.5).D == 32
    assert PotentialConfig.for_epsilon(0.5, dense=True).D is INFINITE


def test_phi_scalar_examples():
    cfg = PotentialConfig(0.25, 2.0)
    assert phi_scalar(6.0, cfg) == 32.0
    assert phi_scalar(4.0, cfg) == 16.0 == 4 * 2.0**2
    assert phi_scalar(-1.0, cfg) == 1.0
    assert phi_scalar(1e6, PotentialConfig(0.25)) == 1e12
    assert np.allclose(phi_scalar(np.array([-6.0, 0.5]), cfg), [32.0, 0.25])


def test_phi_scalar_matches_naive_on_grid():
    for D in (1.0, 2.0, 32.0, math.inf):
        cfg = PotentialConfig(0.25, D)
        for t in np.linspace(-200, 200, 801):
            assert phi_scalar(t, cfg) == pytest.approx(naive_phi(t, D), rel=1e-15)


def test_phi_linear_bound_and_convexity():
    cfg = PotentialConfig(0.3, 3.0)
    t = np.linspace(-30, 30, 2001)
    assert np.all(phi_scalar(t, cfg) <= 4 * cfg.D * np.abs(t) + 1e-12)
    rng = np.random.default_rng(3)
    for _ in range(2000):
        t1, t2 = rng.uniform(-20, 20, 2)
        lam = rng.random()
        lhs = phi_scalar(lam * t1 + (1 - lam) * t2, cfg)
        assert lhs <= lam * phi_scalar(t1, cfg) + (1 - lam) * phi_scalar(t2, cfg) + 1e-12
        assert phi_scalar(t1, cfg) == phi_scalar(-t1, cfg)


def test_phi_block_examples(rng):
    cfg = PotentialConfig(0.25, 10.0)
    assert phi_block(np.full((5, 5), 3.0), [0, 1, 2], [1, 2, 3], cfg) == pytest.approx(81.0)
    assert phi_block(np.zeros((4, 4)), [0], [1, 2], cfg) == 0.0
    a = rng.normal(size=(9, 11)) * 5
    X, Y = [0, 3, 4, 8], [1, 2, 5, 7, 10]
    assert phi_block(a, X, Y, cfg) == pytest.approx(20 * naive_phi(naive_density(a, X, Y), 10.0), rel=1e-12)
    with pytest.raises(DomainError):
        phi_block(a, [], Y, cfg)


def test_phi_partition_trivial_and_singletons(rng):
    a = rng.normal(size=(7, 6))
    cfg = PotentialConfig(0.25, 4.0)
    triv = BlockPartition(Partition.trivial(range(7)), Partition.trivial(range(6)))
    assert phi_partition(a, triv, cfg) == pytest.approx(42 * naive_phi(a.mean(), 4.0), rel=1e-12)
    single = BlockPartition(Partition.singletons(range(7)), Partition.singletons(range(6)))
    expected = sum(naive_phi(v, 4.0) for v in a.ravel())
    assert phi_partition(a, single, cfg) == pytest.approx(expected, rel=1e-12)


def test_phi_partition_equals_averaged_matrix(rng):
    for _ in range(30):
        m, n = rng.integers(4, 15, 2)
        a = rng.normal(size=(m, n)) * rng.choice([1, 10, 100])
        D = float(rng.choice([1.0, 8.0, math.inf]))
        cfg = PotentialConfig(0.25, D)
        P = Partition(np.array_split(np.arange(m - 2), 2), [m - 2, m - 1])
        Q = Partition(np.array_split(np.arange(n - 1), 3), [n - 1])
        rows, cols = expand(P.classes, P.exceptional), expand(Q.classes, Q.exceptional)
        avg = naive_averaged(a, rows, cols)
        entrywise = sum(naive_phi(v, D) for v in avg.ravel())
        got = phi_partition(a, BlockPartition(P, Q), cfg)
        assert got == pytest.approx(entrywise, rel=1e-12, abs=1e-12)
        assert got == pytest.approx(naive_phi_blocks(a, rows, cols, D), rel=1e-12, abs=1e-12)


def test_phi_partition_requires_cover():
    with pytest.raises(DomainError):
        phi_partition(np.eye(4), BlockPartition(Partition([[0, 1]]), Partition.trivial(range(4))), PotentialConfig(0.3))


def test_bound_check_counts_and_raises():
    before = bound_check_stats()
    phi_block(np.ones((3, 3)), [0, 1], [0, 1], PotentialConfig(0.3, 2.0))
    assert bound_check_stats()["checks"] == before["checks"] + 1
    with pytest.raises(InvariantError):
        _check_bound(100.0, 1.0, PotentialConfig(0.3, 2.0))
    # roll back the deliberate violation so the suite-wide counter stays meaningful
    from regulattice import potential
    potential._stats["violations"] -= 1
