import numpy as np
import pytest

from oracles import naive_averaged, naive_density, naive_total_mass
from regulattice import Partition, RealMatrix, block_density, normalize, total_mass
from regulattice.errors import DomainError, NormalizationError
from regulattice.matrix import averaged_matrix, block_weight


def test_total_mass_small():
    assert total_mass(np.ones((2, 3))) == 6
    assert total_mass([[1, -2], [3, 0]]) == 6


def test_total_mass_matches_naive(rng):
    a = rng.uniform(-1, 1, (50, 50))
    assert total_mass(a) == pytest.approx(naive_total_mass(a), rel=1e-12)


def test_density_examples():
    assert block_density(np.full((4, 5), 2.5), [0, 2], [1, 3, 4]) == 2.5
    assert block_density(np.eye(2), [0, 1], [0, 1]) == 0.5


def test_density_matches_naive(rng):
    a = rng.normal(size=(20, 20))
    for _ in range(100):
        X = sorted(rng.choice(20, rng.integers(1, 21), replace=False).tolist())
        Y = sorted(rng.choice(20, rng.integers(1, 21), replace=False).tolist())
        assert block_density(a, X, Y) == pytest.approx(naive_density(a, X, Y), rel=1e-12, abs=1e-14)


def test_density_empty_rejected():
    with pytest.raises(DomainError):
        block_density(np.eye(3), [], [0])


def test_normalize_examples():
    assert np.array_equal(normalize(np.full((4, 4), 0.5)).values, np.ones((4, 4)))
    assert np.array_equal(normalize([[2, 0], [0, 2]]).values, [[2, 0], [0, 2]])
    with pytest.raises(NormalizationError):
        normalize(np.zeros((3, 3)))


def test_normalize_random_graph_has_unit_mean_modulus(rng):
    n, p = 80, 0.1
    a = np.triu((rng.random((n, n)) < p).astype(float), 1)
    a = a + a.T
    N = normalize(a)
    assert total_mass(N) / (n * n) == pytest.approx(1.0, rel=1e-12)
    edges = N.values[a > 0]
    assert np.allclose(edges, edges[0])


def test_normalize_idempotent(rng):
    a = rng.normal(size=(13, 7))
    once = normalize(a)
    assert np.allclose(normalize(once).values, once.values, rtol=1e-12, atol=0)


def test_matrix_validation():
    with pytest.raises(DomainError):
        RealMatrix([[1.0, np.nan]])
    with pytest.raises(DomainError):
        RealMatrix(np.zeros((0, 3)))
    m = RealMatrix([[1, 2], [3, 4]])
    with pytest.raises(ValueError):
        m.values[0, 0] = 9


def test_averaged_trivial_and_singletons(rng):
    a = rng.normal(size=(6, 5))
    triv = averaged_matrix(a, Partition.trivial(range(6)), Partition.trivial(range(5)))
    assert np.allclose(triv.values, a.mean())
    single = averaged_matrix(a, Partition.singletons(range(6)), Partition.singletons(range(5)))
    assert np.allclose(single.values, a)


def test_averaged_matches_naive_and_conserves_mass(rng):
    a = rng.normal(size=(12, 9))
    P = Partition([[0, 3, 5], [1, 2], [4, 6, 7, 8, 9, 10, 11]])
    Q = Partition([[0, 8], [1, 2, 3, 4], [5, 6, 7]])
    got = averaged_matrix(a, P, Q).values
    assert np.allclose(got, naive_averaged(a, P.classes, Q.classes), rtol=1e-12)
    for X in P.classes:
        for Y in Q.classes:
            assert block_weight(got, X, Y) == pytest.approx(block_weight(a, X, Y), rel=1e-12, abs=1e-12)


def test_averaged_rejects_exceptional():
    with pytest.raises(DomainError):
        averaged_matrix(np.eye(3), Partition([[0, 1]], [2]), Partition.trivial(range(3)))


def test_density_of_union_of_blocks_is_preserved(rng):
    a = rng.normal(size=(10, 10))
    P = Partition([[0, 1, 2], [3, 4], [5, 6, 7, 8, 9]])
    avg = averaged_matrix(a, P, P).values
    X = list(P.classes[0]) + list(P.classes[2])
    Y = list(P.classes[1]) + list(P.classes[2])
    assert block_density(avg, X, Y) == pytest.approx(block_density(a, X, Y), rel=1e-12)
