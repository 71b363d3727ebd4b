"""The cutoff potential and its value on blocks and block partitions.

The scalar potential is quadratic on ``|t| <= 2D`` and continues linearly with
slope ``4D`` beyond, so a handful of huge entries cannot dominate the total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, InvariantError
from .matrix import TOL, as_matrix, index_subset
from .partitions import BlockPartition, Partition

__all__ = [
    "INFINITE",
    "PotentialConfig",
    "phi_scalar",
    "phi_block",
    "phi_pair",
    "phi_partition",
    "bound_check_stats",
]

INFINITE = math.inf

_stats = {"checks": 0, "violations": 0}


def bound_check_stats() -> dict:
    """Counts of upper-bound checks performed so far in this process."""
    return dict(_stats)


@dataclass(frozen=True)
class PotentialConfig:
    epsilon: float
    D: float = INFINITE

    def __post_init__(self):
        if not 0 < self.epsilon <= 0.5:
            raise DomainError("epsilon must lie in (0, 1/2]")
        if not (self.D == INFINITE or self.D >= 1):
            raise DomainError("D must be at least 1 or INFINITE")

    @property
    def dense(self) -> bool:
        return self.D == INFINITE

    @classmethod
    def for_epsilon(cls, epsilon: float, dense: bool = False) -> "PotentialConfig":
        """The driver's choice ``D = 8 / epsilon**2`` (or ``INFINITE``)."""
        return cls(epsilon, INFINITE if dense else 8.0 / epsilon**2)


def phi_scalar(t, cfg: PotentialConfig):
    """Cutoff potential of a density, elementwise on arrays."""
    t = np.asarray(t, dtype=np.float64)
    if cfg.dense:
        out = t * t
    else:
        D = cfg.D
        a = np.abs(t)
        out = np.where(a <= 2 * D, t * t, 4 * D * (a - D))
    return out if out.ndim else float(out)


def _check_bound(value: float, mass: float, cfg: PotentialConfig) -> None:
    if cfg.dense:
        return
    _stats["checks"] += 1
    cap = 4 * cfg.D * mass
    if value > cap * (1 + 1e-12) + TOL:
        _stats["violations"] += 1
        raise InvariantError(f"potential {value!r} exceeds 4*D*||A|| = {cap!r}")


def phi_block(A, X: Sequence[int], Y: Sequence[int], cfg: PotentialConfig) -> float:
    """``|X| |Y| phi(d(X, Y))``."""
    A = as_matrix(A)
    X = index_subset(X, A.m, "rows")
    Y = index_subset(Y, A.n, "cols")
    if X.size == 0 or Y.size == 0:
        raise DomainError("potential of an empty block is undefined")
    sub = A.values[np.ix_(X, Y)]
    value = X.size * Y.size * phi_scalar(sub.sum() / (X.size * Y.size), cfg)
    _check_bound(value, float(np.abs(sub).sum()), cfg)
    return float(value)


def _expanded_labels(P: Partition, n: int) -> tuple[np.ndarray, np.ndarray, int]:
    """Labels where each exceptional member is its own class; also class sizes."""
    lab = P.labels(n)
    k = P.class_count
    exc = np.array(P.exceptional, dtype=np.int64)
    lab[exc] = k + np.arange(exc.size)
    sizes = np.concatenate([P.sizes, np.ones(exc.size, dtype=np.int64)])
    return lab, sizes, k + exc.size


def phi_pair(A, P: Partition, Q: Partition, cfg: PotentialConfig) -> float:
    """Potential of partitions of row and column subsets.

    Exceptional members are treated as singleton classes. The averaged matrix
    is never formed: only the block sums are accumulated.
    """
    A = as_matrix(A)
    for part, size, axis in ((P, A.m, "rows"), (Q, A.n, "cols")):
        if part.size == 0:
            raise DomainError(f"empty {axis} partition")
        if min(part.ground) < 0 or max(part.ground) >= size:
            raise DomainError(f"{axis} partition is not over a subset of the matrix axis")
    rlab, rsizes, K = _expanded_labels(P, A.m)
    clab, csizes, L = _expanded_labels(Q, A.n)
    rsel = np.flatnonzero(rlab >= 0)
    csel = np.flatnonzero(clab >= 0)
    sub = A.values[np.ix_(rsel, csel)]
    flat = (rlab[rsel][:, None] * L + clab[csel][None, :]).ravel()
    sums = np.bincount(flat, weights=sub.ravel(), minlength=K * L).reshape(K, L)
    cells = np.outer(rsizes, csizes)
    value = float((cells * phi_scalar(sums / cells, cfg)).sum())
    _check_bound(value, float(np.abs(sub).sum()), cfg)
    return value


def phi_partition(A, bp: BlockPartition, cfg: PotentialConfig) -> float:
    """Potential of a block partition covering every row and column of ``A``."""
    A = as_matrix(A)
    if bp.rows.ground != frozenset(range(A.m)) or bp.cols.ground != frozenset(range(A.n)):
        raise DomainError("block partition does not cover the matrix axes")
    return phi_pair(A, bp.rows, bp.cols, cfg)
