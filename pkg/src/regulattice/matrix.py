"""Dense real matrices: mass, block density, normalization and block averaging."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import DomainError, NormalizationError
from .partitions import Partition

__all__ = [
    "TOL",
    "RealMatrix",
    "as_matrix",
    "index_subset",
    "total_mass",
    "block_weight",
    "block_density",
    "normalize",
    "block_sums",
    "averaged_matrix",
]

# absolute tolerance used to classify boundary comparisons
TOL = 1e-9


class RealMatrix:
    """Immutable dense real matrix with row set ``range(m)`` and column set ``range(n)``.

    The underlying array is copied once and marked read-only, so instances can
    be shared freely between workers.
    """

    __slots__ = ("_values",)

    def __init__(self, values):
        arr = np.array(values, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise DomainError(f"expected a 2-d array, got {arr.ndim} dimensions")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DomainError("matrix must have at least one row and one column")
        if not np.all(np.isfinite(arr)):
            raise DomainError("matrix entries must be finite")
        arr.setflags(write=False)
        self._values = arr

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def shape(self) -> tuple[int, int]:
        return self._values.shape

    @property
    def m(self) -> int:
        return self._values.shape[0]

    @property
    def n(self) -> int:
        return self._values.shape[1]

    @property
    def is_square(self) -> bool:
        return self.m == self.n

    def __array__(self, dtype=None, copy=None):
        return self._values if dtype is None else self._values.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, RealMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._values, other._values))

    def __hash__(self):
        return hash((self.shape, self._values.tobytes()))

    def __repr__(self):
        return f"RealMatrix(shape={self.shape})"


def as_matrix(a) -> RealMatrix:
    return a if isinstance(a, RealMatrix) else RealMatrix(a)


def index_subset(members, size: int, axis: str = "rows") -> np.ndarray:
    """Validate a subset of ``range(size)`` and return it as a sorted int array."""
    idx = np.asarray(members, dtype=np.int64).ravel()
    if idx.size and (idx.min() < 0 or idx.max() >= size):
        raise DomainError(f"{axis} subset has indices outside range({size})")
    out = np.unique(idx)
    if out.size != idx.size:
        raise DomainError(f"{axis} subset has duplicate indices")
    return out


def total_mass(A) -> float:
    """Sum of the moduli of all entries."""
    return float(np.abs(as_matrix(A).values).sum())


def block_weight(A, X: Sequence[int], Y: Sequence[int]) -> float:
    A = as_matrix(A)
    X = index_subset(X, A.m, "rows")
    Y = index_subset(Y, A.n, "cols")
    return float(A.values[np.ix_(X, Y)].sum())


def block_density(A, X: Sequence[int], Y: Sequence[int]) -> float:
    """Average entry of the submatrix with rows ``X`` and columns ``Y``."""
    A = as_matrix(A)
    X = index_subset(X, A.m, "rows")
    Y = index_subset(Y, A.n, "cols")
    if X.size == 0 or Y.size == 0:
        raise DomainError("density of an empty block is undefined")
    return float(A.values[np.ix_(X, Y)].sum()) / (X.size * Y.size)


def normalize(A) -> RealMatrix:
    """Rescale ``A`` so that the mean modulus of its entries is exactly 1.

    The matrix is first divided by its largest modulus. That step is exact for
    any positive rescaling that keeps entries representable, so ``A`` and
    ``c * A`` normalize to the same bits in the common integer-valued case.
    """
    A = as_matrix(A)
    peak = float(np.abs(A.values).max())
    if peak == 0.0:
        raise NormalizationError("cannot normalize the zero matrix")
    B = A.values / peak
    return RealMatrix(B * (B.size / float(np.abs(B).sum())))


def block_sums(A, row_labels: np.ndarray, col_labels: np.ndarray, k: int, l: int) -> np.ndarray:
    """``k x l`` array of block weights for integer row and column labels.

    Entries whose row or column label is negative are ignored.
    """
    A = as_matrix(A).values
    rsel = np.flatnonzero(row_labels >= 0)
    csel = np.flatnonzero(col_labels >= 0)
    R = np.zeros((k, rsel.size))
    R[row_labels[rsel], np.arange(rsel.size)] = 1.0
    C = np.zeros((csel.size, l))
    C[np.arange(csel.size), col_labels[csel]] = 1.0
    return R @ A[np.ix_(rsel, csel)] @ C


def averaged_matrix(A, P: Partition, Q: Partition) -> RealMatrix:
    """Replace each entry by the density of the block that contains it.

    ``P`` and ``Q`` partition subsets ``X`` and ``Y`` of the row and column
    sets; the result is indexed by ``sorted(X) x sorted(Y)``.
    """
    A = as_matrix(A)
    if P.exceptional or Q.exceptional:
        raise DomainError("expand exceptional sets before averaging")
    X = np.array(sorted(P.ground), dtype=np.int64)
    Y = np.array(sorted(Q.ground), dtype=np.int64)
    if X.size == 0 or Y.size == 0:
        raise DomainError("cannot average over an empty index set")
    if X[0] < 0 or X[-1] >= A.m or Y[0] < 0 or Y[-1] >= A.n:
        raise DomainError("partition ground sets are not subsets of the matrix axes")
    sub = A.values[np.ix_(X, Y)]
    rlab = P.labels(A.m)[X]
    clab = Q.labels(A.n)[Y]
    k, l = P.class_count, Q.class_count
    sums = np.zeros((k, l))
    np.add.at(sums, (rlab[:, None], clab[None, :]), sub)
    dens = sums / np.outer(P.sizes, Q.sizes)
    return RealMatrix(dens[np.ix_(rlab, clab)])
