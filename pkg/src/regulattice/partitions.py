"""Partitions with an exceptional class, and block partitions built from them.

Classes are stored as sorted tuples of integer indices. The exceptional class
(index 0 in the usual notation) is kept apart from ``classes`` and is never
counted by :attr:`Partition.class_count`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, RebalanceError

__all__ = [
    "Partition",
    "BlockPartition",
    "equal_partition",
    "is_refinement",
    "common_refinement",
    "split_exceptional_to_singletons",
    "rebalance",
]


def _as_class(members: Iterable[int]) -> tuple[int, ...]:
    out = tuple(sorted(int(x) for x in members))
    if len(set(out)) != len(out):
        raise DomainError("duplicate index inside a class")
    return out


@dataclass(frozen=True)
class Partition:
    """An ordered partition of a finite index set with an optional exceptional class.

    Parameters
    ----------
    classes : sequence of sequences of int
        The nonexceptional classes, in order. Each must be nonempty.
    exceptional : sequence of int, optional
        The exceptional class; may be empty.
    """

    classes: tuple[tuple[int, ...], ...]
    exceptional: tuple[int, ...] = ()
    _ground: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        classes = tuple(_as_class(c) for c in self.classes)
        exceptional = _as_class(self.exceptional)
        if any(len(c) == 0 for c in classes):
            raise DomainError("partition classes must be nonempty")
        seen = set(exceptional)
        total = len(exceptional)
        for c in classes:
            seen.update(c)
            total += len(c)
        if len(seen) != total:
            raise DomainError("partition classes overlap")
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "exceptional", exceptional)
        object.__setattr__(self, "_ground", frozenset(seen))

    @classmethod
    def trivial(cls, ground: Iterable[int]) -> "Partition":
        return cls((tuple(ground),))

    @classmethod
    def singletons(cls, ground: Iterable[int]) -> "Partition":
        return cls(tuple((int(x),) for x in sorted(ground)))

    @property
    def ground(self) -> frozenset:
        return self._ground

    @property
    def size(self) -> int:
        return len(self._ground)

    @property
    def class_count(self) -> int:
        """Number of nonexceptional classes."""
        return len(self.classes)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(c) for c in self.classes], dtype=np.int64)

    @property
    def is_balanced(self) -> bool:
        return len({len(c) for c in self.classes}) <= 1

    def labels(self, n: int) -> np.ndarray:
        """Class label of each index in ``range(n)``.

        Nonexceptional classes get ``0..k-1``, exceptional members ``-1``, and
        indices outside the ground set ``-2``.
        """
        lab = np.full(n, -2, dtype=np.int64)
        if self.exceptional:
            lab[list(self.exceptional)] = -1
        for i, c in enumerate(self.classes):
            lab[list(c)] = i
        return lab

    def as_lists(self) -> dict:
        return {
            "classes": [list(c) for c in self.classes],
            "exceptional": list(self.exceptional),
        }


def equal_partition(n: int, k: int) -> Partition:
    """Balanced partition of ``range(n)`` into ``k`` contiguous classes.

    The remainder ``n mod k`` (the tail) becomes the exceptional class.
    """
    if k < 1 or n < k:
        raise DomainError(f"cannot split {n} indices into {k} nonempty classes")
    size = n // k
    classes = tuple(tuple(range(i * size, (i + 1) * size)) for i in range(k))
    return Partition(classes, tuple(range(k * size, n)))


@dataclass(frozen=True)
class BlockPartition:
    """A row partition and a column partition of one matrix."""

    rows: Partition
    cols: Partition
    symmetric: bool = False

    def __post_init__(self):
        if self.symmetric and self.rows != self.cols:
            raise DomainError("symmetric block partition needs identical row and column partitions")

    @classmethod
    def symmetric_from(cls, part: Partition) -> "BlockPartition":
        return cls(part, part, symmetric=True)

    @property
    def is_balanced(self) -> bool:
        return self.rows.is_balanced and self.cols.is_balanced

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows.class_count, self.cols.class_count

    def blocks(self):
        """Yield ``(i, j, X, Y)`` for every nonexceptional block."""
        for i, X in enumerate(self.rows.classes):
            for j, Y in enumerate(self.cols.classes):
                yield i, j, X, Y


def is_refinement(fine: Partition, coarse: Partition) -> bool:
    """True when ``fine`` refines ``coarse``.

    The exceptional class may only grow, and every nonexceptional class of
    ``fine`` must sit inside a single element of ``coarse``.
    """
    if fine.ground != coarse.ground:
        raise DomainError("partitions are over different ground sets")
    if not set(coarse.exceptional) <= set(fine.exceptional):
        return False
    owner = {}
    for i, c in enumerate(coarse.classes):
        for x in c:
            owner[x] = i
    for x in coarse.exceptional:
        owner[x] = -1
    for c in fine.classes:
        if len({owner[x] for x in c}) != 1:
            return False
    return True


def common_refinement(parts: Sequence[Partition]) -> Partition:
    """Coarsest partition refining every partition in ``parts``.

    Cells are ordered lexicographically by the class they occupy in each
    input, taken in input order.
    """
    if not parts:
        raise DomainError("common_refinement needs at least one partition")
    ground = parts[0].ground
    for p in parts:
        if p.ground != ground:
            raise DomainError("partitions are over different ground sets")
        if p.exceptional:
            raise DomainError("common_refinement does not accept exceptional sets")
    if len(parts) == 1:
        return parts[0]
    members = np.array(sorted(ground), dtype=np.int64)
    codes = np.empty((len(members), len(parts)), dtype=np.int64)
    for j, p in enumerate(parts):
        lookup = {x: i for i, c in enumerate(p.classes) for x in c}
        codes[:, j] = [lookup[x] for x in members]
    _, inverse = np.unique(codes, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    cells = [members[inverse == c] for c in range(inverse.max() + 1)]
    return Partition(tuple(tuple(c.tolist()) for c in cells))


def split_exceptional_to_singletons(part: Partition) -> Partition:
    """Empty the exceptional class by appending its members as singleton classes."""
    if not part.exceptional:
        return part
    return Partition(part.classes + tuple((x,) for x in part.exceptional))


def rebalance(part: Partition, chunk: int) -> Partition:
    """Cut every class into pieces of exactly ``chunk`` elements.

    Each class is cut in index order; its tail (``len % chunk`` elements)
    joins the exceptional class.

    Raises
    ------
    RebalanceError
        If no class is large enough to yield a single piece.
    """
    if chunk < 1:
        raise DomainError("chunk must be a positive integer")
    pieces = []
    leftover = list(part.exceptional)
    for c in part.classes:
        full = len(c) // chunk
        for t in range(full):
            pieces.append(c[t * chunk:(t + 1) * chunk])
        leftover.extend(c[full * chunk:])
    if not pieces and part.size:
        raise RebalanceError(f"chunk {chunk} exceeds every class size")
    return Partition(tuple(pieces), tuple(leftover))
