"""Regularity of a single block: exact oracle, witness search, shrinking, gain split.

A block ``(X, Y)`` is epsilon-regular when every ``X' <= X``, ``Y' <= Y`` with
``|X'| >= eps |X|`` and ``|Y'| >= eps |Y|`` has density within ``eps`` of the
block density. Deciding this is hard in general, so the contract here is an
exhaustive check for small blocks and a sound but incomplete search above that.
Every witness is re-verified from raw entries before it is returned.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, InvariantError, OracleLimitError, ShrinkFailure
from .matrix import TOL, as_matrix, index_subset
from .potential import PotentialConfig, phi_block

__all__ = [
    "ORACLE_LIMIT",
    "Status",
    "Witness",
    "RegularityVerdict",
    "GainSplit",
    "min_subset_size",
    "block_rng",
    "exact_check",
    "heuristic_witness_search",
    "check_block",
    "shrink_witness",
    "gain_split",
]

ORACLE_LIMIT = 16
SHRINK_RETRIES = 64


class Status(str, enum.Enum):
    REGULAR = "regular"
    IRREGULAR = "irregular"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Witness:
    """Subsets ``x_sub`` of ``X`` and ``y_sub`` of ``Y`` whose density is far from ``d(X, Y)``."""

    x_sub: tuple[int, ...]
    y_sub: tuple[int, ...]
    deviation: float
    source: str = "exact"


@dataclass(frozen=True)
class RegularityVerdict:
    status: Status
    method: str
    budget_spent: int
    witness: Witness | None = None

    @property
    def irregular(self) -> bool:
        return self.status is Status.IRREGULAR


@dataclass(frozen=True)
class GainSplit:
    row_parts: tuple[tuple[int, ...], tuple[int, ...]]
    col_parts: tuple[tuple[int, ...], tuple[int, ...]]
    phi_before: float
    phi_after: float

    @property
    def gain(self) -> float:
        return self.phi_after - self.phi_before


def min_subset_size(eps: float, n: int) -> int:
    """Smallest integer ``s`` with ``s >= eps * n``, robust to float noise."""
    return max(1, math.ceil(eps * n - 1e-9))


def block_rng(master_seed: int, *coords: int) -> np.random.Generator:
    """Generator for one unit of work, independent of scheduling order."""
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), *map(int, coords)]))


def _submatrix(A, X, Y):
    A = as_matrix(A)
    X = index_subset(X, A.m, "rows")
    Y = index_subset(Y, A.n, "cols")
    if X.size == 0 or Y.size == 0:
        raise DomainError("block must have nonempty row and column sets")
    return A, X, Y, A.values[np.ix_(X, Y)]


def _deviation(sub: np.ndarray, xi: np.ndarray, yi: np.ndarray, base: float) -> float:
    return abs(float(sub[np.ix_(xi, yi)].sum()) / (xi.size * yi.size) - base)


def _best_columns(colsums: np.ndarray, nrows: int, base: float, tmin: int, tmax: int):
    """Best column subset for fixed rows, over sizes ``tmin..tmax``.

    For a fixed size the extreme sums come from the largest or smallest
    column sums, so sorting is enough. Returns ``(deviation, columns)``.
    """
    q = colsums.size
    order = np.argsort(colsums, kind="stable")
    asc = np.cumsum(colsums[order])
    total = asc[-1]
    t = np.arange(tmin, tmax + 1)
    low = asc[t - 1] / (nrows * t)
    rest = np.where(q - t > 0, asc[np.maximum(q - t - 1, 0)], 0.0)
    high = (total - rest) / (nrows * t)
    dev_hi = high - base
    dev_lo = base - low
    i_hi = int(np.argmax(dev_hi))
    i_lo = int(np.argmax(dev_lo))
    if dev_hi[i_hi] >= dev_lo[i_lo]:
        return float(dev_hi[i_hi]), np.sort(order[q - t[i_hi]:])
    return float(dev_lo[i_lo]), np.sort(order[:t[i_lo]])


def _make_witness(X, Y, sub, xi, yi, base, source) -> Witness:
    return Witness(
        tuple(int(v) for v in X[xi]),
        tuple(int(v) for v in Y[yi]),
        _deviation(sub, xi, yi, base),
        source,
    )


def exact_check(A, X: Sequence[int], Y: Sequence[int], eps: float,
                oracle_limit: int = ORACLE_LIMIT, tol: float = TOL) -> RegularityVerdict:
    """Decide epsilon-regularity of ``(X, Y)`` exhaustively.

    All qualifying row subsets of the smaller side are enumerated; for each the
    best column subset of every qualifying size is found by sorting column
    sums. An irregular verdict carries a maximum-deviation witness.

    Raises
    ------
    OracleLimitError
        If either side is larger than ``oracle_limit``.
    """
    A, X, Y, sub = _submatrix(A, X, Y)
    if X.size > oracle_limit or Y.size > oracle_limit:
        raise OracleLimitError(
            f"block {X.size}x{Y.size} exceeds oracle limit {oracle_limit}; use heuristic search"
        )
    if float(sub.max() - sub.min()) <= eps + tol:
        # every sub-density lies in [min, max], so no pair can deviate by more
        return RegularityVerdict(Status.REGULAR, "exact", 0)
    base = float(sub.sum()) / sub.size
    flip = X.size > Y.size
    mat = sub.T if flip else sub
    p, q = mat.shape
    smin, tmin = min_subset_size(eps, p), min_subset_size(eps, q)

    masks = np.arange(1, 1 << p, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(p)) & 1).astype(np.float64)
    counts = bits.sum(axis=1)
    keep = counts >= smin
    bits, counts = bits[keep], counts[keep]

    sums = bits @ mat
    sums.sort(axis=1)
    asc = np.cumsum(sums, axis=1)
    total = asc[:, -1:]
    t = np.arange(tmin, q + 1)
    low = asc[:, t - 1] / (counts[:, None] * t)
    rest = np.where(q - t > 0, asc[:, np.maximum(q - t - 1, 0)], 0.0)
    high = (total - rest) / (counts[:, None] * t)
    dev = np.maximum(high - base, base - low)
    flat = int(np.argmax(dev))
    best = float(dev.flat[flat])
    n_pairs = int(keep.sum()) * sum(math.comb(q, s) for s in range(tmin, q + 1))

    if best <= eps + tol:
        return RegularityVerdict(Status.REGULAR, "exact", n_pairs)
    row = np.flatnonzero(bits[flat // t.size])
    _, cols = _best_columns(bits[flat // t.size] @ mat, row.size, base, tmin, q)
    xi, yi = (cols, row) if flip else (row, cols)
    return RegularityVerdict(
        Status.IRREGULAR, "exact", n_pairs, _make_witness(X, Y, sub, xi, yi, base, "exact")
    )


def _alternate(sub, base, xi, smin, tmin, rounds=4):
    """Alternately re-optimise columns given rows and rows given columns."""
    p, q = sub.shape
    dev, yi = _best_columns(sub[xi].sum(axis=0), xi.size, base, tmin, q)
    for _ in range(rounds):
        dev2, xi2 = _best_columns(sub[:, yi].sum(axis=1), yi.size, base, smin, p)
        if dev2 <= dev + 1e-15:
            break
        xi = xi2
        dev, yi = _best_columns(sub[xi].sum(axis=0), xi.size, base, tmin, q)
    return dev, xi, yi


def _degree_candidates(sub, base, eps, smin):
    """Row sets suggested by row averages: thresholded sets and top/bottom slices."""
    p = sub.shape[0]
    avg = sub.mean(axis=1)
    order = np.argsort(avg, kind="stable")
    half = max(smin, p // 2)
    cands = []
    above = np.flatnonzero(avg > base + eps / 2)
    below = np.flatnonzero(avg < base - eps / 2)
    for s in (above, below):
        if s.size >= smin:
            cands.append(s)
    for size in sorted({smin, half}):
        cands.append(np.sort(order[p - size:]))
        cands.append(np.sort(order[:size]))
    return cands


def heuristic_witness_search(A, X: Sequence[int], Y: Sequence[int], eps: float,
                             budget: int, rng: np.random.Generator,
                             tol: float = TOL) -> RegularityVerdict:
    """Look for a witness of irregularity; never claims regularity.

    Degree-based candidates are tried first on both sides (each polished by
    alternating exact re-optimisation of the opposite side), then ``budget``
    random row subsets with sizes between ``ceil(eps |X|)`` and ``|X| // 2``,
    each paired with its best column subset.
    """
    if budget < 1:
        raise DomainError("budget must be at least 1")
    A, X, Y, sub = _submatrix(A, X, Y)
    base = float(sub.sum()) / sub.size
    p, q = sub.shape
    smin, tmin = min_subset_size(eps, p), min_subset_size(eps, q)
    spent = 0

    def accept(xi, yi, source):
        w = _make_witness(X, Y, sub, xi, yi, base, source)
        if w.deviation > eps + tol:
            return RegularityVerdict(Status.IRREGULAR, "heuristic", spent, w)
        return None

    for xi in _degree_candidates(sub, base, eps, smin):
        spent += 1
        _, xi, yi = _alternate(sub, base, xi, smin, tmin)
        found = accept(xi, yi, "degree")
        if found:
            return found
    for yi in _degree_candidates(sub.T, base, eps, tmin):
        spent += 1
        _, yi, xi = _alternate(sub.T, base, yi, tmin, smin)
        found = accept(xi, yi, "degree")
        if found:
            return found

    hi = max(smin, p // 2)
    for _ in range(budget):
        spent += 1
        size = int(rng.integers(smin, hi + 1))
        xi = np.sort(rng.choice(p, size=size, replace=False))
        _, yi = _best_columns(sub[xi].sum(axis=0), xi.size, base, tmin, q)
        found = accept(xi, yi, "random")
        if found:
            return found
    return RegularityVerdict(Status.UNKNOWN, "heuristic", spent)


def check_block(A, X, Y, eps: float, *, oracle_limit: int = ORACLE_LIMIT,
                budget: int = 64, rng: np.random.Generator | None = None,
                tol: float = TOL) -> RegularityVerdict:
    """Exact check when both sides fit the oracle limit, heuristic search otherwise."""
    if len(X) == 1 and len(Y) == 1:
        # the only qualifying pair is the block itself
        return RegularityVerdict(Status.REGULAR, "exact", 1)
    if len(X) <= oracle_limit and len(Y) <= oracle_limit:
        return exact_check(A, X, Y, eps, oracle_limit, tol)
    if rng is None:
        rng = np.random.default_rng(0)
    return heuristic_witness_search(A, X, Y, eps, budget, rng, tol)


def _shrink_side(sub, base, keep, other, target, eps, tol, rng, retries):
    """Cut ``keep`` (indices into the rows of ``sub``) down to ``target`` rows.

    ``other`` indexes the columns. Returns ``(rows, method)``.
    """
    rows_sum = sub[:, other].sum(axis=1)
    ncols = other.size
    for _ in range(retries):
        trial = np.sort(rng.choice(keep, size=target, replace=False))
        if abs(rows_sum[trial].sum() / (target * ncols) - base) >= eps - tol:
            return trial, "random"
    cur = list(keep)
    total = rows_sum[cur].sum()
    while len(cur) > target:
        vals = rows_sum[cur]
        devs = np.abs((total - vals) / ((len(cur) - 1) * ncols) - base)
        drop = int(np.argmax(devs))
        total -= vals[drop]
        del cur[drop]
    return np.array(cur, dtype=np.int64), "greedy"


def shrink_witness(A, X: Sequence[int], Y: Sequence[int], w: Witness, eps: float,
                   rng: np.random.Generator, retries: int = SHRINK_RETRIES,
                   tol: float = TOL) -> Witness:
    """Shrink a witness so each side holds at most half of its block.

    Each oversized side is first replaced by random subsets of half size, up to
    ``retries`` times, then by greedy removal of the element whose removal
    hurts the deviation least.

    Raises
    ------
    ShrinkFailure
        If the size window is empty or the deviation falls below ``eps``.
    """
    A, X, Y, sub = _submatrix(A, X, Y)
    pos_x = {int(v): i for i, v in enumerate(X)}
    pos_y = {int(v): i for i, v in enumerate(Y)}
    try:
        xi = np.array(sorted(pos_x[v] for v in w.x_sub), dtype=np.int64)
        yi = np.array(sorted(pos_y[v] for v in w.y_sub), dtype=np.int64)
    except KeyError as exc:
        raise DomainError("witness is not contained in the block") from exc
    p, q = sub.shape
    smin, tmin = min_subset_size(eps, p), min_subset_size(eps, q)
    if xi.size < smin or yi.size < tmin:
        raise DomainError("witness subsets are below the minimum size")
    if smin > p // 2 or tmin > q // 2:
        raise ShrinkFailure(f"no subset sizes in [eps*n, n/2] for a {p}x{q} block")
    if xi.size <= p // 2 and yi.size <= q // 2:
        return w
    base = float(sub.sum()) / sub.size
    methods = []
    if xi.size > p // 2:
        xi, how = _shrink_side(sub, base, xi, yi, p // 2, eps, tol, rng, retries)
        methods.append(how)
    if yi.size > q // 2:
        yi, how = _shrink_side(sub.T, base, yi, xi, q // 2, eps, tol, rng, retries)
        methods.append(how)
    out = _make_witness(X, Y, sub, xi, yi, base, f"{w.source}+{'/'.join(methods)}")
    if out.deviation < eps - tol:
        raise ShrinkFailure(f"deviation dropped to {out.deviation:.6g} < {eps}")
    return out


def gain_split(A, X: Sequence[int], Y: Sequence[int], w: Witness,
               cfg: PotentialConfig, tol: float = TOL) -> GainSplit:
    """Two-by-two split of ``(X, Y)`` driven by a shrunk witness.

    The potential of the split exceeds that of the block by at least
    ``eps**4 |X| |Y|``; this is checked on every call.
    """
    A, X, Y, sub = _submatrix(A, X, Y)
    eps = cfg.epsilon
    p, q = X.size, Y.size
    x1, y1 = set(w.x_sub), set(w.y_sub)
    if not (x1 <= set(X.tolist()) and y1 <= set(Y.tolist())):
        raise DomainError("witness is not contained in the block")
    if not (min_subset_size(eps, p) <= len(x1) <= p // 2 and min_subset_size(eps, q) <= len(y1) <= q // 2):
        raise DomainError("witness must be shrunk before splitting")
    if w.deviation < eps - tol:
        raise DomainError("witness deviation is below epsilon")
    base = float(sub.sum()) / sub.size
    if not cfg.dense and abs(base) > eps * cfg.D + tol:
        raise DomainError("block density exceeds eps * D")

    rows = (tuple(sorted(x1)), tuple(int(v) for v in X if int(v) not in x1))
    cols = (tuple(sorted(y1)), tuple(int(v) for v in Y if int(v) not in y1))
    before = phi_block(A, X, Y, cfg)
    after = sum(phi_block(A, r, c, cfg) for r in rows for c in cols)
    need = eps**4 * p * q
    if after - before < need - tol * p * q:
        raise InvariantError(
            f"split gains {after - before:.6g} < eps^4|X||Y| = {need:.6g}; witness deviation {w.deviation:.6g}"
        )
    return GainSplit(rows, cols, before, after)
