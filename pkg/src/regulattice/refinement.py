"""One refinement iteration: split irregular blocks, refine, rebalance.

Every irregular block of moderate density is split in two along each axis
using a shrunk witness. Each class is then cut by the common refinement of
all splits that touch it, and the result is rebalanced into equal pieces
whose leftovers join the exceptional set.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, InvariantError, RebalanceError, ShrinkFailure, StepRefused
from .matrix import TOL, as_matrix, block_sums, total_mass
from .partitions import BlockPartition, Partition, common_refinement, rebalance
from .potential import PotentialConfig, phi_partition
from .regularity import (
    ORACLE_LIMIT,
    Status,
    block_rng,
    check_block,
    gain_split,
    shrink_witness,
)

__all__ = [
    "BlockCensus",
    "SplitRecord",
    "RefineOutcome",
    "worker_count",
    "classify_blocks",
    "is_regular",
    "refinement_step",
    "symmetric_refinement_step",
    "simultaneous_refinement_step",
]

# sub-stream tags for per-block generators
_SEARCH, _SHRINK = 0, 1


def worker_count() -> int:
    env = os.environ.get("REGULATTICE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class BlockCensus:
    """Verdicts and densities for every nonexceptional block of a partition."""

    verdicts: dict
    densities: np.ndarray
    eps: float

    @property
    def irregular(self) -> list:
        return [key for key, v in self.verdicts.items() if v.status is Status.IRREGULAR]

    @property
    def unknown(self) -> list:
        return [key for key, v in self.verdicts.items() if v.status is Status.UNKNOWN]

    @property
    def all_exact(self) -> bool:
        return all(v.method == "exact" for v in self.verdicts.values())

    def counts(self) -> dict:
        out = {s.value: 0 for s in Status}
        for v in self.verdicts.values():
            out[v.status.value] += 1
        return out


def classify_blocks(A, bp: BlockPartition, eps: float, *, oracle_limit: int = ORACLE_LIMIT,
                    budget: int = 64, seed: int = 0, stream: Sequence[int] = (),
                    tol: float = TOL, workers: int | None = None) -> BlockCensus:
    """Check every nonexceptional block; exact below the oracle limit.

    Each block gets its own generator derived from ``seed``, ``stream`` and the
    block coordinates, so results do not depend on the number of workers.
    """
    A = as_matrix(A)
    k, l = bp.shape
    rl = bp.rows.labels(A.m)
    cl = bp.cols.labels(A.n)
    dens = block_sums(A, rl, cl, k, l) / np.outer(bp.rows.sizes, bp.cols.sizes)
    jobs = list(bp.blocks())

    def run(job):
        i, j, X, Y = job
        exact = len(X) <= oracle_limit and len(Y) <= oracle_limit
        rng = None if exact else block_rng(seed, *stream, i, j, _SEARCH)
        return (i, j), check_block(A, X, Y, eps, oracle_limit=oracle_limit,
                                   budget=budget, rng=rng, tol=tol)

    workers = worker_count() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(job) for job in jobs]
    return BlockCensus(dict(results), dens, eps)


def is_regular(census: BlockCensus, bp: BlockPartition, shape: tuple[int, int]) -> bool:
    """Balanced, small exceptional sets, and at most ``eps k l`` witnessed irregular blocks."""
    m, n = shape
    eps = census.eps
    k, l = bp.shape
    return (
        bp.is_balanced
        and len(bp.rows.exceptional) < eps * m
        and len(bp.cols.exceptional) < eps * n
        and len(census.irregular) <= eps * k * l
    )


@dataclass(frozen=True)
class SplitRecord:
    """A block that was split, with the witness that drove it."""

    block: tuple[int, int]
    witness_source: str
    deviation: float
    gain: float
    transposed_gain: float | None = None


@dataclass(frozen=True)
class RefineOutcome:
    """Result and census of one refinement iteration."""

    partition: BlockPartition
    phi_before: float
    phi_after: float
    irregular_found: int
    irregular_low_density_split: int
    blocks_skipped_high_density: int
    witnesses_unknown: int
    shrink_failures: int
    quota: float
    gain_threshold: float
    chunks: tuple[int, int]
    chunk_clamped: bool
    size_hypothesis_met: bool
    exceptional_before: tuple[int, int]
    exceptional_after: tuple[int, int]
    class_counts_before: tuple[int, int]
    class_counts_after: tuple[int, int]
    splits: tuple = ()
    per_matrix: tuple = field(default=())

    @property
    def quota_met(self) -> bool:
        return self.irregular_low_density_split >= self.quota

    @property
    def gain(self) -> float:
        return self.phi_after - self.phi_before


def _chunk(size: int, k: int, exponent: int, clamp: bool) -> tuple[int, bool]:
    # exponents can be large; integer arithmetic avoids overflow
    c = size // (k * 4**exponent) if exponent < 4096 else 0
    if c >= 1:
        return c, False
    if not clamp:
        raise StepRefused(
            f"chunk size floor({size}/({k}*4^{exponent})) is 0: matrix too small for this accuracy"
        )
    return 1, True


def _check_hypotheses(A, bp, cfg, strict):
    m, n = A.shape
    if not bp.is_balanced:
        raise StepRefused("input block partition is not balanced")
    if bp.rows.ground != frozenset(range(m)) or bp.cols.ground != frozenset(range(n)):
        raise StepRefused("block partition does not cover the matrix")
    if not (len(bp.rows.exceptional) < m / 2 and len(bp.cols.exceptional) < n / 2):
        raise StepRefused("exceptional sets must hold fewer than half of each axis")
    k, l = bp.shape
    if k == 0 or l == 0:
        raise StepRefused("partition has no nonexceptional classes")
    if not cfg.dense and cfg.D < 8 / cfg.epsilon**2 * (1 - 1e-12):
        raise StepRefused(f"D = {cfg.D} is below 8/eps^2")
    size_ok = m >= k * 4 ** min(l + 1, 4096) and n >= l * 4 ** min(k + 1, 4096)
    if strict and not size_ok:
        raise StepRefused(f"need |V| >= k 4^(l+1) and |W| >= l 4^(k+1); got {m}x{n} with k={k}, l={l}")
    return size_ok


def _assert_high_density_bound(A, census, cfg, k, l, tol):
    """On a normalized matrix at most ``eps k l / 2`` blocks reach ``|d| >= eps D``."""
    if cfg.dense or cfg.D < 8 / cfg.epsilon**2 * (1 - 1e-12):
        return
    m, n = A.shape
    if abs(total_mass(A) - m * n) > 1e-9 * m * n:
        return
    heavy = int((np.abs(census.densities) >= cfg.epsilon * cfg.D - tol).sum())
    if heavy > cfg.epsilon * k * l / 2:
        raise InvariantError(f"{heavy} blocks have |d| >= eps*D, more than eps*k*l/2")


def _plan_splits(A, bp, cfg, census, seed, stream, tol, symmetric):
    """Choose two-part splits for irregular blocks.

    Returns ``(row_splits, col_splits, stats)`` where ``row_splits[i]`` lists
    partitions of row class ``i`` and ``col_splits[j]`` partitions of column
    class ``j``.
    """
    eps = cfg.epsilon
    k, l = bp.shape
    P, Q = bp.rows.classes, bp.cols.classes
    row_splits = [[] for _ in range(k)]
    col_splits = [[] for _ in range(l)]
    stats = {"skipped": 0, "unknown": 0, "shrink_failures": 0, "split": 0}
    records = []

    def try_split(i, j):
        v = census.verdicts[(i, j)]
        if v.status is not Status.IRREGULAR:
            return None
        if not cfg.dense and abs(census.densities[i, j]) >= eps * cfg.D:
            stats["skipped"] += 1
            return None
        rng = block_rng(seed, *stream, i, j, _SHRINK)
        try:
            w = shrink_witness(A, P[i], Q[j], v.witness, eps, rng, tol=tol)
        except ShrinkFailure:
            stats["shrink_failures"] += 1
            return None
        return w, gain_split(A, P[i], Q[j], w, cfg, tol)

    stats["unknown"] = len(census.unknown)
    if not symmetric:
        for i in range(k):
            for j in range(l):
                res = try_split(i, j)
                if res is None:
                    continue
                w, g = res
                row_splits[i].append(Partition(g.row_parts))
                col_splits[j].append(Partition(g.col_parts))
                stats["split"] += 1
                records.append(SplitRecord((i, j), w.source, w.deviation, g.gain))
        return row_splits, col_splits, stats, records

    for i in range(k):
        for j in range(i + 1, k):
            res = try_split(i, j)
            key = (i, j)
            if res is None:
                res = try_split(j, i)
                key = (j, i)
            if res is None:
                continue
            w, g = res
            a, b = key
            # the split of (a, b) serves (b, a) transposed
            row_splits[a].append(Partition(g.row_parts))
            row_splits[b].append(Partition(g.col_parts))
            other = _transposed_gain(A, g, cfg)
            stats["split"] += 1
            records.append(SplitRecord(key, w.source, w.deviation, g.gain, other))
    return row_splits, row_splits, stats, records


def _transposed_gain(A, g, cfg):
    from .potential import phi_block

    rows = g.col_parts[0] + g.col_parts[1]
    cols = g.row_parts[0] + g.row_parts[1]
    before = phi_block(A, rows, cols, cfg)
    after = sum(phi_block(A, r, c, cfg) for r in g.col_parts for c in g.row_parts)
    return after - before


def _refine_axis(part: Partition, splits) -> Partition:
    pieces = []
    for c, parts in zip(part.classes, splits):
        pieces.extend(common_refinement(parts).classes if parts else (c,))
    return Partition(tuple(pieces), part.exceptional)


def _rebalance(part: Partition, chunk: int) -> Partition:
    try:
        return rebalance(part, chunk)
    except RebalanceError as exc:
        raise StepRefused(str(exc)) from exc


def _finish(A, bp, new_bp, cfg, phi_before, phi_after, stats, records, quota, threshold,
            chunks, clamped, size_ok, census, exc_caps, count_caps, tol, per_matrix=()):
    m, n = A.shape
    scale = max(1.0, abs(phi_before))
    if phi_after < phi_before - tol * scale:
        raise InvariantError(f"potential decreased: {phi_before!r} -> {phi_after!r}")
    k2, l2 = new_bp.shape
    if k2 > count_caps[0] or l2 > count_caps[1]:
        raise InvariantError(f"class counts {k2}x{l2} exceed caps {count_caps}")
    e_before = (len(bp.rows.exceptional), len(bp.cols.exceptional))
    e_after = (len(new_bp.rows.exceptional), len(new_bp.cols.exceptional))
    if e_after[0] - e_before[0] > exc_caps[0] + 1e-9 or e_after[1] - e_before[1] > exc_caps[1] + 1e-9:
        raise InvariantError(f"exceptional growth {e_before} -> {e_after} exceeds {exc_caps}")
    if stats["split"] >= quota and phi_after - phi_before < threshold - tol * scale:
        raise InvariantError(
            f"full-quota step gained {phi_after - phi_before!r} < {threshold!r}"
        )
    return RefineOutcome(
        partition=new_bp,
        phi_before=phi_before,
        phi_after=phi_after,
        irregular_found=len(census.irregular),
        irregular_low_density_split=stats["split"],
        blocks_skipped_high_density=stats["skipped"],
        witnesses_unknown=stats["unknown"],
        shrink_failures=stats["shrink_failures"],
        quota=quota,
        gain_threshold=threshold,
        chunks=chunks,
        chunk_clamped=clamped,
        size_hypothesis_met=size_ok,
        exceptional_before=e_before,
        exceptional_after=e_after,
        class_counts_before=bp.shape,
        class_counts_after=new_bp.shape,
        splits=tuple(records),
        per_matrix=tuple(per_matrix),
    )


def refinement_step(A, bp: BlockPartition, cfg: PotentialConfig, *, seed: int = 0,
                    stream: Sequence[int] = (), census: BlockCensus | None = None,
                    oracle_limit: int = ORACLE_LIMIT, budget: int = 64,
                    strict: bool = False, clamp_chunk: bool = True,
                    tol: float = TOL) -> RefineOutcome:
    """Refine ``bp`` once, raising the potential when enough blocks are split.

    Parameters
    ----------
    A : RealMatrix
        Usually the normalized matrix.
    bp : BlockPartition
        Balanced, with exceptional sets below half of each axis.
    cfg : PotentialConfig
        ``D`` must be ``INFINITE`` or at least ``8 / eps**2``.
    strict : bool
        Refuse unless ``|V| >= k 4^(l+1)`` and ``|W| >= l 4^(k+1)``.
    clamp_chunk : bool
        When the rebalancing chunk ``floor(|V| / (k 4^l))`` is zero, use
        chunk 1 (all singletons) instead of refusing.

    Raises
    ------
    StepRefused
        If a hypothesis fails.
    """
    A = as_matrix(A)
    size_ok = _check_hypotheses(A, bp, cfg, strict)
    m, n = A.shape
    k, l = bp.shape
    eps = cfg.epsilon
    cr, clamp_r = _chunk(m, k, l, clamp_chunk)
    cc, clamp_c = _chunk(n, l, k, clamp_chunk)
    if census is None:
        census = classify_blocks(A, bp, eps, oracle_limit=oracle_limit, budget=budget,
                                 seed=seed, stream=stream, tol=tol)
    _assert_high_density_bound(A, census, cfg, k, l, tol)
    phi_before = phi_partition(A, bp, cfg)
    row_splits, col_splits, stats, records = _plan_splits(
        A, bp, cfg, census, seed, stream, tol, symmetric=False)
    new_rows = _rebalance(_refine_axis(bp.rows, row_splits), cr)
    new_cols = _rebalance(_refine_axis(bp.cols, col_splits), cc)
    new_bp = BlockPartition(new_rows, new_cols)
    phi_after = phi_partition(A, new_bp, cfg)
    return _finish(
        A, bp, new_bp, cfg, phi_before, phi_after, stats, records,
        quota=eps * k * l / 2, threshold=eps**5 * m * n / 8,
        chunks=(cr, cc), clamped=clamp_r or clamp_c, size_ok=size_ok, census=census,
        exc_caps=(m / 2**min(l, 4096), n / 2**min(k, 4096)),
        count_caps=(k * 4 ** min(l + 1, 4096), l * 4 ** min(k + 1, 4096)), tol=tol,
    )


def symmetric_refinement_step(A, bp: BlockPartition, cfg: PotentialConfig, *, seed: int = 0,
                              stream: Sequence[int] = (), census: BlockCensus | None = None,
                              oracle_limit: int = ORACLE_LIMIT, budget: int = 64,
                              strict: bool = False, clamp_chunk: bool = True,
                              tol: float = TOL) -> RefineOutcome:
    """Symmetric variant: diagonal blocks stay whole and ``(i, j)``, ``(j, i)`` share one split.

    The output satisfies ``P' == Q'``. With a full quota of ``eps k^2 / 8``
    guaranteed splits the potential rises by ``eps^5 n^2 / 32``.
    """
    A = as_matrix(A)
    if not A.is_square:
        raise DomainError("symmetric refinement needs a square matrix")
    if not bp.symmetric:
        raise DomainError("symmetric refinement needs a symmetric block partition")
    size_ok = _check_hypotheses(A, bp, cfg, strict)
    n = A.m
    k = bp.rows.class_count
    eps = cfg.epsilon
    chunk, clamped = _chunk(n, k, k, clamp_chunk)
    if census is None:
        census = classify_blocks(A, bp, eps, oracle_limit=oracle_limit, budget=budget,
                                 seed=seed, stream=stream, tol=tol)
    _assert_high_density_bound(A, census, cfg, k, k, tol)
    phi_before = phi_partition(A, bp, cfg)
    splits, _, stats, records = _plan_splits(A, bp, cfg, census, seed, stream, tol, symmetric=True)
    new_part = _rebalance(_refine_axis(bp.rows, splits), chunk)
    new_bp = BlockPartition.symmetric_from(new_part)
    phi_after = phi_partition(A, new_bp, cfg)
    return _finish(
        A, bp, new_bp, cfg, phi_before, phi_after, stats, records,
        quota=eps * k * k / 8, threshold=eps**5 * n * n / 32,
        chunks=(chunk, chunk), clamped=clamped, size_ok=size_ok, census=census,
        exc_caps=(n / 2**min(k, 4096),) * 2,
        count_caps=(k * 4 ** min(k + 1, 4096),) * 2, tol=tol,
    )


def simultaneous_refinement_step(As: Sequence, bp: BlockPartition, cfgs: Sequence[PotentialConfig],
                                 *, seed: int = 0, iteration: int = 0,
                                 censuses: Sequence[BlockCensus] | None = None,
                                 oracle_limit: int = ORACLE_LIMIT, budget: int = 64,
                                 clamp_chunk: bool = True, tol: float = TOL) -> RefineOutcome:
    """Split irregular blocks of every matrix in turn, then refine and rebalance once.

    With ``K`` matrices each class is cut into at most ``2^(K l)`` pieces, so
    the chunk becomes ``floor(|V| / (k 2^((K+1) l)))``; for ``K = 1`` this is
    the single-matrix chunk. Reported potentials are sums over matrices.
    """
    As = [as_matrix(A) for A in As]
    K = len(As)
    m, n = As[0].shape
    for A, cfg in zip(As, cfgs):
        _check_hypotheses(A, bp, cfg, strict=False)
    k, l = bp.shape
    eps = cfgs[0].epsilon
    size_ok = m >= k * 4 ** min(l + 1, 4096) and n >= l * 4 ** min(k + 1, 4096)
    cr, clamp_r = _chunk(m, k * 2**min((K - 1) * l, 8192), l, clamp_chunk)
    cc, clamp_c = _chunk(n, l * 2**min((K - 1) * k, 8192), k, clamp_chunk)
    row_splits = [[] for _ in range(k)]
    col_splits = [[] for _ in range(l)]
    per = []
    tot = {"skipped": 0, "unknown": 0, "shrink_failures": 0, "split": 0}
    all_records = []
    irregular = 0
    for t, (A, cfg) in enumerate(zip(As, cfgs)):
        stream = (iteration, t)
        census = censuses[t] if censuses is not None else classify_blocks(
            A, bp, eps, oracle_limit=oracle_limit, budget=budget, seed=seed, stream=stream, tol=tol)
        _assert_high_density_bound(A, census, cfg, k, l, tol)
        rs, cs, stats, records = _plan_splits(A, bp, cfg, census, seed, stream, tol, symmetric=False)
        for i in range(k):
            row_splits[i].extend(rs[i])
        for j in range(l):
            col_splits[j].extend(cs[j])
        for key in tot:
            tot[key] += stats[key]
        all_records.extend(records)
        irregular += len(census.irregular)
        per.append({"phi_before": phi_partition(A, bp, cfg), "split": stats["split"]})
    new_bp = BlockPartition(
        _rebalance(_refine_axis(bp.rows, row_splits), cr),
        _rebalance(_refine_axis(bp.cols, col_splits), cc),
    )
    quota = eps * k * l / 2
    threshold = eps**5 * m * n / 8
    for rec, A, cfg in zip(per, As, cfgs):
        rec["phi_after"] = phi_partition(A, new_bp, cfg)
        rec["quota_met"] = rec["split"] >= quota
        if rec["phi_after"] < rec["phi_before"] - tol * max(1.0, rec["phi_before"]):
            raise InvariantError("potential decreased for one of the matrices")
        if rec["quota_met"] and rec["phi_after"] - rec["phi_before"] < threshold - tol * max(1.0, rec["phi_before"]):
            raise InvariantError("full-quota matrix gained less than eps^5 mn / 8")
    e_before = (len(bp.rows.exceptional), len(bp.cols.exceptional))
    e_after = (len(new_bp.rows.exceptional), len(new_bp.cols.exceptional))
    if e_after[0] - e_before[0] > m / 2**min(l, 4096) + 1e-9 or e_after[1] - e_before[1] > n / 2**min(k, 4096) + 1e-9:
        raise InvariantError("exceptional growth exceeds its bound")
    return RefineOutcome(
        partition=new_bp,
        phi_before=float(sum(r["phi_before"] for r in per)),
        phi_after=float(sum(r["phi_after"] for r in per)),
        irregular_found=irregular,
        irregular_low_density_split=max(r["split"] for r in per),
        blocks_skipped_high_density=tot["skipped"],
        witnesses_unknown=tot["unknown"],
        shrink_failures=tot["shrink_failures"],
        quota=quota,
        gain_threshold=threshold,
        chunks=(cr, cc),
        chunk_clamped=clamp_r or clamp_c,
        size_hypothesis_met=size_ok,
        exceptional_before=e_before,
        exceptional_after=e_after,
        class_counts_before=bp.shape,
        class_counts_after=new_bp.shape,
        splits=tuple(all_records),
        per_matrix=tuple(per),
    )
