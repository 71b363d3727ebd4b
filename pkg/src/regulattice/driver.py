"""Top-level algorithms: regular partitions of matrices, square matrices, graphs, and matrix families.

Each run normalizes its input to mean entry modulus 1, starts from a balanced
partition into contiguous classes, and applies refinement steps until the
partition is epsilon-regular or an iteration cap is reached. The potential
can only grow, is bounded by ``4 D ||A||``, and grows by a fixed amount on
every full-quota step, which bounds the number of iterations.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DomainError, InvariantError, SizeError
from .matrix import TOL, RealMatrix, as_matrix, normalize, total_mass
from .partitions import BlockPartition, Partition, equal_partition
from .potential import PotentialConfig, phi_partition
from .refinement import (
    BlockCensus,
    RefineOutcome,
    classify_blocks,
    is_regular,
    refinement_step,
    simultaneous_refinement_step,
    symmetric_refinement_step,
)
from .regularity import ORACLE_LIMIT, Status

__all__ = [
    "RunStatus",
    "RunConfig",
    "RunResult",
    "GraphResult",
    "VerificationReport",
    "initial_class_count",
    "default_max_iterations",
    "regular_partition",
    "symmetric_regular_partition",
    "graph_regular_partition",
    "simultaneous_partition",
    "verify_partition",
    "adjacency_from_edges",
    "run",
]


class RunStatus(str, enum.Enum):
    CERTIFIED_REGULAR = "CertifiedRegular"
    HEURISTICALLY_REGULAR = "HeuristicallyRegular"
    QUOTA_SHORTFALL = "QuotaShortfall"
    ITERATION_CAP = "IterationCap"

    @property
    def success(self) -> bool:
        return self in (RunStatus.CERTIFIED_REGULAR, RunStatus.HEURISTICALLY_REGULAR)


MODES = ("general", "symmetric", "graph", "multi")

# stream tags kept apart from iteration numbers
_PAIRS_STREAM = 2**31 - 2
_VERIFY_STREAM = 2**31 - 1


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one run.

    ``min_classes`` is the lower bound L on the number of classes.
    ``clamp_chunk`` lets a step fall back to singleton pieces when the
    rebalancing chunk rounds down to zero; with it off such steps are refused.
    ``strict`` additionally refuses steps whose axis sizes are below the
    ``k 4^(l+1)`` hypothesis.
    """

    epsilon: float
    min_classes: int = 1
    max_iterations: int | None = None
    oracle_limit: int = ORACLE_LIMIT
    witness_budget: int = 64
    master_seed: int = 0
    mode: str = "general"
    dense_mode: bool = False
    clamp_chunk: bool = True
    strict: bool = False

    def __post_init__(self):
        if not 0 < self.epsilon <= 0.5:
            raise DomainError("epsilon must lie in (0, 1/2]")
        if self.min_classes < 1:
            raise DomainError("min_classes must be positive")
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}")
        if self.witness_budget < 1 or self.oracle_limit < 1:
            raise DomainError("witness_budget and oracle_limit must be positive")

    def potential(self) -> PotentialConfig:
        return PotentialConfig.for_epsilon(self.epsilon, self.dense_mode)


@dataclass
class RunResult:
    partition: BlockPartition
    iterations: list
    status: RunStatus
    final_phi: float
    exceptional_fractions: tuple[float, float]
    census: BlockCensus | None = None
    config: RunConfig | None = None
    max_iterations: int = 0
    note: str = ""
    final_phis: tuple = ()

    @property
    def phi_trajectory(self) -> list:
        if not self.iterations:
            return [self.final_phi]
        return [self.iterations[0].phi_before] + [o.phi_after for o in self.iterations]


def initial_class_count(epsilon: float, min_classes: int, symmetric: bool = False) -> int:
    """``max(L, ceil(log2(1/eps)) + 2)``, or ``ceil(4 L / eps)`` for symmetric runs."""
    if symmetric:
        return math.ceil(4 * min_classes / epsilon - 1e-9)
    return max(min_classes, math.ceil(math.log2(1 / epsilon) - 1e-12) + 2)


def default_max_iterations(epsilon: float, mode: str = "general", count: int = 1) -> int:
    """Iteration bound: ``256/eps^7`` (general), ``1024/eps^7`` (symmetric, graph)."""
    per = 1024 if mode in ("symmetric", "graph") else 256
    return count * math.ceil(per / epsilon**7 - 1e-9)


def _initial(m: int, n: int, c: int, symmetric: bool) -> BlockPartition:
    if m < c or n < c:
        raise SizeError(f"a {m}x{n} matrix cannot hold {c} classes per axis")
    rows = equal_partition(m, c)
    if symmetric:
        return BlockPartition.symmetric_from(rows)
    return BlockPartition(rows, equal_partition(n, c))


def _fractions(bp: BlockPartition, shape) -> tuple[float, float]:
    return len(bp.rows.exceptional) / shape[0], len(bp.cols.exceptional) / shape[1]


def _classify(A, bp, cfg: RunConfig, stream, eps=None):
    return classify_blocks(A, bp, cfg.epsilon if eps is None else eps,
                           oracle_limit=cfg.oracle_limit, budget=cfg.witness_budget,
                           seed=cfg.master_seed, stream=stream)


def _regular_status(census: BlockCensus) -> RunStatus:
    return RunStatus.CERTIFIED_REGULAR if census.all_exact else RunStatus.HEURISTICALLY_REGULAR


def _zero_result(shape, bp, cfg, cap) -> RunResult:
    return RunResult(bp, [], RunStatus.CERTIFIED_REGULAR, 0.0, _fractions(bp, shape),
                     None, cfg, cap, note="zero matrix: every block is constant")


def _iterate(A: RealMatrix, bp: BlockPartition, pcfg: PotentialConfig, cfg: RunConfig,
             cap: int, step) -> RunResult:
    outcomes: list[RefineOutcome] = []
    note = ""
    it = 0
    while True:
        census = _classify(A, bp, cfg, (it, 0))
        if is_regular(census, bp, A.shape):
            status = _regular_status(census)
            break
        if it >= cap:
            status = RunStatus.ITERATION_CAP
            break
        out = step(A, bp, pcfg, seed=cfg.master_seed, stream=(it, 0), census=census,
                   oracle_limit=cfg.oracle_limit, budget=cfg.witness_budget,
                   strict=cfg.strict, clamp_chunk=cfg.clamp_chunk)
        if out.irregular_low_density_split == 0:
            status = RunStatus.QUOTA_SHORTFALL
            note = (f"no usable witness among {out.irregular_found} irregular blocks "
                    f"({out.witnesses_unknown} unknown, {out.shrink_failures} shrink failures)")
            break
        if outcomes and out.phi_before < outcomes[-1].phi_after - TOL * max(1.0, out.phi_before):
            raise InvariantError("potential trajectory decreased between iterations")
        outcomes.append(out)
        bp = out.partition
        it += 1
    phi = phi_partition(A, bp, pcfg)
    fr = _fractions(bp, A.shape)
    if status.success and not (fr[0] < cfg.epsilon and fr[1] < cfg.epsilon):
        raise InvariantError(f"regular partition with exceptional fractions {fr}")
    return RunResult(bp, outcomes, status, phi, fr, census, cfg, cap, note)


def regular_partition(A, cfg: RunConfig) -> RunResult:
    """Epsilon-regular block partition of the normalized matrix.

    Starts from ``max(L, ceil(log2(1/eps)) + 2)`` contiguous classes per axis
    and uses ``D = 8/eps^2`` unless ``dense_mode`` is set.

    Raises
    ------
    SizeError
        If an axis is shorter than the initial class count.
    """
    A = as_matrix(A)
    c = initial_class_count(cfg.epsilon, cfg.min_classes)
    bp = _initial(A.m, A.n, c, symmetric=False)
    cap = cfg.max_iterations if cfg.max_iterations is not None else default_max_iterations(cfg.epsilon)
    if total_mass(A) == 0:
        return _zero_result(A.shape, bp, cfg, cap)
    return _iterate(normalize(A), bp, cfg.potential(), cfg, cap, refinement_step)


def symmetric_regular_partition(A, cfg: RunConfig) -> RunResult:
    """Symmetric regular partition ``(P, P)`` of a square matrix.

    Starts from ``ceil(4 L / eps)`` classes so that diagonal blocks make up at
    most an ``eps / 4`` share of all blocks.
    """
    A = as_matrix(A)
    if not A.is_square:
        raise DomainError("symmetric partition needs a square matrix")
    c = initial_class_count(cfg.epsilon, cfg.min_classes, symmetric=True)
    bp = _initial(A.m, A.n, c, symmetric=True)
    cap = (cfg.max_iterations if cfg.max_iterations is not None
           else default_max_iterations(cfg.epsilon, "symmetric"))
    if total_mass(A) == 0:
        return _zero_result(A.shape, bp, cfg, cap)
    result = _iterate(normalize(A), bp, cfg.potential(), cfg, cap, symmetric_refinement_step)
    for out in result.iterations:
        if out.partition.rows != out.partition.cols:
            raise InvariantError("symmetric run produced an asymmetric partition")
    return result


@dataclass
class GraphResult:
    """Vertex partition of a graph with verdicts for the pairs ``(V_i, V_j)``, ``i > j``."""

    run: RunResult
    vertex_partition: Partition
    pair_verdicts: dict = field(default_factory=dict)
    epsilon: float = 0.0

    @property
    def irregular_pairs(self) -> int:
        return sum(1 for v in self.pair_verdicts.values() if v is Status.IRREGULAR)

    @property
    def is_regular(self) -> bool:
        k = self.vertex_partition.class_count
        n = self.vertex_partition.size
        return (
            self.vertex_partition.is_balanced
            and len(self.vertex_partition.exceptional) < self.epsilon * n
            and self.irregular_pairs <= self.epsilon * k * k
        )


def adjacency_from_edges(n: int, edges, weights=None) -> RealMatrix:
    """Symmetric weighted adjacency matrix on ``range(n)``; self-loops are rejected."""
    A = np.zeros((n, n))
    for t, (u, v) in enumerate(edges):
        if u == v:
            raise DomainError(f"self-loop at vertex {u}")
        w = 1.0 if weights is None else float(weights[t])
        A[u, v] += w
        A[v, u] += w
    return RealMatrix(A)


def graph_regular_partition(G, cfg: RunConfig) -> GraphResult:
    """Regular vertex partition of a (weighted) graph given by its adjacency matrix.

    The symmetric matrix algorithm runs at ``eps / 2`` to absorb the diagonal
    blocks, which have no counterpart among vertex pairs.
    """
    A = as_matrix(G)
    if not A.is_square:
        raise DomainError("adjacency matrix must be square")
    if not np.array_equal(A.values, A.values.T):
        raise DomainError("adjacency matrix must be symmetric")
    if np.any(np.diag(A.values) != 0):
        raise DomainError("graph has self-loops")
    inner = replace(cfg, epsilon=cfg.epsilon / 2, mode="symmetric")
    res = symmetric_regular_partition(A, inner)
    part = res.partition.rows
    if total_mass(A) == 0:
        return GraphResult(res, part, {}, cfg.epsilon)
    census = _classify(normalize(A), res.partition, cfg, (_PAIRS_STREAM,), eps=cfg.epsilon)
    verdicts = {(i, j): census.verdicts[(i, j)].status
                for i in range(part.class_count) for j in range(i)}
    return GraphResult(res, part, verdicts, cfg.epsilon)


def simultaneous_partition(As: Sequence, cfg: RunConfig) -> RunResult:
    """One block partition that is regular for every matrix in ``As``.

    Zero matrices are dropped and identical normalized matrices are merged,
    since neither changes which partitions are regular. The iteration cap is
    ``k`` times the single-matrix cap.
    """
    if not As:
        raise DomainError("need at least one matrix")
    mats = [as_matrix(A) for A in As]
    shape = mats[0].shape
    if any(M.shape != shape for M in mats):
        raise DomainError("all matrices must have the same shape")
    c = initial_class_count(cfg.epsilon, cfg.min_classes)
    bp = _initial(*shape, c, symmetric=False)
    cap = (cfg.max_iterations if cfg.max_iterations is not None
           else default_max_iterations(cfg.epsilon, count=len(mats)))
    normed = []
    for M in mats:
        if total_mass(M) == 0:
            continue
        N = normalize(M)
        if N not in normed:
            normed.append(N)
    if not normed:
        return _zero_result(shape, bp, cfg, cap)
    pcfg = cfg.potential()
    cfgs = [pcfg] * len(normed)
    outcomes = []
    note = ""
    it = 0
    while True:
        censuses = [_classify(N, bp, cfg, (it, t)) for t, N in enumerate(normed)]
        if all(is_regular(cs, bp, shape) for cs in censuses):
            status = (RunStatus.CERTIFIED_REGULAR if all(cs.all_exact for cs in censuses)
                      else RunStatus.HEURISTICALLY_REGULAR)
            break
        if it >= cap:
            status = RunStatus.ITERATION_CAP
            break
        out = simultaneous_refinement_step(
            normed, bp, cfgs, seed=cfg.master_seed, iteration=it, censuses=censuses,
            oracle_limit=cfg.oracle_limit, budget=cfg.witness_budget, clamp_chunk=cfg.clamp_chunk)
        if sum(p["split"] for p in out.per_matrix) == 0:
            status = RunStatus.QUOTA_SHORTFALL
            note = "no usable witness in any matrix"
            break
        outcomes.append(out)
        bp = out.partition
        it += 1
    phis = tuple(phi_partition(N, bp, pcfg) for N in normed)
    fr = _fractions(bp, shape)
    return RunResult(bp, outcomes, status, float(sum(phis)), fr, censuses[0], cfg, cap, note, phis)


def run(A, cfg: RunConfig):
    """Dispatch on ``cfg.mode``; ``A`` is a list of matrices in ``multi`` mode."""
    if cfg.mode == "general":
        return regular_partition(A, cfg)
    if cfg.mode == "symmetric":
        return symmetric_regular_partition(A, cfg)
    if cfg.mode == "graph":
        return graph_regular_partition(A, cfg)
    return simultaneous_partition(A, cfg)


@dataclass(frozen=True)
class VerificationReport:
    balanced: bool
    exceptional_ok: bool
    blocks: int
    regular_exact: int
    irregular: int
    unknown: int
    allowed_irregular: float
    certified: bool

    @property
    def fraction_ok(self) -> bool:
        return self.irregular <= self.allowed_irregular

    @property
    def passed(self) -> bool:
        return self.balanced and self.exceptional_ok and self.fraction_ok


def verify_partition(A, bp: BlockPartition, eps: float, cfg: RunConfig | None = None,
                     *, normalized: bool = False) -> VerificationReport:
    """Check the definition of an epsilon-regular block partition directly.

    ``A`` is normalized first unless ``normalized`` is set. ``certified`` means
    every block was decided by the exact oracle.
    """
    A = as_matrix(A)
    cfg = cfg or RunConfig(epsilon=min(eps, 0.5))
    if not normalized and total_mass(A) > 0:
        A = normalize(A)
    m, n = A.shape
    census = classify_blocks(A, bp, eps, oracle_limit=cfg.oracle_limit, budget=cfg.witness_budget,
                             seed=cfg.master_seed, stream=(_VERIFY_STREAM,))
    counts = census.counts()
    k, l = bp.shape
    return VerificationReport(
        balanced=bp.is_balanced,
        exceptional_ok=len(bp.rows.exceptional) < eps * m and len(bp.cols.exceptional) < eps * n,
        blocks=k * l,
        regular_exact=counts["regular"],
        irregular=counts["irregular"],
        unknown=counts["unknown"],
        allowed_irregular=eps * k * l,
        certified=census.all_exact,
    )
