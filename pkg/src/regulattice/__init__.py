"""Constructive regularity partitions for real matrices and sparse graphs."""

from .driver import (
    GraphResult,
    RunConfig,
    RunResult,
    RunStatus,
    VerificationReport,
    adjacency_from_edges,
    graph_regular_partition,
    regular_partition,
    run,
    simultaneous_partition,
    symmetric_regular_partition,
    verify_partition,
)
from .errors import (
    DomainError,
    InvariantError,
    NormalizationError,
    OracleLimitError,
    ParseError,
    RebalanceError,
    RegulatticeError,
    ShrinkFailure,
    SizeError,
    StepRefused,
)
from .fileio import load_matrix, parse_matrix
from .matrix import RealMatrix, block_density, block_weight, normalize, total_mass
from .partitions import BlockPartition, Partition, common_refinement, equal_partition, rebalance
from .potential import INFINITE, PotentialConfig, phi_pair, phi_partition, phi_scalar
from .refinement import classify_blocks, refinement_step, simultaneous_refinement_step, \
    symmetric_refinement_step
from .regularity import Status, check_block, exact_check, gain_split, heuristic_witness_search, \
    shrink_witness

__version__ = "0.1.0"

__all__ = [
    "adjacency_from_edges",
    "block_density",
    "block_weight",
    "BlockPartition",
    "check_block",
    "classify_blocks",
    "common_refinement",
    "DomainError",
    "equal_partition",
    "exact_check",
    "gain_split",
    "graph_regular_partition",
    "GraphResult",
    "heuristic_witness_search",
    "INFINITE",
    "InvariantError",
    "load_matrix",
    "NormalizationError",
    "normalize",
    "OracleLimitError",
    "parse_matrix",
    "ParseError",
    "Partition",
    "phi_pair",
    "phi_partition",
    "phi_scalar",
    "PotentialConfig",
    "RealMatrix",
    "rebalance",
    "RebalanceError",
    "refinement_step",
    "regular_partition",
    "RegulatticeError",
    "run",
    "RunConfig",
    "RunResult",
    "RunStatus",
    "shrink_witness",
    "ShrinkFailure",
    "simultaneous_partition",
    "simultaneous_refinement_step",
    "SizeError",
    "Status",
    "StepRefused",
    "symmetric_refinement_step",
    "symmetric_regular_partition",
    "total_mass",
    "VerificationReport",
    "verify_partition",
]
