"""Matrix ingestion and machine-readable run reports.

File formats use 1-based indices; everything in memory is 0-based. The
conversion happens only here.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .errors import DomainError, ParseError
from .matrix import RealMatrix, block_sums, normalize, total_mass
from .partitions import BlockPartition, Partition

__all__ = [
    "FORMATS",
    "SCHEMA_VERSION",
    "load_matrix",
    "parse_matrix",
    "build_report",
    "dumps_report",
    "loads_report",
    "trajectory_csv",
]

FORMATS = ("csv-dense", "coordinate-triplet", "edge-list")
SCHEMA_VERSION = 1


def _lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith(("#", "%")):
            yield lineno, line


def _real(token: str, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"not a real number: {token!r}", lineno) from None
    if not np.isfinite(value):
        raise ParseError(f"non-finite value {token!r}", lineno)
    return value


def _index(token: str, upper: int | None, lineno: int) -> int:
    try:
        value = int(token)
    except ValueError:
        raise ParseError(f"not an integer index: {token!r}", lineno) from None
    if value < 1 or (upper is not None and value > upper):
        raise ParseError(f"index {value} out of range", lineno)
    return value - 1


def _parse_csv(text):
    rows = []
    width = None
    for lineno, line in _lines(text):
        cells = [_real(tok.strip(), lineno) for tok in line.split(",")]
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise ParseError(f"expected {width} values, found {len(cells)}", lineno)
        rows.append(cells)
    if not rows:
        raise ParseError("empty matrix")
    return RealMatrix(rows)


def _parse_coordinate(text):
    lines = _lines(text)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise ParseError("missing 'm n nnz' header") from None
    parts = header.split()
    if len(parts) != 3:
        raise ParseError("header must be 'm n nnz'", lineno)
    try:
        m, n, nnz = (int(p) for p in parts)
    except ValueError:
        raise ParseError("header must hold three integers", lineno) from None
    if m < 1 or n < 1 or nnz < 0:
        raise ParseError("invalid header dimensions", lineno)
    A = np.zeros((m, n))
    seen = set()
    count = 0
    for lineno, line in lines:
        parts = line.split()
        if len(parts) != 3:
            raise ParseError("expected 'i j value'", lineno)
        i, j = _index(parts[0], m, lineno), _index(parts[1], n, lineno)
        if (i, j) in seen:
            raise ParseError(f"duplicate coordinate ({i + 1}, {j + 1})", lineno)
        seen.add((i, j))
        A[i, j] = _real(parts[2], lineno)
        count += 1
    if count != nnz:
        raise ParseError(f"header announces {nnz} entries, found {count}")
    return RealMatrix(A)


def _parse_edges(text):
    edges = []
    seen = set()
    top = 0
    for lineno, line in _lines(text):
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ParseError("expected 'u v [w]'", lineno)
        u, v = _index(parts[0], None, lineno), _index(parts[1], None, lineno)
        if u == v:
            raise ParseError(f"self-loop at vertex {u + 1}", lineno)
        key = (min(u, v), max(u, v))
        if key in seen:
            raise ParseError(f"duplicate edge {u + 1} {v + 1}", lineno)
        seen.add(key)
        w = _real(parts[2], lineno) if len(parts) == 3 else 1.0
        edges.append((u, v, w))
        top = max(top, u + 1, v + 1)
    if not edges:
        raise ParseError("edge list is empty")
    A = np.zeros((top, top))
    for u, v, w in edges:
        A[u, v] = A[v, u] = w
    return RealMatrix(A)


def parse_matrix(text: str, fmt: str) -> tuple[RealMatrix, bool]:
    """Parse matrix text; the flag tells whether the input was a graph."""
    if fmt == "csv-dense":
        return _parse_csv(text), False
    if fmt == "coordinate-triplet":
        return _parse_coordinate(text), False
    if fmt == "edge-list":
        return _parse_edges(text), True
    raise DomainError(f"unknown format {fmt!r}; choose from {FORMATS}")


def load_matrix(path, fmt: str = "csv-dense") -> tuple[RealMatrix, bool]:
    return parse_matrix(Path(path).read_text(), fmt)


def _density_table(A: RealMatrix, bp: BlockPartition) -> list:
    k, l = bp.shape
    if total_mass(A) == 0:
        return np.zeros((k, l)).tolist()
    N = normalize(A)
    sums = block_sums(N, bp.rows.labels(N.m), bp.cols.labels(N.n), k, l)
    return (sums / np.outer(bp.rows.sizes, bp.cols.sizes)).tolist()


def _one_based(part: Partition) -> dict:
    return {
        "classes": [[x + 1 for x in c] for c in part.classes],
        "exceptional": [x + 1 for x in part.exceptional],
    }


def _iteration_record(t, out) -> dict:
    sources = Counter(rec.witness_source for rec in out.splits)
    devs = [rec.deviation for rec in out.splits]
    return {
        "iteration": t + 1,
        "phi_before": out.phi_before,
        "phi_after": out.phi_after,
        "class_counts": list(out.class_counts_after),
        "exceptional_sizes": list(out.exceptional_after),
        "irregular_found": out.irregular_found,
        "split": out.irregular_low_density_split,
        "skipped_high_density": out.blocks_skipped_high_density,
        "unknown": out.witnesses_unknown,
        "shrink_failures": out.shrink_failures,
        "quota": out.quota,
        "quota_met": out.quota_met,
        "gain_threshold": out.gain_threshold,
        "chunks": list(out.chunks),
        "chunk_clamped": out.chunk_clamped,
        "size_hypothesis_met": out.size_hypothesis_met,
        "witness_sources": dict(sorted(sources.items())),
        "witness_max_deviation": max(devs) if devs else None,
    }


def build_report(result, matrices, graph=None) -> dict:
    """JSON-ready summary of a run.

    ``result`` is a RunResult, ``matrices`` the input matrices (one per
    density table), and ``graph`` an optional GraphResult.
    """
    bp = result.partition
    census = result.census.counts() if result.census is not None else None
    report = {
        "schema_version": SCHEMA_VERSION,
        "config": asdict(result.config) if result.config is not None else None,
        "status": result.status.value,
        "note": result.note,
        "max_iterations": result.max_iterations,
        "final_phi": result.final_phi,
        "final_phis": list(result.final_phis),
        "exceptional_fractions": list(result.exceptional_fractions),
        "final_census": census,
        "iterations": [_iteration_record(t, out) for t, out in enumerate(result.iterations)],
        "partition": {
            "symmetric": bp.symmetric,
            "rows": _one_based(bp.rows),
            "cols": _one_based(bp.cols),
        },
        "density_tables": [_density_table(A, bp) for A in matrices],
    }
    if graph is not None:
        report["graph"] = {
            "epsilon": graph.epsilon,
            "vertex_partition": _one_based(graph.vertex_partition),
            "irregular_pairs": graph.irregular_pairs,
            "pairs": len(graph.pair_verdicts),
            "is_regular": graph.is_regular,
            "irregular_pair_list": sorted(
                [i + 1, j + 1] for (i, j), v in graph.pair_verdicts.items() if v.value == "irregular"
            ),
        }
    return report


def dumps_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def loads_report(text: str) -> dict:
    report = json.loads(text)
    if report.get("schema_version") != SCHEMA_VERSION:
        raise ParseError(f"unsupported report schema {report.get('schema_version')!r}")
    return report


def trajectory_csv(result) -> str:
    """One header line plus one line per refinement iteration."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["iteration", "phi", "classes_rows", "classes_cols",
                     "exceptional_rows", "exceptional_cols"])
    for t, out in enumerate(result.iterations, start=1):
        writer.writerow([t, repr(out.phi_after), *out.class_counts_after, *out.exceptional_after])
    return buf.getvalue()
