"""CSV readers/writers.  Throughput is written in GB/s with six decimals."""

from __future__ import annotations

import csv
import io

import numpy as np

from .units import GB


def fmt(x) -> str:
    return f"{x:.6f}"


def sweep_csv(curve) -> str:
    lines = ["size_bytes,total_gbps"]
    lines += [f"{size},{fmt(total / GB)}" for size, total in curve.points]
    return "\n".join(lines) + "\n"


def read_sweep_csv(text: str) -> list[tuple[int, float]]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["size_bytes", "total_gbps"]:
        raise ValueError("not a sweep CSV")
    return [(int(s), float(t)) for s, t in rows[1:]]


def matrix_csv(values, labels=None) -> str:
    """Square matrix with a header row and a label column."""
    m = np.asarray(values, dtype=float)
    n = m.shape[0]
    if m.shape != (n, n):
        raise ValueError(f"matrix must be square, got {m.shape}")
    labels = list(range(n)) if labels is None else list(labels)
    out = ["sm," + ",".join(str(x) for x in labels)]
    for lab, row in zip(labels, m):
        out.append(f"{lab}," + ",".join(fmt(x) for x in row))
    return "\n".join(out) + "\n"


def read_matrix_csv(text: str) -> tuple[list[int], np.ndarray]:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows or rows[0][0] != "sm":
        raise ValueError("matrix CSV must start with an 'sm' header row")
    try:
        labels = [int(x) for x in rows[0][1:]]
        n = len(labels)
        if len(rows) != n + 1:
            raise ValueError(f"expected {n} data rows, found {len(rows) - 1}")
        values = np.empty((n, n))
        for r, row in enumerate(rows[1:]):
            if len(row) != n + 1 or int(row[0]) != labels[r]:
                raise ValueError(f"row {r + 1} malformed")
            values[r] = [float(x) for x in row[1:]]
    except ValueError as e:
        raise ValueError(f"malformed matrix CSV: {e}") from None
    return labels, values


def solo_csv(solo) -> str:
    lines = ["sm,gbps"] + [f"{i},{fmt(x)}" for i, x in enumerate(solo)]
    return "\n".join(lines) + "\n"


def read_solo_csv(text: str) -> np.ndarray:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows or rows[0] != ["sm", "gbps"]:
        raise ValueError("solo CSV must have header 'sm,gbps'")
    try:
        pairs = sorted((int(i), float(x)) for i, x in rows[1:])
    except ValueError as e:
        raise ValueError(f"malformed solo CSV: {e}") from None
    if [i for i, _ in pairs] != list(range(len(pairs))):
        raise ValueError("solo CSV must list SMs 0..n-1 exactly once")
    return np.array([x for _, x in pairs])


def in_label_order(labels, values) -> np.ndarray:
    """Rearrange a labelled matrix so row/column ``i`` is SM ``i``."""
    if sorted(labels) != list(range(len(labels))):
        raise ValueError("matrix labels are not a permutation of 0..n-1")
    pos = np.argsort(labels)
    return np.asarray(values)[np.ix_(pos, pos)]
