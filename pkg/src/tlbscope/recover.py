"""Recover TPC pairs and resource groups from pair-throughput measurements.

Two SMs are taken to share a resource when running them together is
measurably slower than the sum of running each alone.  Groups are the
connected components of that relation; within a group, each SM's TPC partner
is the SM it runs slowest with.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .experiments import ProbeData


class RecoveryError(Exception):
    """The probe data does not support a topology."""


class NoSignalError(RecoveryError):
    pass


class AmbiguousTopologyError(RecoveryError):
    pass


@dataclass(frozen=True)
class Grouping:
    """Recovered groups (sorted members, ordered by smallest member)."""

    groups: list[list[int]]
    # Fraction of same-component SM pairs with no sharing edge between them.
    clique_deficiency: float

    def sizes(self) -> Counter:
        return Counter(len(g) for g in self.groups)


@dataclass(frozen=True)
class Topology:
    groups: list[list[int]]
    tpcs: list[tuple[int, int]]
    # permutation[sm] is the display position of SM ``sm``.
    permutation: list[int]

    @property
    def sm_count(self) -> int:
        return len(self.permutation)

    @property
    def order(self) -> list[int]:
        """SMs in display order (inverse of ``permutation``)."""
        out = [0] * len(self.permutation)
        for sm, pos in enumerate(self.permutation):
            out[pos] = sm
        return out

    def to_json(self) -> str:
        doc = {
            "groups": [list(g) for g in self.groups],
            "tpcs": [list(t) for t in self.tpcs],
            "permutation": list(self.permutation),
        }
        return json.dumps(doc) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Topology":
        doc = json.loads(text)
        if set(doc) != {"groups", "tpcs", "permutation"}:
            raise ValueError("topology JSON needs exactly 'groups', 'tpcs' and 'permutation'")
        topo = cls([[int(s) for s in g] for g in doc["groups"]],
                   [(int(a), int(b)) for a, b in doc["tpcs"]],
                   [int(p) for p in doc["permutation"]])
        if sorted(topo.permutation) != list(range(len(topo.permutation))):
            raise ValueError("permutation is not a bijection")
        return topo


def sharing_edges(probe: ProbeData, delta: float = 0.05) -> np.ndarray:
    """Boolean SM x SM adjacency: pair throughput at least ``delta`` below the solo sum."""
    solo = np.asarray(probe.solo, dtype=float)
    pairs = np.asarray(probe.pairs, dtype=float)
    edges = pairs <= (1.0 - delta) * (solo[:, None] + solo[None, :])
    np.fill_diagonal(edges, False)
    return edges


def recover_groups(probe: ProbeData, delta: float = 0.05) -> Grouping:
    """Connected components of the sharing graph.

    Raises :class:`NoSignalError` when no pair shows any slowdown at all.
    """
    n = probe.sm_count
    if n < 2:
        raise ValueError("need at least two SMs")
    bad = probe.problems()
    if bad:
        raise ValueError("malformed probe: " + "; ".join(bad))
    edges = sharing_edges(probe, delta)
    if not edges.any():
        raise NoSignalError("no shared-resource signal: no SM pair runs slower than its solo sum")
    _, labels = connected_components(csr_matrix(edges), directed=False)
    comps: dict[int, list[int]] = {}
    for sm, lab in enumerate(labels):
        comps.setdefault(int(lab), []).append(sm)
    groups = sorted(comps.values(), key=lambda g: g[0])

    possible = missing = 0
    for g in groups:
        sub = edges[np.ix_(g, g)]
        k = len(g)
        possible += k * (k - 1) // 2
        missing += k * (k - 1) // 2 - int(np.triu(sub, 1).sum())
    return Grouping(groups, missing / possible if possible else 0.0)


def recover_tpcs(probe: ProbeData, groups) -> list[tuple[int, int]]:
    """Pair each SM with its slowest same-group partner; pairs must be mutual.

    Ties go to the smallest index.  Raises :class:`AmbiguousTopologyError`
    naming the SMs whose choices are not mutual.
    """
    groups = getattr(groups, "groups", groups)
    pairs = np.asarray(probe.pairs, dtype=float)
    partner = {}
    for g in groups:
        g = sorted(g)
        if len(g) < 2:
            raise AmbiguousTopologyError(f"ambiguous TPC structure: SM {g[0]} has no possible partner")
        for i in g:
            others = [j for j in g if j != i]
            partner[i] = min(others, key=lambda j: (pairs[i, j], j))
    broken = sorted(i for i, j in partner.items() if partner[j] != i)
    if broken:
        detail = ", ".join(f"{i}->{partner[i]}" for i in broken)
        raise AmbiguousTopologyError(f"ambiguous TPC structure: non-mutual partners {detail}")
    return sorted({(min(i, j), max(i, j)) for i, j in partner.items()})


def display_permutation(groups, tpcs) -> list[int]:
    """Display positions: groups by (size desc, smallest member), TPC partners adjacent."""
    partner = {}
    for a, b in tpcs:
        partner[a], partner[b] = b, a
    order = []
    for g in sorted(groups, key=lambda g: (-len(g), min(g))):
        for sm in sorted(g):
            if sm not in partner:
                order.append(sm)
            elif sm < partner[sm]:
                order += [sm, partner[sm]]
    perm = [0] * len(order)
    for pos, sm in enumerate(order):
        perm[sm] = pos
    return perm


def recover_topology(probe: ProbeData, delta: float = 0.05) -> tuple[Topology, Grouping]:
    """Groups, TPCs and display permutation in one call."""
    grouping = recover_groups(probe, delta)
    tpcs = recover_tpcs(probe, grouping.groups)
    topo = Topology(grouping.groups, tpcs, display_permutation(grouping.groups, tpcs))
    return topo, grouping


def reorder(matrix, topology: Topology) -> np.ndarray:
    """Conjugate ``matrix`` by the display permutation: ``out[p(i), p(j)] = m[i, j]``."""
    m = np.asarray(matrix)
    n = topology.sm_count
    if m.shape != (n, n):
        raise ValueError(f"matrix is {m.shape}, topology has {n} SMs")
    order = topology.order
    return m[np.ix_(order, order)]


def report(grouping: Grouping) -> str:
    sizes = sorted(grouping.sizes().items(), key=lambda kv: (-kv[0], kv[1]))
    size_text = ", ".join(f"{size}×{count}" for size, count in sizes)
    return (f"{len(grouping.groups)} groups; sizes {size_text}\n"
            f"clique deficiency {grouping.clique_deficiency:.6f}\n")
