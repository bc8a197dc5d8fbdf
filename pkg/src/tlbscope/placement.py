"""Pin each resource group to one reach-sized chunk of memory.

Memory is cut into ``k = ceil(memory / reach)`` near-equal page-aligned
chunks, and groups are dealt onto chunks heaviest-first so every chunk carries
about the same bandwidth.  Since a group then only ever touches its own chunk,
its TLB never misses, whatever the total memory size.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping

from .model import AccessPlan, MachineConfig, Window
from .simulate import union_pages
from .units import MiB


class InsufficientGroupsError(ValueError):
    pass


@dataclass(frozen=True)
class PlacementPlan:
    chunks: tuple[Window, ...]
    assignment: Mapping[int, int]

    def chunk_of(self, group: int) -> Window:
        return self.chunks[self.assignment[group]]

    def groups_in(self, chunk: int) -> list[int]:
        return sorted(g for g, c in self.assignment.items() if c == chunk)

    def to_json(self) -> str:
        doc = {
            "chunks": [{"offset": w.offset, "length": w.length} for w in self.chunks],
            "assignment": {str(g): self.assignment[g] for g in sorted(self.assignment)},
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "PlacementPlan":
        doc = json.loads(text)
        if set(doc) != {"chunks", "assignment"}:
            raise ValueError("placement JSON needs exactly 'chunks' and 'assignment'")
        chunks = tuple(Window(int(c["offset"]), int(c["length"])) for c in doc["chunks"])
        assignment = {int(g): int(c) for g, c in doc["assignment"].items()}
        return cls(chunks, assignment)


def group_members(groups) -> dict[int, list[int]]:
    """Normalise a Topology, ``{id: members}`` mapping or list of member lists."""
    groups = getattr(groups, "groups", groups)
    if isinstance(groups, Mapping):
        return {int(g): sorted(m) for g, m in groups.items()}
    return {i: sorted(m) for i, m in enumerate(groups)}


def split_chunks(memory_size: int, count: int, page_size: int) -> list[Window]:
    """``count`` page-aligned chunks covering ``[0, memory_size)``.

    Leftover pages go one each to the leading chunks, so chunk lengths differ
    by at most one page.
    """
    pages = memory_size // page_size
    q, r = divmod(pages, count)
    if q == 0:
        raise ValueError(f"{memory_size} bytes is too small for {count} chunks")
    out, offset = [], 0
    for i in range(count):
        length = (q + (i < r)) * page_size
        out.append(Window(offset, length))
        offset += length
    return out


def plan(groups, memory_size: int, tlb_reach: int, group_weights=None, *,
         page_size: int = 2 * MiB, min_chunks: int = 1) -> PlacementPlan:
    """Chunk memory and assign groups by greedy descending-weight balancing.

    ``group_weights`` defaults to group sizes (SM counts).  Ties go to the
    lower chunk index; equal weights are taken in group-id order.
    """
    members = group_members(groups)
    if not members:
        raise ValueError("need at least one group")
    for name, value in (("memory_size", memory_size), ("tlb_reach", tlb_reach)):
        if value <= 0 or value % page_size:
            raise ValueError(f"{name} must be a positive multiple of page_size")
    k = max(min_chunks, math.ceil(memory_size / tlb_reach))
    if k > len(members):
        raise InsufficientGroupsError(
            f"insufficient groups to cover chunks ({len(members)} groups, {k} chunks)")
    chunks = split_chunks(memory_size, k, page_size)

    if group_weights is None:
        weights = {g: float(len(m)) for g, m in members.items()}
    else:
        weights = {g: float(group_weights[g]) for g in members}
    load = [0.0] * k
    assignment = {}
    for g in sorted(members, key=lambda g: (-weights[g], g)):
        c = min(range(k), key=lambda i: (load[i], i))
        assignment[g] = c
        load[c] += weights[g]
    return PlacementPlan(tuple(chunks), dict(sorted(assignment.items())))


def to_access_plan(placement: PlacementPlan, config: MachineConfig, groups=None) -> AccessPlan:
    """Every SM active, windowed on its group's chunk.

    ``groups`` (e.g. a recovered Topology) names the SMs of each placement
    group; by default the config's ground-truth groups are used.
    """
    members = group_members(groups) if groups is not None else dict(zip(config.group_ids, config.groups))
    windows = {}
    for g, chunk in placement.assignment.items():
        if g not in members:
            raise KeyError(f"group {g} in placement is unknown to the config")
        for sm in members[g]:
            windows[sm] = placement.chunks[chunk]
    return AccessPlan(windows, frozenset(range(config.sm_count)))


def verify(placement: PlacementPlan, config: MachineConfig, groups=None) -> list[str]:
    """All violated placement invariants for ``config``; empty when sound."""
    v = []
    members = group_members(groups) if groups is not None else dict(zip(config.group_ids, config.groups))
    chunks = sorted(enumerate(placement.chunks), key=lambda ic: ic[1].offset)
    pos = 0
    for i, w in chunks:
        for p in w.problems(config.page_size, config.memory_size):
            v.append(f"chunk {i}: {p}")
        if w.length > config.tlb_reach:
            v.append(f"chunk {i}: length {w.length} exceeds TLB reach {config.tlb_reach}")
        if w.offset < pos:
            v.append(f"chunk {i}: overlaps previous chunk")
        elif w.offset > pos:
            v.append(f"gap in coverage at [{pos}, {w.offset})")
        pos = max(pos, w.end)
    if pos < config.memory_size:
        v.append(f"gap in coverage at [{pos}, {config.memory_size})")

    for g in sorted(members):
        if g not in placement.assignment:
            v.append(f"unassigned group {g}")
    for g, c in sorted(placement.assignment.items()):
        if g not in members:
            v.append(f"assignment names unknown group {g}")
        if not 0 <= c < len(placement.chunks):
            v.append(f"group {g}: chunk index {c} out of range")
    if len(members) >= len(placement.chunks):
        used = set(placement.assignment.values())
        for i in range(len(placement.chunks)):
            if i not in used:
                v.append(f"chunk {i} has no group")
    if v:
        return v

    # Route through the real access plan so the TLB check sees what the simulator sees.
    access = to_access_plan(placement, config, groups)
    for g in config.group_ids:
        union = union_pages(access, g, config) * config.page_size
        if union > config.tlb_reach:
            v.append(f"group {g}: union {union} exceeds TLB reach {config.tlb_reach}")
    return v
