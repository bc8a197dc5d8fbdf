"""Machine description, memory windows and access plans.

A machine is a flat list of SMs.  Pairs of SMs form a TPC, and whole TPCs are
packed into resource groups.  Each group owns one TLB of fixed reach and one
bandwidth cap proportional to its SM count.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field, fields, replace
from functools import cached_property
from typing import Mapping

import numpy as np

from .prng import SplitMix64
from .units import GB, GiB, MiB, parse_size


@dataclass(frozen=True)
class MachineConfig:
    """Ground-truth layout plus calibration constants.

    Rates and caps are bytes/s.  ``device_cap=None`` means unbounded.
    ``tpc_of[i]`` and ``group_of[i]`` give the TPC and resource group of SM ``i``.
    """

    sm_count: int
    tpc_of: tuple[int, ...]
    group_of: tuple[int, ...]
    sm_rate: float
    tpc_cap: float
    group_cap_per_sm: float
    device_cap: float | None
    tlb_reach: int
    page_size: int
    memory_size: int
    miss_factor: float

    def __post_init__(self):
        object.__setattr__(self, "tpc_of", tuple(int(t) for t in self.tpc_of))
        object.__setattr__(self, "group_of", tuple(int(g) for g in self.group_of))

    @cached_property
    def tpc_count(self) -> int:
        return len(set(self.tpc_of))

    @cached_property
    def group_count(self) -> int:
        return len(set(self.group_of))

    @cached_property
    def group_ids(self) -> list[int]:
        return sorted(set(self.group_of))

    @cached_property
    def tpc_ids(self) -> list[int]:
        return sorted(set(self.tpc_of))

    def members(self, group: int) -> list[int]:
        return [sm for sm, g in enumerate(self.group_of) if g == group]

    @cached_property
    def groups(self) -> list[list[int]]:
        """Member lists, ordered by group id."""
        return [self.members(g) for g in self.group_ids]

    @cached_property
    def group_sizes(self) -> dict[int, int]:
        return dict(sorted(Counter(self.group_of).items()))

    def group_cap(self, group: int) -> float:
        return self.group_cap_per_sm * self.group_sizes[group]

    def to_dict(self) -> dict:
        return {f.name: (list(getattr(self, f.name)) if f.name in ("tpc_of", "group_of")
                         else getattr(self, f.name)) for f in fields(self)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: Mapping) -> "MachineConfig":
        names = [f.name for f in fields(cls)]
        unknown = sorted(set(data) - set(names))
        if unknown:
            raise ValueError(f"unknown config fields: {', '.join(unknown)}")
        missing = [n for n in names if n not in data]
        if missing:
            raise ValueError(f"missing config fields: {', '.join(missing)}")
        kw = dict(data)
        for name in ("tlb_reach", "page_size", "memory_size"):
            kw[name] = parse_size(kw[name])
        for name in ("sm_rate", "tpc_cap", "group_cap_per_sm", "miss_factor"):
            kw[name] = _number(name, kw[name])
        if kw["device_cap"] is not None:
            kw["device_cap"] = _number("device_cap", kw["device_cap"])
        if not isinstance(kw["sm_count"], int) or isinstance(kw["sm_count"], bool):
            raise ValueError("sm_count must be an integer")
        for name in ("tpc_of", "group_of"):
            if not isinstance(kw[name], list) or not all(
                    isinstance(v, int) and not isinstance(v, bool) for v in kw[name]):
                raise ValueError(f"{name} must be a list of integers")
        return cls(**kw)

    @classmethod
    def from_json(cls, text: str) -> "MachineConfig":
        return cls.from_dict(json.loads(text))

    # Dense index arrays used by the vectorised simulator.

    @cached_property
    def tpc_index(self) -> np.ndarray:
        """SM -> dense TPC position (0..tpc_count-1)."""
        pos = {t: i for i, t in enumerate(self.tpc_ids)}
        return np.array([pos[t] for t in self.tpc_of], dtype=np.intp)

    @cached_property
    def group_index(self) -> np.ndarray:
        """SM -> dense group position (0..group_count-1)."""
        pos = {g: i for i, g in enumerate(self.group_ids)}
        return np.array([pos[g] for g in self.group_of], dtype=np.intp)

    @cached_property
    def tpc_group_index(self) -> np.ndarray:
        """Dense TPC position -> dense group position."""
        out = np.zeros(self.tpc_count, dtype=np.intp)
        out[self.tpc_index] = self.group_index
        return out

    @cached_property
    def group_cap_array(self) -> np.ndarray:
        return np.array([self.group_cap(g) for g in self.group_ids], dtype=float)


def _number(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{name} must be a number")
    return float(value)


@dataclass(frozen=True)
class Window:
    """Contiguous byte range ``[offset, offset + length)``."""

    offset: int
    length: int

    @property
    def end(self) -> int:
        return self.offset + self.length

    def problems(self, page_size: int, memory_size: int) -> list[str]:
        out = []
        if self.length <= 0:
            out.append("length must be positive")
        if self.offset < 0:
            out.append("offset must be non-negative")
        if self.offset % page_size or self.length % page_size:
            out.append("not page-aligned")
        if self.end > memory_size:
            out.append("extends past memory_size")
        return out


@dataclass(frozen=True)
class AccessPlan:
    """Window per SM plus the set of SMs that actually run."""

    windows: Mapping[int, Window]
    active: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "active", frozenset(self.active))

    @classmethod
    def shared(cls, sms, window: Window) -> "AccessPlan":
        sms = list(sms)
        return cls({sm: window for sm in sms}, frozenset(sms))


@dataclass(frozen=True)
class ThroughputReport:
    per_sm: dict[int, float]
    per_group: dict[int, float]
    total: float


class PlanError(ValueError):
    """An AccessPlan that does not fit the machine."""


def check_plan(config: MachineConfig, plan: AccessPlan) -> None:
    for sm in sorted(plan.active):
        if not 0 <= sm < config.sm_count:
            raise PlanError(f"SM {sm}: not on this machine")
        if sm not in plan.windows:
            raise PlanError(f"SM {sm}: active but has no window")
        bad = plan.windows[sm].problems(config.page_size, config.memory_size)
        if bad:
            raise PlanError(f"SM {sm}: window {plan.windows[sm]} {'; '.join(bad)}")


def _consecutive_layout(group_tpc_counts):
    tpc_of, group_of = [], []
    tpc = 0
    for g, n in enumerate(group_tpc_counts):
        for _ in range(n):
            tpc_of += [tpc, tpc]
            group_of += [g, g]
            tpc += 1
    return tpc_of, group_of


def default_a100() -> MachineConfig:
    """An 80 GB A100: 108 SMs, 54 TPCs, 14 resource groups.

    Seven GPCs are enabled; five carry 8 TPCs and two carry 7.  Each GPC half
    is one resource group, so the halves are 4+4 or 4+3 TPCs, giving twelve
    8-SM groups and two 6-SM groups laid out in consecutive index blocks.
    """
    halves = [4, 4] * 5 + [4, 3] * 2
    tpc_of, group_of = _consecutive_layout(halves)
    return MachineConfig(
        sm_count=len(tpc_of),
        tpc_of=tuple(tpc_of),
        group_of=tuple(group_of),
        sm_rate=70 * GB,
        tpc_cap=80 * GB,
        group_cap_per_sm=15 * GB,
        device_cap=None,
        tlb_reach=64 * GiB,
        page_size=2 * MiB,
        memory_size=80 * GiB,
        miss_factor=50.0,
    )


def shuffled_layout(config: MachineConfig, seed: int) -> MachineConfig:
    """Randomly reassign whole TPCs to groups, keeping every group's size.

    Group slots are taken in group-id order; each slot is filled from a
    splitmix64 Fisher-Yates permutation of the TPCs.
    """
    tpc_members: dict[int, list[int]] = {}
    for sm, t in enumerate(config.tpc_of):
        tpc_members.setdefault(t, []).append(sm)
    tpcs_per_group = Counter()
    for t, sms in tpc_members.items():
        tpcs_per_group[config.group_of[sms[0]]] += 1
    order = SplitMix64(seed).shuffle(sorted(tpc_members))
    group_of = list(config.group_of)
    pos = 0
    for g in config.group_ids:
        for t in order[pos:pos + tpcs_per_group[g]]:
            for sm in tpc_members[t]:
                group_of[sm] = g
        pos += tpcs_per_group[g]
    return replace(config, group_of=tuple(group_of))


def validate(config: MachineConfig) -> list[str]:
    """Every violated layout/calibration invariant; empty when the config is sound."""
    v = []
    n = config.sm_count
    if n < 1:
        v.append("sm_count < 1")
    if len(config.tpc_of) != n:
        v.append("tpc_of length ≠ sm_count")
    if len(config.group_of) != n:
        v.append("group_of length ≠ sm_count")
    if not v:
        tpc_sizes = Counter(config.tpc_of)
        for t, size in sorted(tpc_sizes.items()):
            if size != 2:
                v.append(f"TPC size ≠ 2 (TPC {t} has {size} SMs)")
        tpc_groups: dict[int, set] = {}
        for sm in range(n):
            tpc_groups.setdefault(config.tpc_of[sm], set()).add(config.group_of[sm])
        for t, gs in sorted(tpc_groups.items()):
            if len(gs) > 1:
                v.append(f"TPC {t} spans groups {sorted(gs)}")
        for g, size in sorted(Counter(config.group_of).items()):
            if size < 2 or size % 2:
                v.append(f"group size not even ≥ 2 (group {g} has {size} SMs)")
    for name in ("page_size", "tlb_reach", "memory_size"):
        value = getattr(config, name)
        if not isinstance(value, int) or value <= 0:
            v.append(f"{name} not a positive integer")
    ps = config.page_size
    if isinstance(ps, int) and ps > 0:
        for name in ("tlb_reach", "memory_size"):
            value = getattr(config, name)
            if isinstance(value, int) and value > 0 and value % ps:
                v.append(f"{name} not a multiple of page_size")
    for name in ("sm_rate", "tpc_cap", "group_cap_per_sm"):
        value = getattr(config, name)
        if not value > 0 or not math.isfinite(value):
            v.append(f"{name} not positive")
    if config.device_cap is not None and not config.device_cap > 0:
        v.append("device_cap not positive")
    if not config.miss_factor >= 1:
        v.append("miss_factor < 1")
    return v
