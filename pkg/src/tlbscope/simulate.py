"""Steady-state throughput under per-group TLBs and a three-level cap chain.

Each active SM demands ``sm_rate`` scaled down by its group's TLB miss cost.
Demand is then clipped by the TPC cap, the group cap and the device cap in
turn; every clipped level is shared among its members pro-rata to demand.

All sums run in a fixed order (no BLAS), so the same inputs give bit-identical
outputs regardless of threading.
"""

from __future__ import annotations

from collections import OrderedDict

import numpy as np

from .model import AccessPlan, MachineConfig, ThroughputReport, check_plan
from .prng import splitmix64_array


def union_pages(plan: AccessPlan, group: int, config: MachineConfig) -> int:
    """Distinct pages touched by the active members of ``group``."""
    spans = sorted(
        (plan.windows[sm].offset, plan.windows[sm].end)
        for sm in plan.active
        if config.group_of[sm] == group
    )
    covered = 0
    cur_start = cur_end = None
    for start, end in spans:
        if cur_end is None or start > cur_end:
            if cur_end is not None:
                covered += cur_end - cur_start
            cur_start, cur_end = start, end
        else:
            cur_end = max(cur_end, end)
    if cur_end is not None:
        covered += cur_end - cur_start
    return covered // config.page_size


def hit_rate(union_bytes, reach):
    """Steady-state TLB hit probability for uniform access over ``union_bytes``."""
    if union_bytes < 0:
        raise ValueError("union_bytes must be non-negative")
    if union_bytes == 0:
        return 1.0
    return min(1.0, reach / union_bytes)


def slowdown(h, miss_factor):
    """Throughput multiplier when a fraction ``1 - h`` of accesses miss."""
    return 1.0 / (h + (1.0 - h) * miss_factor)


def _hit_rates(union_bytes, reach):
    u = np.asarray(union_bytes, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(u > 0, np.minimum(1.0, reach / np.where(u > 0, u, 1.0)), 1.0)


def _group_tpcs(config: MachineConfig):
    return [np.flatnonzero(config.tpc_group_index == g) for g in range(config.group_count)]


def _tpc_pairs(config: MachineConfig):
    first = np.full(config.tpc_count, -1, dtype=np.intp)
    second = np.full(config.tpc_count, -1, dtype=np.intp)
    for sm, t in enumerate(config.tpc_index):
        if first[t] < 0:
            first[t] = sm
        else:
            second[t] = sm
    return first, second


def _ratio(delivered, demanded):
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(demanded > 0, delivered / np.where(demanded > 0, demanded, 1.0), 0.0)


def simulate_batch(config: MachineConfig, active, union_bytes):
    """Evaluate many plans at once.

    ``active`` is a (plans, SMs) boolean mask and ``union_bytes`` a
    (plans, groups) array of per-group working-set sizes, groups in
    ``config.group_ids`` order.  Returns ``(per_sm, per_group, total)`` arrays
    in bytes/s.
    """
    active = np.atleast_2d(np.asarray(active, dtype=bool))
    union_bytes = np.atleast_2d(np.asarray(union_bytes, dtype=float))
    slow = slowdown(_hit_rates(union_bytes, config.tlb_reach), config.miss_factor)
    demand = np.where(active, config.sm_rate * slow[:, config.group_index], 0.0)

    first, second = _tpc_pairs(config)
    tpc_demand = demand[:, first] + demand[:, second]
    tpc_out = np.minimum(tpc_demand, config.tpc_cap)

    members = _group_tpcs(config)
    group_demand = np.stack([tpc_out[:, m].sum(axis=1) for m in members], axis=1)
    group_out = np.minimum(group_demand, config.group_cap_array)

    total = group_out.sum(axis=1)
    if config.device_cap is not None:
        clip = total > config.device_cap
        if clip.any():
            dev_scale = np.where(clip, config.device_cap / np.where(clip, total, 1.0), 1.0)
            group_out = group_out * dev_scale[:, None]
            total = np.where(clip, config.device_cap, total)

    tpc_scale = _ratio(tpc_out, tpc_demand)
    group_scale = _ratio(group_out, group_demand)
    per_sm = demand * tpc_scale[:, config.tpc_index] * group_scale[:, config.group_index]
    return per_sm, group_out, total


def simulate_throughput(config: MachineConfig, plan: AccessPlan) -> ThroughputReport:
    """Deliver throughput for one plan; raises ``PlanError`` for a bad window."""
    check_plan(config, plan)
    union = [union_pages(plan, g, config) * config.page_size for g in config.group_ids]
    active = np.zeros(config.sm_count, dtype=bool)
    active[sorted(plan.active)] = True
    per_sm, per_group, total = simulate_batch(config, active, union)
    return ThroughputReport(
        per_sm={sm: float(per_sm[0, sm]) for sm in range(config.sm_count)},
        per_group={g: float(per_group[0, i]) for i, g in enumerate(config.group_ids)},
        total=float(total[0]),
    )


def simulate_tlb_trace(num_pages: int, capacity: int, num_accesses: int, seed: int = 0) -> float:
    """Observed hit fraction of an LRU TLB under uniform random page accesses.

    Page IDs come from the splitmix64 stream for ``seed`` reduced modulo
    ``num_pages``; the first ``min(10 * capacity, num_accesses // 2)``
    accesses are warm-up and not counted.
    """
    if num_pages <= 0 or capacity <= 0 or num_accesses <= 0:
        raise ValueError("num_pages, capacity and num_accesses must be positive")
    pages = (splitmix64_array(seed, num_accesses) % np.uint64(num_pages)).tolist()
    warmup = min(10 * capacity, num_accesses // 2)

    resident: OrderedDict[int, None] = OrderedDict()
    hits = 0
    for i, page in enumerate(pages):
        if page in resident:
            resident.move_to_end(page)
            if i >= warmup:
                hits += 1
        else:
            resident[page] = None
            if len(resident) > capacity:
                resident.popitem(last=False)
    return hits / (num_accesses - warmup)
