"""The four probing experiments, run against the simulator.

* :func:`sweep` -- total random-access throughput against region size, with
  every SM on the whole region, on a random half, or on its group's chunk.
* :func:`probe_pairs` -- solo and pairwise SM throughputs.
* :func:`single_groups` / :func:`group_pairs` -- whole groups alone and in pairs.

Cells are independent; ``workers`` spreads them over threads without changing
any result.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import placement as placement_mod
from .model import AccessPlan, MachineConfig, Window
from .prng import SplitMix64, splitmix64_array
from .simulate import simulate_batch, simulate_throughput
from .units import GiB

MODES = ("global", "naive-half", "group-aligned")
DEFAULT_SWEEP_SIZES = [s * GiB for s in (8, 16, 24, 32, 40, 48, 56, 64, 66, 68, 72, 76, 80)]
PROBE_BYTES = 40 * GiB


def default_workers() -> int:
    env = os.environ.get("TLBSCOPE_THREADS")
    if env:
        return max(1, int(env))
    return 1


def _map(fn, items, workers):
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class SweepCurve:
    points: tuple[tuple[int, float], ...]
    mode: str

    @property
    def sizes(self) -> list[int]:
        return [s for s, _ in self.points]

    @property
    def totals(self) -> list[float]:
        return [t for _, t in self.points]


@dataclass(frozen=True)
class ProbeData:
    """Solo throughputs and the symmetric pair matrix (diagonal = solo), bytes/s."""

    solo: np.ndarray
    pairs: np.ndarray

    @property
    def sm_count(self) -> int:
        return len(self.solo)

    def problems(self) -> list[str]:
        out = []
        n = len(self.solo)
        if self.pairs.shape != (n, n):
            return [f"pair matrix shape {self.pairs.shape} does not match {n} solo values"]
        if not np.array_equal(self.pairs, self.pairs.T):
            out.append("pair matrix not symmetric")
        if not np.array_equal(np.diag(self.pairs), self.solo):
            out.append("diagonal differs from solo values")
        if not (self.pairs > 0).all():
            out.append("non-positive entries")
        return out


def probe_window(config: MachineConfig) -> Window:
    """40 GiB at offset 0, shrunk to fit small machines and stay inside TLB reach."""
    length = min(PROBE_BYTES, config.memory_size, config.tlb_reach)
    length -= length % config.page_size
    return Window(0, length)


def half_windows(size: int, page_size: int) -> tuple[Window, Window]:
    first = (size // 2) - (size // 2) % page_size
    if first == 0 or first == size:
        raise ValueError(f"region of {size} bytes cannot be split into two page-aligned halves")
    return Window(0, first), Window(first, size - first)


def naive_half_picks(sm_count: int, seed: int) -> list[int]:
    """Which half (0 or 1) each SM reads, one splitmix64 draw per SM."""
    rng = SplitMix64(seed)
    return [rng.bit() for _ in range(sm_count)]


def sweep_plan(config: MachineConfig, size: int, mode: str, seed: int = 0, groups=None) -> AccessPlan:
    everyone = range(config.sm_count)
    if mode == "global":
        return AccessPlan.shared(everyone, Window(0, size))
    if mode == "naive-half":
        halves = half_windows(size, config.page_size)
        picks = naive_half_picks(config.sm_count, seed)
        return AccessPlan({sm: halves[picks[sm]] for sm in everyone}, frozenset(everyone))
    if mode == "group-aligned":
        members = placement_mod.group_members(groups if groups is not None
                                              else dict(zip(config.group_ids, config.groups)))
        pp = placement_mod.plan(members, size, config.tlb_reach,
                                page_size=config.page_size, min_chunks=2)
        return placement_mod.to_access_plan(pp, config, members)
    raise ValueError(f"unknown sweep mode {mode!r}; expected one of {', '.join(MODES)}")


def sweep(config: MachineConfig, sizes: Sequence[int] | None = None, mode: str = "global",
          seed: int = 0, groups=None, workers: int | None = None) -> SweepCurve:
    """Total throughput per region size with all SMs active.

    ``groups`` overrides the ground-truth grouping used by group-aligned mode,
    e.g. with a recovered topology.
    """
    if mode not in MODES:
        raise ValueError(f"unknown sweep mode {mode!r}; expected one of {', '.join(MODES)}")
    sizes = list(DEFAULT_SWEEP_SIZES if sizes is None else sizes)
    for s in sizes:
        if s <= 0 or s % config.page_size:
            raise ValueError(f"size {s} is not a positive multiple of the page size")
        if s > config.memory_size:
            raise ValueError(f"size {s} exceeds memory_size {config.memory_size}")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be strictly increasing")

    def cell(size):
        return simulate_throughput(config, sweep_plan(config, size, mode, seed, groups)).total

    totals = _map(cell, sizes, workers)
    return SweepCurve(tuple(zip(sizes, totals)), mode)


def _group_union(config: MachineConfig, active: np.ndarray, nbytes: int) -> np.ndarray:
    """Per-group union for plans where every active SM shares one window."""
    hit = np.zeros((active.shape[0], config.group_count), dtype=bool)
    for g in range(config.group_count):
        hit[:, g] = active[:, config.group_index == g].any(axis=1)
    return np.where(hit, float(nbytes), 0.0)


def probe_pairs(config: MachineConfig, workers: int | None = None, batch: int = 4096) -> ProbeData:
    """Solo and all-pairs throughput, every run on the shared probe window."""
    n = config.sm_count
    nbytes = probe_window(config).length
    eye = np.eye(n, dtype=bool)
    _, _, solo = simulate_batch(config, eye, _group_union(config, eye, nbytes))

    iu, ju = np.triu_indices(n, k=1)
    starts = list(range(0, len(iu), batch))

    def cell(start):
        i, j = iu[start:start + batch], ju[start:start + batch]
        active = np.zeros((len(i), n), dtype=bool)
        rows = np.arange(len(i))
        active[rows, i] = True
        active[rows, j] = True
        return simulate_batch(config, active, _group_union(config, active, nbytes))[2]

    totals = np.concatenate(_map(cell, starts, workers)) if starts else np.zeros(0)
    pairs = np.diag(solo)
    pairs[iu, ju] = totals
    pairs[ju, iu] = totals
    return ProbeData(solo=solo, pairs=pairs)


def noisy(probe: ProbeData, amplitude: float, seed: int) -> ProbeData:
    """Multiply every entry by independent noise in ``[1 - amplitude, 1 + amplitude]``.

    The matrix stays symmetric (one draw per unordered pair) and the diagonal
    stays equal to the solo vector.
    """
    n = probe.sm_count
    iu, ju = np.triu_indices(n)
    u = splitmix64_array(seed, len(iu)).astype(np.float64) / 2.0**64
    factor = np.zeros((n, n))
    factor[iu, ju] = 1.0 - amplitude + 2.0 * amplitude * u
    factor[ju, iu] = factor[iu, ju]
    pairs = probe.pairs * factor
    return ProbeData(solo=np.diag(pairs).copy(), pairs=pairs)


def single_groups(config: MachineConfig) -> dict[int, float]:
    """Each group alone, all members on the shared probe window."""
    w = probe_window(config)
    return {g: simulate_throughput(config, AccessPlan.shared(config.members(g), w)).total
            for g in config.group_ids}


def group_pairs(config: MachineConfig, workers: int | None = None) -> np.ndarray:
    """Throughput of every two groups run together on disjoint 40 GiB regions.

    Row/column order follows ``config.group_ids``; the diagonal holds the
    single-group values.
    """
    w = probe_window(config)
    if 2 * w.length > config.memory_size:
        raise ValueError("memory too small for two disjoint probe windows")
    w2 = Window(w.length, w.length)
    ids = config.group_ids
    singles = single_groups(config)
    out = np.diag([singles[g] for g in ids])

    cells = [(a, b) for a in range(len(ids)) for b in range(a + 1, len(ids))]

    def cell(ab):
        a, b = ab
        windows = {sm: w for sm in config.members(ids[a])}
        windows.update({sm: w2 for sm in config.members(ids[b])})
        return simulate_throughput(config, AccessPlan(windows, frozenset(windows))).total

    for (a, b), total in zip(cells, _map(cell, cells, workers)):
        out[a, b] = out[b, a] = total
    return out
