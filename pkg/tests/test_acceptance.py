"""Exit criteria.  Each test prints one PASS/FAIL line in the terminal summary."""

import time
from collections import Counter

import numpy as np
import pytest

from goldens import golden, large_hashes, sha
from tlbscope.cli import main
from tlbscope.experiments import group_pairs, noisy, probe_pairs, single_groups, sweep
from tlbscope.model import default_a100, shuffled_layout
from tlbscope.placement import plan, to_access_plan, verify
from tlbscope.recover import recover_groups, recover_tpcs, report
from tlbscope.simulate import hit_rate, simulate_throughput, simulate_tlb_trace, union_pages
from tlbscope.units import GB, GiB

A100 = default_a100()
PLATEAU = 1620 * GB
NAIVE_SEED = 0


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start


def partition(groups):
    return sorted(sorted(g) for g in groups)


def tpc_pairs(config):
    pairs = {}
    for sm, t in enumerate(config.tpc_of):
        pairs.setdefault(t, []).append(sm)
    return sorted(tuple(p) for p in pairs.values())


@pytest.mark.acceptance(1, "single groups give exactly 120 / 90 GB/s, ratio 8/6, < 1 s")
def test_group_calibration():
    with Timer() as t:
        singles = single_groups(A100)
    by_size = {}
    for g, v in singles.items():
        by_size.setdefault(A100.group_sizes[g], set()).add(v)
    assert Counter(A100.group_sizes[g] for g in singles) == {8: 12, 6: 2}
    assert by_size == {8: {120 * GB}, 6: {90 * GB}}
    assert 120 / 90 == 8 / 6
    assert t.seconds < 1.0


@pytest.mark.acceptance(2, "group pairs equal the sum of single groups to 1e-9, < 1 s")
def test_group_independence():
    with Timer() as t:
        m = group_pairs(A100)
        singles = single_groups(A100)
    s = np.array([singles[g] for g in A100.group_ids])
    for a in range(len(s)):
        for b in range(a + 1, len(s)):
            assert abs(m[a, b] - (s[a] + s[b])) <= 1e-9 * (s[a] + s[b])
    assert t.seconds < 1.0


@pytest.mark.acceptance(3, "64 GiB cliff; naive halves no help; group-aligned flat, < 5 s")
def test_cliff():
    with Timer() as t:
        glob = sweep(A100, mode="global")
        naive80 = sweep(A100, [80 * GiB], "naive-half", NAIVE_SEED).totals[0]
        aligned = sweep(A100, mode="group-aligned", seed=NAIVE_SEED)
    within = [v for s, v in glob.points if s <= 64 * GiB]
    assert set(within) == {PLATEAU}
    glob80 = dict(glob.points)[80 * GiB]
    assert glob80 < 0.5 * PLATEAU
    assert abs(naive80 - glob80) <= 0.05 * glob80
    assert aligned.sizes[-1] == 80 * GiB
    assert set(aligned.totals) == {PLATEAU}
    assert t.seconds < 5.0


@pytest.mark.acceptance(4, "exact recovery over 100 shuffled layouts, 14 groups of 6 or 8")
def test_recovery_noise_free():
    with Timer() as t:
        for seed in range(100):
            config = shuffled_layout(A100, seed)
            probe = probe_pairs(config)
            grouping = recover_groups(probe)
            assert partition(grouping.groups) == partition(config.groups), seed
            assert recover_tpcs(probe, grouping.groups) == tpc_pairs(config), seed
            assert report(grouping).startswith("14 groups; sizes 8×12, 6×2"), seed
    assert t.seconds < 30.0


@pytest.mark.acceptance(4, "exact recovery with ±3% noise on every probe entry, delta 0.05")
def test_recovery_with_noise():
    failures = []
    with Timer() as t:
        for seed in range(100):
            config = shuffled_layout(A100, seed)
            probe = noisy(probe_pairs(config), 0.03, seed)
            try:
                grouping = recover_groups(probe, 0.05)
                ok = (partition(grouping.groups) == partition(config.groups)
                      and recover_tpcs(probe, grouping.groups) == tpc_pairs(config))
            except Exception:
                ok = False
            if not ok:
                failures.append(seed)
    assert t.seconds < 30.0
    assert not failures, f"inexact recovery for {len(failures)}/100 seeds"


@pytest.mark.acceptance(5, "LRU trace matches analytic hit rate within 0.01, < 5 s")
def test_tlb_oracle():
    page = A100.page_size
    with Timer() as t:
        cases = [(200, 100, 42), (1000, 100, 7)]
        observed = [simulate_tlb_trace(n, c, 10**6, seed) for n, c, seed in cases]
    for (n, c, _), got in zip(cases, observed):
        assert abs(got - hit_rate(n * page, c * page)) <= 0.01
    assert t.seconds < 5.0


@pytest.mark.acceptance(6, "80 GiB / 64 GiB placement: two 40 GiB chunks at the plateau, < 1 s")
def test_placement():
    with Timer() as t:
        pp = plan(A100.groups, A100.memory_size, A100.tlb_reach)
        access = to_access_plan(pp, A100)
        rep = simulate_throughput(A100, access)
    assert [(w.offset, w.length) for w in pp.chunks] == [(0, 40 * GiB), (40 * GiB, 40 * GiB)]
    assert verify(pp, A100) == []
    for g in A100.group_ids:
        assert union_pages(access, g, A100) * A100.page_size <= A100.tlb_reach
    assert rep.total == PLATEAU
    assert rep.total == sweep(A100, [40 * GiB]).totals[0]
    assert t.seconds < 1.0


def _pipeline(directory, threads, monkeypatch):
    monkeypatch.setenv("TLBSCOPE_THREADS", str(threads))
    d = directory
    steps = [
        ["probe", "--out", d / "probe.csv", "--solo", d / "solo.csv"],
        ["recover", "--matrix", d / "probe.csv", "--solo", d / "solo.csv",
         "--out", d / "topology.json", "--report", d / "report.txt"],
        ["reorder", "--matrix", d / "probe.csv", "--topology", d / "topology.json",
         "--out", d / "reordered.csv"],
        ["plan", "--topology", d / "topology.json", "--memory", "80GiB", "--reach", "64GiB",
         "--out", d / "plan.json"],
        ["sweep", "--mode", "group-aligned", "--seed", "7", "--topology", d / "topology.json",
         "--out", d / "sweep.csv"],
        ["sweep", "--mode", "naive-half", "--seed", "7", "--out", d / "naive.csv"],
        ["render", "heatmap", "--matrix", d / "reordered.csv", "--out", d / "reordered.svg"],
    ]
    for argv in steps:
        assert main([str(a) for a in argv]) == 0, argv
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())
            if not p.name.endswith(".manifest.json")}


@pytest.mark.acceptance(7, "pipeline byte-identical across runs and thread counts; goldens stable")
def test_determinism(tmp_path, monkeypatch):
    outputs = []
    for run, threads in enumerate((1, 1, 4, 8)):
        d = tmp_path / f"run{run}"
        d.mkdir()
        outputs.append(_pipeline(d, threads, monkeypatch))
    assert all(o == outputs[0] for o in outputs[1:])
    first = outputs[0]
    assert first["solo.csv"] == golden("solo.csv")
    assert first["topology.json"] == golden("topology.json")
    assert first["plan.json"] == golden("plan.json")
    hashes = large_hashes()
    for name in ("probe.csv", "reordered.csv", "reordered.svg"):
        assert sha(first[name]) == hashes[name]
    assert first["sweep.csv"].decode().splitlines()[-1] == "85899345920,1620.000000"
