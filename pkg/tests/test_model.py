import json
from collections import Counter
from dataclasses import replace

import pytest

from tlbscope.model import (AccessPlan, MachineConfig, PlanError, Window, check_plan,
                            default_a100, shuffled_layout, validate)
from tlbscope.units import GB, GiB, MiB


def test_default_a100_shape(a100):
    assert a100.sm_count == 108
    assert a100.tpc_count == 54
    assert a100.group_count == 14
    assert Counter(a100.group_sizes.values()) == {8: 12, 6: 2}
    assert 12 * 8 + 2 * 6 == 108
    assert a100.tlb_reach == 64 * GiB
    assert a100.memory_size == 80 * GiB
    assert a100.page_size == 2 * MiB
    assert a100.device_cap is None
    assert (a100.sm_rate, a100.tpc_cap, a100.group_cap_per_sm) == (70 * GB, 80 * GB, 15 * GB)
    assert a100.miss_factor == 50


def test_default_tpcs_are_consecutive(a100):
    for sm in range(0, 108, 2):
        assert a100.tpc_of[sm] == a100.tpc_of[sm + 1]
        assert a100.tpc_of[sm] != a100.tpc_of[(sm + 2) % 108]


def test_default_groups_are_consecutive_blocks(a100):
    for members in a100.groups:
        assert members == list(range(members[0], members[-1] + 1))


def test_validate_default(a100):
    assert validate(a100) == []


def test_shuffled_layout_deterministic(a100):
    assert shuffled_layout(a100, 0).group_of == shuffled_layout(a100, 0).group_of
    assert shuffled_layout(a100, 0).group_of != shuffled_layout(a100, 1).group_of


@pytest.mark.parametrize("seed", range(100))
def test_shuffled_layout_preserves_structure(a100, seed):
    s = shuffled_layout(a100, seed)
    assert s.sm_count == a100.sm_count
    assert s.tpc_of == a100.tpc_of
    assert s.group_sizes == a100.group_sizes
    assert validate(s) == []
    for sm in range(0, 108, 2):
        assert s.group_of[sm] == s.group_of[sm + 1]


def _corrupt(config, **changes):
    return replace(config, **changes)


@pytest.mark.parametrize("changes,needle", [
    ({"miss_factor": 0.5}, "miss_factor < 1"),
    ({"sm_rate": 0.0}, "sm_rate not positive"),
    ({"tpc_cap": -1.0}, "tpc_cap not positive"),
    ({"group_cap_per_sm": 0.0}, "group_cap_per_sm not positive"),
    ({"device_cap": 0.0}, "device_cap not positive"),
    ({"tlb_reach": 64 * GiB + 1}, "tlb_reach not a multiple of page_size"),
    ({"memory_size": 0}, "memory_size not a positive integer"),
    ({"page_size": 0}, "page_size not a positive integer"),
    ({"sm_count": 107}, "tpc_of length ≠ sm_count"),
])
def test_validate_rejects_single_corruptions(a100, changes, needle):
    problems = validate(_corrupt(a100, **changes))
    assert any(needle in p for p in problems), problems


def test_validate_rejects_three_sm_tpc(a100):
    tpc_of = list(a100.tpc_of)
    tpc_of[2] = tpc_of[0]
    problems = validate(replace(a100, tpc_of=tuple(tpc_of)))
    assert any("TPC size ≠ 2" in p for p in problems), problems


def test_validate_rejects_tpc_spanning_groups(a100):
    group_of = list(a100.group_of)
    group_of[7], group_of[8] = group_of[8], group_of[7]
    problems = validate(replace(a100, group_of=tuple(group_of)))
    assert any("spans groups" in p for p in problems)


def test_validate_rejects_odd_group():
    cfg = replace(default_a100(), sm_count=4, tpc_of=(0, 0, 1, 1), group_of=(0, 0, 0, 1))
    problems = validate(cfg)
    assert any("group size not even" in p for p in problems)


def test_small_config_with_reach_above_memory_is_valid(a100):
    small = replace(a100, memory_size=4 * MiB, tlb_reach=64 * GiB)
    assert validate(small) == []


def test_json_round_trip(a100):
    text = a100.to_json()
    assert MachineConfig.from_json(text) == a100
    assert json.loads(text)["device_cap"] is None


def test_json_accepts_suffixed_sizes(a100):
    doc = a100.to_dict()
    doc.update(tlb_reach="64GiB", page_size="2MiB", memory_size="80GiB")
    assert MachineConfig.from_dict(doc) == a100


def test_json_rejects_unknown_and_missing(a100):
    doc = a100.to_dict()
    with pytest.raises(ValueError, match="unknown config fields: bogus"):
        MachineConfig.from_dict({**doc, "bogus": 1})
    del doc["miss_factor"]
    with pytest.raises(ValueError, match="missing"):
        MachineConfig.from_dict(doc)


def test_check_plan_names_sm(a100):
    check_plan(a100, AccessPlan.shared([0, 1], Window(0, 40 * GiB)))
    with pytest.raises(PlanError, match="SM 3"):
        check_plan(a100, AccessPlan({3: Window(1, 2 * MiB)}, {3}))
    with pytest.raises(PlanError, match="SM 4"):
        check_plan(a100, AccessPlan({4: Window(0, 81 * GiB)}, {4}))
    with pytest.raises(PlanError, match="SM 5"):
        check_plan(a100, AccessPlan({}, {5}))
    with pytest.raises(PlanError, match="SM 200"):
        check_plan(a100, AccessPlan.shared([200], Window(0, 2 * MiB)))
