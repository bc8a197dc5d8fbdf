"""
Running at full speed on all 80 GiB
===================================

Split memory into chunks no larger than the TLB reach and give each group
exactly one chunk.  No group ever sees more than 64 GiB of pages, so there
are no misses, and the whole card random-reads all of memory at the plateau.
The plan is built from a recovered topology, not from the hidden layout.
"""

from tlbscope import default_a100, plan, probe_pairs, recover_topology, shuffled_layout
from tlbscope.placement import to_access_plan, verify
from tlbscope.simulate import simulate_throughput, union_pages
from tlbscope.units import GB, GiB

config = shuffled_layout(default_a100(), seed=11)
topology, _ = recover_topology(probe_pairs(config))

placement = plan(topology, config.memory_size, config.tlb_reach)
for i, w in enumerate(placement.chunks):
    print(f"chunk {i}: {w.offset // GiB:>3}..{w.end // GiB:<3} GiB  groups {placement.groups_in(i)}")

assert verify(placement, config, topology.groups) == []

# Hardware groups are what the TLBs follow; check them directly.
access = to_access_plan(placement, config, topology.groups)
worst = max(union_pages(access, g, config) for g in config.group_ids) * config.page_size
print(f"largest per-group footprint: {worst / GiB:.0f} GiB of {config.tlb_reach / GiB:.0f}")
print(f"throughput: {simulate_throughput(config, access).total / GB:.1f} GB/s")

###############################################################################
# With 96 GiB of memory and a 32 GiB reach, three chunks are needed.

small = plan(topology, 96 * GiB, 32 * GiB)
print("three-chunk split:", [(w.offset // GiB, w.length // GiB) for w in small.chunks])
