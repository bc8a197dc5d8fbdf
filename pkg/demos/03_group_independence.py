"""
Groups run independently
========================

A whole group on its own delivers its per-SM share times its size: 120 GB/s
for the 8-SM groups, 90 GB/s for the two 6-SM ones.  Running any two groups
together gives exactly the sum, which is what makes a group a unit worth
scheduling against.
"""

import numpy as np

from tlbscope import default_a100, group_pairs, single_groups
from tlbscope.units import GB

config = default_a100()
singles = single_groups(config)
for g, v in singles.items():
    print(f"group {g:>2} ({config.group_sizes[g]} SMs): {v / GB:6.1f} GB/s")

pairs = group_pairs(config)
solo = np.array([singles[g] for g in config.group_ids])
expected = solo[:, None] + solo[None, :]
off = ~np.eye(len(solo), dtype=bool)
print("largest deviation from additivity:", np.abs(pairs - expected)[off].max(), "B/s")
