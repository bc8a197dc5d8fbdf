"""
Finding which SMs share resources
=================================

Run every pair of SMs together and compare with the sum of their solo runs.
Pairs in the same TPC or the same resource group come out slower; pairs in
different groups add up exactly.  Connected components of the "slower than
the solo sum" graph give the groups back, here on a card whose layout has
been shuffled so index order gives nothing away.
"""

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from tlbscope import default_a100, probe_pairs, recover_topology, reorder, shuffled_layout
from tlbscope.experiments import noisy
from tlbscope.recover import report
from tlbscope.units import GB

config = shuffled_layout(default_a100(), seed=2024)
probe = probe_pairs(config)

print("distinct pair throughputs (GB/s):", sorted(set(np.round(probe.pairs.ravel() / GB, 3).tolist())))

topology, grouping = recover_topology(probe)
print(report(grouping), end="")

truth = sorted(sorted(g) for g in config.groups)
print("matches hidden layout:", sorted(topology.groups) == truth)

###############################################################################
# Measurements on real hardware are noisy.  With ±3% on the pair runs but
# clean solo baselines, the default 5% threshold still separates everything.
# Noise on the solo runs as well eats the 5% margin that separates
# different-group pairs, so a wider threshold is needed there.

rough = noisy(probe, 0.03, seed=1)
pairs_only = rough.pairs.copy()
np.fill_diagonal(pairs_only, probe.solo)
for label, p, delta in [
    ("pair noise, delta 0.05", type(probe)(probe.solo, pairs_only), 0.05),
    ("all noise,  delta 0.05", rough, 0.05),
    ("all noise,  delta 0.10", rough, 0.10),
]:
    topo, _ = recover_topology(p, delta)
    ok = sorted(topo.groups) == truth
    print(f"{label}: {len(topo.groups):>3} groups, exact={ok}")

###############################################################################
# Raw and reordered pair matrices.

fig, axes = plt.subplots(1, 2, figsize=(10, 4.5))
axes[0].imshow(probe.pairs / GB, cmap="gray")
axes[0].set_title("SM pairs, hardware order")
axes[1].imshow(reorder(probe.pairs, topology) / GB, cmap="gray")
axes[1].set_title("SM pairs, grouped")
fig.tight_layout()
fig.savefig("pair_probe.png", dpi=120)
print("wrote pair_probe.png")
