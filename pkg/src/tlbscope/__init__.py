"""Analytic model of a GPU memory system with per-group TLBs.

Simulates SM -> TPC -> resource-group bandwidth caps with one fixed-reach TLB
per group, runs the pair/group probing experiments against it, recovers the
hidden grouping from the measurements, and plans per-group memory windows
that keep every TLB inside its reach.
"""

__version__ = "0.1.0"

from .model import (AccessPlan, MachineConfig, PlanError, ThroughputReport, Window,
                    default_a100, shuffled_layout, validate)
from .simulate import (hit_rate, simulate_batch, simulate_throughput, simulate_tlb_trace,
                       slowdown, union_pages)
from .experiments import (ProbeData, SweepCurve, group_pairs, probe_pairs, single_groups,
                          sweep)
from .recover import (AmbiguousTopologyError, Grouping, NoSignalError, RecoveryError,
                      Topology, recover_groups, recover_topology, recover_tpcs,
                      reorder)
from .placement import InsufficientGroupsError, PlacementPlan, plan, to_access_plan, verify
