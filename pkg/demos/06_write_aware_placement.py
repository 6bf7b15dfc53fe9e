"""Keep the write-hot data in DRAM and the rest on NVM.

A ScaLAPACK-like multiply has two large read-mostly inputs and one smaller
output block that takes nearly all the writes. A knapsack over write share
picks what fits in a DRAM budget. The simulator then estimates the payoff.
"""

from nvmlens import memsim, placement, workloads
from nvmlens.memsim import MemoryConfig
from nvmlens.trace_io import Mode

spec = workloads.scalapack_like()
cfg = MemoryConfig(mode=Mode.UNCACHED)
gib = 1 << 30
for o in spec.objects:
    print(f"object {o.name}: {o.size_bytes / gib:5.1f} GiB, read share {o.read_share:.2f}, "
          f"write share {o.write_share:.2f}")

all_dram = memsim.runtime(spec, MemoryConfig(mode=Mode.DRAM_ONLY))
print(f"\nall in DRAM: {all_dram:.1f} s, all on NVM: {memsim.runtime(spec, cfg):.1f} s\n")
print(f"{'budget':>7} {'strategy':<14} {'in DRAM':<12} {'writes kept':>11} {'speedup':>8}")
for frac in (0.1, 0.3, 0.4, 0.7, 1.0):
    budget = int(frac * spec.footprint_bytes)
    for strat in placement.PlacementStrategy:
        plan = placement.advise(spec.objects, budget, strat)
        est = placement.estimate(plan, spec, cfg)
        print(f"{frac:>6.0%} {strat.value:<14} {','.join(sorted(plan.in_dram)) or '-':<12} "
              f"{plan.captured_write_fraction:>11.2f} {est['speedup_vs_all_nvm']:>8.2f}")
print("\nThirty percent of the footprint in DRAM recovers the full DRAM-only runtime.")
