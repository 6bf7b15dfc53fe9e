"""Separate NVM write-queue contention from plain poor scaling.

The contention ratio is performance at high thread count over performance at
low thread count. A ratio below 1 on DRAM just means the code scales badly.
The NVM flag fires only when NVM scales clearly worse than DRAM does.
"""

from nvmlens import memsim, workloads
from nvmlens.characterize import MetricKind, contention_ratio, contention_verdict
from nvmlens.memsim import MemoryConfig, nvm_service
from nvmlens.trace_io import Mode

print("NVM delivery for a fixed write-heavy demand (6 GB/s read, 4 GB/s write):")
for c in (4, 8, 16, 24, 36, 48):
    r, w = nvm_service(6000, 4000, c, MemoryConfig())
    print(f"  {c:>2} threads: read {r:6.0f}  write {w:6.0f} MB/s")
print("Past 8 threads the write queue congests. Writes fall while reads recover.\n")

spec = workloads.ft_like()
ratios = {}
for mode in (Mode.DRAM_ONLY, Mode.UNCACHED):
    cfg = MemoryConfig(mode=mode)
    # weak-scaled: each thread brings its own demand, so total work grows with threads
    lo = memsim.runtime(spec, cfg)
    hi = memsim.runtime(memsim.replace(memsim.with_concurrency(spec, 24),
                                       phases=tuple(memsim.WorkloadPhase(
                                           p.duration_s, p.demand_read * 3, p.demand_write * 3)
                                           for p in spec.phases)), cfg)
    ratios[mode] = contention_ratio(hi, lo, MetricKind.TIME)
    print(f"{mode.value:<12} 8 -> 24 threads: contention ratio {ratios[mode]:.2f}")

v = contention_verdict(ratios[Mode.DRAM_ONLY], ratios[Mode.UNCACHED])
print(f"gap {v.gap:.2f}, contended on NVM: {v.contended_on_nvm}\n")

for dram, nvm in ((0.61, 0.37), (0.61, 0.60), (1.2, 1.2)):
    print(f"ratios DRAM {dram} / NVM {nvm}: contended = "
          f"{contention_verdict(dram, nvm).contended_on_nvm}")
