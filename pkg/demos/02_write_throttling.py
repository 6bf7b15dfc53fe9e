"""Watch write throttling stretch a write-heavy phase on uncached NVM.

A SuperLU-like run has a short write-heavy factorization phase followed by a
long read-heavy solve. On DRAM the first phase takes 20% of the run. On NVM
the saturated write path drags reads down with it, and that phase comes to
dominate execution.
"""

import tempfile
from pathlib import Path

from nvmlens import memsim, workloads
from nvmlens.bandwidth import compute_bandwidth, dominant_phase, moving_average, segment_phases
from nvmlens.characterize import detect_write_throttling
from nvmlens.trace_io import Mode, account_traffic, parse_trace

spec = workloads.superlu_like(seed=1)
tmp = Path(tempfile.mkdtemp())

for mode in (Mode.DRAM_ONLY, Mode.UNCACHED):
    res = memsim.simulate(spec, memsim.MemoryConfig(mode=mode))
    memsim.emit_trace(res, tmp / f"{mode.value}.csv")
    trace = parse_trace(tmp / f"{mode.value}.csv")
    bw = moving_average(compute_bandwidth(account_traffic(trace)), 3)
    phases = segment_phases(bw)
    print(f"{mode.value}: runtime {res.runtime_s:6.1f} s")
    for p in phases:
        risk = detect_write_throttling(p).value if mode is Mode.DRAM_ONLY else "-"
        print(f"  samples {p.start_index:>3}-{p.end_index:<3} share {p.duration_share:5.2f}  "
              f"read {p.avg_read_bw:8.0f}  write {p.avg_write_bw:8.0f} MB/s  "
              f"r/w {p.rw_ratio:5.2f}  throttling risk {risk}")
    print(f"  write-heaviest phase takes {dominant_phase(phases).duration_share:.0%} of the run\n")

print("The DRAM profile alone flags the risk: phase 1 writes far above 2 GB/s with a")
print("read/write ratio under 2.5. A Laghos-like profile (ratio 3, writes 1.3 GB/s) stays safe:")
laghos = memsim.simulate(workloads.laghos_like(), memsim.MemoryConfig(mode=Mode.UNCACHED))
print(f"  laghos-like uncached runtime {laghos.runtime_s:.1f} s for 100 s of DRAM work")
