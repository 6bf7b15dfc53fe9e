"""Sort eight HPC applications into sensitivity tiers.

The bundled table holds each application's DRAM bandwidth profile and its
slowdown when all memory lives on uncached NVM. Slowdown alone decides the
tier. Bandwidth gives a second, advisory opinion for runs that have no DRAM
baseline.
"""

from nvmlens.characterize import Thresholds, advisory_tier, classify_tier, load_metrics

th = Thresholds()
print(f"Tier cuts: slowdown <= {th.tier_low} is Insensitive, <= {th.tier_high} is Scaled, "
      f"anything above is Bottlenecked.\n")
print(f"{'app':<10} {'total MB/s':>10} {'write':>7} {'slowdown':>9}  tier")
for m in load_metrics():
    tier = classify_tier(m, th)
    note = " (borderline)" if tier.borderline else ""
    print(f"{m.name:<10} {m.total_bw:>10.0f} {m.write_ratio:>7.1%} {m.slowdown:>9.2f}  "
          f"{tier.label.value}{note}")

print("\nHigh bandwidth is no guarantee of a large slowdown. XSBench moves 16 GB/s, nearly all")
print("reads, and lands in the middle tier. FFT moves a third of that but writes 39% of it.")
print("Bandwidth-only advisory labels for the same rows:")
for m in load_metrics():
    print(f"  {m.name:<10} {advisory_tier(m, th).value}")

print("\nThe advisory label misses Laghos and BoxLib. Bandwidth cannot see latency sensitivity")
print("or how much of the run a write-heavy phase occupies, so the slowdown verdict wins.")
