"""Analytic performance models.

Three questions the models answer before touching hardware:

1. How fast can a plain sweep go?  Memory bandwidth divided by 16 bytes
   per update.
2. What does pipelined blocking buy?  Each t*T-deep pipeline trades one
   memory transit for t*T - 1 cache transits; the speedup saturates at
   the cache:memory bandwidth ratio.
3. When do multi-layer halos pay off?  Batching h exchange rounds into
   one saves message latencies but adds extra face updates and fatter
   slabs; the ratio below compares h single-layer steps to one h-layer
   step (>1 means multi-layer wins).
"""

from stencilpipe import (MachineParams, NetworkParams, baseline_perf,
                         efficiency, multihalo_ratio, pipelined_speedup)

machine = MachineParams()
net = NetworkParams()

perf = baseline_perf(machine.mem_bw_saturated)
print(f"baseline sweep bound: {perf / 1e6:.0f} MLUP/s "
      f"at {machine.mem_bw_saturated / 1e9:.0f} GB/s")

print("\npipelined speedup over the baseline (t threads x T updates):")
for t, T in ((4, 1), (4, 2), (4, 4), (8, 4)):
    print(f"  t={t} T={T}: {pipelined_speedup(machine, t, T):.2f}x")
print(f"  asymptote: {machine.cache_bw / machine.mem_bw_saturated:.1f}x")

print("\nmulti-layer halo ratio (>1: aggregation wins) and compute share:")
print("      " + "".join(f"h={h:<10d}" for h in (2, 4, 8, 16, 32)))
for L in (8, 16, 32, 64, 128, 512):
    cells = "".join(
        f"{multihalo_ratio(L, h, net):5.2f}/{efficiency(L, h, net):4.2f} "
        for h in (2, 4, 8, 16, 32))
    print(f"L={L:<4d} {cells}")
print("\nsmall boxes profit from fewer latencies until the extra face")
print("work takes over; large boxes barely notice the halo depth.")
