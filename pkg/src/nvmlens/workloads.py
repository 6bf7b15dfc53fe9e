"""Synthetic workload specs that mimic the profiles of the studied applications.

Demands are the bandwidth each phase would draw on DRAM at the given
concurrency. They are hand-set so the simulator reproduces the qualitative
behaviour reported for each application, not its absolute numbers.
"""

from __future__ import annotations

from .memsim import GIB, DataObject, WorkloadPhase, WorkloadSpec


def superlu_like(seed=0, concurrency=24, total_s=100.0):
    """Write-heavy factor stage (20% of DRAM time), then a read-heavy stage."""
    return WorkloadSpec(
        name="superlu-like",
        phases=(
            WorkloadPhase(0.2 * total_s, 54000.0, 33000.0),
            WorkloadPhase(0.8 * total_s, 50000.0, 1500.0),
        ),
        concurrency=concurrency,
        footprint_bytes=60 * GIB,
        rng_seed=seed,
    )


def laghos_like(seed=0, concurrency=24, total_s=100.0):
    """Two phases, both under the throttle knee (write 1.3 GB/s, r/w = 3)."""
    return WorkloadSpec(
        name="laghos-like",
        phases=(
            WorkloadPhase(0.2 * total_s, 3900.0, 1300.0),
            WorkloadPhase(0.8 * total_s, 3000.0, 900.0),
        ),
        concurrency=concurrency,
        footprint_bytes=50 * GIB,
        rng_seed=seed,
    )


def ft_like(seed=0, concurrency=8, iterations=6, step_s=10.0):
    """Iterative FFT: alternating transpose (write-heavy) and compute steps."""
    phases = []
    for _ in range(iterations):
        phases.append(WorkloadPhase(step_s * 0.6, 6000.0, 4000.0))
        phases.append(WorkloadPhase(step_s * 0.4, 1500.0, 300.0))
    return WorkloadSpec(
        name="ft-like",
        phases=tuple(phases),
        concurrency=concurrency,
        footprint_bytes=80 * GIB,
        rng_seed=seed,
    )


def boxlib_like(seed=0, footprint_ratio=4.4, dram_capacity=96 * GIB):
    """Read-dominant AMR sweep with writes just above the throttle knee."""
    return WorkloadSpec(
        name="boxlib-like",
        phases=(WorkloadPhase(60.0, 11500.0, 2500.0),),
        concurrency=24,
        footprint_bytes=int(footprint_ratio * dram_capacity),
        rng_seed=seed,
    )


def xsbench_like(seed=0, concurrency=36, total_s=60.0):
    """Random-lookup kernel: read-heavy with a lighter setup phase."""
    return WorkloadSpec(
        name="xsbench-like",
        phases=(
            WorkloadPhase(0.25 * total_s, 14000.0, 1200.0),
            WorkloadPhase(0.75 * total_s, 30000.0, 60.0),
        ),
        concurrency=concurrency,
        footprint_bytes=120 * GIB,
        rng_seed=seed,
        base_ipc=0.9,
    )


def scalapack_like(seed=0, concurrency=24, footprint_bytes=80 * GIB):
    """Dense matrix multiply with a write-hot output block.

    The output/workspace object holds 30% of the footprint and nearly all
    writes. Phase 1 (accumulation) is write-heavy. The long second phase
    streams the inputs with writes above the throttle knee.
    """
    fp = footprint_bytes
    objects = (
        DataObject("A", int(0.35 * fp), 0.45, 0.0),
        DataObject("B", int(0.35 * fp), 0.45, 0.0),
        DataObject("C", int(0.30 * fp), 0.10, 0.96),
    )
    return WorkloadSpec(
        name="scalapack-like",
        phases=(
            WorkloadPhase(20.0, 10104.0, 6000.0),
            WorkloadPhase(80.0, 10104.0, 3000.0),
        ),
        concurrency=concurrency,
        footprint_bytes=fp,
        objects=objects,
        rng_seed=seed,
    )
