"""Discrete-time DRAM / cached-NVM / uncached-NVM memory simulator.

Each workload phase asks for a read and write bandwidth. The memory
configuration decides how much is delivered. The phase is then stretched by
the worst demand/achieved ratio. The run is sampled every second into a
counter trace with seeded jitter, together with a float ground-truth record
that analysis code can be checked against.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DomainError, NvmLensError
from .trace_io import CoreSample, CounterSample, CounterTrace, DeviceKind, Mode, write_trace

GIB = 1 << 30
CACHE_LINE = 64


@dataclass(frozen=True)
class MemoryConfig:
    mode: Mode = Mode.UNCACHED
    dram_read_cap: float = 115200.0
    dram_write_cap: float = 115200.0
    nvm_read_cap: float = 39000.0
    nvm_write_cap: float = 13000.0
    throttle_knee: float = 2000.0
    wpq_knee: float = 8.0
    wpq_decay: float = 0.02
    dram_capacity_bytes: int = 96 * GIB
    conflict_factor: float = 0.95
    # throttled-regime calibration against the SuperLU phase-1 numbers
    coupled_write_frac: float = 0.24
    coupled_budget_frac: float = 0.30
    dram_dimms: int = 6
    nvm_dimms: int = 6
    socket: int = 0
    sample_ms: int = 1000
    jitter: float = 0.02
    hardware_threads: int = 48
    base_freq_hz: float = 2.4e9
    turbo_freq_hz: float = 3.9e9

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        caps = (self.dram_read_cap, self.dram_write_cap, self.nvm_read_cap, self.nvm_write_cap)
        if min(caps) <= 0:
            raise DomainError("bandwidth caps must be > 0")
        if self.wpq_decay < 0:
            raise DomainError("wpq_decay must be >= 0")
        if self.wpq_knee <= 0 or self.sample_ms <= 0:
            raise DomainError("wpq_knee and sample_ms must be > 0")

    @property
    def write_cost(self):
        """Read-units consumed by one unit of NVM write bandwidth."""
        return self.nvm_read_cap / self.nvm_write_cap

    def to_dict(self):
        d = asdict(self)
        d["mode"] = self.mode.value
        return d

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise NvmLensError(f"unknown memory-config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class WorkloadPhase:
    duration_s: float
    demand_read: float
    demand_write: float

    def __post_init__(self):
        if not self.duration_s > 0:
            raise DomainError("phase duration must be > 0")
        if self.demand_read < 0 or self.demand_write < 0:
            raise DomainError("phase demands must be >= 0")


@dataclass(frozen=True)
class DataObject:
    name: str
    size_bytes: int
    read_share: float
    write_share: float

    def __post_init__(self):
        for s in (self.read_share, self.write_share):
            if not 0.0 <= s <= 1.0:
                raise DomainError(f"{self.name}: shares must lie in [0, 1]")
        if self.size_bytes < 0:
            raise DomainError(f"{self.name}: negative size")


@dataclass(frozen=True)
class WorkloadSpec:
    phases: tuple
    concurrency: int = 24
    footprint_bytes: int = 64 * GIB
    objects: tuple = ()
    rng_seed: int = 0
    base_ipc: float = 1.2
    ipc_contention: float = 0.004  # per-thread CPI growth from shared core resources
    name: str = "workload"

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(
            p if isinstance(p, WorkloadPhase) else WorkloadPhase(**p) for p in self.phases))
        object.__setattr__(self, "objects", tuple(
            o if isinstance(o, DataObject) else DataObject(**o) for o in self.objects))
        if not self.phases:
            raise DomainError("workload has no phases")
        if self.concurrency < 1:
            raise DomainError("concurrency must be >= 1")
        if self.objects:
            if sum(o.read_share for o in self.objects) > 1 + 1e-9:
                raise DomainError("object read shares sum above 1")
            if sum(o.write_share for o in self.objects) > 1 + 1e-9:
                raise DomainError("object write shares sum above 1")

    @property
    def nominal_runtime(self):
        return sum(p.duration_s for p in self.phases)

    def to_dict(self):
        return {
            "name": self.name,
            "phases": [asdict(p) for p in self.phases],
            "concurrency": self.concurrency,
            "footprint_bytes": self.footprint_bytes,
            "objects": [asdict(o) for o in self.objects],
            "rng_seed": self.rng_seed,
            "base_ipc": self.base_ipc,
            "ipc_contention": self.ipc_contention,
        }

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise NvmLensError(f"unknown workload keys: {sorted(unknown)}")
        return cls(**d)


def load_json(path, cls):
    return cls.from_dict(json.loads(Path(path).read_text()))


def save_json(obj, path):
    Path(path).write_text(json.dumps(obj.to_dict(), indent=2, sort_keys=True) + "\n")


def with_concurrency(spec, concurrency):
    """Strong-scale ``spec`` to a new thread count.

    Per-thread demand is held constant, so bandwidth demand grows with the
    thread count while the nominal phase time shrinks; total traffic is
    unchanged.
    """
    k = concurrency / spec.concurrency
    phases = tuple(WorkloadPhase(p.duration_s / k, p.demand_read * k, p.demand_write * k)
                   for p in spec.phases)
    return replace(spec, phases=phases, concurrency=concurrency)


def with_footprint(spec, footprint_bytes):
    return replace(spec, footprint_bytes=int(footprint_bytes))


# -- device models -----------------------------------------------------------


def nvm_write_cap(concurrency, cfg):
    c = concurrency
    ramp = min(c / cfg.wpq_knee, 1.0)
    return cfg.nvm_write_cap * ramp / (1.0 + cfg.wpq_decay * max(0.0, c - cfg.wpq_knee))


def nvm_read_cap(concurrency, cfg):
    return cfg.nvm_read_cap * min(1.0, 0.25 + 0.75 * concurrency / cfg.wpq_knee)


def nvm_service(demand_read, demand_write, concurrency, cfg):
    """Bandwidth NVM delivers for the given demand, as ``(read, write)`` MB/s.

    Below the throttle knee, read and write are capped independently by the
    concurrency-dependent caps. Above it the channels share one budget
    measured in read units, and a write unit costs ``cfg.write_cost`` read
    units. Writes drain first, at the demand or the throttled cap, scaled by
    the write queue's efficiency at this concurrency (``W(c) / W_peak``).
    Reads get what is left of the budget. A congested write queue therefore
    lowers delivered writes and leaves more budget for reads.
    """
    if demand_read < 0 or demand_write < 0:
        raise DomainError("demands must be >= 0")
    w_cap = nvm_write_cap(concurrency, cfg)
    r_cap = nvm_read_cap(concurrency, cfg)
    if demand_write <= cfg.throttle_knee:
        return min(demand_read, r_cap), min(demand_write, w_cap)
    write = min(demand_write, cfg.coupled_write_frac * cfg.nvm_write_cap) * w_cap / cfg.nvm_write_cap
    budget = cfg.coupled_budget_frac * r_cap
    read = min(demand_read, r_cap, max(0.0, budget - cfg.write_cost * write))
    return read, write


def _stretch(demand, achieved):
    if demand <= 0:
        return 1.0
    if achieved <= 0:
        return math.inf
    return max(demand / achieved, 1.0)


def dram_stretch(read, write, cfg):
    return max(_stretch(read, min(read, cfg.dram_read_cap)),
               _stretch(write, min(write, cfg.dram_write_cap)))


def nvm_stretch(read, write, concurrency, cfg):
    ar, aw = nvm_service(read, write, concurrency, cfg)
    return max(_stretch(read, ar), _stretch(write, aw))


@dataclass(frozen=True)
class CacheTraffic:
    hit_ratio: float
    dram_read: float
    dram_write: float
    nvm_read: float
    nvm_write: float


def hit_ratio(footprint_bytes, dram_capacity, cfg):
    if footprint_bytes <= 0:
        raise DomainError("footprint must be > 0")
    return min(1.0, dram_capacity / footprint_bytes) * cfg.conflict_factor


def dram_cache(footprint_bytes, dram_capacity, demand_read, demand_write, cfg):
    """Device traffic (MB/s) when DRAM is a direct-mapped write-back cache.

    Read misses fetch from NVM and fill DRAM, so DRAM sees the fill as extra
    writes. Dirty evictions go back to NVM as writes.
    """
    h = hit_ratio(footprint_bytes, dram_capacity, cfg)
    miss = 1.0 - h
    fill = miss * demand_read
    return CacheTraffic(
        hit_ratio=h,
        dram_read=demand_read,
        dram_write=demand_write + fill,
        nvm_read=fill,
        nvm_write=miss * demand_write,
    )


@dataclass(frozen=True)
class PhaseOutcome:
    """How one phase ran: stretch factor and per-device demand at nominal speed."""

    stretch: float
    dram_read: float
    dram_write: float
    nvm_read: float
    nvm_write: float
    hit_ratio: float | None = None

    def device_rates(self):
        """Delivered per-device bandwidth (MB/s) once the stretch is applied."""
        s = self.stretch
        return {"dram_read": self.dram_read / s, "dram_write": self.dram_write / s,
                "nvm_read": self.nvm_read / s, "nvm_write": self.nvm_write / s}


def serve_phase(demand_read, demand_write, concurrency, footprint_bytes, cfg,
                dram_read_frac=0.0, dram_write_frac=0.0):
    """Route one phase's demand through the configured memory mode.

    ``dram_*_frac`` place that share of the traffic in DRAM (uncached mode
    only). This is how a placement plan is modelled.
    """
    mode = cfg.mode
    hr = None
    if mode is Mode.DRAM_ONLY:
        dr, dw, nr, nw = demand_read, demand_write, 0.0, 0.0
    elif mode is Mode.CACHED:
        ct = dram_cache(footprint_bytes, cfg.dram_capacity_bytes, demand_read, demand_write, cfg)
        dr, dw, nr, nw, hr = ct.dram_read, ct.dram_write, ct.nvm_read, ct.nvm_write, ct.hit_ratio
    else:
        dr, dw = dram_read_frac * demand_read, dram_write_frac * demand_write
        nr, nw = demand_read - dr, demand_write - dw
    s = max(dram_stretch(dr, dw, cfg), nvm_stretch(nr, nw, concurrency, cfg), 1.0)
    return PhaseOutcome(s, dr, dw, nr, nw, hr)


def placement_fractions(spec, in_dram):
    names = {o.name for o in spec.objects}
    unknown = set(in_dram) - names
    if unknown:
        raise NvmLensError(f"placement names unknown objects: {sorted(unknown)}")
    rf = sum(o.read_share for o in spec.objects if o.name in in_dram)
    wf = sum(o.write_share for o in spec.objects if o.name in in_dram)
    return min(rf, 1.0), min(wf, 1.0)


def runtime(spec, cfg, in_dram=()):
    """Wall time of ``spec`` without emitting a trace."""
    rf, wf = placement_fractions(spec, in_dram) if in_dram else (0.0, 0.0)
    return sum(
        p.duration_s * serve_phase(p.demand_read, p.demand_write, spec.concurrency,
                                   spec.footprint_bytes, cfg, rf, wf).stretch
        for p in spec.phases)


# -- full simulation ---------------------------------------------------------


@dataclass
class PhaseResult:
    nominal_s: float
    wall_s: float
    stretch: float
    demand_read: float
    demand_write: float
    achieved_read: float
    achieved_write: float
    devices: dict

    def as_dict(self):
        return dict(self.__dict__)


@dataclass
class GroundTruth:
    """Exact (pre-rounding) per-interval bandwidth in MB/s."""

    starts_ms: np.ndarray
    ends_ms: np.ndarray
    read_bw: np.ndarray  # mode-accounted
    write_bw: np.ndarray
    by_device: dict  # "dram_read" etc. -> MB/s per interval
    phase_index: np.ndarray  # phase holding most of each interval


@dataclass
class SimResult:
    trace: CounterTrace
    phases: list
    runtime_s: float
    device_bytes: dict
    truth: GroundTruth
    object_bytes: dict = field(default_factory=dict)

    @property
    def achieved(self):
        return [(p.achieved_read, p.achieved_write) for p in self.phases]

    def phase_shares(self):
        total = sum(p.wall_s for p in self.phases)
        return [p.wall_s / total for p in self.phases]

    def summary(self):
        return {
            "runtime_s": self.runtime_s,
            "phases": [p.as_dict() for p in self.phases],
            "device_bytes": dict(self.device_bytes),
            "phase_shares": self.phase_shares(),
        }


def _split_dimms(total, n):
    base, extra = divmod(int(total), n)
    return [base + (1 if j < extra else 0) for j in range(n)]


def _core_freq(concurrency, cfg):
    frac = min(concurrency / cfg.hardware_threads, 1.0)
    return cfg.turbo_freq_hz - (cfg.turbo_freq_hz - cfg.base_freq_hz) * frac


def simulate(spec, cfg, in_dram=()):
    """Run ``spec`` on ``cfg`` and emit a 1-sample-per-``cfg.sample_ms`` trace.

    Same spec, config and seed give bit-identical results. Changing the seed
    moves only the jitter: per-phase achieved bandwidth and runtime stay put.
    """
    rf, wf = placement_fractions(spec, in_dram) if in_dram else (0.0, 0.0)
    c = spec.concurrency
    results = []
    for p in spec.phases:
        out = serve_phase(p.demand_read, p.demand_write, c, spec.footprint_bytes, cfg, rf, wf)
        results.append(PhaseResult(
            nominal_s=p.duration_s,
            wall_s=p.duration_s * out.stretch,
            stretch=out.stretch,
            demand_read=p.demand_read,
            demand_write=p.demand_write,
            achieved_read=p.demand_read / out.stretch,
            achieved_write=p.demand_write / out.stretch,
            devices=out.device_rates(),
        ))
    wall = np.array([r.wall_s for r in results])
    edges = np.concatenate(([0.0], np.cumsum(wall))) * 1000.0  # ms
    end_ms = int(round(edges[-1]))
    if end_ms < 1:
        raise DomainError("simulated run shorter than 1 ms")
    bounds = list(range(0, end_ms, cfg.sample_ms)) + [end_ms]
    starts = np.array(bounds[:-1], dtype=np.int64)
    ends = np.array(bounds[1:], dtype=np.int64)
    n = len(starts)

    # overlap[i, k]: seconds of phase k inside interval i
    lo = np.maximum(starts[:, None], edges[None, :-1])
    hi = np.minimum(ends[:, None], edges[None, 1:])
    overlap = np.clip(hi - lo, 0.0, None) / 1000.0
    dt = (ends - starts) / 1000.0

    keys = ("dram_read", "dram_write", "nvm_read", "nvm_write")
    rng = np.random.default_rng(spec.rng_seed)
    jit = 1.0 + rng.uniform(-cfg.jitter, cfg.jitter, size=(n, len(keys)))
    cpu_jit = 1.0 + rng.uniform(-cfg.jitter, cfg.jitter, size=(n, 2))
    rates = np.array([[r.devices[k] for k in keys] for r in results])  # phases x keys
    nbytes = (overlap @ rates) * 1e6 * jit  # intervals x keys, float bytes
    if cfg.mode is Mode.DRAM_ONLY:
        nbytes[:, 2:] = 0.0

    by_device = {k: nbytes[:, j] / dt / 1e6 for j, k in enumerate(keys)}
    if cfg.mode is Mode.UNCACHED:
        acc_r = by_device["dram_read"] + by_device["nvm_read"]
        acc_w = by_device["dram_write"] + by_device["nvm_write"]
    else:
        acc_r, acc_w = by_device["dram_read"], by_device["dram_write"]
    truth = GroundTruth(starts, ends, acc_r, acc_w, by_device,
                        np.argmax(overlap, axis=1).astype(np.int64))

    cum = np.vstack((np.zeros((1, len(keys))), np.cumsum(nbytes, axis=0)))
    cum = np.rint(cum).astype(np.int64)
    kinds = [(DeviceKind.DRAM, cfg.dram_dimms, 0)]
    if cfg.mode is not Mode.DRAM_ONLY:
        kinds.append((DeviceKind.NVM, cfg.nvm_dimms, 2))
    samples = []
    for i, t in enumerate(bounds):
        for kind, ndimm, col in kinds:
            rd = _split_dimms(cum[i, col], ndimm)
            wr = _split_dimms(cum[i, col + 1], ndimm)
            for d in range(ndimm):
                samples.append(CounterSample(t, cfg.socket, kind, d, rd[d], wr[d]))

    core = _core_samples(spec, cfg, results, overlap, dt, ends, acc_r, acc_w, cpu_jit)
    trace = CounterTrace(samples=samples, core=core, mode=cfg.mode, concurrency=c,
                         footprint_bytes=spec.footprint_bytes, window=(0, end_ms))
    device_bytes = {k: int(cum[-1, j]) for j, k in enumerate(keys)}
    app_r = float(sum(r.achieved_read * r.wall_s for r in results)) * 1e6
    app_w = float(sum(r.achieved_write * r.wall_s for r in results)) * 1e6
    object_bytes = {o.name: (int(round(o.read_share * app_r)), int(round(o.write_share * app_w)))
                    for o in spec.objects}
    return SimResult(trace, results, float(wall.sum()), device_bytes, truth, object_bytes)


def _core_samples(spec, cfg, results, overlap, dt, ends, acc_r, acc_w, cpu_jit):
    """Per-core average event counts for every interval.

    CPI = base * (1 + contention * threads) + base * (stretch - 1) * f / f_base.
    The last term is memory stall time, which costs more cycles at turbo
    clocks.
    """
    c = spec.concurrency
    f = _core_freq(c, cfg)
    cpi0 = 1.0 / spec.base_ipc
    stretch = np.array([r.stretch for r in results])
    s = (overlap @ stretch) / dt  # time-weighted stretch per interval
    util = np.minimum(0.98 * cpu_jit[:, 0], 1.0)
    cycles = f * dt * util
    cpi_res = cpi0 * spec.ipc_contention * c
    cpi_mem = cpi0 * (s - 1.0) * f / cfg.base_freq_hz
    cpi = (cpi0 + cpi_res + cpi_mem) * cpu_jit[:, 1]
    inst = cycles / cpi
    res_stall = inst * cpi_res
    offcore = inst * (cpi_mem + 0.1 * cpi0)
    reads = acc_r * dt * 1e6 / CACHE_LINE / c
    writes = acc_w * dt * 1e6 / CACHE_LINE / c
    out = []
    for i in range(len(ends)):
        out.append(CoreSample(int(ends[i]), int(round(inst[i])), int(round(cycles[i])),
                              int(round(res_stall[i])), int(round(offcore[i])),
                              int(round(reads[i])), int(round(writes[i]))))
    return out


def emit_trace(result, path):
    """Write the trace files plus a ``.truth.json`` ground-truth sidecar."""
    paths = write_trace(result.trace, path)
    truth = Path(path).with_suffix(".truth.json")
    t = result.truth
    doc = {
        "runtime_s": result.runtime_s,
        "phases": [p.as_dict() for p in result.phases],
        "device_bytes": result.device_bytes,
        "intervals": {
            "starts_ms": t.starts_ms.tolist(),
            "ends_ms": t.ends_ms.tolist(),
            "read_bw": t.read_bw.tolist(),
            "write_bw": t.write_bw.tolist(),
            "phase_index": t.phase_index.tolist(),
        },
    }
    truth.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return [*paths, truth]


def write_object_profile(result, spec, path):
    """Per-object traffic file (``name,size_bytes,read_bytes,write_bytes``).

    A trailing ``__total__`` row carries the application-wide byte totals, so
    objects that do not cover all traffic keep their true shares.
    """
    sizes = {o.name: o.size_bytes for o in spec.objects}
    app_r = round(sum(p.achieved_read * p.wall_s for p in result.phases) * 1e6)
    app_w = round(sum(p.achieved_write * p.wall_s for p in result.phases) * 1e6)
    with open(path, "w") as fh:
        fh.write("name,size_bytes,read_bytes,write_bytes\n")
        for name in sorted(result.object_bytes):
            r, w = result.object_bytes[name]
            fh.write(f"{name},{sizes[name]},{r},{w}\n")
        fh.write(f"__total__,{sum(sizes.values())},{app_r},{app_w}\n")
