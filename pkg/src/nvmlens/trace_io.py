"""Counter-trace file formats and per-mode traffic accounting.

A trace on disk is three sibling files sharing a stem::

    run.csv        timestamp_ms,socket,device_kind,device_id,read_bytes,write_bytes
    run.core.csv   timestamp_ms,p0,p1,p2,p3,p4,p5          (optional)
    run.meta       key=value lines: mode, concurrency, footprint_bytes,
                   window_start_ms, window_end_ms

Device counters are cumulative bytes; core events are per-interval counts.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import (
    EmptySeriesError,
    TraceFormatError,
    TraceIntegrityError,
    TraceParseError,
)

MEM_HEADER = ("timestamp_ms", "socket", "device_kind", "device_id", "read_bytes", "write_bytes")
CORE_HEADER = ("timestamp_ms", "p0", "p1", "p2", "p3", "p4", "p5")
META_KEYS = ("mode", "concurrency", "footprint_bytes", "window_start_ms", "window_end_ms")


class DeviceKind(str, Enum):
    DRAM = "DramDimm"
    NVM = "Nvdimm"


class Mode(str, Enum):
    DRAM_ONLY = "DramOnly"
    CACHED = "CachedNvm"
    UNCACHED = "UncachedNvm"


_KIND_ORDER = {DeviceKind.DRAM: 0, DeviceKind.NVM: 1}


@dataclass(frozen=True)
class CounterSample:
    timestamp: int
    socket: int
    device_kind: DeviceKind
    device_id: int
    read_bytes: int
    write_bytes: int

    @property
    def device(self):
        return (self.socket, self.device_kind, self.device_id)


@dataclass(frozen=True)
class CoreSample:
    """Event counts over one sample interval (p0..p5, roles in ``predictor.EVENT_ROLES``)."""

    timestamp: int
    p0: int  # instructions retired
    p1: int  # cycles active
    p2: int  # resource-stall cycles
    p3: int  # offcore-outstanding wait cycles
    p4: int  # iMC reads
    p5: int  # iMC writes

    @property
    def counts(self):
        return (self.p0, self.p1, self.p2, self.p3, self.p4, self.p5)

    @property
    def ipc(self):
        return self.p0 / self.p1 if self.p1 > 0 else float("nan")


def _sample_key(s):
    return (s.timestamp, s.socket, _KIND_ORDER[s.device_kind], s.device_id)


@dataclass(frozen=True)
class CounterTrace:
    samples: tuple
    core: tuple = ()
    mode: Mode = Mode.DRAM_ONLY
    concurrency: int = 1
    footprint_bytes: int = 0
    window: tuple = (0, 0)

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "samples", tuple(sorted(self.samples, key=_sample_key)))
        object.__setattr__(self, "core", tuple(sorted(self.core, key=lambda c: c.timestamp)))
        object.__setattr__(self, "window", (int(self.window[0]), int(self.window[1])))
        _validate(self)

    def streams(self):
        """Per-device sample lists, keyed by (socket, kind, id)."""
        out = {}
        for s in self.samples:
            out.setdefault(s.device, []).append(s)
        return out

    @property
    def span(self):
        if not self.samples:
            return (0, 0)
        return (self.samples[0].timestamp, self.samples[-1].timestamp)


def _validate(trace):
    if trace.mode is Mode.DRAM_ONLY:
        for s in trace.samples:
            if s.device_kind is DeviceKind.NVM:
                raise TraceFormatError(
                    f"DramOnly trace contains Nvdimm record (socket {s.socket}, id {s.device_id})"
                )
    for (sock, kind, dev), stream in trace.streams().items():
        name = f"socket {sock} {kind.value} {dev}"
        for a, b in zip(stream, stream[1:]):
            if b.timestamp <= a.timestamp:
                raise TraceIntegrityError(f"{name}: duplicate timestamp {b.timestamp} ms")
            if b.read_bytes < a.read_bytes or b.write_bytes < a.write_bytes:
                raise TraceIntegrityError(
                    f"{name}: cumulative counter decreased at t={b.timestamp} ms"
                )
    prev = None
    for c in trace.core:
        if min(c.counts) < 0:
            raise TraceIntegrityError(f"core sample at t={c.timestamp} ms has a negative count")
        if prev is not None and c.timestamp <= prev:
            raise TraceIntegrityError(f"core samples not strictly increasing at t={c.timestamp} ms")
        prev = c.timestamp
    if trace.samples:
        lo, hi = trace.span
        ws, we = trace.window
        if not (lo <= ws <= we <= hi):
            raise TraceFormatError(
                f"window [{ws}, {we}] ms lies outside sampled span [{lo}, {hi}] ms"
            )


# -- reading -----------------------------------------------------------------


def sidecar_paths(path):
    path = Path(path)
    stem = path.with_suffix("")
    return stem.with_suffix(".core.csv"), stem.with_suffix(".meta")


def _int(path, line, name, text):
    try:
        return int(text)
    except (TypeError, ValueError):
        raise TraceParseError(path, line, f"field {name!r}: expected integer, got {text!r}") from None


def _read_rows(path, header):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise TraceParseError(path, 1, "missing header row") from None
        if tuple(h.strip() for h in first) != header:
            raise TraceParseError(path, 1, f"bad header {first!r}; expected {','.join(header)}")
        for row in reader:
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise TraceParseError(
                    path, reader.line_num, f"expected {len(header)} fields, got {len(row)}"
                )
            yield reader.line_num, [x.strip() for x in row]


def read_counter_samples(path):
    out = []
    for ln, row in _read_rows(path, MEM_HEADER):
        try:
            kind = DeviceKind(row[2])
        except ValueError:
            raise TraceFormatError(f"{path}:{ln}: unknown device_kind {row[2]!r}") from None
        vals = [_int(path, ln, MEM_HEADER[i], row[i]) for i in (0, 1, 3, 4, 5)]
        if min(vals[3:]) < 0:
            raise TraceParseError(path, ln, "negative byte counter")
        out.append(CounterSample(vals[0], vals[1], kind, vals[2], vals[3], vals[4]))
    return out


def read_core_samples(path):
    out = []
    for ln, row in _read_rows(path, CORE_HEADER):
        vals = [_int(path, ln, CORE_HEADER[i], row[i]) for i in range(7)]
        out.append(CoreSample(*vals))
    return out


def read_meta(path):
    meta = {}
    with open(path) as fh:
        for ln, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise TraceParseError(path, ln, "expected key=value")
            key, val = (x.strip() for x in line.split("=", 1))
            meta[key] = val
    missing = [k for k in META_KEYS if k not in meta]
    if missing:
        raise TraceFormatError(f"{path}: missing metadata keys {missing}")
    try:
        mode = Mode(meta["mode"])
    except ValueError:
        raise TraceFormatError(f"{path}: unknown mode {meta['mode']!r}") from None
    ints = {}
    for k in META_KEYS[1:]:
        try:
            ints[k] = int(meta[k])
        except ValueError:
            raise TraceFormatError(f"{path}: {k} must be an integer") from None
    return mode, ints


def parse_trace(path):
    """Load and validate the trace whose device-counter file is ``path``.

    Sidecars are located by stem: ``run.csv`` pairs with ``run.meta`` and,
    if present, ``run.core.csv``.
    """
    path = Path(path)
    core_path, meta_path = sidecar_paths(path)
    if not meta_path.exists():
        raise TraceFormatError(f"metadata sidecar {meta_path} not found")
    mode, meta = read_meta(meta_path)
    samples = read_counter_samples(path)
    core = read_core_samples(core_path) if core_path.exists() else []
    return CounterTrace(
        samples=samples,
        core=core,
        mode=mode,
        concurrency=meta["concurrency"],
        footprint_bytes=meta["footprint_bytes"],
        window=(meta["window_start_ms"], meta["window_end_ms"]),
    )


# -- writing -----------------------------------------------------------------


def write_trace(trace, path):
    """Write ``trace`` as the three-file layout; returns the written paths."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    core_path, meta_path = sidecar_paths(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MEM_HEADER)
        for s in trace.samples:
            w.writerow((s.timestamp, s.socket, s.device_kind.value, s.device_id,
                        s.read_bytes, s.write_bytes))
    written = [path]
    if trace.core:
        with open(core_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CORE_HEADER)
            for c in trace.core:
                w.writerow((c.timestamp, *c.counts))
        written.append(core_path)
    with open(meta_path, "w") as fh:
        fh.write(f"mode={trace.mode.value}\n")
        fh.write(f"concurrency={trace.concurrency}\n")
        fh.write(f"footprint_bytes={trace.footprint_bytes}\n")
        fh.write(f"window_start_ms={trace.window[0]}\n")
        fh.write(f"window_end_ms={trace.window[1]}\n")
    written.append(meta_path)
    return written


# -- accounting --------------------------------------------------------------


@dataclass(frozen=True)
class TrafficSeries:
    """Mode-accounted bytes per interval.

    ``starts``/``ends`` are interval bounds in ms. ``by_kind`` keeps the
    per-device-kind breakdown, including traffic the mode's accounting rule
    leaves out (NVM traffic in cached mode).
    """

    starts: np.ndarray
    ends: np.ndarray
    read_bytes: np.ndarray
    write_bytes: np.ndarray
    by_kind: dict = field(default_factory=dict)
    mode: Mode = Mode.DRAM_ONLY

    def __len__(self):
        return len(self.read_bytes)

    @property
    def timestamps(self):
        return self.ends

    def totals(self):
        return int(self.read_bytes.sum()), int(self.write_bytes.sum())


ACCOUNTED_KINDS = {
    Mode.DRAM_ONLY: (DeviceKind.DRAM,),
    # DRAM sits in front of NVM in cached mode, so only DRAM-side traffic counts.
    Mode.CACHED: (DeviceKind.DRAM,),
    Mode.UNCACHED: (DeviceKind.DRAM, DeviceKind.NVM),
}


def account_traffic(trace):
    """Reduce per-device cumulative counters to per-interval accounted bytes.

    Interval bounds are the union of sample timestamps inside the window.
    A device delta between two of its own consecutive in-window samples is
    charged to the interval ending at the later sample, so totals stay exact
    integers even when devices are sampled on different clocks.
    """
    ws, we = trace.window
    bounds = sorted({s.timestamp for s in trace.samples if ws <= s.timestamp <= we})
    if len(bounds) < 2:
        raise EmptySeriesError(f"window [{ws}, {we}] ms contains fewer than two sample times")
    index = {t: i - 1 for i, t in enumerate(bounds)}
    n = len(bounds) - 1
    per_kind = {k: (np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64)) for k in DeviceKind}
    for (_, kind, _), stream in trace.streams().items():
        inside = [s for s in stream if ws <= s.timestamp <= we]
        rd, wr = per_kind[kind]
        for a, b in zip(inside, inside[1:]):
            i = index[b.timestamp]
            rd[i] += b.read_bytes - a.read_bytes
            wr[i] += b.write_bytes - a.write_bytes
    kinds = ACCOUNTED_KINDS[trace.mode]
    read = sum((per_kind[k][0] for k in kinds), np.zeros(n, dtype=np.int64))
    write = sum((per_kind[k][1] for k in kinds), np.zeros(n, dtype=np.int64))
    b = np.asarray(bounds, dtype=np.int64)
    return TrafficSeries(
        starts=b[:-1],
        ends=b[1:],
        read_bytes=read,
        write_bytes=write,
        by_kind={k.value: v for k, v in per_kind.items()},
        mode=trace.mode,
    )
