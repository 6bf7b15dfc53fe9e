"""Bandwidth timelines, smoothing, and phase segmentation."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateIntervalError, EmptySeriesError, SegmentationError

BYTES_PER_MB = 1e6


@dataclass(frozen=True)
class BandwidthTrace:
    """Per-interval bandwidth in MB/s (1 MB = 10^6 bytes).

    ``timestamps`` are interval start times in seconds, ``durations`` the
    interval lengths in seconds.
    """

    timestamps: np.ndarray
    durations: np.ndarray
    read_bw: np.ndarray
    write_bw: np.ndarray

    def __len__(self):
        return len(self.read_bw)

    @property
    def total_duration(self):
        return float(self.durations.sum())

    def with_bandwidth(self, read_bw, write_bw):
        return BandwidthTrace(self.timestamps, self.durations,
                              np.asarray(read_bw, float), np.asarray(write_bw, float))

    def scaled(self, k):
        return self.with_bandwidth(self.read_bw * k, self.write_bw * k)


@dataclass(frozen=True)
class Phase:
    start_index: int
    end_index: int  # inclusive
    avg_read_bw: float
    avg_write_bw: float
    peak_write_bw: float
    rw_ratio: float
    duration_share: float

    @property
    def length(self):
        return self.end_index - self.start_index + 1

    def as_dict(self):
        return {
            "start_index": self.start_index,
            "end_index": self.end_index,
            "avg_read_bw": self.avg_read_bw,
            "avg_write_bw": self.avg_write_bw,
            "peak_write_bw": self.peak_write_bw,
            "rw_ratio": self.rw_ratio,
            "duration_share": self.duration_share,
        }


def compute_bandwidth(series):
    """Convert a ``TrafficSeries`` to MB/s over each actual interval."""
    if len(series) == 0:
        raise EmptySeriesError("traffic series is empty")
    starts = np.asarray(series.starts, dtype=np.int64)
    dur = (np.asarray(series.ends, dtype=np.int64) - starts) / 1000.0
    if np.any(dur <= 0):
        i = int(np.argmax(dur <= 0))
        raise DegenerateIntervalError(f"interval {i} starting at {starts[i]} ms has zero length")
    read = np.asarray(series.read_bytes, dtype=float) / dur / BYTES_PER_MB
    write = np.asarray(series.write_bytes, dtype=float) / dur / BYTES_PER_MB
    return BandwidthTrace(starts / 1000.0, dur, read, write)


def from_arrays(read_bw, write_bw, interval_s=1.0):
    """Build a regularly sampled trace directly from bandwidth arrays."""
    read_bw = np.asarray(read_bw, dtype=float)
    write_bw = np.asarray(write_bw, dtype=float)
    if read_bw.shape != write_bw.shape:
        raise ValueError("read and write arrays differ in length")
    n = len(read_bw)
    return BandwidthTrace(np.arange(n) * interval_s, np.full(n, float(interval_s)), read_bw, write_bw)


def _centered_mean(x, w):
    n = len(x)
    c = np.concatenate(([0.0], np.cumsum(x)))
    idx = np.arange(n)
    lo = np.clip(idx - (w - 1) // 2, 0, n)
    hi = np.clip(idx + w // 2 + 1, 0, n)
    out = (c[hi] - c[lo]) / (hi - lo)
    # prefix-sum cancellation can push a flat window a few ulps outside the data range
    return np.clip(out, x.min(), x.max()) if n else out


def moving_average(trace, window_len):
    """Centered moving average; windows are truncated at the edges."""
    if window_len < 1:
        raise ValueError("window_len must be >= 1")
    if window_len == 1 or len(trace) == 0:
        return trace
    return trace.with_bandwidth(_centered_mean(trace.read_bw, window_len),
                                _centered_mean(trace.write_bw, window_len))


def phase_stats(trace, bounds):
    start, end = bounds
    if not (0 <= start <= end < len(trace)):
        raise SegmentationError(f"empty or out-of-range segment [{start}, {end}]")
    sl = slice(start, end + 1)
    d = trace.durations[sl]
    span = d.sum()
    avg_r = float((trace.read_bw[sl] * d).sum() / span)
    avg_w = float((trace.write_bw[sl] * d).sum() / span)
    return Phase(
        start_index=start,
        end_index=end,
        avg_read_bw=avg_r,
        avg_write_bw=avg_w,
        peak_write_bw=float(trace.write_bw[sl].max()),
        rw_ratio=avg_r / avg_w if avg_w > 0 else math.inf,
        duration_share=float(span / trace.total_duration),
    )


# -- segmentation ------------------------------------------------------------


def _prefix(x):
    z = np.zeros((1, x.shape[1]))
    return np.vstack((z, np.cumsum(x, axis=0))), np.vstack((z, np.cumsum(x * x, axis=0)))


def _seg_cost(s1, s2, i, j):
    """Within-segment SSE of rows [i, j), summed over channels; i may be an array."""
    n = (j - i).astype(float) if isinstance(i, np.ndarray) else float(j - i)
    a = s1[j] - s1[i]
    b = s2[j] - s2[i]
    if isinstance(i, np.ndarray):
        c = (b - a * a / n[:, None]).sum(axis=1)
    else:
        c = (b - a * a / n).sum()
    return np.maximum(c, 0.0)


def optimal_partitions(x, max_segments, min_len):
    """Exact DP: for each k <= max_segments, the minimum-SSE split into k segments.

    Returns ``{k: (cost, [start indices of segments 2..k])}`` for every
    feasible k.
    """
    n = len(x)
    s1, s2 = _prefix(x)
    inf = math.inf
    best = np.full((max_segments + 1, n + 1), inf)
    arg = np.zeros((max_segments + 1, n + 1), dtype=np.int64)
    for j in range(min_len, n + 1):
        best[1, j] = _seg_cost(s1, s2, 0, j)
    for k in range(2, max_segments + 1):
        for j in range(k * min_len, n + 1):
            i = np.arange((k - 1) * min_len, j - min_len + 1)
            total = best[k - 1, i] + _seg_cost(s1, s2, i, j)
            m = int(np.argmin(total))
            best[k, j] = total[m]
            arg[k, j] = i[m]
    out = {}
    for k in range(1, max_segments + 1):
        if not math.isfinite(best[k, n]):
            continue
        cuts, j = [], n
        for kk in range(k, 1, -1):
            j = int(arg[kk, j])
            cuts.append(j)
        out[k] = (float(best[k, n]), sorted(cuts))
    return out


def choose_partition(partitions, total_sse, penalty):
    """Pick k minimizing cost + (k - 1) * penalty * total_sse; ties go to fewer segments."""
    best_k, best_val = None, math.inf
    tol = 1e-9 * max(total_sse, 1e-300)
    for k in sorted(partitions):
        val = partitions[k][0] + (k - 1) * penalty * total_sse
        if val < best_val - tol:
            best_k, best_val = k, val
    return partitions[best_k][1]


def segment_phases(trace, max_phases=4, min_phase_len=3, penalty=0.05):
    """Split ``trace`` into at most ``max_phases`` piecewise-constant phases.

    The (read, write) pair is segmented jointly by exact dynamic programming
    over change points, minimizing total within-phase squared deviation. Each
    extra phase must pay ``penalty`` times the whole-trace squared deviation.
    """
    n = len(trace)
    if max_phases < 1 or min_phase_len < 1:
        raise SegmentationError("max_phases and min_phase_len must be >= 1")
    if n < max_phases * min_phase_len:
        raise SegmentationError(
            f"trace of {n} samples is too short for {max_phases} phases of >= {min_phase_len}"
        )
    x = np.column_stack((trace.read_bw, trace.write_bw)).astype(float)
    x = x - x.mean(axis=0)
    sse = float((x * x).sum())
    if np.ptp(x, axis=0).max() == 0 or sse == 0:
        cuts = []
    else:
        # common rescale keeps the objective's argmin and makes results scale-free
        x = x / math.sqrt(sse / n)
        parts = optimal_partitions(x, max_phases, min_phase_len)
        cuts = choose_partition(parts, float((x * x).sum()), penalty)
    edges = [0, *cuts, n]
    return [phase_stats(trace, (a, b - 1)) for a, b in zip(edges, edges[1:])]


def dominant_phase(phases):
    """The phase with the lowest read/write ratio, i.e. the write-heaviest."""
    return min(phases, key=lambda p: (p.rw_ratio, p.start_index))


def write_series_csv(trace, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("time_s", "read_mbps", "write_mbps"))
        for t, r, wr in zip(trace.timestamps, trace.read_bw, trace.write_bw):
            w.writerow((repr(float(t)), repr(float(r)), repr(float(wr))))
