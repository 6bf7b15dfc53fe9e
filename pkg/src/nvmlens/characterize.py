"""Sensitivity tiers, write-throttling risk, contention and cache metrics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import DomainError, InsufficientDataError


APP_PROFILES_PATH = Path(__file__).with_name("data") / "app_profiles.csv"


class MetricKind(str, Enum):
    TIME = "TimeLowerBetter"
    RATE = "RateHigherBetter"


class TierLabel(str, Enum):
    INSENSITIVE = "Insensitive"
    SCALED = "Scaled"
    BOTTLENECKED = "Bottlenecked"


class Risk(str, Enum):
    LOW = "Low"
    HIGH = "High"


@dataclass
class Thresholds:
    """Every tunable cut used by this module; embedded verbatim in reports."""

    tier_low: float = 1.5
    tier_high: float = 5.0
    borderline_band: float = 0.10
    bw_floor: float = 500.0
    write_thresh: float = 2000.0
    rw_thresh: float = 2.5
    gap_thresh: float = 0.15

    def as_dict(self):
        return dict(self.__dict__)


@dataclass(frozen=True)
class AppMetrics:
    total_bw: float | None = None
    read_bw: float | None = None
    write_bw: float | None = None
    slowdown: float | None = None
    name: str = ""

    def __post_init__(self):
        if self.slowdown is not None and not self.slowdown > 0:
            raise DomainError(f"slowdown must be > 0, got {self.slowdown}")
        for v in (self.total_bw, self.read_bw, self.write_bw):
            if v is not None and v < 0:
                raise DomainError("bandwidths must be >= 0")
        if self.has_bandwidth and self.total_bw is not None:
            s = self.read_bw + self.write_bw
            if abs(s - self.total_bw) > 0.01 * self.total_bw:
                raise DomainError(
                    f"{self.name or 'metrics'}: read + write = {s} differs from total "
                    f"{self.total_bw} by more than 1%"
                )

    @property
    def has_bandwidth(self):
        return self.read_bw is not None and self.write_bw is not None

    @property
    def write_ratio(self):
        return write_ratio(self.read_bw, self.write_bw)

    @property
    def rw_ratio(self):
        return self.read_bw / self.write_bw if self.write_bw > 0 else math.inf


@dataclass(frozen=True)
class Tier:
    label: TierLabel
    borderline: bool = False
    source: str = "slowdown"  # or "bandwidth" when no DRAM baseline exists
    advisory: TierLabel | None = None

    def as_dict(self):
        return {
            "label": self.label.value,
            "borderline": self.borderline,
            "source": self.source,
            "advisory": self.advisory.value if self.advisory else None,
        }


@dataclass(frozen=True)
class ContentionVerdict:
    ratio_dram: float
    ratio_uncached: float
    ratio_cached: float | None = None
    contended_on_nvm: bool = False

    @property
    def gap(self):
        return self.ratio_dram - self.ratio_uncached

    def as_dict(self):
        return {
            "ratio_dram": self.ratio_dram,
            "ratio_cached": self.ratio_cached,
            "ratio_uncached": self.ratio_uncached,
            "gap": self.gap,
            "contended_on_nvm": self.contended_on_nvm,
        }


def write_ratio(read_bw, write_bw):
    if read_bw < 0 or write_bw < 0:
        raise DomainError("bandwidths must be >= 0")
    total = read_bw + write_bw
    return write_bw / total if total > 0 else 0.0


def advisory_tier(m, th=None):
    """Tier guess from bandwidth alone, for runs without a DRAM baseline."""
    th = th or Thresholds()
    total = m.read_bw + m.write_bw
    if total < th.bw_floor:
        return TierLabel.INSENSITIVE
    if m.rw_ratio < th.rw_thresh and m.write_bw > th.write_thresh:
        return TierLabel.BOTTLENECKED
    return TierLabel.SCALED


def classify_tier(m, th=None):
    th = th or Thresholds()
    adv = advisory_tier(m, th) if m.has_bandwidth else None
    if m.slowdown is None:
        if adv is None:
            raise InsufficientDataError(f"{m.name or 'metrics'}: need slowdown or bandwidth")
        return Tier(adv, borderline=False, source="bandwidth", advisory=adv)
    s = m.slowdown
    if s <= th.tier_low:
        label = TierLabel.INSENSITIVE
    elif s <= th.tier_high:
        label = TierLabel.SCALED
    else:
        label = TierLabel.BOTTLENECKED
    near = any(abs(s - b) <= th.borderline_band * b for b in (th.tier_low, th.tier_high))
    return Tier(label, borderline=near, source="slowdown", advisory=adv)


def detect_write_throttling(phase, write_thresh=2000.0, rw_thresh=2.5):
    """High when a DRAM-side phase writes fast and reads comparatively little."""
    if phase.avg_write_bw > write_thresh and phase.rw_ratio < rw_thresh:
        return Risk.HIGH
    return Risk.LOW


def _check_positive(*vals):
    for v in vals:
        if not v > 0:
            raise DomainError(f"performance values must be > 0, got {v}")


def relative_performance(perf, baseline, metric_kind):
    """``perf`` relative to ``baseline`` oriented so that > 1 means better."""
    _check_positive(perf, baseline)
    if MetricKind(metric_kind) is MetricKind.RATE:
        return perf / baseline
    return baseline / perf


def slowdown(perf_nvm, perf_dram, metric_kind):
    """Uncached-NVM slowdown vs DRAM (time ratio, or FoM_dram / FoM_nvm)."""
    return 1.0 / relative_performance(perf_nvm, perf_dram, metric_kind)


def contention_ratio(perf_high, perf_low, metric_kind):
    return relative_performance(perf_high, perf_low, metric_kind)


def contention_flag(v, gap_threshold=0.15):
    return v.ratio_uncached < 1 and (v.ratio_dram - v.ratio_uncached) > gap_threshold


def contention_verdict(ratio_dram, ratio_uncached, ratio_cached=None, gap_threshold=0.15):
    v = ContentionVerdict(ratio_dram, ratio_uncached, ratio_cached)
    _check_positive(ratio_dram, ratio_uncached, *(() if ratio_cached is None else (ratio_cached,)))
    return ContentionVerdict(ratio_dram, ratio_uncached, ratio_cached,
                             contention_flag(v, gap_threshold))


def cache_efficiency(perf_cached, perf_dram, metric_kind):
    """Cached-NVM performance relative to DRAM-only; not clamped at 1."""
    return relative_performance(perf_cached, perf_dram, metric_kind)


def cached_speedup(perf_cached, perf_uncached, metric_kind):
    return relative_performance(perf_cached, perf_uncached, metric_kind)


@dataclass
class Characterization:
    """Everything known about one workload, as written to a report."""

    name: str
    metrics: AppMetrics
    tier: Tier
    throttling: list = field(default_factory=list)
    contention: ContentionVerdict | None = None

    def as_dict(self):
        m = self.metrics
        out = {
            "app": self.name,
            "total_bw": m.total_bw if m.total_bw is not None else (
                m.read_bw + m.write_bw if m.has_bandwidth else None),
            "read_bw": m.read_bw,
            "write_bw": m.write_bw,
            "write_ratio": m.write_ratio if m.has_bandwidth else None,
            "slowdown": m.slowdown,
            "tier": self.tier.as_dict(),
        }
        if self.throttling:
            out["throttling"] = [r.value for r in self.throttling]
        if self.contention is not None:
            out["contention"] = self.contention.as_dict()
        return out


def load_metrics(path=APP_PROFILES_PATH):
    """Read ``AppMetrics`` rows from a CSV with an ``app`` column.

    Optional columns: ``total_bw``, ``read_bw``, ``write_bw``, ``slowdown``.
    Blank cells mean unknown. Defaults to the bundled eight-application table.
    """
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            def num(k):
                v = row.get(k)
                return float(v) if v not in (None, "") else None

            out.append(AppMetrics(total_bw=num("total_bw"), read_bw=num("read_bw"),
                                  write_bw=num("write_bw"), slowdown=num("slowdown"),
                                  name=row["app"]))
    return out
