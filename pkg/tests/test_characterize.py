import math

import pytest
from hypothesis import given, settings, strategies as st

from nvmlens.bandwidth import Phase
from nvmlens.characterize import (
    AppMetrics,
    MetricKind,
    Risk,
    TierLabel,
    Thresholds,
    cache_efficiency,
    cached_speedup,
    classify_tier,
    contention_ratio,
    contention_verdict,
    detect_write_throttling,
    load_metrics,
    slowdown,
    write_ratio,
)
from nvmlens.errors import DomainError, InsufficientDataError

# Printed write-ratio column and tier shading of the eight-application table.
TABLE = {
    "HACC": (36, TierLabel.INSENSITIVE),
    "Laghos": (25, TierLabel.INSENSITIVE),
    "Scalapack": (16, TierLabel.SCALED),
    "XSBench": (0, TierLabel.SCALED),
    "Hypre": (8, TierLabel.SCALED),
    "SuperLU": (25, TierLabel.SCALED),
    "BoxLib": (21, TierLabel.BOTTLENECKED),
    "FFT": (39, TierLabel.BOTTLENECKED),
}


def phase(read, write):
    return Phase(0, 0, read, write, write, read / write if write > 0 else math.inf, 1.0)


def test_table_rows():
    rows = load_metrics()
    assert [m.name for m in rows] == list(TABLE)
    for m in rows:
        pct, label = TABLE[m.name]
        assert abs(100 * m.write_ratio - pct) <= 1.0, m.name
        assert classify_tier(m).label is label, m.name
    by = {m.name: classify_tier(m) for m in rows}
    assert by["SuperLU"].borderline
    assert not by["HACC"].borderline and not by["FFT"].borderline


def test_write_ratio_examples():
    assert write_ratio(10104, 1880) == pytest.approx(0.157, abs=5e-4)
    assert write_ratio(3633, 2350) == pytest.approx(0.393, abs=5e-4)
    assert write_ratio(0, 0) == 0
    with pytest.raises(DomainError):
        write_ratio(-1, 2)


@settings(max_examples=100)
@given(st.floats(0, 1e7), st.floats(0, 1e7))
def test_write_ratio_bounds(r, w):
    x = write_ratio(r, w)
    assert 0 <= x <= 1
    assert write_ratio(r, 0) == 0
    if w > 0:
        assert write_ratio(0, w) == 1


def test_metrics_validation():
    with pytest.raises(DomainError):
        AppMetrics(total_bw=100, read_bw=50, write_bw=20)
    with pytest.raises(DomainError):
        AppMetrics(slowdown=0)
    with pytest.raises(InsufficientDataError):
        classify_tier(AppMetrics(name="x"))


def test_bandwidth_only_classification():
    t = classify_tier(AppMetrics(read_bw=3633, write_bw=2350))
    assert t.source == "bandwidth" and t.label is TierLabel.BOTTLENECKED
    assert classify_tier(AppMetrics(read_bw=25, write_bw=14)).label is TierLabel.INSENSITIVE
    assert classify_tier(AppMetrics(read_bw=10519, write_bw=894)).label is TierLabel.SCALED


def test_thresholds_override():
    th = Thresholds(tier_high=4.0)
    assert classify_tier(AppMetrics(slowdown=4.67), th).label is TierLabel.BOTTLENECKED


ORDER = [TierLabel.INSENSITIVE, TierLabel.SCALED, TierLabel.BOTTLENECKED]


@settings(max_examples=200)
@given(st.floats(1e-3, 100), st.floats(1e-3, 100))
def test_tier_monotone(a, b):
    lo, hi = sorted((a, b))
    assert ORDER.index(classify_tier(AppMetrics(slowdown=lo)).label) <= \
        ORDER.index(classify_tier(AppMetrics(slowdown=hi)).label)


def test_throttling_examples():
    assert detect_write_throttling(phase(54000, 33000)) is Risk.HIGH
    assert detect_write_throttling(phase(3900, 1300)) is Risk.LOW
    assert detect_write_throttling(phase(5000, 0)) is Risk.LOW


@settings(max_examples=200)
@given(st.floats(0, 1e5), st.floats(0, 1e5), st.floats(0, 1e5), st.floats(0, 1e5))
def test_throttling_monotone(r, w, dw, dr):
    before = detect_write_throttling(phase(r, w))
    # more write, or less read (hence lower rw), never lowers the risk
    after = detect_write_throttling(phase(max(r - dr, 0.0), w + dw))
    if before is Risk.HIGH:
        assert after is Risk.HIGH


def test_contention():
    assert contention_ratio(100, 100, MetricKind.TIME) == 1.0
    assert contention_ratio(1.3, 1.0, MetricKind.RATE) == pytest.approx(1.3)
    assert contention_ratio(10.0, 13.0, MetricKind.TIME) == pytest.approx(1.3)
    assert contention_verdict(0.61, 0.37).contended_on_nvm
    assert not contention_verdict(0.61, 0.60).contended_on_nvm
    assert not contention_verdict(1.2, 1.2).contended_on_nvm
    assert contention_verdict(0.61, 0.37).gap == pytest.approx(0.24)
    with pytest.raises(DomainError):
        contention_ratio(0, 1, MetricKind.RATE)


def test_cache_metrics():
    assert cache_efficiency(5.0, 5.0, MetricKind.TIME) == 1.0
    assert cache_efficiency(105.0, 100.0, MetricKind.TIME) == pytest.approx(100 / 105)
    assert cache_efficiency(95.0, 100.0, MetricKind.RATE) == pytest.approx(0.95)
    assert cached_speedup(50.0, 100.0, MetricKind.TIME) == pytest.approx(2.0)
    assert cached_speedup(3.0, 3.0, MetricKind.RATE) == 1.0
    assert slowdown(1.0, 4.94, MetricKind.RATE) == pytest.approx(4.94)
    assert slowdown(8.94, 1.0, MetricKind.TIME) == pytest.approx(8.94)


@settings(max_examples=100)
@given(st.floats(1e-3, 1e6), st.floats(1e-3, 1e6), st.floats(1e-3, 1e3),
       st.sampled_from(list(MetricKind)))
def test_ratios_scale_invariant(a, b, k, kind):
    for f in (contention_ratio, cache_efficiency, cached_speedup):
        assert f(a * k, b * k, kind) == pytest.approx(f(a, b, kind), rel=1e-12)
