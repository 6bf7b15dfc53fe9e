from pathlib import Path

import pytest

from nvmlens.trace_io import CounterSample, CounterTrace, DeviceKind, Mode

MEM_HEADER = "timestamp_ms,socket,device_kind,device_id,read_bytes,write_bytes\n"


def write_files(tmp_path, rows, meta, core=None, name="t"):
    """Write a raw trace fixture; ``rows`` are CSV lines without header."""
    path = Path(tmp_path) / f"{name}.csv"
    path.write_text(MEM_HEADER + "".join(r + "\n" for r in rows))
    (Path(tmp_path) / f"{name}.meta").write_text(
        "".join(f"{k}={v}\n" for k, v in meta.items()))
    if core is not None:
        (Path(tmp_path) / f"{name}.core.csv").write_text(
            "timestamp_ms,p0,p1,p2,p3,p4,p5\n" + "".join(r + "\n" for r in core))
    return path


def meta(mode="DramOnly", start=0, end=1000, concurrency=24, footprint=1 << 30):
    return {"mode": mode, "concurrency": concurrency, "footprint_bytes": footprint,
            "window_start_ms": start, "window_end_ms": end}


def make_trace(points, mode=Mode.UNCACHED, window=None):
    """``points``: {(kind, id): [(t, r, w), ...]} -> CounterTrace."""
    samples = [CounterSample(t, 0, kind, dev, r, w)
               for (kind, dev), seq in points.items() for t, r, w in seq]
    ts = [s.timestamp for s in samples]
    return CounterTrace(samples=samples, mode=mode,
                        window=window or (min(ts), max(ts)))


@pytest.fixture
def dram():
    return DeviceKind.DRAM


@pytest.fixture
def nvm():
    return DeviceKind.NVM


# -- acceptance reporting ----------------------------------------------------

ACCEPTANCE = []
_SESSION = {}


def pytest_sessionstart(session):
    import time

    _SESSION["t0"] = time.perf_counter()


def record(criterion, ok, detail):
    """Log one acceptance line; the caller still asserts ``ok``."""
    line = f"{'PASS' if ok else 'FAIL'}  criterion {criterion}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    import time

    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.write_sep("=", "acceptance criteria")
    for line in ACCEPTANCE:
        tr.write_line(line)
    elapsed = time.perf_counter() - _SESSION.get("t0", time.perf_counter())
    tr.write_line(f"{'PASS' if elapsed <= 300 else 'FAIL'}  criterion 9 (runtime): "
                  f"whole session took {elapsed:.1f} s (limit 300 s)")
