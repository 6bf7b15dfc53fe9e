"""Write-aware DRAM placement for uncached-NVM heterogeneous memory."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from . import memsim
from .errors import DomainError, PlacementError, TraceFormatError, TraceParseError
from .memsim import DataObject
from .trace_io import Mode

MIB = 1 << 20
TOTAL_ROW = "__total__"


class PlacementStrategy(str, Enum):
    GREEDY = "GreedyDensity"
    EXACT = "ExactDP"


@dataclass(frozen=True)
class PlacementPlan:
    in_dram: frozenset
    dram_used_bytes: int
    captured_write_fraction: float
    captured_read_fraction: float
    budget_bytes: int
    strategy: PlacementStrategy

    def as_dict(self):
        return {
            "strategy": self.strategy.value,
            "in_dram": sorted(self.in_dram),
            "dram_used_bytes": self.dram_used_bytes,
            "budget_bytes": self.budget_bytes,
            "captured_write_fraction": self.captured_write_fraction,
            "captured_read_fraction": self.captured_read_fraction,
        }


def _plan(objects, chosen, budget, strategy):
    sel = [o for o in objects if o.name in chosen]
    return PlacementPlan(
        in_dram=frozenset(chosen),
        dram_used_bytes=sum(o.size_bytes for o in sel),
        captured_write_fraction=min(sum(o.write_share for o in sel), 1.0),
        captured_read_fraction=min(sum(o.read_share for o in sel), 1.0),
        budget_bytes=budget,
        strategy=strategy,
    )


def _greedy(objects, budget):
    def density(o):
        return o.write_share / o.size_bytes if o.size_bytes else float("inf")

    order = sorted(objects, key=lambda o: (-density(o), o.name))
    used, chosen = 0, set()
    for o in order:
        if used + o.size_bytes <= budget:
            chosen.add(o.name)
            used += o.size_bytes
    return chosen


def _exact(objects, budget, granule):
    # sizes round up to the granule, so a quantized-feasible set is truly feasible
    units = [-(-o.size_bytes // granule) for o in objects]
    cap = budget // granule
    n = len(objects)
    vals = [o.write_share for o in objects]
    best = np.zeros(cap + 1)
    take = np.zeros((n, cap + 1), dtype=bool)
    for i in range(n):
        u, v = units[i], vals[i]
        if v <= 0 or u > cap:
            continue
        cand = np.full(cap + 1, -1.0)
        cand[u:] = best[:cap + 1 - u] + v
        better = cand > best + 1e-15
        take[i] = better
        best = np.where(better, cand, best)
    chosen, c = set(), int(np.argmax(best))
    for i in range(n - 1, -1, -1):
        if take[i, c]:
            chosen.add(objects[i].name)
            c -= units[i]
    return chosen


def advise(objects, budget_bytes, strategy=PlacementStrategy.EXACT, granule=MIB):
    """Choose DRAM-resident objects that capture the most write traffic.

    ``GreedyDensity`` packs by write share per byte (ties by name).
    ``ExactDP`` solves the 0/1 knapsack on sizes rounded up to ``granule``
    bytes. The objective is captured write share only. The runtime effect is
    evaluated separately by :func:`estimate`.
    """
    if budget_bytes < 0:
        raise DomainError("budget must be >= 0")
    if granule < 1:
        raise DomainError("granule must be >= 1 byte")
    strategy = PlacementStrategy(strategy)
    objects = list(objects)
    names = [o.name for o in objects]
    if len(set(names)) != len(names):
        raise PlacementError("object names must be unique")
    if strategy is PlacementStrategy.GREEDY:
        chosen = _greedy(objects, budget_bytes)
    else:
        chosen = _exact(objects, budget_bytes, granule)
        # leftover room goes to the rest in name order; no read-side optimization
        used = sum(o.size_bytes for o in objects if o.name in chosen)
        for o in sorted(objects, key=lambda o: o.name):
            if o.name not in chosen and used + o.size_bytes <= budget_bytes:
                chosen.add(o.name)
                used += o.size_bytes
    return _plan(objects, chosen, int(budget_bytes), strategy)


def estimate(plan, spec, cfg):
    """Simulated runtime of ``spec`` under ``plan`` and speedup over all-NVM."""
    if cfg.mode is not Mode.UNCACHED:
        raise PlacementError("placement estimates need an UncachedNvm config")
    known = {o.name for o in spec.objects}
    unknown = set(plan.in_dram) - known
    if unknown:
        raise PlacementError(f"plan references unknown objects: {sorted(unknown)}")
    base = memsim.runtime(spec, cfg)
    placed = memsim.runtime(spec, cfg, in_dram=plan.in_dram)
    return {"runtime_s": placed, "all_nvm_runtime_s": base, "speedup_vs_all_nvm": base / placed}


def profile_objects(path):
    """Read a per-object traffic file into ``DataObject`` shares.

    Format: header ``name,size_bytes,read_bytes,write_bytes``. Shares are
    bytes over the column totals. An optional ``__total__`` row gives the
    application-wide totals instead, which lets the file describe only some
    of the traffic.
    """
    rows, total = [], None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["name", "size_bytes",
                                                             "read_bytes", "write_bytes"]:
            raise TraceParseError(path, 1, "expected header name,size_bytes,read_bytes,write_bytes")
        for row in reader:
            if not row:
                continue
            if len(row) != 4:
                raise TraceParseError(path, reader.line_num, f"expected 4 fields, got {len(row)}")
            try:
                vals = [int(x) for x in row[1:]]
            except ValueError:
                raise TraceParseError(path, reader.line_num, "non-integer field") from None
            if min(vals) < 0:
                raise TraceParseError(path, reader.line_num, "negative value")
            if row[0].strip() == TOTAL_ROW:
                total = vals[1:]
            else:
                rows.append((row[0].strip(), *vals))
    if total is None:
        total = [sum(r[2] for r in rows), sum(r[3] for r in rows)]
    out = []
    for name, size, rb, wb in rows:
        rs = rb / total[0] if total[0] else 0.0
        ws = wb / total[1] if total[1] else 0.0
        if rs > 1 or ws > 1:
            raise TraceFormatError(f"{path}: object {name} exceeds the traffic total")
        out.append(DataObject(name, size, rs, ws))
    if sum(o.read_share for o in out) > 1 + 1e-9 or sum(o.write_share for o in out) > 1 + 1e-9:
        raise TraceFormatError(f"{path}: object shares sum above 1")
    return out


def budget_sweep(objects, budgets, strategy=PlacementStrategy.EXACT, granule=MIB):
    return [advise(objects, b, strategy, granule) for b in budgets]


def with_objects(spec, objects):
    return replace(spec, objects=tuple(objects))
