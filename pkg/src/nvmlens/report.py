"""JSON report writer shared by the CLI subcommands.

Non-finite floats are written as the strings ``"inf"``, ``"-inf"`` and
``"nan"`` so reports stay strict JSON.
"""

from __future__ import annotations

import datetime as _dt
import json
import math
from enum import Enum
from pathlib import Path

import numpy as np

from . import __version__

TOOL = "nvmlens"


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [jsonable(v) for v in items]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, Path):
        return str(obj)
    return obj


def manifest(subcommand, inputs, overrides, out_dir, seed, deterministic):
    m = {
        "tool": TOOL,
        "version": __version__,
        "subcommand": subcommand,
        "inputs": [str(p) for p in inputs],
        "config": overrides,
        "out": str(out_dir),
        "seed": seed,
    }
    if not deterministic:
        m["created"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return m


def dumps(doc):
    return json.dumps(jsonable(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_report(path, doc):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(doc))
    return path


def read_report(path):
    return json.loads(Path(path).read_text())


def to_float(v):
    if isinstance(v, str):
        return float(v)
    return v
