"""``nvmlens`` command line: simulate, analyze, characterize, predict, place."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import bandwidth as bw
from . import characterize as ch
from . import memsim, placement, predictor, report, workloads
from .errors import NvmLensError
from .trace_io import Mode, account_traffic, parse_trace, read_core_samples, sidecar_paths

DEFAULTS = {
    "tier_low": 1.5,
    "tier_high": 5.0,
    "write_thresh": 2000.0,
    "rw_thresh": 2.5,
    "gap_thresh": 0.15,
    "alpha": 0.05,
    "penalty": 0.05,
    "min_phase_len": 3,
    "max_phases": 4,
    "smooth": 1,
    "window_len": 1,
    "granule": placement.MIB,
}
FLAG_KEYS = {
    "tier_low": float, "tier_high": float, "write_thresh": float, "rw_thresh": float,
    "gap_thresh": float, "alpha": float, "penalty": float, "min_phase_len": int,
    "max_phases": int, "smooth": int, "window_len": int, "granule": int,
}
PRESETS = {
    "superlu-like": workloads.superlu_like,
    "laghos-like": workloads.laghos_like,
    "ft-like": workloads.ft_like,
    "boxlib-like": workloads.boxlib_like,
    "xsbench-like": workloads.xsbench_like,
    "scalapack-like": workloads.scalapack_like,
}


class UsageError(Exception):
    pass


def load_config(args):
    cfg = dict(DEFAULTS)
    path = args.config or os.environ.get("NVMLENS_CONFIG")
    source = None
    if path:
        data = json.loads(Path(path).read_text())
        unknown = set(data) - set(DEFAULTS) - {"memory"}
        if unknown:
            raise NvmLensError(f"{path}: unknown config keys {sorted(unknown)}")
        cfg.update(data)
        source = str(path)
    for key, typ in FLAG_KEYS.items():
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = typ(val)
    return cfg, source


def thresholds(cfg):
    return ch.Thresholds(tier_low=cfg["tier_low"], tier_high=cfg["tier_high"],
                         write_thresh=cfg["write_thresh"], rw_thresh=cfg["rw_thresh"],
                         gap_thresh=cfg["gap_thresh"])


def memory_config(args, cfg, mode=None):
    d = dict(cfg.get("memory", {}))
    if getattr(args, "memory", None):
        d.update(json.loads(Path(args.memory).read_text()))
    if mode is not None:
        d["mode"] = mode
    return memsim.MemoryConfig.from_dict(d)


def finish(args, name, body, inputs, cfg, source):
    out = Path(args.out)
    doc = {
        "manifest": report.manifest(args.command, inputs, {"source": source, **cfg}, out,
                                    args.seed, args.deterministic),
        **body,
    }
    path = report.write_report(out / f"{name}.json", doc)
    print(f"wrote {path}")
    return doc


# -- subcommands -------------------------------------------------------------


def cmd_simulate(args, cfg, source):
    if args.workload:
        spec = memsim.load_json(args.workload, memsim.WorkloadSpec)
    elif args.preset:
        spec = PRESETS[args.preset]()
    else:
        raise UsageError("simulate needs --workload or --preset")
    if args.seed is not None:
        spec = replace(spec, rng_seed=args.seed)
    if args.concurrency:
        spec = memsim.with_concurrency(spec, args.concurrency)
    mcfg = memory_config(args, cfg, args.mode)
    in_dram = tuple(args.in_dram.split(",")) if args.in_dram else ()
    res = memsim.simulate(spec, mcfg, in_dram=in_dram)
    out = Path(args.out)
    paths = memsim.emit_trace(res, out / f"{args.name}.csv")
    if spec.objects:
        memsim.write_object_profile(res, spec, out / f"{args.name}.objects.csv")
    for p in paths:
        print(f"wrote {p}")
    body = {"simulate": {"workload": spec.to_dict(), "memory": mcfg.to_dict(),
                         "in_dram": sorted(in_dram), **res.summary()}}
    finish(args, f"{args.name}.simulate", body, [args.workload or args.preset], cfg, source)


def analyze_trace(path, cfg):
    trace = parse_trace(path)
    series = account_traffic(trace)
    raw = bw.compute_bandwidth(series)
    smooth = bw.moving_average(raw, cfg["smooth"])
    max_phases = min(cfg["max_phases"], max(1, len(raw) // cfg["min_phase_len"]))
    phases = bw.segment_phases(smooth, max_phases, cfg["min_phase_len"], cfg["penalty"])
    dur = raw.durations
    avg_r = float((raw.read_bw * dur).sum() / dur.sum())
    avg_w = float((raw.write_bw * dur).sum() / dur.sum())
    return trace, raw, phases, {
        "mode": trace.mode.value,
        "concurrency": trace.concurrency,
        "footprint_bytes": trace.footprint_bytes,
        "window_ms": list(trace.window),
        "runtime_s": raw.total_duration,
        "avg_read_bw": avg_r,
        "avg_write_bw": avg_w,
        "write_ratio": ch.write_ratio(avg_r, avg_w),
        "accounted_bytes": {"read": series.totals()[0], "write": series.totals()[1]},
        "device_bytes": {k: {"read": int(v[0].sum()), "write": int(v[1].sum())}
                         for k, v in series.by_kind.items()},
        "phases": [p.as_dict() for p in phases],
        "dominant_phase_share": bw.dominant_phase(phases).duration_share,
    }


def cmd_analyze(args, cfg, source):
    _, raw, phases, body = analyze_trace(args.trace, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    bw.write_series_csv(raw, out / "bandwidth.csv")
    body["series"] = {"columns": ["time_s", "read_mbps", "write_mbps"],
                      "time_s": raw.timestamps, "read_mbps": raw.read_bw,
                      "write_mbps": raw.write_bw}
    body["analysis_params"] = {k: cfg[k] for k in ("smooth", "max_phases", "min_phase_len",
                                                   "penalty")}
    for p in phases:
        print(f"phase [{p.start_index:>4}, {p.end_index:>4}] share {p.duration_share:6.3f} "
              f"read {p.avg_read_bw:10.1f} write {p.avg_write_bw:10.1f} MB/s")
    finish(args, "analysis", {"analysis": body}, [args.trace], cfg, source)


def cmd_classify(args, cfg, source):
    th = thresholds(cfg)
    inputs = []
    metrics = []
    if args.trace:
        inputs.append(args.trace)
        _, _, _, nvm = analyze_trace(args.trace, cfg)
        sd = None
        if args.baseline:
            inputs.append(args.baseline)
            _, _, _, dram = analyze_trace(args.baseline, cfg)
            sd = nvm["runtime_s"] / dram["runtime_s"]
        metrics.append(ch.AppMetrics(read_bw=nvm["avg_read_bw"], write_bw=nvm["avg_write_bw"],
                                     slowdown=sd, name=args.name or Path(args.trace).stem))
    else:
        inputs.append(args.metrics or "builtin:app_profiles")
        metrics.extend(ch.load_metrics(args.metrics or ch.APP_PROFILES_PATH))
    rows = []
    for m in metrics:
        tier = ch.classify_tier(m, th)
        rows.append(ch.Characterization(m.name, m, tier).as_dict())
        wr = f"{100 * m.write_ratio:5.1f}%" if m.has_bandwidth else "    -"
        sd = f"{m.slowdown:6.2f}" if m.slowdown is not None else "     -"
        print(f"{m.name:<12} write {wr}  slowdown {sd}  {tier.label.value}"
              f"{' (borderline)' if tier.borderline else ''}")
    finish(args, "classify", {"characterize": {"thresholds": th.as_dict(), "apps": rows}},
           inputs, cfg, source)


def cmd_throttle(args, cfg, source):
    trace, _, phases, body = analyze_trace(args.trace, cfg)
    risks = [ch.detect_write_throttling(p, cfg["write_thresh"], cfg["rw_thresh"])
             for p in phases]
    for p, r in zip(body["phases"], risks):
        p["risk"] = r.value
    body["overall_risk"] = (ch.Risk.HIGH if ch.Risk.HIGH in risks else ch.Risk.LOW).value
    body["precondition_ok"] = trace.mode is Mode.DRAM_ONLY
    if trace.mode is not Mode.DRAM_ONLY:
        print(f"warning: throttling risk is defined on DRAM-mode traces; got {trace.mode.value}",
              file=sys.stderr)
    body["thresholds"] = {"write_thresh": cfg["write_thresh"], "rw_thresh": cfg["rw_thresh"]}
    for i, (p, r) in enumerate(zip(phases, risks)):
        print(f"phase {i}: write {p.avg_write_bw:9.1f} MB/s  r/w {p.rw_ratio:6.2f}  risk {r.value}")
    finish(args, "throttle", {"throttle": body}, [args.trace], cfg, source)


def cmd_contention(args, cfg, source):
    table = {}
    with open(args.perf, newline="") as fh:
        for row in csv.DictReader(fh):
            key = (row["app"], Mode(row["config"]).value)
            table.setdefault(key, []).append(
                (int(row["concurrency"]), float(row["perf"]), ch.MetricKind(row["metric_kind"])))
    apps = sorted({a for a, _ in table})
    out = []
    for app in apps:
        ratios = {}
        for mode in Mode:
            rows = sorted(table.get((app, mode.value), []))
            if len(rows) < 2:
                continue
            (_, lo, kind), (_, hi, _) = rows[0], rows[-1]
            ratios[mode.value] = ch.contention_ratio(hi, lo, kind)
        entry = {"app": app, "ratios": ratios}
        if Mode.DRAM_ONLY.value in ratios and Mode.UNCACHED.value in ratios:
            v = ch.contention_verdict(ratios[Mode.DRAM_ONLY.value], ratios[Mode.UNCACHED.value],
                                      ratios.get(Mode.CACHED.value), cfg["gap_thresh"])
            entry["verdict"] = v.as_dict()
        out.append(entry)
        cells = "  ".join(f"{m[:6]} {r:5.2f}" for m, r in ratios.items())
        flag = entry.get("verdict", {}).get("contended_on_nvm")
        print(f"{app:<12} {cells}  contended={flag}")
    finish(args, "contention", {"contention": {"gap_thresh": cfg["gap_thresh"], "apps": out}},
           [args.perf], cfg, source)


def cmd_cache_metrics(args, cfg, source):
    out = []
    with open(args.perf, newline="") as fh:
        for row in csv.DictReader(fh):
            kind = ch.MetricKind(row["metric_kind"])
            entry = {"app": row["app"], "metric_kind": kind.value}
            d, c, u = (row.get(k) or None for k in ("perf_dram", "perf_cached", "perf_uncached"))
            if c and d:
                entry["cache_efficiency"] = ch.cache_efficiency(float(c), float(d), kind)
            if c and u:
                entry["cached_speedup"] = ch.cached_speedup(float(c), float(u), kind)
            out.append(entry)
            print(f"{row['app']:<12} efficiency {entry.get('cache_efficiency', '-')!s:>8}  "
                  f"speedup {entry.get('cached_speedup', '-')!s:>8}")
    finish(args, "cache_metrics", {"cache_metrics": out}, [args.perf], cfg, source)


def _core(path):
    path = Path(path)
    if path.name.endswith(".core.csv"):
        return read_core_samples(path)
    core_path, _ = sidecar_paths(path)
    return read_core_samples(core_path)


def cmd_predict_train(args, cfg, source):
    feats = []
    for p in args.core:
        feats.extend(predictor.windowed_features(_core(p), cfg["window_len"]))
    y = [f.ipc_s for f in feats]
    model = predictor.fit_ipc_model(feats, y, cfg["alpha"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    predictor.save_model(model, out / "model.json")
    print(f"included {model.included}  r^2 {model.r_squared:.4f}  removed {model.removed}")
    finish(args, "predict_train", {"predict_train": {
        "n_samples": len(feats), "window_len": cfg["window_len"], "alpha": cfg["alpha"],
        "model": model.as_dict()}}, args.core, cfg, source)


def cmd_predict_eval(args, cfg, source):
    model = predictor.load_model(args.model)
    rows = []
    for p in args.core:
        feats = predictor.windowed_features(_core(p), cfg["window_len"])
        acc = [predictor.accuracy(predictor.predict_ipc(model, f), f.ipc_s) for f in feats]
        rows.append({"input": str(p), "n": len(acc), "mean_accuracy": float(np.mean(acc)),
                     "min_accuracy": float(np.min(acc)),
                     "observed_ipc": float(np.mean([f.ipc_s for f in feats]))})
        print(f"{p}: mean accuracy {np.mean(acc):.4f} over {len(acc)} windows")
    finish(args, "predict_eval", {"predict_eval": {
        "model": str(args.model), "rows": rows,
        "table": {"columns": ["input", "mean_accuracy"],
                  "rows": [[r["input"], r["mean_accuracy"]] for r in rows]}}},
        [args.model, *args.core], cfg, source)


def cmd_place(args, cfg, source):
    objects = placement.profile_objects(args.objects)
    total = sum(o.size_bytes for o in objects)
    if args.budget is not None:
        budget = int(args.budget)
    elif args.budget_frac is not None:
        budget = int(args.budget_frac * total)
    else:
        raise UsageError("place needs --budget or --budget-frac")
    plans = {s.value: placement.advise(objects, budget, s, cfg["granule"])
             for s in placement.PlacementStrategy}
    body = {"budget_bytes": budget, "footprint_bytes": total, "granule": cfg["granule"],
            "plans": {k: v.as_dict() for k, v in plans.items()}}
    if args.workload:
        spec = memsim.load_json(args.workload, memsim.WorkloadSpec)
        spec = placement.with_objects(spec, objects)
        mcfg = memory_config(args, cfg, Mode.UNCACHED.value)
        body["estimates"] = {k: placement.estimate(v, spec, mcfg) for k, v in plans.items()}
    for k, v in plans.items():
        est = body.get("estimates", {}).get(k)
        extra = f"  speedup {est['speedup_vs_all_nvm']:.3f}" if est else ""
        print(f"{k:<14} dram {sorted(v.in_dram)}  writes captured "
              f"{v.captured_write_fraction:.3f}{extra}")
    finish(args, "place", {"place": body}, [args.objects] + ([args.workload] if args.workload
                                                              else []), cfg, source)


def _find_series(doc):
    if isinstance(doc, dict):
        if "series" in doc and isinstance(doc["series"], dict):
            return doc["series"]
        if "table" in doc and isinstance(doc["table"], dict):
            return doc["table"]
        for v in doc.values():
            found = _find_series(v)
            if found is not None:
                return found
    return None


def cmd_plot_data(args, cfg, source):
    doc = report.read_report(args.report)
    s = _find_series(doc)
    if s is None:
        raise NvmLensError(f"{args.report}: no plottable series or table")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dest = out / (args.name or f"{Path(args.report).stem}.csv")
    cols = s["columns"]
    rows = s["rows"] if "rows" in s else zip(*(s[c] for c in cols))
    with open(dest, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    print(f"wrote {dest}")


# -- parser ------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common")
    g.add_argument("--config", help="JSON config file (fallback: $NVMLENS_CONFIG)")
    g.add_argument("--out", default=".", help="output directory")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--deterministic", action="store_true",
                   help="omit wall-clock timestamps from reports")
    g.add_argument("--tier-low", dest="tier_low", type=float)
    g.add_argument("--tier-high", dest="tier_high", type=float)
    g.add_argument("--write-thresh", dest="write_thresh", type=float)
    g.add_argument("--rw-thresh", dest="rw_thresh", type=float)
    g.add_argument("--gap-thresh", dest="gap_thresh", type=float)
    g.add_argument("--alpha", type=float)
    g.add_argument("--penalty", type=float, help="segmentation penalty per extra phase")
    g.add_argument("--min-phase-len", dest="min_phase_len", type=int)
    g.add_argument("--max-phases", dest="max_phases", type=int)
    g.add_argument("--smooth", type=int, help="moving-average window before segmentation")
    g.add_argument("--window-len", dest="window_len", type=int,
                   help="core samples per prediction window")
    g.add_argument("--granule", type=int, help="knapsack size granule in bytes")

    p = argparse.ArgumentParser(prog="nvmlens", description=__doc__)
    p.add_argument("--version", action="version", version=f"nvmlens {__version__}")
    sub = p.add_subparsers(dest="command", metavar="subcommand")

    s = sub.add_parser("simulate", parents=[common], help="workload + memory config -> trace")
    s.add_argument("--workload")
    s.add_argument("--preset", choices=sorted(PRESETS))
    s.add_argument("--memory", help="memory-config JSON")
    s.add_argument("--mode", choices=[m.value for m in Mode])
    s.add_argument("--concurrency", type=int)
    s.add_argument("--in-dram", dest="in_dram", help="comma-separated objects placed in DRAM")
    s.add_argument("--name", default="run")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("analyze", parents=[common], help="trace -> bandwidth/phase report")
    s.add_argument("trace")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("classify", parents=[common], help="metrics or trace pair -> tiers")
    s.add_argument("--metrics", help="CSV app,total_bw,read_bw,write_bw,slowdown")
    s.add_argument("--trace", help="uncached-NVM trace")
    s.add_argument("--baseline", help="DRAM-only trace of the same run")
    s.add_argument("--name")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("throttle-check", parents=[common], help="DRAM trace -> per-phase risk")
    s.add_argument("trace")
    s.set_defaults(func=cmd_throttle)

    s = sub.add_parser("contention", parents=[common], help="perf table -> contention verdicts")
    s.add_argument("perf", help="CSV app,config,concurrency,perf,metric_kind")
    s.set_defaults(func=cmd_contention)

    s = sub.add_parser("cache-metrics", parents=[common], help="perf pairs -> efficiency/speedup")
    s.add_argument("perf", help="CSV app,metric_kind,perf_dram,perf_cached,perf_uncached")
    s.set_defaults(func=cmd_cache_metrics)

    s = sub.add_parser("predict-train", parents=[common], help="core samples -> model file")
    s.add_argument("core", nargs="+")
    s.set_defaults(func=cmd_predict_train)

    s = sub.add_parser("predict-eval", parents=[common], help="model + core samples -> accuracy")
    s.add_argument("--model", required=True)
    s.add_argument("core", nargs="+")
    s.set_defaults(func=cmd_predict_eval)

    s = sub.add_parser("place", parents=[common], help="object profile + budget -> plan")
    s.add_argument("--objects", required=True)
    s.add_argument("--budget", type=int, help="DRAM budget in bytes")
    s.add_argument("--budget-frac", dest="budget_frac", type=float,
                   help="DRAM budget as a fraction of total object size")
    s.add_argument("--workload", help="workload JSON for the runtime estimate")
    s.add_argument("--memory", help="memory-config JSON")
    s.set_defaults(func=cmd_place)

    s = sub.add_parser("plot-data", parents=[common], help="report -> delimited series")
    s.add_argument("report")
    s.add_argument("--name")
    s.set_defaults(func=cmd_plot_data)
    return p


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return 2
    try:
        cfg, source = load_config(args)
        args.func(args, cfg, source)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"nvmlens {args.command}: {e}", file=sys.stderr)
        return 2
    except (NvmLensError, OSError, ValueError, KeyError) as e:
        print(f"nvmlens {args.command}: error: {e}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
