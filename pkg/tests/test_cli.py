import json
import subprocess
import sys

import pytest

from nvmlens import memsim, workloads
from nvmlens.cli import run
from nvmlens.report import read_report


def call(capsys, *argv):
    code = run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_no_arguments_is_usage(capsys):
    code, _, err = call(capsys)
    assert code == 2 and "usage" in err


def test_unknown_subcommand_and_flag(capsys):
    assert call(capsys, "frobnicate")[0] == 2
    assert call(capsys, "classify", "--bogus")[0] == 2


def test_module_error_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("timestamp_ms,socket,device_kind,device_id,read_bytes,write_bytes\n0,0,X,0,0,0\n")
    (tmp_path / "bad.meta").write_text("mode=DramOnly\nconcurrency=1\nfootprint_bytes=1\n"
                                       "window_start_ms=0\nwindow_end_ms=0\n")
    code, _, err = call(capsys, "analyze", bad, "--out", tmp_path)
    assert code == 1 and "error" in err
    code, _, err = call(capsys, "analyze", tmp_path / "missing.csv", "--out", tmp_path)
    assert code == 1


def test_console_script_entry_point():
    r = subprocess.run([sys.executable, "-m", "nvmlens.cli"], capture_output=True, text=True)
    assert r.returncode == 2


def test_classify_table(tmp_path, capsys):
    code, out, _ = call(capsys, "classify", "--out", tmp_path, "--deterministic")
    assert code == 0
    assert "SuperLU" in out and "(borderline)" in out
    doc = read_report(tmp_path / "classify.json")
    apps = {a["app"]: a for a in doc["characterize"]["apps"]}
    assert apps["FFT"]["tier"]["label"] == "Bottlenecked"
    assert apps["SuperLU"]["tier"]["borderline"] is True
    assert doc["characterize"]["thresholds"]["tier_high"] == 5.0
    assert "created" not in doc["manifest"]


def test_config_precedence(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"tier_high": 4.0}))
    monkeypatch.setenv("NVMLENS_CONFIG", str(cfg))
    call(capsys, "classify", "--out", tmp_path / "a", "--deterministic")
    apps = {a["app"]: a for a in read_report(tmp_path / "a/classify.json")["characterize"]["apps"]}
    assert apps["Hypre"]["tier"]["label"] == "Bottlenecked"
    call(capsys, "classify", "--out", tmp_path / "b", "--deterministic", "--tier-high", "6")
    doc = read_report(tmp_path / "b/classify.json")
    assert doc["characterize"]["thresholds"]["tier_high"] == 6.0
    assert doc["manifest"]["config"]["source"] == str(cfg)
    cfg.write_text(json.dumps({"nonsense": 1}))
    assert call(capsys, "classify", "--out", tmp_path / "c")[0] == 1


def test_simulate_analyze_superlu(tmp_path, capsys):
    code, out, _ = call(capsys, "simulate", "--preset", "superlu-like", "--mode", "UncachedNvm",
                        "--out", tmp_path, "--seed", 1, "--deterministic")
    assert code == 0
    for suffix in (".csv", ".core.csv", ".meta", ".truth.json", ".simulate.json"):
        assert (tmp_path / f"run{suffix}").exists()
    code, out, _ = call(capsys, "analyze", tmp_path / "run.csv", "--out", tmp_path, "--deterministic")
    assert code == 0
    a = read_report(tmp_path / "analysis.json")["analysis"]
    assert a["dominant_phase_share"] >= 0.6
    assert (tmp_path / "bandwidth.csv").read_text().startswith("time_s,read_mbps,write_mbps\n")
    code, _, _ = call(capsys, "plot-data", tmp_path / "analysis.json", "--out", tmp_path / "plots")
    assert code == 0
    lines = (tmp_path / "plots/analysis.csv").read_text().splitlines()
    assert lines[0] == "time_s,read_mbps,write_mbps" and len(lines) > 100


def test_throttle_and_classify_trace(tmp_path, capsys):
    call(capsys, "simulate", "--preset", "superlu-like", "--mode", "DramOnly", "--name", "dram",
         "--out", tmp_path, "--deterministic")
    call(capsys, "simulate", "--preset", "superlu-like", "--mode", "UncachedNvm", "--name", "nvm",
         "--out", tmp_path, "--deterministic")
    code, out, _ = call(capsys, "throttle-check", tmp_path / "dram.csv", "--out", tmp_path,
                        "--deterministic")
    assert code == 0
    t = read_report(tmp_path / "throttle.json")["throttle"]
    assert t["overall_risk"] == "High" and t["phases"][0]["risk"] == "High"
    assert t["precondition_ok"] is True
    code, _, _ = call(capsys, "classify", "--trace", tmp_path / "nvm.csv", "--baseline",
                      tmp_path / "dram.csv", "--out", tmp_path, "--deterministic")
    assert code == 0
    (app,) = read_report(tmp_path / "classify.json")["characterize"]["apps"]
    assert app["slowdown"] > 1 and app["tier"]["source"] == "slowdown"


def test_contention_and_cache_metrics(tmp_path, capsys):
    perf = tmp_path / "perf.csv"
    perf.write_text("app,config,concurrency,perf,metric_kind\n"
                    "FFT,DramOnly,8,1.0,RateHigherBetter\nFFT,DramOnly,24,0.61,RateHigherBetter\n"
                    "FFT,UncachedNvm,8,1.0,RateHigherBetter\nFFT,UncachedNvm,24,0.37,RateHigherBetter\n"
                    "HACC,DramOnly,8,13.0,TimeLowerBetter\nHACC,DramOnly,24,10.0,TimeLowerBetter\n"
                    "HACC,UncachedNvm,8,13.0,TimeLowerBetter\nHACC,UncachedNvm,24,10.0,TimeLowerBetter\n")
    assert call(capsys, "contention", perf, "--out", tmp_path, "--deterministic")[0] == 0
    apps = {a["app"]: a for a in read_report(tmp_path / "contention.json")["contention"]["apps"]}
    assert apps["FFT"]["verdict"]["contended_on_nvm"] is True
    assert apps["HACC"]["ratios"]["DramOnly"] == pytest.approx(1.3)
    assert apps["HACC"]["verdict"]["contended_on_nvm"] is False
    cache = tmp_path / "cache.csv"
    cache.write_text("app,metric_kind,perf_dram,perf_cached,perf_uncached\n"
                     "BoxLib,TimeLowerBetter,10,10.5,40\nX,RateHigherBetter,2,2,\n")
    assert call(capsys, "cache-metrics", cache, "--out", tmp_path, "--deterministic")[0] == 0
    rows = read_report(tmp_path / "cache_metrics.json")["cache_metrics"]
    assert rows[0]["cached_speedup"] == pytest.approx(40 / 10.5)
    assert rows[1]["cache_efficiency"] == 1.0 and "cached_speedup" not in rows[1]


def test_predict_train_eval(tmp_path, capsys):
    cfg = memsim.MemoryConfig(mode=memsim.Mode.CACHED)
    base = workloads.xsbench_like()
    for c in (36, 16):
        res = memsim.simulate(memsim.with_concurrency(base, c), cfg)
        memsim.emit_trace(res, tmp_path / f"c{c}.csv")
    code, _, _ = call(capsys, "predict-train", tmp_path / "c36.csv", "--out", tmp_path,
                      "--deterministic")
    assert code == 0 and (tmp_path / "model.json").exists()
    code, out, _ = call(capsys, "predict-eval", "--model", tmp_path / "model.json",
                        tmp_path / "c16.core.csv", "--out", tmp_path, "--deterministic")
    assert code == 0
    (row,) = read_report(tmp_path / "predict_eval.json")["predict_eval"]["rows"]
    assert row["mean_accuracy"] > 0.9


def test_place(tmp_path, capsys):
    spec = workloads.scalapack_like()
    memsim.save_json(spec, tmp_path / "w.json")
    res = memsim.simulate(spec, memsim.MemoryConfig())
    memsim.write_object_profile(res, spec, tmp_path / "obj.csv")
    code, out, _ = call(capsys, "place", "--objects", tmp_path / "obj.csv", "--budget-frac", 0.4,
                        "--workload", tmp_path / "w.json", "--out", tmp_path, "--deterministic")
    assert code == 0
    body = read_report(tmp_path / "place.json")["place"]
    assert body["plans"]["ExactDP"]["in_dram"] == ["C"]
    assert body["estimates"]["ExactDP"]["speedup_vs_all_nvm"] >= 1.8
    assert call(capsys, "place", "--objects", tmp_path / "obj.csv", "--out", tmp_path)[0] == 2


def test_reports_byte_identical(tmp_path, capsys):
    outs = []
    for _ in range(2):
        call(capsys, "simulate", "--preset", "ft-like", "--out", tmp_path, "--seed", 5,
             "--deterministic")
        call(capsys, "analyze", tmp_path / "run.csv", "--out", tmp_path, "--deterministic")
        outs.append([(tmp_path / n).read_bytes()
                     for n in ("run.csv", "run.simulate.json", "analysis.json")])
    assert outs[0] == outs[1]
