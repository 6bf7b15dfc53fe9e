import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nvmlens import memsim, workloads
from nvmlens.errors import DomainError, NvmLensError
from nvmlens.memsim import (
    GIB,
    MemoryConfig,
    WorkloadPhase,
    WorkloadSpec,
    dram_cache,
    hit_ratio,
    nvm_read_cap,
    nvm_service,
    nvm_write_cap,
    runtime,
    serve_phase,
    simulate,
)
from nvmlens.trace_io import Mode

CFG = MemoryConfig()
demand = st.floats(0, 120000)
threads = st.integers(1, 96)


def test_below_knee_is_unthrottled():
    assert nvm_service(3100, 1300, 24, CFG) == (3100, 1300)


def test_superlu_calibration():
    r, w = nvm_service(54000, 33000, 24, CFG)
    assert 2000 <= w <= 2600
    assert r <= 6000


def test_diverging_effect_example():
    r8, w8 = nvm_service(6000, 4000, 8, CFG)
    r24, w24 = nvm_service(6000, 4000, 24, CFG)
    assert w24 < w8 and r24 >= r8


@settings(max_examples=300)
@given(demand, demand, threads)
def test_feasibility(dr, dw, c):
    r, w = nvm_service(dr, dw, c, CFG)
    assert 0 <= r <= min(dr, nvm_read_cap(c, CFG))
    assert 0 <= w <= min(dw, nvm_write_cap(c, CFG))


@settings(max_examples=300)
@given(demand, demand, demand, threads)
def test_more_write_never_raises_read(dr, dw1, dw2, c):
    lo, hi = sorted((dw1, dw2))
    assert nvm_service(dr, hi, c, CFG)[0] <= nvm_service(dr, lo, c, CFG)[0]


def test_write_cap_shape():
    caps = [nvm_write_cap(c, CFG) for c in range(1, 97)]
    knee = int(CFG.wpq_knee)
    assert all(a <= b for a, b in zip(caps[:knee], caps[1:knee]))
    assert all(a >= b for a, b in zip(caps[knee - 1:], caps[knee:]))
    assert max(caps) == CFG.nvm_write_cap


@settings(max_examples=100)
@given(st.floats(2001, 60000), st.floats(0, 60000), st.integers(1, 96), st.integers(1, 96))
def test_achieved_write_follows_cap_shape(dw, dr, c1, c2):
    knee = int(CFG.wpq_knee)
    lo, hi = sorted((c1, c2))
    w_lo, w_hi = nvm_service(dr, dw, lo, CFG)[1], nvm_service(dr, dw, hi, CFG)[1]
    if hi <= knee:
        assert w_hi >= w_lo
    if lo >= knee:
        assert w_hi <= w_lo


@settings(max_examples=200)
@given(st.floats(1, 1e13), demand, demand)
def test_cache_conservation(fp, dr, dw):
    ct = dram_cache(fp, CFG.dram_capacity_bytes, dr, dw, CFG)
    h = hit_ratio(fp, CFG.dram_capacity_bytes, CFG)
    assert ct.dram_read == dr
    assert ct.nvm_read == (1 - h) * dr
    assert ct.nvm_write == pytest.approx((1 - h) * dw)
    assert ct.dram_write >= dw
    if h < 1 and dr >= 1e-3:
        assert ct.dram_write > dw


def test_cache_examples():
    assert hit_ratio(10 * GIB, 96 * GIB, CFG) == CFG.conflict_factor
    assert hit_ratio(int(4.4 * 96 * GIB), 96 * GIB, CFG) == pytest.approx(0.216, abs=1e-3)
    with pytest.raises(DomainError):
        hit_ratio(0, 96 * GIB, CFG)


@settings(max_examples=150, deadline=None)
@given(st.floats(0, 50000), st.floats(0, 50000), st.integers(1, 48),
       st.floats(0.1, 6.0))
def test_runtime_ordering(dr, dw, c, ratio):
    spec = WorkloadSpec(phases=(WorkloadPhase(10.0, dr, dw),), concurrency=c,
                        footprint_bytes=int(ratio * CFG.dram_capacity_bytes))
    t = [runtime(spec, MemoryConfig(mode=m)) for m in (Mode.DRAM_ONLY, Mode.CACHED, Mode.UNCACHED)]
    assert t[0] <= t[1] * (1 + 1e-12)
    assert t[1] <= t[2] * (1 + 1e-12)
    assert t[0] >= spec.nominal_runtime


def test_dram_only_unconstrained():
    spec = workloads.laghos_like(seed=1, total_s=30.0)
    res = simulate(spec, MemoryConfig(mode=Mode.DRAM_ONLY))
    assert res.runtime_s == pytest.approx(30.0)
    for (r, w), p in zip(res.achieved, spec.phases):
        assert (r, w) == (p.demand_read, p.demand_write)
    t = res.truth
    expected_r = np.array([spec.phases[k].demand_read for k in t.phase_index])
    interior = np.r_[0:5, 7:30]  # skip the interval straddling the phase change
    assert np.all(np.abs(t.read_bw[interior] / expected_r[interior] - 1) <= CFG.jitter + 1e-12)
    assert res.device_bytes["nvm_read"] == 0


def test_determinism_and_seed():
    cfg = MemoryConfig(mode=Mode.UNCACHED)
    a = simulate(workloads.superlu_like(seed=3), cfg)
    b = simulate(workloads.superlu_like(seed=3), cfg)
    c = simulate(workloads.superlu_like(seed=4), cfg)
    assert a.trace == b.trace and a.device_bytes == b.device_bytes
    assert a.achieved == c.achieved and a.runtime_s == c.runtime_s
    assert a.trace != c.trace


def test_result_invariants():
    for mode in Mode:
        spec = workloads.ft_like(seed=2)
        res = simulate(spec, MemoryConfig(mode=mode))
        assert res.runtime_s >= spec.nominal_runtime
        for p in res.phases:
            assert p.achieved_read <= p.demand_read + 1e-9
            assert p.achieved_write <= p.demand_write + 1e-9


def test_superlu_phase_share_grows():
    spec = workloads.superlu_like()
    unc = simulate(spec, MemoryConfig(mode=Mode.UNCACHED)).phase_shares()
    dram = simulate(spec, MemoryConfig(mode=Mode.DRAM_ONLY)).phase_shares()
    assert dram[0] == pytest.approx(0.2)
    assert 0.6 <= unc[0] <= 0.8


def test_cached_write_inflation_in_trace():
    spec = workloads.boxlib_like()
    res = simulate(spec, MemoryConfig(mode=Mode.CACHED))
    app_w = sum(p.achieved_write * p.wall_s for p in res.phases) * 1e6
    assert res.device_bytes["dram_write"] > app_w
    assert res.device_bytes["nvm_read"] > 0


def test_strong_scaling_conserves_traffic():
    spec = workloads.ft_like()
    s2 = memsim.with_concurrency(spec, 24)
    for a, b in zip(spec.phases, s2.phases):
        assert a.duration_s * a.demand_write == pytest.approx(b.duration_s * b.demand_write)


def test_spec_round_trip(tmp_path):
    spec = workloads.scalapack_like(seed=9)
    memsim.save_json(spec, tmp_path / "w.json")
    assert memsim.load_json(tmp_path / "w.json", WorkloadSpec) == spec
    memsim.save_json(CFG, tmp_path / "m.json")
    assert memsim.load_json(tmp_path / "m.json", MemoryConfig) == CFG
    with pytest.raises(NvmLensError):
        MemoryConfig.from_dict({"bogus": 1})


def test_config_validation():
    with pytest.raises(DomainError):
        MemoryConfig(nvm_write_cap=0)
    with pytest.raises(DomainError):
        MemoryConfig(wpq_decay=-0.1)
    with pytest.raises(DomainError):
        WorkloadPhase(0, 1, 1)


def test_serve_phase_placement_never_hurts():
    spec = workloads.scalapack_like()
    for p in spec.phases:
        base = serve_phase(p.demand_read, p.demand_write, 24, spec.footprint_bytes, CFG)
        placed = serve_phase(p.demand_read, p.demand_write, 24, spec.footprint_bytes, CFG, 0.1, 0.96)
        assert placed.stretch <= base.stretch


@settings(max_examples=300)
@given(st.floats(2000.5, 120000), st.floats(0, 120000))
def test_diverging_effect_any_demand_above_knee(dw, dr):
    r8, w8 = nvm_service(dr, dw, 8, CFG)
    r24, w24 = nvm_service(dr, dw, 24, CFG)
    assert w24 < w8
    assert r24 >= r8
