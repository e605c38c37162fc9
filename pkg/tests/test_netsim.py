import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dilosim import ConfigurationError
from dilosim.netsim import (MODEL_PRESETS, ModelSpec, OverlapStrategy,
                            comm_seconds, min_bandwidth_for_cu, overlap_window,
                            simulate)
from dilosim.quant import get_format, payload_bits

M1B = MODEL_PRESETS["1B"]


def strat(kind, **kw):
    return OverlapStrategy(kind=kind, **kw)


def steps_for(strategy, periods=1):
    return periods if strategy.kind == "data-parallel" else periods * strategy.H


def test_model_presets():
    assert MODEL_PRESETS["1B"].layers == 24 and MODEL_PRESETS["1B"].step_time == 0.1
    assert MODEL_PRESETS["10B"].layers == 48 and MODEL_PRESETS["10B"].step_time == 0.8
    assert MODEL_PRESETS["100B"].layers == 108 and MODEL_PRESETS["100B"].step_time == 4.9
    with pytest.raises(ConfigurationError):
        ModelSpec(size=0, layers=24, step_time=0.1)


def test_comm_seconds_reference_case():
    # 1e9 params fp32, M=2 (all-reduce factor 1.0), 32 Gbit/s -> exactly 1 second
    s = comm_seconds(ModelSpec(1e9, 24, 0.1), strat("data-parallel", quant="fp32"), 2, 32.0)
    assert s == 1.0


def test_comm_seconds_vanishes_at_huge_bandwidth():
    s = comm_seconds(M1B, strat("data-parallel"), 2, 1e15)
    assert s < 1e-4


def test_comm_seconds_linear_in_bits():
    s32 = comm_seconds(M1B, strat("data-parallel", quant="fp32"), 2, 10.0)
    s16 = comm_seconds(M1B, strat("data-parallel", quant="bf16"), 2, 10.0)
    assert s32 == 2.0 * s16


def test_comm_seconds_validation():
    with pytest.raises(ConfigurationError):
        comm_seconds(M1B, strat("data-parallel"), 2, 0.0)
    with pytest.raises(ConfigurationError):
        comm_seconds(M1B, strat("data-parallel"), 0, 1.0)


def test_simulate_infinite_bandwidth_full_utilization():
    report = simulate(M1B, strat("no-overlap", H=30), 2, 1e30, 300)
    assert report.utilization == 1.0
    assert report.wall_seconds == report.compute_seconds + report.stall_seconds


def test_data_parallel_closed_form():
    bw = 50.0
    per_event = comm_seconds(M1B, strat("data-parallel"), 2, bw)
    report = simulate(M1B, strat("data-parallel"), 2, bw, 100)
    assert report.utilization == pytest.approx(M1B.step_time / (M1B.step_time + per_event), rel=1e-12)


def test_outer_overlap_fully_hidden_is_free():
    s = strat("outer-overlap", H=50, outer_rounds=1, quant="fp4-e2m1")
    window = overlap_window(M1B, s)
    bits = comm_seconds(M1B, s, 2, 1.0)  # seconds at 1 Gbit/s = gigabits of one event
    bw_threshold = bits / window
    report = simulate(M1B, s, 2, bw_threshold * 1.01, 500)
    assert report.utilization == 1.0
    report_under = simulate(M1B, s, 2, bw_threshold * 0.5, 500)
    assert report_under.utilization < 1.0


def test_simulate_requires_full_period():
    with pytest.raises(ConfigurationError):
        simulate(M1B, strat("no-overlap", H=100), 2, 1.0, 50)


@given(st.sampled_from(list(MODEL_PRESETS)), st.integers(2, 500), st.integers(2, 8),
       st.sampled_from(["fp32", "bf16", "fp8-e4m3", "fp4-e2m1"]),
       st.floats(-1, 3), st.floats(-1, 3))
@settings(max_examples=100, deadline=None)
def test_cu_monotone_in_bandwidth(model_name, H, M, fmt, log_bw1, log_bw2):
    model = MODEL_PRESETS[model_name]
    lo, hi = sorted([10.0 ** log_bw1, 10.0 ** log_bw2])
    for kind in ("data-parallel", "no-overlap", "inner-overlap", "outer-overlap"):
        s = strat(kind, H=H, quant=fmt)
        cu_lo = simulate(model, s, M, lo, steps_for(s)).utilization
        cu_hi = simulate(model, s, M, hi, steps_for(s)).utilization
        assert cu_lo <= cu_hi + 1e-15


def test_cu_monotone_in_payload_bits():
    order = ["fp32", "bf16", "fp8-e4m3", "fp4-e2m1"]  # decreasing bits per value
    for kind in ("data-parallel", "no-overlap", "outer-overlap"):
        cus = []
        for fmt in order:
            s = strat(kind, H=30, quant=fmt)
            cus.append(simulate(MODEL_PRESETS["10B"], s, 4, 5.0, steps_for(s)).utilization)
        for a, b in zip(cus, cus[1:]):
            assert a <= b + 1e-15


def test_strategy_ordering_at_sampled_points():
    rng = np.random.default_rng(0)
    for _ in range(50):
        model = MODEL_PRESETS[rng.choice(list(MODEL_PRESETS))]
        H = int(rng.integers(2, 501))
        M = int(rng.integers(2, 9))
        fmt = str(rng.choice(["fp32", "bf16", "fp8-e4m3", "fp4-e2m1"]))
        bw = float(10.0 ** rng.uniform(-1, 3))
        chain = [strat("data-parallel", quant=fmt),
                 strat("no-overlap", H=H, quant=fmt),
                 strat("inner-overlap", H=H, quant=fmt, inner_steps=1),
                 strat("outer-overlap", H=H, quant=fmt, outer_rounds=1),
                 strat("outer-overlap", H=H, quant=fmt, outer_rounds=2)]
        cus = [simulate(model, s, M, bw, steps_for(s)).utilization for s in chain]
        for a, b in zip(cus, cus[1:]):
            assert a <= b + 1e-15


def test_min_bandwidth_data_parallel_closed_form():
    # at CU=0.5 the per-step comm time equals the step time
    bw = min_bandwidth_for_cu(M1B, strat("data-parallel"), 2, 0.5)
    assert comm_seconds(M1B, strat("data-parallel"), 2, bw) == pytest.approx(M1B.step_time, rel=2e-3)


def test_min_bandwidth_hiding_threshold_at_target_one():
    s = strat("outer-overlap", H=100, outer_rounds=1, quant="fp4-e2m1")
    bw = min_bandwidth_for_cu(M1B, s, 2, 1.0)
    fmt = get_format("fp4-e2m1")
    frag_params = round(M1B.size / 8)  # 24 layers / 3 per fragment
    bits = payload_bits(frag_params, fmt) * 1.0
    assert bw == pytest.approx(bits / (overlap_window(M1B, s) * 1e9), rel=1e-12)
    with pytest.raises(ConfigurationError):
        min_bandwidth_for_cu(M1B, strat("data-parallel"), 2, 1.0)


def test_min_bandwidth_consistent_with_simulate():
    for s, target in [(strat("data-parallel"), 0.8),
                      (strat("no-overlap", H=30), 0.9),
                      (strat("outer-overlap", H=30, quant="fp4-e2m1"), 0.95)]:
        bw = min_bandwidth_for_cu(MODEL_PRESETS["10B"], s, 2, target)
        assert simulate(MODEL_PRESETS["10B"], s, 2, bw, steps_for(s)).utilization >= target
        assert simulate(MODEL_PRESETS["10B"], s, 2, 0.99 * bw, steps_for(s)).utilization < target


def test_outer_overlap_k2_needs_no_more_bandwidth_than_k1():
    k1 = min_bandwidth_for_cu(M1B, strat("outer-overlap", H=30, outer_rounds=1), 2, 0.95)
    k2 = min_bandwidth_for_cu(M1B, strat("outer-overlap", H=30, outer_rounds=2), 2, 0.95)
    assert k2 <= k1


def test_target_validation():
    with pytest.raises(ConfigurationError):
        min_bandwidth_for_cu(M1B, strat("data-parallel"), 2, 0.0)
    with pytest.raises(ConfigurationError):
        min_bandwidth_for_cu(M1B, strat("data-parallel"), 2, 1.5)
    with pytest.raises(ConfigurationError):
        strat("pipeline")
