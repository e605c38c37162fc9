"""Analytic compute-utilization model: bandwidth versus training method.

Steady-state schedule: compute runs at step_time per inner step; each
communication event (a ring all-reduce of 2(M-1)/M times the event payload)
may overlap with a strategy-dependent window, and any excess stalls the
pipeline:

    stall_per_event = max(0, comm_seconds - overlap_window)
    utilization     = compute_seconds / (compute_seconds + total_stall)

Windows: data-parallel and non-overlapped synchronization have no window;
inner-step overlap hides s inner steps; outer-step overlap hides k whole
rounds (k * H steps). Streaming synchronization splits the model into
fragments of a few layers, one event per fragment per round.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigurationError
from .quant import get_format, payload_bits

STRATEGY_KINDS = ("data-parallel", "no-overlap", "inner-overlap", "outer-overlap")


@dataclass(frozen=True)
class ModelSpec:
    size: float        # parameter count
    layers: int
    step_time: float   # seconds per inner step, forward + backward

    def __post_init__(self):
        if self.size <= 0 or self.layers <= 0 or self.step_time <= 0:
            raise ConfigurationError("model size, layers and step_time must be positive")


MODEL_PRESETS = {
    "1B": ModelSpec(size=1e9, layers=24, step_time=0.1),
    "10B": ModelSpec(size=10e9, layers=48, step_time=0.8),
    "100B": ModelSpec(size=100e9, layers=108, step_time=4.9),
}


@dataclass(frozen=True)
class OverlapStrategy:
    kind: str
    H: int = 100
    layers_per_fragment: int = 3   # 0 or >= model layers: whole-model events
    quant: str = "fp32"
    inner_steps: int = 1           # overlap window for inner-overlap, in steps
    outer_rounds: int = 1          # overlap window for outer-overlap, in rounds

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ConfigurationError(f"unknown strategy {self.kind!r}, expected one of {STRATEGY_KINDS}")
        if self.H < 1:
            raise ConfigurationError("H must be >= 1")
        if self.inner_steps < 1 or self.outer_rounds < 1:
            raise ConfigurationError("overlap windows must be >= 1 unit")
        get_format(self.quant)


@dataclass(frozen=True)
class CUReport:
    compute_seconds: float
    comm_seconds: float
    stall_seconds: float
    wall_seconds: float
    utilization: float


def _fragment_count(model: ModelSpec, strategy: OverlapStrategy) -> int:
    if strategy.kind == "data-parallel":
        return 1
    lpf = strategy.layers_per_fragment
    if lpf <= 0 or lpf >= model.layers:
        return 1
    return -(-model.layers // lpf)


def _event_params(model: ModelSpec, strategy: OverlapStrategy) -> int:
    return max(1, round(model.size / _fragment_count(model, strategy)))


def overlap_window(model: ModelSpec, strategy: OverlapStrategy) -> float:
    """Seconds of compute each communication event may hide behind."""
    if strategy.kind in ("data-parallel", "no-overlap"):
        return 0.0
    if strategy.kind == "inner-overlap":
        return strategy.inner_steps * model.step_time
    return strategy.outer_rounds * strategy.H * model.step_time


def comm_seconds(model: ModelSpec, strategy: OverlapStrategy, M: int,
                 bandwidth_gbps: float) -> float:
    """Ring all-reduce time for one communication event at the given bandwidth."""
    if bandwidth_gbps <= 0:
        raise ConfigurationError(f"bandwidth must be positive, got {bandwidth_gbps}")
    if M < 1:
        raise ConfigurationError(f"replica count must be >= 1, got {M}")
    fmt = get_format(strategy.quant)
    bits = payload_bits(_event_params(model, strategy), fmt) * (2.0 * (M - 1) / M)
    return bits / (bandwidth_gbps * 1e9)


def simulate(model: ModelSpec, strategy: OverlapStrategy, M: int,
             bandwidth_gbps: float, total_steps: int) -> CUReport:
    """Steady-state compute utilization over total_steps inner steps."""
    period = 1 if strategy.kind == "data-parallel" else strategy.H
    if total_steps < period:
        raise ConfigurationError(
            f"total_steps must cover one communication period ({period}), got {total_steps}")
    n_events = (total_steps if strategy.kind == "data-parallel"
                else (total_steps // strategy.H) * _fragment_count(model, strategy))
    per_event = comm_seconds(model, strategy, M, bandwidth_gbps)
    window = overlap_window(model, strategy)
    stall = n_events * max(0.0, per_event - window)
    compute = total_steps * model.step_time
    wall = compute + stall
    return CUReport(compute_seconds=compute, comm_seconds=n_events * per_event,
                    stall_seconds=stall, wall_seconds=wall, utilization=compute / wall)


def min_bandwidth_for_cu(model: ModelSpec, strategy: OverlapStrategy, M: int,
                         target_cu: float, rel_tol: float = 1e-3) -> float:
    """Least bandwidth (Gbit/s) whose steady-state utilization reaches target_cu."""
    if not 0.0 < target_cu <= 1.0:
        raise ConfigurationError(f"target utilization must be in (0, 1], got {target_cu}")
    total_steps = 1 if strategy.kind == "data-parallel" else strategy.H

    def cu(bw: float) -> float:
        return simulate(model, strategy, M, bw, total_steps).utilization

    if target_cu == 1.0:
        window = overlap_window(model, strategy)
        if window <= 0.0:
            raise ConfigurationError(
                f"{strategy.kind} cannot reach utilization 1.0 at finite bandwidth")
        fmt = get_format(strategy.quant)
        bits = payload_bits(_event_params(model, strategy), fmt) * (2.0 * (M - 1) / M)
        return bits / (window * 1e9)

    lo, hi = 1e-9, 1.0
    for _ in range(64):
        if cu(hi) >= target_cu:
            break
        lo = hi
        hi *= 10.0
    else:
        raise ConfigurationError("bandwidth search failed to bracket the target utilization")
    if cu(lo) >= target_cu:
        return lo
    while hi / lo > 1.0 + rel_tol:
        mid = (lo * hi) ** 0.5
        if cu(mid) >= target_cu:
            hi = mid
        else:
            lo = mid
    return hi
