"""Training protocols: data-parallel, standard, naive-delayed and eager-delayed.

All methods share one logical-time loop: replicas run H inner Adam steps, then
at each synchronization boundary compute an outer gradient (anchor minus
current params), push its replica average onto an in-flight queue, and apply
whichever reduce has become readable. The queue embargoes payloads for k
rounds, which models an all-reduce overlapped with the next k inner phases:

* Standard       k = 0, the fresh average is applied immediately.
* NaiveDelayed   the average from k rounds ago is applied to the current
                 anchor; warm-up rounds apply nothing.
* EagerDelayed   the replica substitutes its fresh local delta for its own
                 stale contribution inside the delayed average; warm-up rounds
                 apply 1/M times the fresh local delta.

Under streaming synchronization each fragment carries its own anchor slice,
outer-momentum state, in-flight queue and delta stash, on a phase-offset
schedule. The simulator resolves each average at enqueue time (it has global
knowledge) but embargoes reads until the ready round, so runs are bit-exact
and independent of any physical schedule.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError
from .objectives import ObjectiveSpec, init_params, loss_and_grad, make_shards
from .optim import AdamState, NesterovState, adam_step, nesterov_outer_step
from .quant import get_format, payload_bits, quantize_dequantize
from .tensorcore import (FragmentSpec, ParamVector, average_vectors, l2_norm,
                         slice_fragment, write_fragment)

METHODS = ("DataParallel", "Standard", "NaiveDelayed", "EagerDelayed")
DELAYED_METHODS = ("NaiveDelayed", "EagerDelayed")


@dataclass
class InFlightReduce:
    """An averaged outer gradient in transit; readable once round >= ready_round."""
    payload: ParamVector
    sent_round: int
    ready_round: int


@dataclass
class ReplicaState:
    id: int
    theta: ParamVector
    anchor: ParamVector
    inner: AdamState
    outer: list[NesterovState]                    # one per fragment
    delta_stash: list[deque] = field(default_factory=list)  # per fragment: (round, wire delta)


@dataclass(frozen=True)
class TrainConfig:
    method: str
    objective: ObjectiveSpec
    M: int = 2
    H: int = 30
    T: int = 900
    k: Optional[int] = None      # outer-step delay; defaults: 0 for sync methods, 1 for delayed
    inner_lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.99
    eps: float = 1e-8
    weight_decay: float = 0.0
    outer_lr: float = 0.4
    outer_momentum: float = 0.9
    batch_size: int = 32
    probe_size: int = 256
    quant: str = "fp32"
    fragments: int = 1           # 1 = whole-model sync, >1 = streaming
    resync_period: int = 0       # in rounds; 0 = off
    reset_inner_state: bool = False
    init_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method {self.method!r}, expected one of {METHODS}")
        if self.M < 1 or self.H < 1 or self.T < 1:
            raise ConfigurationError("M, H and T must all be >= 1")
        if self.fragments < 1:
            raise ConfigurationError("fragment count must be >= 1")
        if self.method == "DataParallel" and self.fragments != 1:
            raise ConfigurationError("DataParallel does not use fragment synchronization")
        if self.resync_period < 0:
            raise ConfigurationError("resync_period must be >= 0")
        k = self.k
        if self.method in DELAYED_METHODS:
            if k is None:
                k = 1
            if k < 1:
                raise ConfigurationError(f"{self.method} requires delay k >= 1, got {k}")
        else:
            if k is None:
                k = 0
            if k != 0:
                raise ConfigurationError(f"{self.method} is synchronous, k must be 0, got {k}")
        object.__setattr__(self, "k", k)
        get_format(self.quant)


@dataclass
class OuterEvent:
    """One synchronization of one fragment."""
    step: int
    round: int
    fragment: int
    enqueued: ParamVector
    enqueued_norm: float
    applied: Optional[ParamVector]       # consumed reduce payload, None during warm-up
    applied_sent_round: Optional[int]


@dataclass
class TrainingTrace:
    eval_loss: list[float]
    outer_events: list[OuterEvent]
    round_divergence: list[tuple[int, tuple[float, ...]]]
    payload_bits_total: int
    final_params: list[ParamVector]
    diverged: bool
    failed_step: Optional[int]

    @property
    def payload_bytes(self) -> float:
        return self.payload_bits_total / 8.0

    @property
    def final_eval_loss(self) -> Optional[float]:
        if self.diverged or not self.eval_loss:
            return None
        return self.eval_loss[-1]

    @property
    def final_divergence(self) -> float:
        if not self.round_divergence:
            return 0.0
        return max(self.round_divergence[-1][1])


def compute_outer_gradient(anchor: ParamVector, theta_end: ParamVector) -> ParamVector:
    """Outer gradient of one inner phase: anchor - theta_end (a descent direction)."""
    if anchor.shape != theta_end.shape:
        raise ConfigurationError(f"dimension mismatch: {anchor.shape} vs {theta_end.shape}")
    return anchor - theta_end


def eager_combine(delta_local_now: ParamVector, delta_local_stale: ParamVector,
                  delta_avg_stale: ParamVector, M: int) -> ParamVector:
    """Fresh local delta swapped into the stale average:
    (1/M) (delta_local_now - delta_local_stale) + delta_avg_stale."""
    if M < 1:
        raise ConfigurationError(f"replica count must be >= 1, got {M}")
    if not (delta_local_now.shape == delta_local_stale.shape == delta_avg_stale.shape):
        raise ConfigurationError("eager_combine requires equal-dimension deltas")
    if M == 1:
        # the stale average is exactly the stale local delta, so the delayed
        # terms cancel and the fresh local delta passes through unchanged
        return delta_local_now.copy()
    return (delta_local_now - delta_local_stale) / M + delta_avg_stale


def fragment_sync_due(t: int, f: int, H: int, spec: FragmentSpec) -> bool:
    """True iff fragment f synchronizes at inner step t on its offset phase."""
    if t < 1:
        raise ConfigurationError(f"step index must be >= 1, got {t}")
    if not 0 <= f < spec.count:
        raise ConfigurationError(f"fragment index {f} out of range [0, {spec.count})")
    offset = spec.offsets[f]
    return t > offset and (t - offset) % H == 0


def resync_replicas(replicas: list[ReplicaState]) -> list[ReplicaState]:
    """Replace every replica's params and anchor with the replica mean."""
    if not replicas:
        raise ConfigurationError("cannot resync an empty replica list")
    mean = average_vectors([r.theta for r in replicas])
    for r in replicas:
        r.theta = mean.copy()
        r.anchor = mean.copy()
    return replicas


def _finite(*arrays) -> bool:
    return all(np.all(np.isfinite(a)) for a in arrays)


def run_training(cfg: TrainConfig) -> TrainingTrace:
    """Execute T inner steps per replica under cfg.method and return the trace."""
    if cfg.method == "DataParallel":
        return _run_data_parallel(cfg)
    return _run_diloco(cfg)


def _run_data_parallel(cfg: TrainConfig) -> TrainingTrace:
    spec = cfg.objective
    fmt = get_format(cfg.quant)
    shards = make_shards(spec, cfg.M, cfg.seed, cfg.batch_size, cfg.probe_size)
    theta = init_params(spec, cfg.seed, cfg.init_scale)
    state = AdamState.init(spec.dim, cfg.inner_lr, cfg.beta1, cfg.beta2, cfg.eps,
                           cfg.weight_decay)
    step_bits = payload_bits(spec.dim, fmt)
    eval_loss: list[float] = []
    bits = 0
    for t in range(1, cfg.T + 1):
        grads = []
        bad = False
        for shard in shards.shards:
            loss, g = loss_and_grad(spec, theta, shard.next_batch())
            if not np.isfinite(loss) or not _finite(g):
                bad = True
                break
            grads.append(quantize_dequantize(g, fmt))
        if bad:
            return TrainingTrace(eval_loss, [], [], bits, [theta.copy() for _ in range(cfg.M)],
                                 True, t)
        g_avg = average_vectors(grads)
        bits += step_bits
        state, theta = adam_step(state, theta, g_avg)
        if not _finite(theta):
            return TrainingTrace(eval_loss, [], [], bits, [theta.copy() for _ in range(cfg.M)],
                                 True, t)
        eval_loss.append(shards.probe_loss(theta))
        if t % cfg.H == 0:
            pass  # no outer rounds; divergence across replicas is identically zero
    divergence = [(t, tuple(0.0 for _ in range(cfg.M)))
                  for t in range(cfg.H, cfg.T + 1, cfg.H)]
    return TrainingTrace(eval_loss, [], divergence, bits,
                         [theta.copy() for _ in range(cfg.M)], False, None)


def _run_diloco(cfg: TrainConfig) -> TrainingTrace:
    spec = cfg.objective
    fmt = get_format(cfg.quant)
    d = spec.dim
    frag_spec = (FragmentSpec.whole(d) if cfg.fragments == 1
                 else FragmentSpec.equal_parts(d, cfg.fragments, cfg.H))
    F = frag_spec.count
    shards = make_shards(spec, cfg.M, cfg.seed, cfg.batch_size, cfg.probe_size)
    theta0 = init_params(spec, cfg.seed, cfg.init_scale)

    replicas = []
    for m in range(cfg.M):
        outer = [NesterovState.init(stop - start, cfg.outer_lr, cfg.outer_momentum)
                 for start, stop in frag_spec.ranges]
        replicas.append(ReplicaState(
            id=m, theta=theta0.copy(), anchor=theta0.copy(),
            inner=AdamState.init(d, cfg.inner_lr, cfg.beta1, cfg.beta2, cfg.eps,
                                 cfg.weight_decay),
            outer=outer, delta_stash=[deque() for _ in range(F)]))

    queues: list[deque] = [deque() for _ in range(F)]
    eval_loss: list[float] = []
    events: list[OuterEvent] = []
    divergence: list[tuple[int, tuple[float, ...]]] = []
    bits = 0

    def abort(step: int) -> TrainingTrace:
        return TrainingTrace(eval_loss, events, divergence, bits,
                             [r.theta.copy() for r in replicas], True, step)

    for t in range(1, cfg.T + 1):
        for r, shard in zip(replicas, shards.shards):
            loss, g = loss_and_grad(spec, r.theta, shard.next_batch())
            if not np.isfinite(loss) or not _finite(g):
                return abort(t)
            r.inner, r.theta = adam_step(r.inner, r.theta, g)
            if not _finite(r.theta):
                return abort(t)

        for f in range(F):
            if not fragment_sync_due(t, f, cfg.H, frag_spec):
                continue
            rnd = (t - frag_spec.offsets[f]) // cfg.H
            frag_dim = frag_spec.ranges[f][1] - frag_spec.ranges[f][0]

            raw = [compute_outer_gradient(slice_fragment(r.anchor, frag_spec, f),
                                          slice_fragment(r.theta, frag_spec, f))
                   for r in replicas]
            wire = [quantize_dequantize(delta, fmt) for delta in raw]
            avg = average_vectors(wire)
            queues[f].append(InFlightReduce(avg, sent_round=rnd, ready_round=rnd + cfg.k))

            ready = None
            if queues[f] and queues[f][0].ready_round <= rnd:
                ready = queues[f].popleft()
                bits += payload_bits(frag_dim, fmt)

            if cfg.method == "EagerDelayed":
                stale = []
                for r in replicas:
                    if ready is not None:
                        stash_round, stash_wire = r.delta_stash[f].popleft()
                        assert stash_round == ready.sent_round
                        stale.append(stash_wire)
                    r.delta_stash[f].append((rnd, wire[r.id]))
                for m, r in enumerate(replicas):
                    if ready is not None:
                        combined = eager_combine(raw[m], stale[m], ready.payload, cfg.M)
                    else:
                        combined = raw[m] / cfg.M  # warm-up: stale terms are all zero
                    r.outer[f], new_slice = nesterov_outer_step(
                        r.outer[f], slice_fragment(r.anchor, frag_spec, f), combined)
                    write_fragment(r.theta, frag_spec, f, new_slice)
            elif ready is not None:  # Standard (k=0) and NaiveDelayed past warm-up
                for r in replicas:
                    r.outer[f], new_slice = nesterov_outer_step(
                        r.outer[f], slice_fragment(r.anchor, frag_spec, f), ready.payload)
                    write_fragment(r.theta, frag_spec, f, new_slice)
            # NaiveDelayed warm-up: params keep the inner-phase result

            for r in replicas:
                write_fragment(r.anchor, frag_spec, f, slice_fragment(r.theta, frag_spec, f))
                if not _finite(r.theta):
                    return abort(t)

            events.append(OuterEvent(
                step=t, round=rnd, fragment=f, enqueued=avg.copy(),
                enqueued_norm=l2_norm(avg),
                applied=None if ready is None else ready.payload.copy(),
                applied_sent_round=None if ready is None else ready.sent_round))

        if t % cfg.H == 0:
            rnd_full = t // cfg.H
            if cfg.resync_period > 0 and rnd_full % cfg.resync_period == 0:
                resync_replicas(replicas)
            if cfg.reset_inner_state:
                for r in replicas:
                    r.inner = r.inner.reset()
            mean = average_vectors([r.theta for r in replicas])
            divergence.append((t, tuple(l2_norm(r.theta - mean) for r in replicas)))

        mean_theta = average_vectors([r.theta for r in replicas])
        eval_loss.append(shards.probe_loss(mean_theta))

    return TrainingTrace(eval_loss, events, divergence, bits,
                         [r.theta.copy() for r in replicas], False, None)
