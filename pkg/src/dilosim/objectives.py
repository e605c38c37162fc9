"""Desk-scale differentiable objectives with analytic gradients and data shards.

Three families stand in for the large-scale training loss:

* ``quadratic``      0.5 * (theta - c)' A (theta - c) with diagonal A, batch
                     entries are noisy copies of the shard target c.
* ``logistic``       binary logistic regression against a shard-local ground
                     truth weight vector.
* ``mlp-regression`` one-hidden-layer tanh network regressed onto a shifted
                     teacher network, gradients by hand-written backprop.

Shard m's generating parameters are displaced from the global ones by
heterogeneity * u_m with u_m a fixed unit direction, so the knob directly
controls how far shard-local optima disagree. Batches are generated from
counter-based seed tuples (dataset seed, run seed, shard, batch index), which
makes every stream reproducible and independent of evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, NumericError
from .tensorcore import ParamVector

KINDS = ("quadratic", "logistic", "mlp-regression")

# mlp-regression architecture: input dim 5, one hidden layer of width h, scalar
# output; parameter count d = h * (MLP_INPUT_DIM + 2) + 1.
MLP_INPUT_DIM = 5


@dataclass(frozen=True)
class ObjectiveSpec:
    kind: str
    dim: int
    heterogeneity: float = 0.0
    noise: float = 0.0
    seed: int = 0
    condition: float = 10.0  # quadratic only: eigenvalue spread of A

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown objective kind {self.kind!r}, expected one of {KINDS}")
        if self.dim < 1:
            raise ConfigurationError(f"dimension must be >= 1, got {self.dim}")
        if self.heterogeneity < 0 or self.noise < 0:
            raise ConfigurationError("heterogeneity and noise must be >= 0")
        if self.condition < 1:
            raise ConfigurationError(f"condition number must be >= 1, got {self.condition}")
        if self.kind == "mlp-regression":
            mlp_hidden_units(self.dim)  # validates the dimension


def mlp_hidden_units(d: int) -> int:
    """Hidden width h for parameter count d; requires d = h*(MLP_INPUT_DIM+2)+1."""
    per_unit = MLP_INPUT_DIM + 2
    h, rem = divmod(d - 1, per_unit)
    if rem != 0 or h < 1:
        lo = per_unit * max(1, h) + 1
        raise ConfigurationError(
            f"mlp-regression dimension must be h*{per_unit}+1 for integer h >= 1; "
            f"got {d} (nearest valid: {lo} or {lo + per_unit})")
    return h


@dataclass(frozen=True)
class Batch:
    x: np.ndarray
    y: Optional[np.ndarray] = None


def _quadratic_eigs(spec: ObjectiveSpec) -> np.ndarray:
    if spec.dim == 1:
        return np.ones(1)
    return np.logspace(-np.log10(spec.condition), 0.0, spec.dim)


def _global_params(spec: ObjectiveSpec) -> ParamVector:
    """Generating parameters shared by all shards before the heterogeneity shift."""
    rng = np.random.default_rng([spec.seed, 101])
    if spec.kind == "quadratic":
        return rng.standard_normal(spec.dim)
    if spec.kind == "logistic":
        return rng.standard_normal(spec.dim) / np.sqrt(spec.dim)
    h = mlp_hidden_units(spec.dim)
    w1 = rng.standard_normal((h, MLP_INPUT_DIM)) / np.sqrt(MLP_INPUT_DIM)
    b1 = 0.5 * rng.standard_normal(h)
    w2 = rng.standard_normal(h) / np.sqrt(h)
    b2 = 0.5 * rng.standard_normal(1)
    return pack_mlp(w1, b1, w2, b2)


def _shard_params(spec: ObjectiveSpec, m: int) -> ParamVector:
    base = _global_params(spec)
    if spec.heterogeneity == 0.0:
        return base
    rng = np.random.default_rng([spec.seed, 202, m])
    u = rng.standard_normal(spec.dim)
    u /= np.linalg.norm(u)
    return base + spec.heterogeneity * u


def pack_mlp(w1: np.ndarray, b1: np.ndarray, w2: np.ndarray, b2: np.ndarray) -> ParamVector:
    return np.concatenate([w1.ravel(), b1, w2, np.atleast_1d(b2).astype(float)])


def unpack_mlp(theta: ParamVector):
    h = mlp_hidden_units(theta.shape[0])
    n = MLP_INPUT_DIM
    w1 = theta[: h * n].reshape(h, n)
    b1 = theta[h * n: h * n + h]
    w2 = theta[h * n + h: h * n + 2 * h]
    b2 = theta[-1]
    return w1, b1, w2, b2


def _mlp_forward(theta: ParamVector, x: np.ndarray) -> np.ndarray:
    w1, b1, w2, b2 = unpack_mlp(theta)
    return np.tanh(x @ w1.T + b1) @ w2 + b2


class Shard:
    """One deterministic batch stream plus the shard-local generating parameters."""

    def __init__(self, spec: ObjectiveSpec, index: int, run_seed: int, batch_size: int):
        self.spec = spec
        self.index = index
        self.run_seed = run_seed
        self.batch_size = batch_size
        self.local_params = _shard_params(spec, index)
        self._counter = 0

    def _rng(self, batch_index: int, probe: bool) -> np.random.Generator:
        return np.random.default_rng(
            [self.spec.seed, self.run_seed, self.index, batch_index, int(probe)])

    def batch(self, batch_index: int, size: Optional[int] = None, probe: bool = False) -> Batch:
        spec = self.spec
        n = size if size is not None else self.batch_size
        rng = self._rng(batch_index, probe)
        if spec.kind == "quadratic":
            centers = self.local_params + spec.noise * rng.standard_normal((n, spec.dim))
            return Batch(x=centers)
        if spec.kind == "logistic":
            x = rng.standard_normal((n, spec.dim))
            margins = x @ self.local_params + spec.noise * rng.standard_normal(n)
            y = np.where(margins >= 0.0, 1.0, -1.0)
            return Batch(x=x, y=y)
        x = rng.standard_normal((n, MLP_INPUT_DIM))
        y = _mlp_forward(self.local_params, x) + spec.noise * rng.standard_normal(n)
        return Batch(x=x, y=y)

    def next_batch(self) -> Batch:
        b = self.batch(self._counter)
        self._counter += 1
        return b


class ShardSet:
    """M disjoint shard streams plus a fixed held-out probe set."""

    def __init__(self, spec: ObjectiveSpec, shards: list[Shard], probe_size: int):
        self.spec = spec
        self.shards = shards
        self._probes = [s.batch(0, size=probe_size, probe=True) for s in shards]

    def __len__(self) -> int:
        return len(self.shards)

    def probe_loss(self, theta: ParamVector) -> float:
        """Loss on the held-out probes, averaged over shards (the global objective)."""
        total = 0.0
        for s, probe in zip(self.shards, self._probes):
            loss, _ = loss_and_grad(self.spec, theta, probe)
            total += loss
        return total / len(self.shards)


def make_shards(spec: ObjectiveSpec, M: int, seed: int, batch_size: int = 32,
                probe_size: int = 256) -> ShardSet:
    """Build M deterministic shard streams for (spec, seed)."""
    if M < 1:
        raise ConfigurationError(f"shard count must be >= 1, got {M}")
    if batch_size < 1 or probe_size < 1:
        raise ConfigurationError("batch and probe sizes must be >= 1")
    shards = [Shard(spec, m, seed, batch_size) for m in range(M)]
    return ShardSet(spec, shards, probe_size)


def loss_and_grad(spec: ObjectiveSpec, theta: ParamVector, batch: Batch) -> tuple[float, ParamVector]:
    """Batch loss and its exact analytic gradient at theta.

    Overflow to inf is allowed through silently: the training loop treats a
    non-finite loss as a diverged run, not an error.
    """
    if theta.shape[0] != spec.dim:
        raise ConfigurationError(f"params have dim {theta.shape[0]}, objective expects {spec.dim}")
    if not np.all(np.isfinite(theta)):
        raise NumericError("non-finite parameter entries passed to loss_and_grad")
    with np.errstate(over="ignore", invalid="ignore"):
        return _loss_and_grad(spec, theta, batch)


def _loss_and_grad(spec: ObjectiveSpec, theta: ParamVector, batch: Batch) -> tuple[float, ParamVector]:
    if spec.kind == "quadratic":
        eigs = _quadratic_eigs(spec)
        diffs = theta[None, :] - batch.x
        loss = 0.5 * float(np.mean(np.sum(diffs * diffs * eigs, axis=1)))
        grad = eigs * np.mean(diffs, axis=0)
        return loss, grad

    if spec.kind == "logistic":
        yz = batch.y * (batch.x @ theta)
        loss = float(np.mean(np.logaddexp(0.0, -yz)))
        # sigmoid(-yz) via tanh for stability at large |yz|
        s = 0.5 * (1.0 + np.tanh(-0.5 * yz))
        grad = batch.x.T @ (-batch.y * s) / batch.x.shape[0]
        return loss, grad

    w1, b1, w2, b2 = unpack_mlp(theta)
    n = batch.x.shape[0]
    a = batch.x @ w1.T + b1
    z = np.tanh(a)
    pred = z @ w2 + b2
    r = pred - batch.y
    loss = 0.5 * float(np.mean(r * r))
    dpred = r / n
    dw2 = z.T @ dpred
    db2 = float(np.sum(dpred))
    da = np.outer(dpred, w2) * (1.0 - z * z)
    dw1 = da.T @ batch.x
    db1 = da.sum(axis=0)
    return loss, pack_mlp(dw1, db1, dw2, np.array([db2]))


def finite_diff_grad(spec: ObjectiveSpec, theta: ParamVector, batch: Batch,
                     eps: float = 1e-6) -> ParamVector:
    """Central-difference gradient, the verification oracle for loss_and_grad."""
    if eps <= 0:
        raise ConfigurationError(f"finite-difference step must be > 0, got {eps}")
    grad = np.zeros_like(theta)
    for i in range(theta.shape[0]):
        up = theta.copy()
        up[i] += eps
        down = theta.copy()
        down[i] -= eps
        f_up, _ = loss_and_grad(spec, up, batch)
        f_down, _ = loss_and_grad(spec, down, batch)
        grad[i] = (f_up - f_down) / (2.0 * eps)
    return grad


def init_params(spec: ObjectiveSpec, seed: int, scale: float = 1.0) -> ParamVector:
    """Deterministic starting point, shared by all replicas."""
    rng = np.random.default_rng([spec.seed, 303, seed])
    if spec.kind == "mlp-regression":
        h = mlp_hidden_units(spec.dim)
        w1 = rng.standard_normal((h, MLP_INPUT_DIM)) / np.sqrt(MLP_INPUT_DIM)
        b1 = np.zeros(h)
        w2 = rng.standard_normal(h) / np.sqrt(h)
        b2 = np.zeros(1)
        return scale * pack_mlp(w1, b1, w2, b2)
    return scale * rng.standard_normal(spec.dim)
