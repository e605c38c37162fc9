"""Flat parameter-vector arithmetic and fragment partitioning.

All training state lives in 1-D float64 numpy arrays ("parameter vectors").
Reductions over lists of vectors are summed left-to-right so that every run
of the simulator is bitwise reproducible; do not replace the loops below with
np.mean/np.sum over a stacked axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

ParamVector = np.ndarray


def as_vector(values) -> ParamVector:
    """Validate and convert a sequence into a parameter vector."""
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise ConfigurationError(f"parameter vector must be 1-D and nonempty, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ConfigurationError("parameter vector contains non-finite entries")
    return x


def linear_combine(a: float, x: ParamVector, b: float, y: ParamVector) -> ParamVector:
    """Element-wise a*x + b*y."""
    if x.shape != y.shape:
        raise ConfigurationError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return a * x + b * y


def average_vectors(vs: list[ParamVector]) -> ParamVector:
    """Element-wise mean, summed left-to-right for cross-run determinism."""
    if len(vs) == 0:
        raise ConfigurationError("cannot average an empty list of vectors")
    dim = vs[0].shape
    acc = vs[0].astype(np.float64, copy=True)
    for v in vs[1:]:
        if v.shape != dim:
            raise ConfigurationError(f"dimension mismatch in average: {dim} vs {v.shape}")
        acc += v
    acc /= len(vs)
    return acc


def l2_norm(x: ParamVector) -> float:
    """Euclidean norm."""
    return float(np.linalg.norm(x))


@dataclass(frozen=True)
class FragmentSpec:
    """Partition of [0, d) into contiguous fragments with per-fragment sync phase offsets.

    ranges: ordered disjoint half-open (start, stop) index ranges covering [0, d).
    offsets: per-fragment phase offset in inner steps, each in [0, H).
    """

    ranges: tuple[tuple[int, int], ...]
    offsets: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not self.ranges:
            raise ConfigurationError("fragment spec needs at least one range")
        pos = 0
        for start, stop in self.ranges:
            if start != pos or stop <= start:
                raise ConfigurationError(
                    f"fragment ranges must be contiguous, disjoint and cover [0, d); bad range ({start}, {stop}) at {pos}"
                )
            pos = stop
        offsets = self.offsets if self.offsets else tuple(0 for _ in self.ranges)
        if len(offsets) != len(self.ranges):
            raise ConfigurationError("one offset per fragment required")
        if any(o < 0 for o in offsets):
            raise ConfigurationError("fragment offsets must be >= 0")
        object.__setattr__(self, "offsets", offsets)

    @property
    def dim(self) -> int:
        return self.ranges[-1][1]

    @property
    def count(self) -> int:
        return len(self.ranges)

    @classmethod
    def whole(cls, d: int) -> "FragmentSpec":
        return cls(ranges=((0, d),), offsets=(0,))

    @classmethod
    def equal_parts(cls, d: int, count: int, H: int) -> "FragmentSpec":
        """Split [0, d) into `count` near-equal fragments, offsets staggered by H // count."""
        if count < 1 or count > d:
            raise ConfigurationError(f"fragment count must be in [1, d], got {count}")
        base, extra = divmod(d, count)
        ranges = []
        pos = 0
        for f in range(count):
            size = base + (1 if f < extra else 0)
            ranges.append((pos, pos + size))
            pos += size
        stride = H // count
        offsets = tuple((f * stride) % H for f in range(count))
        return cls(ranges=tuple(ranges), offsets=offsets)


def slice_fragment(x: ParamVector, spec: FragmentSpec, f: int) -> ParamVector:
    """Contiguous copy of fragment f of x."""
    if not 0 <= f < spec.count:
        raise ConfigurationError(f"fragment index {f} out of range [0, {spec.count})")
    if x.shape[0] != spec.dim:
        raise ConfigurationError(f"vector dim {x.shape[0]} does not match fragment spec dim {spec.dim}")
    start, stop = spec.ranges[f]
    return x[start:stop].copy()


def write_fragment(x: ParamVector, spec: FragmentSpec, f: int, values: ParamVector) -> None:
    """Inverse of slice_fragment: write `values` into fragment f of x in place."""
    if not 0 <= f < spec.count:
        raise ConfigurationError(f"fragment index {f} out of range [0, {spec.count})")
    start, stop = spec.ranges[f]
    if values.shape[0] != stop - start:
        raise ConfigurationError(f"fragment {f} expects {stop - start} values, got {values.shape[0]}")
    x[start:stop] = values
