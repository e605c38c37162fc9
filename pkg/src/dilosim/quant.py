"""Lossy codecs for communicated outer gradients.

Formats: fp32 (identity), bf16, fp8-e4m3 and fp4-e2m1. The sub-byte formats
use block-wise scaling: blocks of 32 values share one scale (the block's
max-abs, itself rounded to bf16 and costing 16 wire bits), values are mapped
so the block max lands on the format's largest magnitude, then rounded to
nearest-representable with ties to even. Overflow saturates to the format max.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, NumericError
from .tensorcore import ParamVector

SCALE_BITS = 16  # per-block scale is wire-encoded as bf16


@dataclass(frozen=True)
class QuantFormat:
    name: str
    bits: int
    exp_bits: int
    mantissa_bits: int
    bias: int
    max_value: float
    block_size: Optional[int] = None  # None: no block scaling


FORMATS = {
    "fp32": QuantFormat("fp32", 32, 8, 23, 127, float(np.finfo(np.float32).max)),
    "bf16": QuantFormat("bf16", 16, 8, 7, 127, (2.0 - 2.0 ** -7) * 2.0 ** 127),
    # e4m3 reserves the all-ones code for NaN, so the max magnitude is 1.75 * 2^8
    "fp8-e4m3": QuantFormat("fp8-e4m3", 8, 4, 3, 7, 448.0, block_size=32),
    "fp4-e2m1": QuantFormat("fp4-e2m1", 4, 2, 1, 1, 6.0, block_size=32),
}


def get_format(name: str) -> QuantFormat:
    try:
        return FORMATS[name]
    except KeyError:
        raise ConfigurationError(f"unknown quant format {name!r}, expected one of {sorted(FORMATS)}") from None


def _round_minifloat(x: np.ndarray, fmt: QuantFormat) -> np.ndarray:
    """Round magnitudes to the nearest value representable in fmt (ties to even)."""
    out = np.zeros_like(x)
    mag = np.abs(x)
    nz = mag > 0.0
    if not np.any(nz):
        return out
    v = mag[nz]
    _, exp = np.frexp(v)           # v = f * 2^exp with f in [0.5, 1)
    e = exp - 1                    # floor(log2 v), exact
    min_normal_exp = 1 - fmt.bias
    e = np.maximum(e, min_normal_exp)
    quantum = np.ldexp(1.0, e - fmt.mantissa_bits)
    rounded = np.round(v / quantum) * quantum   # np.round ties to even
    rounded = np.minimum(rounded, fmt.max_value)
    out[nz] = np.sign(x[nz]) * rounded
    return out


def _bf16_round(x: np.ndarray) -> np.ndarray:
    return _round_minifloat(x, FORMATS["bf16"])


def quantize_dequantize(x: ParamVector, fmt: QuantFormat) -> ParamVector:
    """Round-trip x through the wire format. fp32 is a bitwise identity."""
    if not np.all(np.isfinite(x)):
        raise NumericError("non-finite values passed to quantize_dequantize")
    if fmt.name == "fp32":
        return x.copy()
    if fmt.block_size is None:
        return _round_minifloat(x, fmt)

    d = x.shape[0]
    bs = fmt.block_size
    n_blocks = -(-d // bs)
    padded = np.zeros(n_blocks * bs)
    padded[:d] = x
    blocks = padded.reshape(n_blocks, bs)
    scales = _bf16_round(np.max(np.abs(blocks), axis=1))
    out = np.zeros_like(blocks)
    live = scales > 0.0
    if np.any(live):
        norm = blocks[live] * (fmt.max_value / scales[live, None])
        codes = _round_minifloat(norm, fmt)
        out[live] = codes * (scales[live, None] / fmt.max_value)
    return out.reshape(-1)[:d].copy()


def payload_bits(d: int, fmt: QuantFormat) -> int:
    """Exact wire size in bits for a d-dimensional vector in fmt."""
    if d < 1:
        raise ConfigurationError(f"payload dimension must be >= 1, got {d}")
    bits = d * fmt.bits
    if fmt.block_size is not None:
        bits += SCALE_BITS * (-(-d // fmt.block_size))
    return bits
