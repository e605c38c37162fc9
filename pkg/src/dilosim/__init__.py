"""Deterministic simulator for low-communication distributed training."""

__version__ = "0.1.0"

from .errors import ConfigurationError, NumericError
from .objectives import Batch, ObjectiveSpec, ShardSet, finite_diff_grad, \
    init_params, loss_and_grad, make_shards
from .optim import AdamState, NesterovState, adam_step, nesterov_outer_step, sgd_step
from .protocol import (InFlightReduce, ReplicaState, TrainConfig, TrainingTrace,
                       compute_outer_gradient, eager_combine, fragment_sync_due,
                       resync_replicas, run_training)
from .quant import FORMATS, QuantFormat, get_format, payload_bits, quantize_dequantize
from .netsim import (CUReport, MODEL_PRESETS, ModelSpec, OverlapStrategy,
                     comm_seconds, min_bandwidth_for_cu, simulate)
from .tensorcore import (FragmentSpec, ParamVector, as_vector, average_vectors,
                         l2_norm, linear_combine, slice_fragment, write_fragment)
