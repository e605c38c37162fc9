"""Experiment configuration: strict TOML schema and sweep expansion.

A config file describes either a set of training runs (base settings plus an
array of method variants, crossed with an H axis and a seed list) or a netsim
bandwidth sweep (models x strategies x a log-spaced bandwidth grid). Unknown
keys are rejected by name so ablation typos fail loudly instead of silently
running the wrong experiment.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..errors import ConfigurationError
from ..netsim import MODEL_PRESETS, ModelSpec, OverlapStrategy
from ..objectives import ObjectiveSpec
from ..protocol import TrainConfig


@dataclass(frozen=True)
class TrainingRun:
    label: str
    cfg: TrainConfig


@dataclass(frozen=True)
class NetsimPoint:
    label: str
    model_name: str
    model: ModelSpec
    strategy: OverlapStrategy
    M: int
    bandwidth_gbps: float
    total_steps: int


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str                 # "training" | "netsim"
    name: str
    out_dir: str
    seeds: tuple[int, ...]
    runs: tuple               # TrainingRun or NetsimPoint entries
    raw: dict                 # canonical parsed document, used for hashing

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return "sha256:" + hashlib.sha256(blob.encode()).hexdigest()


def _check_keys(table: dict, allowed: set[str], where: str) -> None:
    for key in table:
        if key not in allowed:
            raise ConfigurationError(f"unknown key {key!r} in [{where}]" if where
                                     else f"unknown key {key!r}")


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigurationError(f"missing required key {key!r} in [{where}]" if where
                                 else f"missing required key {key!r}")
    return table[key]


TOP_KEYS = {"kind", "name", "out_dir", "seeds", "objective", "train", "optim",
            "variant", "sweep", "strategy"}
OBJECTIVE_KEYS = {"kind", "dim", "heterogeneity", "noise", "seed", "condition"}
TRAIN_KEYS = {"M", "H", "T", "rounds", "batch_size", "probe_size", "init_scale",
              "resync_period", "reset_inner_state", "quant", "fragments"}
OPTIM_KEYS = {"inner_lr", "beta1", "beta2", "eps", "weight_decay", "outer_lr",
              "outer_momentum"}
VARIANT_KEYS = {"label", "method", "k", "quant", "fragments", "outer_lr",
                "outer_momentum", "inner_lr", "resync_period", "reset_inner_state"}
SWEEP_KEYS = {"models", "M", "bandwidth_log10_min", "bandwidth_log10_max",
              "bandwidth_points", "total_steps"}
STRATEGY_KEYS = {"label", "kind", "H", "layers_per_fragment", "quant",
                 "inner_steps", "outer_rounds"}


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    with open(path, "rb") as f:
        doc = tomllib.load(f)
    return build_experiment(doc, default_name=path.stem)


def build_experiment(doc: dict, default_name: str = "experiment") -> ExperimentConfig:
    _check_keys(doc, TOP_KEYS, "")
    kind = _require(doc, "kind", "")
    name = doc.get("name", default_name)
    out_dir = doc.get("out_dir", f"runs/{name}")
    if kind == "training":
        return _build_training(doc, name, out_dir)
    if kind == "netsim":
        return _build_netsim(doc, name, out_dir)
    raise ConfigurationError(f"unknown experiment kind {kind!r}, expected 'training' or 'netsim'")


def _build_training(doc: dict, name: str, out_dir: str) -> ExperimentConfig:
    seeds = tuple(_require(doc, "seeds", ""))
    if not seeds:
        raise ConfigurationError("empty sweep axis: 'seeds' must be nonempty")
    if any((not isinstance(s, int)) or s < 0 for s in seeds):
        raise ConfigurationError("seeds must be nonnegative integers")

    obj_table = dict(_require(doc, "objective", ""))
    _check_keys(obj_table, OBJECTIVE_KEYS, "objective")
    objective = ObjectiveSpec(
        kind=_require(obj_table, "kind", "objective"),
        dim=_require(obj_table, "dim", "objective"),
        heterogeneity=obj_table.get("heterogeneity", 0.0),
        noise=obj_table.get("noise", 0.0),
        seed=obj_table.get("seed", 0),
        condition=obj_table.get("condition", 10.0),
    )

    train = dict(doc.get("train", {}))
    _check_keys(train, TRAIN_KEYS, "train")
    optim = dict(doc.get("optim", {}))
    _check_keys(optim, OPTIM_KEYS, "optim")

    h_axis = train.get("H", 30)
    if isinstance(h_axis, int):
        h_axis = [h_axis]
    if not h_axis:
        raise ConfigurationError("empty sweep axis: 'H' must be nonempty")
    if "T" in train and "rounds" in train:
        raise ConfigurationError("give either 'T' or 'rounds' in [train], not both")
    rounds = train.get("rounds")

    variants = doc.get("variant", [])
    if not variants:
        raise ConfigurationError("empty sweep axis: at least one [[variant]] is required")

    runs = []
    for H in h_axis:
        T = rounds * H if rounds is not None else train.get("T", 30 * H)
        for var in variants:
            var = dict(var)
            _check_keys(var, VARIANT_KEYS, "variant")
            method = _require(var, "method", "variant")
            label = var.get("label", method)
            cfg = TrainConfig(
                method=method,
                objective=objective,
                M=train.get("M", 2),
                H=H,
                T=T,
                k=var.get("k"),
                inner_lr=var.get("inner_lr", optim.get("inner_lr", 0.01)),
                beta1=optim.get("beta1", 0.9),
                beta2=optim.get("beta2", 0.99),
                eps=optim.get("eps", 1e-8),
                weight_decay=optim.get("weight_decay", 0.0),
                outer_lr=var.get("outer_lr", optim.get("outer_lr", 0.4)),
                outer_momentum=var.get("outer_momentum", optim.get("outer_momentum", 0.9)),
                batch_size=train.get("batch_size", 32),
                probe_size=train.get("probe_size", 256),
                quant=var.get("quant", train.get("quant", "fp32")),
                fragments=var.get("fragments", train.get("fragments", 1)),
                resync_period=var.get("resync_period", train.get("resync_period", 0)),
                reset_inner_state=var.get("reset_inner_state",
                                          train.get("reset_inner_state", False)),
                init_scale=train.get("init_scale", 1.0),
                seed=0,
            )
            runs.append(TrainingRun(label=label, cfg=cfg))
    return ExperimentConfig("training", name, out_dir, seeds, tuple(runs), doc)


def _build_netsim(doc: dict, name: str, out_dir: str) -> ExperimentConfig:
    sweep = dict(_require(doc, "sweep", ""))
    _check_keys(sweep, SWEEP_KEYS, "sweep")
    model_names = _require(sweep, "models", "sweep")
    if not model_names:
        raise ConfigurationError("empty sweep axis: 'models' must be nonempty")
    for mn in model_names:
        if mn not in MODEL_PRESETS:
            raise ConfigurationError(
                f"unknown model preset {mn!r}, expected one of {sorted(MODEL_PRESETS)}")
    M = sweep.get("M", 2)
    lo = sweep.get("bandwidth_log10_min", -1.0)
    hi = sweep.get("bandwidth_log10_max", 3.0)
    points = sweep.get("bandwidth_points", 41)
    if points < 1:
        raise ConfigurationError("empty sweep axis: 'bandwidth_points' must be >= 1")
    if hi < lo:
        raise ConfigurationError("bandwidth_log10_max must be >= bandwidth_log10_min")
    total_steps = sweep.get("total_steps", 0)

    strategies = doc.get("strategy", [])
    if not strategies:
        raise ConfigurationError("empty sweep axis: at least one [[strategy]] is required")

    grid = [10.0 ** (lo + (hi - lo) * i / max(1, points - 1)) for i in range(points)]
    runs = []
    for model_name in model_names:
        model = MODEL_PRESETS[model_name]
        for st in strategies:
            st = dict(st)
            _check_keys(st, STRATEGY_KEYS, "strategy")
            strategy = OverlapStrategy(
                kind=_require(st, "kind", "strategy"),
                H=st.get("H", 100),
                layers_per_fragment=st.get("layers_per_fragment", 3),
                quant=st.get("quant", "fp32"),
                inner_steps=st.get("inner_steps", 1),
                outer_rounds=st.get("outer_rounds", 1),
            )
            label = st.get("label", strategy.kind)
            steps = total_steps if total_steps > 0 else (
                1 if strategy.kind == "data-parallel" else strategy.H)
            for bw in grid:
                runs.append(NetsimPoint(label=label, model_name=model_name, model=model,
                                        strategy=strategy, M=M, bandwidth_gbps=bw,
                                        total_steps=steps))
    return ExperimentConfig("netsim", name, out_dir, (), tuple(runs), doc)


def with_seeds(config: ExperimentConfig, seeds: tuple[int, ...]) -> ExperimentConfig:
    if config.kind != "training":
        return config
    if not seeds:
        raise ConfigurationError("seed override must be nonempty")
    raw = dict(config.raw)
    raw["seeds"] = list(seeds)
    return replace(config, seeds=tuple(seeds), raw=raw)
