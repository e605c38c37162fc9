"""Named experiment presets mirroring the ablations at desk scale.

Each preset is an ordinary config document fed through the same schema
validation as user config files, so `dilosim preset NAME` and `dilosim run
FILE` behave identically. Training presets use a heterogeneous quadratic by
default: delayed-gradient degradation only shows up when shards disagree.
"""

from __future__ import annotations

from .config import ExperimentConfig, build_experiment

_RANKING_OBJECTIVE = {
    "kind": "quadratic",
    "dim": 64,
    "heterogeneity": 2.0,
    "noise": 0.05,
    "seed": 7,
    "condition": 100.0,
}

_RANKING_OPTIM = {
    "inner_lr": 0.005,
    "beta1": 0.9,
    "beta2": 0.99,
    "eps": 1e-8,
    "outer_lr": 0.4,
    "outer_momentum": 0.9,
}


def _ranking() -> dict:
    return {
        "kind": "training",
        "name": "ranking",
        "seeds": [0, 1, 2, 3, 4],
        "objective": dict(_RANKING_OBJECTIVE),
        "train": {"M": 2, "H": 30, "T": 900, "batch_size": 32, "probe_size": 256},
        "optim": dict(_RANKING_OPTIM),
        "variant": [
            {"label": "DataParallel", "method": "DataParallel"},
            {"label": "Standard", "method": "Standard"},
            {"label": "EagerDelayed", "method": "EagerDelayed", "k": 1},
            {"label": "NaiveDelayed-lr0.4", "method": "NaiveDelayed", "k": 1, "outer_lr": 0.4},
            {"label": "NaiveDelayed-lr0.1", "method": "NaiveDelayed", "k": 1, "outer_lr": 0.1},
        ],
    }


def _stale_vs_eager() -> dict:
    return {
        "kind": "training",
        "name": "stale_vs_eager",
        "seeds": [0],
        "objective": dict(_RANKING_OBJECTIVE),
        "train": {"M": 2, "H": [5, 30, 100, 250, 500], "T": 15000},
        "optim": dict(_RANKING_OPTIM),
        "variant": [
            {"label": "EagerDelayed", "method": "EagerDelayed", "k": 1},
            {"label": "NaiveDelayed-lr0.4", "method": "NaiveDelayed", "k": 1, "outer_lr": 0.4},
            {"label": "NaiveDelayed-lr0.1", "method": "NaiveDelayed", "k": 1, "outer_lr": 0.1},
        ],
    }


def _com_overlap() -> dict:
    return {
        "kind": "training",
        "name": "com_overlap",
        "seeds": [0, 1, 2],
        "objective": dict(_RANKING_OBJECTIVE),
        "train": {"M": 2, "H": 30, "T": 900},
        "optim": dict(_RANKING_OPTIM),
        "variant": [
            {"label": "Standard", "method": "Standard"},
            {"label": "NaiveDelayed-lr0.4", "method": "NaiveDelayed", "k": 1, "outer_lr": 0.4},
            {"label": "NaiveDelayed-lr0.1", "method": "NaiveDelayed", "k": 1, "outer_lr": 0.1},
            {"label": "EagerDelayed-k1", "method": "EagerDelayed", "k": 1},
            {"label": "EagerDelayed-k2", "method": "EagerDelayed", "k": 2},
        ],
    }


def _quantized() -> dict:
    variants = []
    for fmt in ("fp32", "bf16", "fp8-e4m3", "fp4-e2m1"):
        variants.append({"label": f"Standard-{fmt}", "method": "Standard", "quant": fmt})
        variants.append({"label": f"EagerDelayed-{fmt}", "method": "EagerDelayed",
                         "k": 1, "quant": fmt})
    return {
        "kind": "training",
        "name": "quantized",
        "seeds": [0, 1, 2],
        "objective": dict(_RANKING_OBJECTIVE),
        "train": {"M": 2, "H": 30, "T": 3000},
        "optim": dict(_RANKING_OPTIM),
        "variant": variants,
    }


def _vanilla_vs_streaming() -> dict:
    return {
        "kind": "training",
        "name": "vanilla_vs_streaming",
        "seeds": [0, 1, 2],
        "objective": dict(_RANKING_OBJECTIVE),
        "train": {"M": 2, "H": 30, "T": 900},
        "optim": dict(_RANKING_OPTIM),
        "variant": [
            {"label": "Standard-whole", "method": "Standard", "fragments": 1},
            {"label": "Standard-streaming", "method": "Standard", "fragments": 4},
            {"label": "EagerDelayed-whole", "method": "EagerDelayed", "k": 1, "fragments": 1},
            {"label": "EagerDelayed-streaming", "method": "EagerDelayed", "k": 1, "fragments": 4},
        ],
    }


def _bandwidth_sweep() -> dict:
    return {
        "kind": "netsim",
        "name": "bandwidth_sweep",
        "sweep": {
            "models": ["1B", "10B", "100B"],
            "M": 2,
            "bandwidth_log10_min": -1.0,
            "bandwidth_log10_max": 3.0,
            "bandwidth_points": 41,
        },
        "strategy": [
            {"label": "data-parallel", "kind": "data-parallel", "quant": "fp32"},
            {"label": "no-overlap", "kind": "no-overlap", "H": 100,
             "layers_per_fragment": 3, "quant": "fp32"},
            {"label": "inner-overlap-fp4", "kind": "inner-overlap", "H": 100,
             "layers_per_fragment": 3, "inner_steps": 1, "quant": "fp4-e2m1"},
            {"label": "outer-overlap-fp4", "kind": "outer-overlap", "H": 100,
             "layers_per_fragment": 3, "outer_rounds": 1, "quant": "fp4-e2m1"},
        ],
    }


def _smoke() -> dict:
    return {
        "kind": "training",
        "name": "smoke",
        "seeds": [0, 1],
        "objective": {"kind": "quadratic", "dim": 16, "heterogeneity": 1.0,
                      "noise": 0.05, "seed": 3, "condition": 5.0},
        "train": {"M": 2, "H": 5, "T": 50, "batch_size": 16, "probe_size": 64},
        "optim": dict(_RANKING_OPTIM),
        "variant": [
            {"label": "Standard", "method": "Standard"},
            {"label": "EagerDelayed", "method": "EagerDelayed", "k": 1},
        ],
    }


PRESETS = {
    "ranking": _ranking,
    "stale_vs_eager": _stale_vs_eager,
    "com_overlap": _com_overlap,
    "quantized": _quantized,
    "vanilla_vs_streaming": _vanilla_vs_streaming,
    "bandwidth_sweep": _bandwidth_sweep,
    "smoke": _smoke,
}


def preset_names() -> list[str]:
    return sorted(PRESETS)


def get_preset(name: str) -> ExperimentConfig:
    from ..errors import ConfigurationError
    if name not in PRESETS:
        raise ConfigurationError(f"unknown preset {name!r}, expected one of {preset_names()}")
    return build_experiment(PRESETS[name](), default_name=name)
