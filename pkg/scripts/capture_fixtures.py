#!/usr/bin/env python3
"""Regenerate the acceptance regression fixtures from fresh runs.

The acceptance suite asserts orderings first and then checks the measured
numbers against these frozen values, so silent behavior drift fails loudly.
Run this only after verifying a change is intended, then review the diff.
"""

import json
from pathlib import Path

import numpy as np

from dilosim import (MODEL_PRESETS, ObjectiveSpec, OverlapStrategy, TrainConfig,
                     min_bandwidth_for_cu, run_training)

FIXTURE_PATH = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "acceptance.json"

RANKING_OBJECTIVE = dict(kind="quadratic", dim=64, heterogeneity=2.0, noise=0.05,
                         seed=7, condition=100.0)
RANKING_VARIANTS = {
    "DataParallel": dict(method="DataParallel", outer_lr=0.4),
    "Standard": dict(method="Standard", outer_lr=0.4),
    "EagerDelayed": dict(method="EagerDelayed", k=1, outer_lr=0.4),
    "NaiveDelayed-lr0.4": dict(method="NaiveDelayed", k=1, outer_lr=0.4),
    "NaiveDelayed-lr0.1": dict(method="NaiveDelayed", k=1, outer_lr=0.1),
}


def ranking_losses():
    spec = ObjectiveSpec(**RANKING_OBJECTIVE)
    out = {}
    for label, kw in RANKING_VARIANTS.items():
        losses = []
        for seed in range(5):
            cfg = TrainConfig(objective=spec, M=2, H=30, T=900, inner_lr=0.005,
                              seed=seed, **kw)
            trace = run_training(cfg)
            losses.append(trace.final_eval_loss)
        out[label] = losses
    return out


def h_robustness_losses():
    spec = ObjectiveSpec(**RANKING_OBJECTIVE)
    out = {}
    for label, kw in [("EagerDelayed", dict(method="EagerDelayed", outer_lr=0.4)),
                      ("NaiveDelayed", dict(method="NaiveDelayed", outer_lr=0.1))]:
        for H in (30, 500):
            cfg = TrainConfig(objective=spec, M=2, H=H, T=15000, k=1,
                              inner_lr=0.005, seed=0, **kw)
            out[f"{label}-H{H}"] = run_training(cfg).final_eval_loss
    return out


def quantized_losses():
    spec = ObjectiveSpec(**RANKING_OBJECTIVE)
    out = {}
    for fmt in ("fp32", "fp4-e2m1"):
        cfg = TrainConfig(method="EagerDelayed", objective=spec, M=2, H=30, T=3000,
                          k=1, inner_lr=0.005, outer_lr=0.4, seed=0, quant=fmt)
        out[fmt] = run_training(cfg).final_eval_loss
    return out


def netsim_bandwidths():
    model = MODEL_PRESETS["100B"]
    dp = OverlapStrategy(kind="data-parallel", quant="fp32")
    outer = OverlapStrategy(kind="outer-overlap", H=100, layers_per_fragment=3,
                            quant="fp4-e2m1", outer_rounds=1)
    return {
        "data-parallel-cu95": min_bandwidth_for_cu(model, dp, 2, 0.95),
        "outer-overlap-fp4-cu95": min_bandwidth_for_cu(model, outer, 2, 0.95),
    }


def main():
    fixtures = {
        "ranking_final_losses": ranking_losses(),
        "h_robustness_final_losses": h_robustness_losses(),
        "quantized_final_losses": quantized_losses(),
        "netsim_min_bandwidth_gbps": netsim_bandwidths(),
    }
    FIXTURE_PATH.parent.mkdir(parents=True, exist_ok=True)
    FIXTURE_PATH.write_text(json.dumps(fixtures, indent=2, sort_keys=True) + "\n")
    print(f"wrote {FIXTURE_PATH}")
    meds = {k: float(np.median(v)) for k, v in fixtures["ranking_final_losses"].items()}
    print("ranking medians:", json.dumps(meds, indent=2))


if __name__ == "__main__":
    main()
