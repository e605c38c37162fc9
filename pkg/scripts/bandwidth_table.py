#!/usr/bin/env python3
"""Print the min-bandwidth table: Gbit/s needed to hit each compute-utilization
target, per model preset and training method."""

import argparse

from dilosim import MODEL_PRESETS, OverlapStrategy, min_bandwidth_for_cu

STRATEGIES = [
    ("Data-Parallel", OverlapStrategy(kind="data-parallel", quant="fp32")),
    ("Streaming, no overlap", OverlapStrategy(kind="no-overlap", H=100)),
    ("Streaming, 1-inner-step overlap fp4",
     OverlapStrategy(kind="inner-overlap", H=100, quant="fp4-e2m1")),
    ("Streaming, 1-outer-step overlap fp4",
     OverlapStrategy(kind="outer-overlap", H=100, quant="fp4-e2m1")),
    ("Streaming, 2-outer-step overlap fp4",
     OverlapStrategy(kind="outer-overlap", H=100, quant="fp4-e2m1", outer_rounds=2)),
]

TARGETS = (0.50, 0.80, 0.90, 0.95, 0.99)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--replicas", type=int, default=2)
    args = parser.parse_args()

    header = "CU = " + "  ".join(f"{t:.0%}".rjust(10) for t in TARGETS)
    for model_name, model in MODEL_PRESETS.items():
        print(f"\n{model_name} ({model.layers} layers, {model.step_time}s/step)  {header}")
        for label, strategy in STRATEGIES:
            cells = []
            for target in TARGETS:
                bw = min_bandwidth_for_cu(model, strategy, args.replicas, target)
                cells.append(f"{bw:10.4g}")
            print(f"  {label:40s}{'  '.join(cells)}")


if __name__ == "__main__":
    main()
