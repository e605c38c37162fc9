#!/usr/bin/env python3
"""Run every named preset and drop the reports under runs/.

The full suite takes a few minutes on one machine; pass preset names to run a
subset, and --jobs to parallelize the training sweeps.
"""

import argparse

from dilosim.harness.presets import get_preset, preset_names
from dilosim.harness.runner import run_experiment


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("presets", nargs="*", default=None,
                        help="preset names (default: all)")
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--out-root", default="runs")
    args = parser.parse_args()

    names = args.presets or preset_names()
    for name in names:
        csv_path, manifest = run_experiment(get_preset(name),
                                            out_dir=f"{args.out_root}/{name}",
                                            jobs=args.jobs)
        print(f"{name}: {csv_path}")


if __name__ == "__main__":
    main()
