"""Experiment execution: seeded runs, CSV reports and reproducibility manifests.

runs.csv carries no timestamps, so re-running the same manifest reproduces it
byte for byte; volatile metadata (creation time, versions) lives only in
manifest.toml next to it.
"""

from __future__ import annotations

import csv
import datetime
import json
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .. import __version__
from ..errors import ConfigurationError
from ..netsim import simulate
from ..objectives import ObjectiveSpec
from ..protocol import run_training
from .config import (ExperimentConfig, NetsimPoint, TrainingRun, load_config,
                     with_seeds)

TRAINING_COLUMNS = ["method", "objective", "H", "k", "M", "format", "seed",
                    "outer_lr", "final_eval_loss", "diverged",
                    "total_payload_bytes", "replica_divergence"]
NETSIM_COLUMNS = ["method", "model", "H", "k", "format", "bandwidth_gbps",
                  "utilization"]


def objective_tag(spec: ObjectiveSpec) -> str:
    tag = f"{spec.kind}:d{spec.dim}:het{spec.heterogeneity:g}:noise{spec.noise:g}:seed{spec.seed}"
    if spec.kind == "quadratic":
        tag += f":cond{spec.condition:g}"
    return tag


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _training_row(run: TrainingRun, seed: int) -> dict:
    cfg = replace(run.cfg, seed=seed)
    trace = run_training(cfg)
    return {
        "method": run.label,
        "objective": objective_tag(cfg.objective),
        "H": cfg.H,
        "k": cfg.k,
        "M": cfg.M,
        "format": cfg.quant,
        "seed": seed,
        "outer_lr": cfg.outer_lr,
        "final_eval_loss": trace.final_eval_loss,
        "diverged": trace.diverged,
        "total_payload_bytes": trace.payload_bytes,
        "replica_divergence": trace.final_divergence,
    }


def _netsim_row(point: NetsimPoint) -> dict:
    report = simulate(point.model, point.strategy, point.M, point.bandwidth_gbps,
                      point.total_steps)
    k = point.strategy.outer_rounds if point.strategy.kind == "outer-overlap" else 0
    return {
        "method": point.label,
        "model": point.model_name,
        "H": point.strategy.H,
        "k": k,
        "format": point.strategy.quant,
        "bandwidth_gbps": point.bandwidth_gbps,
        "utilization": report.utilization,
    }


def _training_job(args):
    run, seed = args
    return _training_row(run, seed)


def run_experiment(config: ExperimentConfig | str | Path, out_dir: Optional[str] = None,
                   jobs: int = 1, seed_override: Optional[int] = None) -> tuple[Path, Path]:
    """Execute every run in the experiment; write runs.csv and manifest.toml.

    Returns (csv_path, manifest_path). Diverged runs are recorded as rows with
    an empty loss cell, never raised.
    """
    if not isinstance(config, ExperimentConfig):
        config = load_config(config)
    if seed_override is not None:
        config = with_seeds(config, (seed_override,))

    out = Path(out_dir) if out_dir is not None else Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    if config.kind == "training":
        columns = TRAINING_COLUMNS
        work = [(run, seed) for run in config.runs for seed in config.seeds]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                rows = list(pool.map(_training_job, work))
        else:
            rows = [_training_job(w) for w in work]
    else:
        columns = NETSIM_COLUMNS
        rows = [_netsim_row(p) for p in config.runs]

    csv_path = out / "runs.csv"
    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])

    manifest_path = out / "manifest.toml"
    _write_manifest(manifest_path, config, len(rows))
    return csv_path, manifest_path


def _write_manifest(path: Path, config: ExperimentConfig, n_rows: int) -> None:
    created = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    lines = [
        f'name = "{config.name}"',
        f'kind = "{config.kind}"',
        f'config_hash = "{config.config_hash}"',
        f'created = "{created}"',
        f"seeds = {list(config.seeds)}",
        f"rows = {n_rows}",
        "",
        "[versions]",
        f'python = "{platform.python_version()}"',
        f'numpy = "{np.__version__}"',
        f'dilosim = "{__version__}"',
        "",
        f"config_json = '{json.dumps(config.raw, sort_keys=True)}'",
        "",
    ]
    path.write_text("\n".join(lines))


@dataclass(frozen=True)
class CompareSummary:
    baseline: str
    candidate: str
    pairs: int
    baseline_median_loss: float
    candidate_median_loss: float
    mean_rel_degradation: float
    candidate_wins: int
    baseline_wins: int
    ties: int
    baseline_diverged: int
    candidate_diverged: int

    def row(self) -> str:
        return (f"{self.baseline} vs {self.candidate}: pairs={self.pairs} "
                f"median_loss={self.baseline_median_loss:.6g}/{self.candidate_median_loss:.6g} "
                f"mean_rel_degradation={self.mean_rel_degradation:+.4%} "
                f"wins(b/c/tie)={self.baseline_wins}/{self.candidate_wins}/{self.ties} "
                f"diverged(b/c)={self.baseline_diverged}/{self.candidate_diverged}")


def _row_loss(row: dict) -> float:
    if row["diverged"] == "true" or row["final_eval_loss"] == "":
        return float("inf")
    return float(row["final_eval_loss"])


def compare_runs(csv_path: str | Path, baseline: str, candidate: str) -> CompareSummary:
    """Paired final-loss comparison of two method labels in a training runs.csv."""
    with open(csv_path, newline="") as f:
        rows = list(csv.DictReader(f))
    if rows and "final_eval_loss" not in rows[0]:
        raise ConfigurationError(f"{csv_path} is not a training report")

    def collect(label: str) -> dict:
        out = {}
        for row in rows:
            if row["method"] == label:
                key = (row["objective"], row["H"], row["M"], row["format"], row["seed"])
                out[key] = row
        return out

    base_rows = collect(baseline)
    cand_rows = collect(candidate)
    if not base_rows:
        raise ConfigurationError(f"method {baseline!r} not present in {csv_path}")
    if not cand_rows:
        raise ConfigurationError(f"method {candidate!r} not present in {csv_path}")
    missing_b = sorted(set(cand_rows) - set(base_rows))
    missing_c = sorted(set(base_rows) - set(cand_rows))
    if missing_b or missing_c:
        parts = []
        if missing_c:
            parts.append(f"{candidate!r} missing seeds/settings: "
                         + ", ".join(f"(objective={k[0]}, H={k[1]}, seed={k[4]})" for k in missing_c))
        if missing_b:
            parts.append(f"{baseline!r} missing seeds/settings: "
                         + ", ".join(f"(objective={k[0]}, H={k[1]}, seed={k[4]})" for k in missing_b))
        raise ConfigurationError("unmatched comparison pairs: " + "; ".join(parts))

    keys = sorted(base_rows)
    b_losses = [_row_loss(base_rows[k]) for k in keys]
    c_losses = [_row_loss(cand_rows[k]) for k in keys]
    rel = [(c - b) / abs(b) for b, c in zip(b_losses, c_losses)
           if np.isfinite(b) and np.isfinite(c) and b != 0.0]
    return CompareSummary(
        baseline=baseline,
        candidate=candidate,
        pairs=len(keys),
        baseline_median_loss=float(np.median(b_losses)),
        candidate_median_loss=float(np.median(c_losses)),
        mean_rel_degradation=float(np.mean(rel)) if rel else float("nan"),
        candidate_wins=sum(c < b for b, c in zip(b_losses, c_losses)),
        baseline_wins=sum(b < c for b, c in zip(b_losses, c_losses)),
        ties=sum(b == c for b, c in zip(b_losses, c_losses)),
        baseline_diverged=sum(not np.isfinite(b) for b in b_losses),
        candidate_diverged=sum(not np.isfinite(c) for c in c_losses),
    )
