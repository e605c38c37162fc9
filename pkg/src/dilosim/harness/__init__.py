from .config import ExperimentConfig, build_experiment, load_config
from .presets import get_preset, preset_names
from .runner import CompareSummary, compare_runs, run_experiment
