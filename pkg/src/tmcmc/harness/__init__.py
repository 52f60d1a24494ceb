"""Configuration, experiment orchestration and the command-line interface."""
from .config import ExperimentConfig, load_config
from .experiments import ExperimentResult, run_diffeo_comparison, run_experiment, run_table
