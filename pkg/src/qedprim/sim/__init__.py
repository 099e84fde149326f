"""Noisy execution engines: trajectory sampler and exact branch oracle."""
from .counts import Counts
from .exact import ExactResult, OracleLimitError, exact_channel, exact_distribution, logical_channel, run_exact
from .noise import PRESETS, NoiseModel, get_preset
from .trajectory import SimulationLimitError, run_shot, run_shots, sample_counts, sample_many

__all__ = [
    "Counts", "ExactResult", "NoiseModel", "OracleLimitError", "PRESETS", "SimulationLimitError",
    "exact_channel", "exact_distribution", "get_preset", "logical_channel", "run_exact",
    "run_shot", "run_shots", "sample_counts", "sample_many",
]
