"""Over-the-air sum computation under sync errors and ISI: pulse models,
desynchronization moments, power control, Monte-Carlo evaluation and a
learned pulse designer."""

__version__ = "0.1.0"

from .allocation import PowerAllocation, oracle_grid_search, solve_isi, solve_no_isi
from .designer import DesignConfig, LossBreakdown, fit_cosine, train
from .moments import WaveformMoments, all_moments, moment_quadrature
from .simulator import ScenarioConfig, simulate_mse, sweep
from .waveforms import (
    WaveformSpec,
    btrc,
    discretize,
    raised_cosine,
    sample,
    table1_waveform,
)

__all__ = [
    "DesignConfig",
    "LossBreakdown",
    "PowerAllocation",
    "ScenarioConfig",
    "WaveformMoments",
    "WaveformSpec",
    "all_moments",
    "btrc",
    "discretize",
    "fit_cosine",
    "moment_quadrature",
    "oracle_grid_search",
    "raised_cosine",
    "sample",
    "simulate_mse",
    "solve_isi",
    "solve_no_isi",
    "sweep",
    "table1_waveform",
    "train",
]
