"""Monte Carlo harness: scenarios, metrics, baselines and the ``bench`` CLI."""

from .baselines import baseline_grid_music, baseline_narrowband_lasso, music_spectrum
from .metrics import MetricsRow, TrialRecord, aggregate, angle_errors, rmse_angles, rmse_coupling
from .runner import alpha_sweep, sweep_alpha, sweep_snapshots, sweep_snr, write_outputs
from .scenario import ESTIMATORS, GRID_LASSO, GRID_MUSIC, PROPOSED, Scenario, reference_scenario

__all__ = [
    "ESTIMATORS", "GRID_LASSO", "GRID_MUSIC", "PROPOSED", "MetricsRow", "Scenario",
    "TrialRecord", "aggregate", "alpha_sweep", "angle_errors", "baseline_grid_music",
    "baseline_narrowband_lasso", "music_spectrum", "reference_scenario", "rmse_angles",
    "rmse_coupling", "sweep_alpha", "sweep_snapshots", "sweep_snr", "write_outputs",
]
