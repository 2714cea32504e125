"""Picard solver, supersolutions, decay fits and threshold sweeps on a periodic box."""
from .artifacts import write_run_summary, write_snapshots, write_sweep_csv
from .decay import DecayFit, DecayResult, expected_slope, fit_window, verify_decay
from .discretization import Discretization, beta_integral, calibration_error, graded_mesh, product_weights
from .picard import PicardRun, picard_solve, truncate_nonlinearity
from .sharpness import (SweepRecord, ThresholdBracket, bisect_threshold, gradient_power_norm, initial_field,
                        sharpness_experiment)
from .supersolution import BoundCheck, HypothesisCheck, Supersolution, build_supersolution, check_apriori_bound

__all__ = [
    "BoundCheck", "DecayFit", "DecayResult", "Discretization", "HypothesisCheck", "PicardRun", "Supersolution",
    "SweepRecord", "ThresholdBracket", "beta_integral", "bisect_threshold", "build_supersolution",
    "calibration_error", "check_apriori_bound", "expected_slope", "fit_window", "gradient_power_norm",
    "graded_mesh", "initial_field", "picard_solve", "product_weights", "sharpness_experiment",
    "truncate_nonlinearity", "verify_decay", "write_run_summary", "write_snapshots", "write_sweep_csv",
]
