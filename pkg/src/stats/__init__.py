"""Statistical validation for pdqrng"""

from .analysis import DegenerateInputError, UniformityDeviation, autocorrelation, autocorrelation_floor_db, uniformity_deviation
from .battery import (
    TESTS, BatterySummary, TestOutcome, TestSummary, block_frequency_test, cumulative_sums_test,
    incomplete_gamma_upper_regularized, monobit_test, proportion_interval, pvalue_uniformity, run_battery,
    runs_test, write_battery_report,
)

__all__ = [
    "DegenerateInputError", "UniformityDeviation", "autocorrelation", "autocorrelation_floor_db",
    "uniformity_deviation", "TESTS", "BatterySummary", "TestOutcome", "TestSummary", "block_frequency_test",
    "cumulative_sums_test", "incomplete_gamma_upper_regularized", "monobit_test", "proportion_interval",
    "pvalue_uniformity", "run_battery", "runs_test", "write_battery_report",
]
