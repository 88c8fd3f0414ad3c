"""Min-entropy certification for pdqrng"""

from .arcsine import (
    ArcsineModel, HistogramFit, NarrowDistributionError, anchored_arcsine_masses, arcsine_bounds,
    arcsine_histogram_fit, arcsine_moments, digitized_arcsine_masses, first_bin_probability,
    min_entropy_closed_form, min_entropy_exact, randomness_rate,
)
from .report import ENTROPY_BASES, EntropyReport, build_entropy_report

__all__ = [
    "ArcsineModel", "HistogramFit", "NarrowDistributionError", "anchored_arcsine_masses", "arcsine_bounds",
    "arcsine_histogram_fit", "arcsine_moments", "digitized_arcsine_masses", "first_bin_probability",
    "min_entropy_closed_form", "min_entropy_exact", "randomness_rate",
    "ENTROPY_BASES", "EntropyReport", "build_entropy_report",
]
