#!/usr/bin/env python3
"""
Arcsine model of the interferometer output and its min-entropy once digitized.

For a uniformly distributed phase the output power u is arcsine distributed on
[u_min, u_max]; the most probable ADC code sits at one of the two edges.
"""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.stats import chisquare

from core.errors import ValidationError
from core.logger import log_info
from interferometer.adc import AdcConfig

NORMALIZATION_TOL = 1e-9
# Gauss-Hermite nodes used to fold Gaussian detector noise into bin masses
NOISE_QUADRATURE_NODES = 96
# Codes expected fewer times than this are pooled before the chi-square test
MIN_EXPECTED_COUNT = 5.0


class NarrowDistributionError(ValidationError):
    """Raised when the arcsine span does not exceed one ADC bin"""
    pass


@dataclass(frozen=True)
class ArcsineModel:
    u_min: float   # W
    u_max: float   # W

    def __post_init__(self):
        if not (math.isfinite(self.u_min) and math.isfinite(self.u_max)):
            raise ValidationError("arcsine bounds must be finite")
        if self.u_max < self.u_min:
            raise ValidationError(f"u_max={self.u_max:.6g} below u_min={self.u_min:.6g}")

    @property
    def span(self) -> float:
        return self.u_max - self.u_min

    def pdf(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        inside = (u > self.u_min) & (u < self.u_max)
        product = np.where(inside, (u - self.u_min) * (self.u_max - u), 1.0)
        return np.where(inside, 1.0 / (math.pi * np.sqrt(product)), 0.0)

    def cdf(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.span == 0:
            return np.where(u >= self.u_min, 1.0, 0.0)
        x = np.clip((u - self.u_min) / self.span, 0.0, 1.0)
        return (2.0 / math.pi) * np.arcsin(np.sqrt(x))


def arcsine_bounds(mean_u1: float, mean_u2: float, visibility: float) -> ArcsineModel:
    if not (mean_u1 > 0 and mean_u2 > 0):
        raise ValidationError("arm means must be positive")
    if not 0.0 <= visibility <= 1.0:
        raise ValidationError(f"visibility must lie in [0, 1] (got {visibility})")
    beat = 2.0 * visibility * math.sqrt(mean_u1 * mean_u2)
    return ArcsineModel(u_min=mean_u1 + mean_u2 - beat, u_max=mean_u1 + mean_u2 + beat)


def arcsine_moments(model: ArcsineModel) -> Tuple[float, float]:
    """(mean, variance) = ((u_min + u_max)/2, span^2/8)."""
    return 0.5 * (model.u_min + model.u_max), model.span ** 2 / 8.0


def first_bin_probability(model: ArcsineModel, adc: AdcConfig) -> float:
    """Arcsine mass of [u_min, u_min + du]: (2/pi) arcsin sqrt(A / (2^b span))."""
    if not adc.bin_size < model.span:
        raise NarrowDistributionError(
            f"arcsine span {model.span:.6g}W does not exceed one ADC bin ({adc.bin_size:.6g}W)"
        )
    return (2.0 / math.pi) * math.asin(math.sqrt(adc.dynamic_range / (adc.levels * model.span)))


def digitized_arcsine_masses(model: ArcsineModel, adc: AdcConfig, noise_variance: float = 0.0) -> np.ndarray:
    """Probability of every ADC code on the 0-anchored grid.

    Mass outside [0, A_ADC) lands on the end codes, as the digitizer clamps.
    With noise_variance > 0 the arcsine is convolved with zero-mean Gaussian
    noise before binning.
    """
    edges = np.arange(1, adc.levels) * adc.bin_size
    if noise_variance > 0:
        nodes, weights = hermegauss(NOISE_QUADRATURE_NODES)
        weights = weights / weights.sum()
        sigma = math.sqrt(noise_variance)
        cumulative = np.zeros(edges.size)
        for node, weight in zip(nodes, weights):
            cumulative += weight * model.cdf(edges - sigma * node)
    else:
        cumulative = model.cdf(edges)
    return np.diff(np.concatenate(([0.0], cumulative, [1.0])))


def anchored_arcsine_masses(model: ArcsineModel, adc: AdcConfig) -> np.ndarray:
    """Bin masses on a grid of width du whose first edge sits at u_min.

    No grid offset gives a larger most-probable bin than this alignment, so
    its min-entropy is a lower bound for every placement of the ADC grid.
    """
    if not adc.bin_size < model.span:
        raise NarrowDistributionError(
            f"arcsine span {model.span:.6g}W does not exceed one ADC bin ({adc.bin_size:.6g}W)"
        )
    count = int(math.ceil(model.span / adc.bin_size))
    edges = model.u_min + np.arange(1, count) * adc.bin_size
    edges = edges[edges < model.u_max]
    return np.diff(np.concatenate(([0.0], model.cdf(edges), [1.0])))


def min_entropy_exact(mass_function: np.ndarray) -> float:
    """-log2(max p)"""
    p = np.asarray(mass_function, dtype=float)
    if p.size == 0:
        raise ValidationError("mass function is empty")
    if np.any(p < 0):
        raise ValidationError("mass function has negative entries")
    total = float(np.sum(p))
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise ValidationError(f"mass function sums to {total:.12g}, not 1")
    return float(-np.log2(np.max(p)))


def min_entropy_closed_form(adc: AdcConfig, span: float) -> float:
    """b/2 - (1/2) log2(4 A_ADC / (pi^2 span)), the small-bin limit."""
    if not span > 0:
        raise ValidationError("span must be positive")
    return adc.resolution / 2.0 - 0.5 * math.log2(4.0 * adc.dynamic_range / (math.pi ** 2 * span))


def randomness_rate(h: float, prf: float) -> float:
    """bits/s"""
    if h < 0:
        raise ValidationError("min-entropy must be non-negative")
    return h * prf


@dataclass(frozen=True)
class HistogramFit:
    statistic: float
    pvalue: float
    cells: int       # after pooling
    pooled: int      # codes folded into the pooled cell
    samples: int


def arcsine_histogram_fit(codes: np.ndarray, model: ArcsineModel, adc: AdcConfig, noise_variance: float = 0.0,
                          min_expected: float = MIN_EXPECTED_COUNT, ddof: int = 0) -> HistogramFit:
    """Pearson chi-square of an ADC code histogram against the digitized arcsine.

    Codes expected fewer than min_expected times share one pooled cell.
    ddof counts model parameters estimated from the same codes.
    """
    codes = np.asarray(codes)
    if codes.size == 0:
        raise ValidationError("no codes to test")
    if np.any(codes < 0) or np.any(codes >= adc.levels):
        raise ValidationError(f"codes must lie in [0, {adc.levels - 1}]")
    observed = np.bincount(codes.astype(np.int64), minlength=adc.levels).astype(float)
    expected = digitized_arcsine_masses(model, adc, noise_variance) * codes.size
    keep = expected >= min_expected
    if np.count_nonzero(keep) < 2:
        raise ValidationError(f"{codes.size} samples leave fewer than two cells of {min_expected:g} expected counts")
    f_obs, f_exp = observed[keep], expected[keep]
    pooled = int(np.count_nonzero(~keep))
    if pooled:
        f_obs = np.append(f_obs, observed[~keep].sum())
        f_exp = np.append(f_exp, expected[~keep].sum())
    result = chisquare(f_obs, f_exp, ddof=ddof)
    fit = HistogramFit(statistic=float(result.statistic), pvalue=float(result.pvalue), cells=int(f_obs.size),
                       pooled=pooled, samples=int(codes.size))
    log_info(
        f"Arcsine histogram fit: chi2={fit.statistic:.1f} over {fit.cells} cells "
        f"({pooled} codes pooled), p={fit.pvalue:.4g}",
        component="entropy",
    )
    return fit
