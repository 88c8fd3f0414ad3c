#!/usr/bin/env python3
"""
Certification report: visibility, arcsine bounds, min-entropy and the
reduction factor the extractor must apply.
"""

from dataclasses import MISSING, asdict, dataclass, field, fields
from typing import Dict, Optional

from core.errors import ValidationError
from core.formats import read_json, write_json
from core.logger import log_info, log_warning
from entropy.arcsine import (
    anchored_arcsine_masses, arcsine_bounds, digitized_arcsine_masses, first_bin_probability,
    min_entropy_closed_form, min_entropy_exact, randomness_rate,
)
from interferometer.adc import AdcConfig
from interferometer.model import VisibilityEstimate

ENTROPY_BASES = ("exact", "closed_form")


@dataclass(frozen=True)
class EntropyReport:
    visibility: float
    u_min: float
    u_max: float
    span: float
    h_exact: float
    h_closed_form: float
    first_bin_prob: float
    reduction_factor: float
    bit_rate: float
    resolution: int
    dynamic_range: float
    prf: float
    entropy_basis: str = "exact"
    visibility_clamped: bool = False
    degenerate_statistics: bool = False
    # Min-entropy on the real ADC grid; at or above h_exact while [u_min, u_max] lies inside the ADC range
    h_adc_grid: float = float("nan")
    warning: str = ""
    provenance: Dict[str, str] = field(default_factory=dict)

    @property
    def certified_entropy(self) -> float:
        return self.h_exact if self.entropy_basis == "exact" else self.h_closed_form

    def validate(self) -> None:
        if self.h_exact > self.resolution + 1e-9:
            raise ValidationError(f"H_exact={self.h_exact:.6g} exceeds b={self.resolution}")
        if self.reduction_factor < 1.0:
            raise ValidationError(f"reduction factor {self.reduction_factor:.6g} below 1")
        if not 0.0 < self.first_bin_prob < 1.0:
            raise ValidationError(f"first-bin probability {self.first_bin_prob:.6g} outside (0, 1)")

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)

    def save(self, path: str) -> str:
        return write_json(path, self.to_dict())

    @classmethod
    def load(cls, path: str) -> "EntropyReport":
        data = read_json(path)
        known = {f.name for f in fields(cls)}
        missing = [f.name for f in fields(cls)
                   if f.name not in data and f.default is MISSING and f.default_factory is MISSING]
        if missing:
            raise ValidationError(f"{path}: entropy report lacks {', '.join(sorted(missing))}")
        report = cls(**{k: v for k, v in data.items() if k in known})
        report.validate()
        return report


def build_entropy_report(estimate: VisibilityEstimate, mean_u1: float, mean_u2: float, adc: AdcConfig,
                         prf: float, entropy_basis: str = "exact",
                         provenance: Optional[Dict[str, str]] = None) -> EntropyReport:
    """Certify the digitized quantum signal (noise excluded) for one visibility estimate."""
    if entropy_basis not in ENTROPY_BASES:
        raise ValidationError(f"entropy_basis must be one of {ENTROPY_BASES} (got '{entropy_basis}')")
    adc.validate()
    model = arcsine_bounds(mean_u1, mean_u2, estimate.value)
    first_bin = first_bin_probability(model, adc)
    # Worst-case grid alignment, so the certified value holds whatever the ADC offset
    h_exact = min_entropy_exact(anchored_arcsine_masses(model, adc))
    h_grid = min_entropy_exact(digitized_arcsine_masses(model, adc))
    h_closed = min_entropy_closed_form(adc, model.span)
    certified = h_exact if entropy_basis == "exact" else h_closed
    if certified <= 0:
        raise ValidationError("certified min-entropy is zero; no reduction factor exists")
    reduction = adc.resolution / certified

    warnings = []
    if estimate.clamped:
        warnings.append(f"visibility estimate {estimate.raw:.4f} clamped to 1")
    if estimate.degenerate:
        warnings.append("output variance below arm+noise variance; visibility set to 0")
    report = EntropyReport(
        visibility=estimate.value, u_min=model.u_min, u_max=model.u_max, span=model.span,
        h_exact=h_exact, h_closed_form=h_closed, first_bin_prob=first_bin, reduction_factor=reduction,
        bit_rate=randomness_rate(certified, prf), resolution=adc.resolution, dynamic_range=adc.dynamic_range,
        prf=prf, entropy_basis=entropy_basis, visibility_clamped=estimate.clamped,
        degenerate_statistics=estimate.degenerate, h_adc_grid=h_grid, warning="; ".join(warnings),
        provenance=dict(provenance or {}),
    )
    report.validate()
    if warnings:
        log_warning(f"Entropy report flags: {report.warning}", component="entropy")
    log_info(
        f"|g|={report.visibility:.4f} span={report.span * 1e3:.4f}mW H_exact={h_exact:.4f} "
        f"H_closed={h_closed:.4f} bits, RF={reduction:.4f}, rate={report.bit_rate / 1e9:.2f} Gbps",
        component="entropy",
    )
    return report
