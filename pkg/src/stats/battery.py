#!/usr/bin/env python3
"""
Native randomness test subset and the two meta-statistics over many sequences.

Tests: frequency (monobit), block frequency, runs and forward cumulative sums,
following the SP 800-22 recipes. For each test the battery reports the
proportion of passing sequences with its 3-sigma interval and P_value_T, the
chi-square uniformity of the P-values over ten bins.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Dict, List, Tuple

import numpy as np
from scipy.special import erfc, gammaincc
from scipy.stats import norm

from core.errors import ValidationError
from core.formats import write_json
from core.logger import log_info, log_warning

DEFAULT_SIGNIFICANCE = 0.01
BLOCK_FREQUENCY_M = 128
PVALUE_BINS = 10
MIN_PVALUES = 10
PVALUE_T_THRESHOLD = 1e-4
SUMMARY_HEADER = ("test", "proportion", "lower", "upper", "p_value_t")


def incomplete_gamma_upper_regularized(a: float, x: float) -> float:
    """Q(a, x) = Gamma(a, x) / Gamma(a)."""
    if not a > 0:
        raise ValidationError(f"a must be positive (got {a})")
    if not x >= 0:
        raise ValidationError(f"x must be non-negative (got {x})")
    return float(gammaincc(a, x))


def _signs(bits: np.ndarray) -> np.ndarray:
    return 2 * np.asarray(bits, dtype=np.int64) - 1


def monobit_test(bits: np.ndarray) -> float:
    n = bits.size
    s_obs = abs(int(np.sum(_signs(bits)))) / math.sqrt(n)
    return float(erfc(s_obs / math.sqrt(2.0)))


def block_frequency_test(bits: np.ndarray, block: int = BLOCK_FREQUENCY_M) -> float:
    blocks = bits.size // block
    if blocks < 1:
        raise ValidationError(f"block frequency needs at least {block} bits")
    proportions = np.asarray(bits[:blocks * block], dtype=float).reshape(blocks, block).mean(axis=1)
    chi2 = 4.0 * block * float(np.sum((proportions - 0.5) ** 2))
    return incomplete_gamma_upper_regularized(blocks / 2.0, chi2 / 2.0)


def runs_test(bits: np.ndarray) -> float:
    n = bits.size
    pi = float(np.mean(bits))
    # Frequency prerequisite: the runs statistic is meaningless for a biased sequence
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        return 0.0
    runs = 1 + int(np.count_nonzero(bits[1:] != bits[:-1]))
    spread = 2.0 * math.sqrt(2.0 * n) * pi * (1.0 - pi)
    return float(erfc(abs(runs - 2.0 * n * pi * (1.0 - pi)) / spread))


def cumulative_sums_test(bits: np.ndarray) -> float:
    n = bits.size
    z = int(np.max(np.abs(np.cumsum(_signs(bits)))))
    if z == 0:
        return 1.0
    root_n = math.sqrt(n)
    first = np.arange(int((-n / z + 1) / 4), int((n / z - 1) / 4) + 1)
    second = np.arange(int((-n / z - 3) / 4), int((n / z - 1) / 4) + 1)
    total = 1.0
    total -= float(np.sum(norm.cdf((4 * first + 1) * z / root_n) - norm.cdf((4 * first - 1) * z / root_n)))
    total += float(np.sum(norm.cdf((4 * second + 3) * z / root_n) - norm.cdf((4 * second + 1) * z / root_n)))
    return min(max(total, 0.0), 1.0)


TESTS: Dict[str, Callable[[np.ndarray], float]] = {
    "monobit": monobit_test,
    "block_frequency": block_frequency_test,
    "runs": runs_test,
    "cumulative_sums": cumulative_sums_test,
}


@dataclass(frozen=True)
class TestOutcome:
    test_name: str
    p_value: float
    passed: bool
    sequence_id: int


@dataclass(frozen=True)
class TestSummary:
    test_name: str
    proportion: float
    lower: float
    upper: float
    p_value_t: float
    proportion_ok: bool
    uniformity_ok: bool


@dataclass(frozen=True)
class BatterySummary:
    sequences: int           # m
    sequence_length: int
    significance: float      # alpha_SL
    s_count: int             # P-values per test
    tests: Tuple[TestSummary, ...]

    @property
    def all_passed(self) -> bool:
        return all(t.proportion_ok and t.uniformity_ok for t in self.tests)


def proportion_interval(significance: float, sequences: int) -> Tuple[float, float]:
    """1 - alpha +- 3 sqrt((1 - alpha) alpha / m)"""
    centre = 1.0 - significance
    half = 3.0 * math.sqrt(centre * significance / sequences)
    return centre - half, centre + half


def pvalue_uniformity(p_values: np.ndarray) -> float:
    """P_value_T from the Pearson chi-square of a ten-bin P-value histogram."""
    p = np.asarray(p_values, dtype=float)
    if p.size == 0:
        raise ValidationError("no P-values given")
    if p.size < MIN_PVALUES:
        raise ValidationError(f"P-value uniformity needs at least {MIN_PVALUES} values (got {p.size})")
    counts, _ = np.histogram(p, bins=PVALUE_BINS, range=(0.0, 1.0))
    expected = p.size / PVALUE_BINS
    chi2 = float(np.sum((counts - expected) ** 2) / expected)
    return incomplete_gamma_upper_regularized((PVALUE_BINS - 1) / 2.0, chi2 / 2.0)


def _run_sequence(args: Tuple[int, np.ndarray, float]) -> List[TestOutcome]:
    index, sequence, significance = args
    outcomes = []
    for name, test in TESTS.items():
        p = test(sequence)
        outcomes.append(TestOutcome(test_name=name, p_value=p, passed=p >= significance, sequence_id=index))
    return outcomes


def run_battery(bits: np.ndarray, seq_len: int, significance: float = DEFAULT_SIGNIFICANCE,
                workers: int = 1) -> Tuple[List[TestOutcome], BatterySummary]:
    bits = np.asarray(bits, dtype=np.uint8)
    if seq_len < BLOCK_FREQUENCY_M:
        raise ValidationError(f"seq_len must be at least {BLOCK_FREQUENCY_M} bits")
    m = bits.size // seq_len
    if m < 2:
        raise ValidationError(f"{bits.size} bits hold {m} sequence(s) of {seq_len}; at least 2 required")
    if not 0.0 < significance < 1.0:
        raise ValidationError("significance level must lie in (0, 1)")

    jobs = [(i, bits[i * seq_len:(i + 1) * seq_len], significance) for i in range(m)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_sequence = list(pool.map(_run_sequence, jobs))
    else:
        per_sequence = [_run_sequence(job) for job in jobs]
    outcomes = [o for seq in per_sequence for o in seq]

    lower, upper = proportion_interval(significance, m)
    summaries = []
    for name in TESTS:
        p_values = np.array([o.p_value for o in outcomes if o.test_name == name])
        proportion = float(np.mean(p_values >= significance))
        if p_values.size >= MIN_PVALUES:
            p_t = pvalue_uniformity(p_values)
        else:
            log_warning(f"{name}: {p_values.size} P-values, too few for P_value_T", component="stats")
            p_t = float("nan")
        summaries.append(TestSummary(
            test_name=name, proportion=proportion, lower=lower, upper=upper, p_value_t=p_t,
            proportion_ok=lower <= proportion <= upper,
            uniformity_ok=math.isnan(p_t) or p_t >= PVALUE_T_THRESHOLD,
        ))
        log_info(f"{name}: proportion {proportion:.4f} in [{lower:.4f}, {upper:.4f}], P_value_T={p_t:.4g}",
                 component="stats")
    summary = BatterySummary(sequences=m, sequence_length=seq_len, significance=significance, s_count=m,
                             tests=tuple(summaries))
    return outcomes, summary


def write_battery_report(json_path: str, csv_path: str, outcomes: List[TestOutcome],
                         summary: BatterySummary) -> Tuple[str, str]:
    payload = {
        "sequences": summary.sequences,
        "sequence_length": summary.sequence_length,
        "significance": summary.significance,
        "s_count": summary.s_count,
        "all_passed": summary.all_passed,
        "tests": {
            t.test_name: {
                **asdict(t),
                "p_values": [o.p_value for o in outcomes if o.test_name == t.test_name],
            }
            for t in summary.tests
        },
    }
    write_json(json_path, payload)
    with open(csv_path, "w") as f:
        f.write(",".join(SUMMARY_HEADER) + "\n")
        for t in summary.tests:
            f.write(f"{t.test_name},{t.proportion:.17g},{t.lower:.17g},{t.upper:.17g},{t.p_value_t:.17g}\n")
    return json_path, csv_path
