"""Stage orchestration for pdqrng"""

from .commands import (
    BITS_FILE, REPORT_FILE, SAMPLES_FILE, SimulationResult, cmd_certify, cmd_extract, cmd_fit, cmd_simulate,
    cmd_test, open_manifest, resolve_laser, run_all, stage,
)

__all__ = [
    "BITS_FILE", "REPORT_FILE", "SAMPLES_FILE", "SimulationResult", "cmd_certify", "cmd_extract", "cmd_fit",
    "cmd_simulate", "cmd_test", "open_manifest", "resolve_laser", "run_all", "stage",
]
