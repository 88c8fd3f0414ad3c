#!/usr/bin/env python3
"""
Configuration Management for pdqrng
Loads the INI run configuration, checks it against the schema and builds the
typed PipelineConfig every stage consumes.
"""

import configparser
import io
import os
from typing import Any, Dict, List, Optional

from core.errors import ValidationError
from core.logger import log_info, log_warning

# One entry per key: type, default, optional bounds/options and a tooltip.
# Defaults are the published experiment's constants.
CONFIG_SCHEMA: Dict[str, List[Dict[str, Any]]] = {
    "laser": [
        {"key": "mode", "type": "choice", "default": "fixed", "options": ["fixed", "steady_state", "fit"], "tooltip": "fixed: use n_th/R0/G_N below. steady_state: derive n_th and R0 from the threshold measurement. fit: full recursive fit against reference_trace."},
        {"key": "gain_per_carrier", "type": "float", "default": 2.3e4, "min": 0.0, "tooltip": "G_N (1/s per carrier). n0 is derived as n_th - gamma/G_N."},
        {"key": "carriers_threshold", "type": "float", "default": 5.62e7, "min": 0.0, "tooltip": "n_th, carrier number at threshold."},
        {"key": "spont_coupling", "type": "float", "default": 8.8e-4, "min": 0.0, "tooltip": "R0, spontaneous emission coupling (R_sp = n gamma_e R0)."},
        {"key": "photon_saturation", "type": "float", "default": 7.7e5, "min": 0.0, "tooltip": "s_sat, gain saturation photon number."},
        {"key": "carrier_decay", "type": "float", "default": 1e9, "min": 0.0, "tooltip": "gamma_e in 1/s (the published '1/tau_e ~ 1e9' read as a rate)."},
        {"key": "linewidth_enhancement", "type": "float", "default": 5.4, "tooltip": "alpha, linewidth enhancement factor."},
        {"key": "cavity_length", "type": "float", "default": 500e-6, "min": 0.0, "tooltip": "L in m."},
        {"key": "effective_index", "type": "float", "default": 4.33, "min": 0.0, "tooltip": "n_bar, effective refractive index."},
        {"key": "scatter_loss", "type": "float", "default": 4500.0, "min": 0.0, "tooltip": "alpha_s in 1/m (45 per cm)."},
        {"key": "mirror_loss", "type": "float", "default": 0.0, "min": 0.0, "tooltip": "alpha_m in 1/m; 0 derives 1.4/L."},
        {"key": "power_per_photon", "type": "float", "default": 0.0, "min": 0.0, "tooltip": "W per intracavity photon; 0 derives h*c/lambda * c*alpha_m/n_bar."},
        {"key": "wavelength", "type": "float", "default": 1550e-9, "min": 0.0, "tooltip": "Emission wavelength in m."},
        {"key": "photon_floor", "type": "float", "default": 1.0, "min": 0.0, "tooltip": "Lower bound on s(t) in the integrator and the diffusion integrand."},
        {"key": "threshold_current", "type": "float", "default": 10e-3, "min": 0.0, "tooltip": "I_th' in A for the steady-state extraction."},
        {"key": "threshold_power", "type": "float", "default": 0.3e-3, "min": 0.0, "tooltip": "Output power in W measured at I_th'."},
        {"key": "reference_trace", "type": "string", "default": "", "tooltip": "time_s,power_w CSV; required in fit mode, optional envelope check otherwise."},
    ],
    "drive": [
        {"key": "dc_bias", "type": "float", "default": 23e-3, "tooltip": "DC bias current in A."},
        {"key": "rf_amplitude", "type": "float", "default": 0.0, "min": 0.0, "tooltip": "RF amplitude in A; 0 solves it from reverse_bias_fraction."},
        {"key": "reverse_bias_fraction", "type": "float", "default": 0.34, "min": 0.0, "max": 0.5, "tooltip": "Fraction of the cycle with I(t) < 0, used when rf_amplitude = 0."},
        {"key": "prf", "type": "float", "default": 5.825e9, "min": 0.0, "tooltip": "Pulse repetition frequency in Hz."},
        {"key": "dt", "type": "float", "default": 0.2e-12, "min": 0.0, "tooltip": "Integrator step in s; must stay below 1/(100*prf)."},
        {"key": "warmup_periods", "type": "int", "default": 24, "min": 1, "tooltip": "Drive periods integrated before the pulse train is read out."},
        {"key": "shape", "type": "choice", "default": "sinusoid", "options": ["sinusoid", "trace"], "tooltip": "Drive waveform shape."},
        {"key": "trace_file", "type": "string", "default": "", "tooltip": "phase,value CSV with one period of the waveform (shape = trace)."},
    ],
    "interferometer": [
        {"key": "coupler1_e11", "type": "float", "default": 0.7071067811865476, "min": 0.0, "max": 1.0, "tooltip": "eps11 of the first coupler (field)."},
        {"key": "coupler1_e12", "type": "float", "default": 0.7071067811865476, "min": 0.0, "max": 1.0, "tooltip": "eps12 of the first coupler (field)."},
        {"key": "coupler2_e11", "type": "float", "default": 0.7071067811865476, "min": 0.0, "max": 1.0, "tooltip": "eps11 of the second coupler (field)."},
        {"key": "coupler2_e21", "type": "float", "default": 0.7071067811865476, "min": 0.0, "max": 1.0, "tooltip": "eps21 of the second coupler (field)."},
        {"key": "arm_delay_difference", "type": "float", "default": 0.0, "min": 0.0, "tooltip": "t2 - t1 in s; 0 means 1/prf."},
        {"key": "static_phase", "type": "float", "default": 0.0, "tooltip": "Static interferometer phase dphi in rad."},
        {"key": "visibility", "type": "float", "default": 0.9, "min": 0.0, "max": 1.0, "tooltip": "|g|, first-order coherence between adjacent pulses."},
        {"key": "detector_bandwidth", "type": "float", "default": 12.5e9, "min": 0.0, "tooltip": "Detector bandwidth in Hz (tau = 0.35/BW)."},
        {"key": "photodiode_bandwidth", "type": "float", "default": 10e9, "min": 0.0, "tooltip": "Photodiode bandwidth in Hz, a second pole ahead of the oscilloscope; 0 leaves it out."},
        {"key": "arm_source", "type": "choice", "default": "config", "options": ["config", "laser"], "tooltip": "config: arm means below. laser: split the simulated pulse sample power through the couplers."},
        {"key": "arm_mean_u1", "type": "float", "default": 0.97e-3, "min": 0.0, "tooltip": "Mean short-arm power in W."},
        {"key": "arm_mean_u2", "type": "float", "default": 0.90e-3, "min": 0.0, "tooltip": "Mean long-arm power in W."},
        {"key": "arm_sigma", "type": "float", "default": 45e-6, "min": 0.0, "tooltip": "Standard deviation of each arm power in W."},
    ],
    "adc": [
        {"key": "resolution", "type": "int", "default": 14, "min": 1, "max": 16, "tooltip": "b, bits per sample."},
        {"key": "dynamic_range", "type": "float", "default": 5e-3, "min": 0.0, "tooltip": "A_ADC in W."},
        {"key": "noise_variance", "type": "float", "default": 1.45e-10, "min": 0.0, "tooltip": "Electronic noise variance in W^2."},
        {"key": "sample_offset", "type": "float", "default": 13e-12, "tooltip": "Sampling point after the pulse peak in s."},
    ],
    "run": [
        {"key": "pulses", "type": "int", "default": 1000000, "min": 1, "tooltip": "N, digitized pulses per run."},
        {"key": "seed", "type": "int", "default": 1, "min": 0, "tooltip": "64-bit seed every random substream derives from."},
        {"key": "out_dir", "type": "string", "default": "output", "tooltip": "Directory for all artifacts and the manifest."},
        {"key": "threads", "type": "int", "default": 1, "min": 1, "tooltip": "Workers for chunked generation, hashing and the battery."},
        {"key": "chunk_size", "type": "int", "default": 262144, "min": 1, "tooltip": "Pulses per random-substream chunk."},
        {"key": "verbose", "type": "bool", "default": False, "tooltip": "Print debug and info log lines."},
    ],
    "extraction": [
        {"key": "hash_algorithm", "type": "string", "default": "sha3_512", "tooltip": "Any 512-bit hashlib digest (whirlpool where the OpenSSL build provides it)."},
        {"key": "block_size", "type": "int", "default": 512, "min": 512, "tooltip": "Input bits per hash invocation (multiple of 8)."},
        {"key": "text_output", "type": "bool", "default": False, "tooltip": "Also write the bits as a 0/1 text file."},
    ],
    "stats": [
        {"key": "seq_len", "type": "int", "default": 1000000, "min": 128, "tooltip": "Bits per tested sequence."},
        {"key": "significance", "type": "float", "default": 0.01, "min": 0.0, "max": 1.0, "tooltip": "alpha_SL."},
        {"key": "max_lag", "type": "int", "default": 50, "min": 1, "tooltip": "Autocorrelation lags reported."},
        {"key": "symbol_bits", "type": "int", "default": 7, "min": 1, "max": 16, "tooltip": "k for the symbol uniformity deviation."},
    ],
    "certify": [
        {"key": "entropy_basis", "type": "choice", "default": "exact", "options": ["exact", "closed_form"], "tooltip": "Min-entropy the reduction factor is computed from."},
        {"key": "min_entropy", "type": "float", "default": 1.0, "min": 0.0, "tooltip": "Certification fails below this many bits per sample."},
        {"key": "denominator_moment", "type": "choice", "default": "sqrt_mean", "options": ["sqrt_mean", "mean"], "tooltip": "Arm moment in the visibility denominator: E[sqrt(u)]^2 or E[u]."},
    ],
    "fit": [
        {"key": "candidate_lengths", "type": "floatlist", "default": "100e-6,200e-6,500e-6,1000e-6", "tooltip": "Cavity lengths L tried by the fit, in m."},
        {"key": "initial_s_sat", "type": "float", "default": 7.7e5, "min": 0.0, "tooltip": "Starting s_sat; always part of the scanned grid."},
        {"key": "s_sat_low", "type": "float", "default": 1e4, "min": 0.0, "tooltip": "Lower end of the log s_sat grid."},
        {"key": "s_sat_high", "type": "float", "default": 1e7, "min": 0.0, "tooltip": "Upper end of the log s_sat grid."},
        {"key": "s_sat_points", "type": "int", "default": 30, "min": 1, "tooltip": "Points in the log s_sat grid."},
        {"key": "gain_grid_points", "type": "int", "default": 12, "min": 2, "tooltip": "Log-spaced G_N points scanned before bisection."},
        {"key": "bisection_steps", "type": "int", "default": 24, "min": 0, "tooltip": "Bisection steps on the largest conservative G_N."},
        {"key": "margin_tolerance", "type": "float", "default": 1e-3, "min": 0.0, "tooltip": "Allowed envelope undershoot as a fraction of the observed peak."},
    ],
}

_TRUE_WORDS = ("true", "yes", "1", "on")
_FALSE_WORDS = ("false", "no", "0", "off")


class ConfigurationError(ValidationError):
    """Raised when configuration loading or a value check fails"""
    pass


def _schema_field(section: str, key: str) -> Optional[Dict[str, Any]]:
    for field in CONFIG_SCHEMA.get(section, []):
        if field["key"] == key:
            return field
    return None


def _format_default(value: Any) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    return str(value)


def defaults_text() -> str:
    """The default configuration as commented INI text."""
    lines: List[str] = []
    for section, fields in CONFIG_SCHEMA.items():
        lines.append(f"[{section}]")
        for field in fields:
            lines.append(f"# {field['tooltip']}")
            lines.append(f"{field['key']} = {_format_default(field['default'])}")
        lines.append("")
    return "\n".join(lines)


class ConfigManager:
    """Central configuration manager for pdqrng"""

    def __init__(self, config_file: Optional[str] = None):
        self.config = configparser.ConfigParser()
        self.config_file = config_file
        self.load_configuration()

    def load_configuration(self) -> None:
        """Load the file if one was named; schema defaults fill every gap."""
        if self.config_file is None:
            log_info("No config file given; using defaults", component="config")
            return
        if not os.path.exists(self.config_file):
            raise ConfigurationError(f"config file not found: {self.config_file}")
        try:
            self.config.read(self.config_file)
        except configparser.Error as e:
            raise ConfigurationError(f"cannot parse {self.config_file}: {e}")
        log_info(f"Loaded config from: {self.config_file}", component="config")
        self._warn_unknown()

    def _warn_unknown(self) -> None:
        for section in self.config.sections():
            if section not in CONFIG_SCHEMA:
                log_warning(f"Unknown config section [{section}] ignored", component="config")
                continue
            for key in self.config[section]:
                if _schema_field(section, key) is None:
                    log_warning(f"Unknown key '{key}' in [{section}] ignored", component="config")

    def get(self, key: str, section: str) -> str:
        if section in self.config and key in self.config[section]:
            return self.config.get(section, key).strip()
        field = _schema_field(section, key)
        if field is None:
            raise ConfigurationError(f"unknown config key [{section}] {key}")
        return _format_default(field["default"])

    def _check_bounds(self, key: str, section: str, value: float) -> None:
        field = _schema_field(section, key) or {}
        if "min" in field and value < field["min"]:
            raise ConfigurationError(f"[{section}] {key} = {value} is below the minimum {field['min']}")
        if "max" in field and value > field["max"]:
            raise ConfigurationError(f"[{section}] {key} = {value} is above the maximum {field['max']}")

    def getboolean(self, key: str, section: str) -> bool:
        raw = self.get(key, section).lower()
        if raw in _TRUE_WORDS:
            return True
        if raw in _FALSE_WORDS:
            return False
        raise ConfigurationError(f"[{section}] {key} = '{raw}' is not a boolean")

    def getint(self, key: str, section: str) -> int:
        raw = self.get(key, section)
        try:
            value = int(raw)
        except ValueError:
            raise ConfigurationError(f"[{section}] {key} = '{raw}' is not an integer")
        self._check_bounds(key, section, value)
        return value

    def getfloat(self, key: str, section: str) -> float:
        raw = self.get(key, section)
        try:
            value = float(raw)
        except ValueError:
            raise ConfigurationError(f"[{section}] {key} = '{raw}' is not a number")
        self._check_bounds(key, section, value)
        return value

    def getchoice(self, key: str, section: str) -> str:
        raw = self.get(key, section).lower()
        options = (_schema_field(section, key) or {}).get("options", [])
        if raw not in options:
            raise ConfigurationError(f"[{section}] {key} = '{raw}' must be one of {', '.join(options)}")
        return raw

    def getfloatlist(self, key: str, section: str) -> List[float]:
        raw = self.get(key, section)
        try:
            values = [float(item) for item in raw.split(",") if item.strip()]
        except ValueError:
            raise ConfigurationError(f"[{section}] {key} = '{raw}' is not a comma-separated list of numbers")
        if not values:
            raise ConfigurationError(f"[{section}] {key} must list at least one value")
        return values

    def set_param(self, key: str, value: Any, section: str) -> None:
        """Live override (CLI flags); checked like file values."""
        if _schema_field(section, key) is None:
            raise ConfigurationError(f"unknown config key [{section}] {key}")
        if section not in self.config:
            self.config[section] = {}
        self.config[section][key] = _format_default(value)

    def effective_values(self) -> Dict[str, Dict[str, str]]:
        return {section: {f["key"]: self.get(f["key"], section) for f in fields}
                for section, fields in CONFIG_SCHEMA.items()}

    def effective_text(self) -> str:
        """Canonical INI text of every effective value (hashed into the manifest)."""
        canonical = configparser.ConfigParser()
        for section, values in self.effective_values().items():
            canonical[section] = values
        buffer = io.StringIO()
        canonical.write(buffer)
        return buffer.getvalue()

    def get_config_path(self) -> Optional[str]:
        return self.config_file

    def pipeline_config(self):
        """Typed, validated view of the whole configuration."""
        from config.pipeline import build_pipeline_config
        return build_pipeline_config(self)
