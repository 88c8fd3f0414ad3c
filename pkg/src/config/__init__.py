"""Configuration management package for pdqrng"""

from .manager import CONFIG_SCHEMA, ConfigManager, ConfigurationError, defaults_text
from .pipeline import (
    CertifySettings, ExtractionSettings, FitOptions, PipelineConfig, RunSettings, StatsSettings,
)

__all__ = [
    'CONFIG_SCHEMA', 'ConfigManager', 'ConfigurationError', 'defaults_text',
    'CertifySettings', 'ExtractionSettings', 'FitOptions', 'PipelineConfig', 'RunSettings', 'StatsSettings',
]
