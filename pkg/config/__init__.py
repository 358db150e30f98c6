"""
Config Package
==============
Centralized configuration for the polydisc dilation toolkit.

Usage:
    from config.config import ToleranceConfig, HardyConfig, VNConfig, PathConfig
"""

from config.config import (
    ToleranceConfig,
    HardyConfig,
    VNConfig,
    GeneratorConfig,
    PathConfig,
    default_tolerances,
    default_hardy,
    default_vn
)

__all__ = [
    'ToleranceConfig',
    'HardyConfig',
    'VNConfig',
    'GeneratorConfig',
    'PathConfig',
    'default_tolerances',
    'default_hardy',
    'default_vn'
]
