"""
Centralized Configuration for the polydisc dilation toolkit
===========================================================
All dataclass configurations for the numerical components are defined here.
Values in config/params.yaml override the defaults below; CLI ``--tol-*``
flags override both.

Usage:
    from config.config import ToleranceConfig, HardyConfig, VNConfig
"""

import os
from dataclasses import dataclass, field, fields, replace
from typing import Any, Mapping, Optional


def _known_fields(cls, params: Optional[Mapping[str, Any]]) -> dict:
    """Keep only the keys of ``params`` that are fields of ``cls``."""
    if not params:
        return {}
    names = {f.name for f in fields(cls)}
    return {k: v for k, v in dict(params).items() if k in names}


# ============================================================================
# NUMERICAL TOLERANCES
# ============================================================================

@dataclass(frozen=True)
class ToleranceConfig:
    """Tolerances shared by every numerical check."""
    eps_contraction: float = 1e-10    # ||T_i|| <= 1 + eps
    eps_commute: float = 1e-10        # per unit dimension
    eps_psd: float = 1e-10            # relative to 1 + ||S||
    eps_sym: float = 1e-12            # hermitian symmetry
    eps_mat: float = 1e-10            # Gram matrix agreement
    eps_rank: float = 1e-10           # relative rank threshold
    eps_unitary: float = 1e-10
    eps_residual: float = 1e-8
    rho_pure: float = 1e-8            # spectral radius margin below 1
    m_max: int = 10_000               # power-check cap

    def commute_tol(self, dim: int) -> float:
        return self.eps_commute * max(dim, 1)

    def psd_tol(self, norm: float) -> float:
        return self.eps_psd * (1.0 + norm)

    @classmethod
    def from_params(cls, params: Optional[Mapping[str, Any]] = None,
                    **overrides) -> "ToleranceConfig":
        """Build from the ``tolerances`` block of params.yaml plus overrides."""
        values = _known_fields(cls, params)
        values.update({k: v for k, v in overrides.items() if v is not None})
        if "m_max" in values:
            values["m_max"] = int(values["m_max"])
        return cls(**{k: (float(v) if k != "m_max" else v)
                      for k, v in values.items()})

    def with_overrides(self, **overrides) -> "ToleranceConfig":
        return replace(self, **{k: v for k, v in overrides.items()
                                if v is not None})


# ============================================================================
# HARDY-SPACE TRUNCATION
# ============================================================================

@dataclass(frozen=True)
class HardyConfig:
    """Truncation of the vector-valued Hardy space model."""
    default_cutoff: int = 8
    residual_target: float = 1e-8
    max_cutoff: int = 16
    # compressions pair two truncated embeddings, so they need a tighter box
    compress_target: float = 1e-11
    compress_cap: int = 512
    compress_max_entries: int = 8_000_000   # complex entries of one box array
    tail_cap: int = 512               # longest Taylor tail of a rational symbol

    @classmethod
    def from_params(cls, params: Optional[Mapping[str, Any]] = None) -> "HardyConfig":
        return cls(**_known_fields(cls, params))


# ============================================================================
# VON NEUMANN COMPARISONS
# ============================================================================

@dataclass(frozen=True)
class VNConfig:
    """Grid sizes and parallelism for the von Neumann comparisons."""
    grid: int = 64
    refined_grid: int = 256
    boundary_samples: int = 64
    n_jobs: int = 1

    @classmethod
    def from_params(cls, params: Optional[Mapping[str, Any]] = None) -> "VNConfig":
        return cls(**_known_fields(cls, params))


# ============================================================================
# RANDOM GENERATORS
# ============================================================================

@dataclass(frozen=True)
class GeneratorConfig:
    """Defaults for the random tuple generators."""
    seed: int = 6
    n: int = 3
    dim: int = 3
    rho_max: float = 0.6
    e_dim: int = 2
    degree: int = 1

    @classmethod
    def from_params(cls, params: Optional[Mapping[str, Any]] = None) -> "GeneratorConfig":
        return cls(**_known_fields(cls, params))


# ============================================================================
# COMMON PATHS
# ============================================================================

@dataclass
class PathConfig:
    """Common paths used across the toolkit."""
    config_dir: str = "config"
    params_yaml: str = "config/params.yaml"
    logs_dir: str = "logs"
    output_dir: str = field(
        default_factory=lambda: os.getenv("POLYDISC_OUTPUT_DIR", "artifacts"))
    sample_tuple: str = "docs/sample_tuple.json"


# ============================================================================
# SINGLETON INSTANCES (for easy access)
# ============================================================================

default_tolerances = ToleranceConfig()
default_hardy = HardyConfig()
default_vn = VNConfig()
