import os
from pathlib import Path
from unittest import mock

from config.config import GeneratorConfig, HardyConfig, PathConfig, ToleranceConfig, VNConfig
from src.utils import Read_write_yaml

PARAMS = Path(__file__).resolve().parent.parent / "config" / "params.yaml"


def test_config_integrity():
    tol = ToleranceConfig()

    # 1. Defaults used by every check
    assert tol.eps_residual == 1e-8
    assert tol.eps_psd == 1e-10
    assert tol.m_max == 10_000

    # 2. Scaled tolerances
    assert tol.commute_tol(4) == 4e-10
    assert tol.psd_tol(1.0) == 2e-10

    # 3. Hardy truncation never starts above its cap
    hardy = HardyConfig()
    assert hardy.default_cutoff <= hardy.max_cutoff
    assert hardy.compress_target < hardy.residual_target


def test_params_yaml_matches_defaults():
    """params.yaml mirrors the dataclass defaults."""
    params = Read_write_yaml.read_yaml(str(PARAMS))

    assert ToleranceConfig.from_params(params.tolerances) == ToleranceConfig()
    assert HardyConfig.from_params(params.hardy) == HardyConfig()
    assert VNConfig.from_params(params.vn) == VNConfig()
    assert GeneratorConfig.from_params(params.generators) == GeneratorConfig()


def test_overrides_beat_params():
    params = {"eps_residual": 1e-6, "unknown_key": 3}
    tol = ToleranceConfig.from_params(params, eps_residual=1e-9, eps_psd=None)

    # flag wins over file, None leaves the file/default value, unknown keys are dropped
    assert tol.eps_residual == 1e-9
    assert tol.eps_psd == 1e-10
    assert tol.with_overrides(rho_pure=1e-6).rho_pure == 1e-6


def test_output_dir_from_environment():
    with mock.patch.dict(os.environ, {"POLYDISC_OUTPUT_DIR": "/tmp/polydisc_out"}):
        assert PathConfig().output_dir == "/tmp/polydisc_out"
    with mock.patch.dict(os.environ, {}, clear=True):
        assert PathConfig().output_dir == "artifacts"
