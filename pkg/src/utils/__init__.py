## yaml helpers and small dense linear-algebra helpers -------------------------

import os
from typing import Any, Mapping

import numpy as np
import yaml
from box import ConfigBox  # config.key instead of config['key']
from scipy import linalg


class Read_write_yaml:

    @staticmethod
    def read_yaml(path_to_yaml: str) -> ConfigBox:
        "Reads a yaml file and returns a ConfigBox for easy access."
        with open(path_to_yaml, encoding="utf-8") as yaml_file:
            content = yaml.safe_load(yaml_file) or {}
            return ConfigBox(content)

        # params = Read_write_yaml.read_yaml("config/params.yaml")
        # eps = params.tolerances.eps_residual

    @staticmethod
    def write_yaml(content: Mapping[str, Any], path_to_yaml: str) -> None:
        "Dumps a mapping to yaml, keeping key order."
        folder = os.path.dirname(path_to_yaml)
        if folder:
            os.makedirs(folder, exist_ok=True)
        with open(path_to_yaml, "w", encoding="utf-8") as file:
            yaml.safe_dump(dict(content), file,
                           default_flow_style=False, sort_keys=False)


# ============================================================================
# LINEAR ALGEBRA HELPERS
# ============================================================================

def adjoint(M: np.ndarray) -> np.ndarray:
    return np.conj(M).T


def op_norm(M: np.ndarray) -> float:
    """Operator (spectral) norm; 0 for empty matrices."""
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    return float(linalg.norm(M, 2))


def hermitian_part(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + adjoint(M))


def spectral_radius(M: np.ndarray) -> float:
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(linalg.eigvals(M))))


def null_basis(M: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis of the kernel of ``M`` with an absolute threshold."""
    cols = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(cols, dtype=complex)
    _, s, vh = linalg.svd(M, full_matrices=True)
    rank = int(np.sum(s > tol))
    return adjoint(vh[rank:])


def complement_basis(Q: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of ran(Q)."""
    dim, k = Q.shape
    if k == 0:
        return np.eye(dim, dtype=complex)
    if k == dim:
        return np.zeros((dim, 0), dtype=complex)
    return linalg.null_space(adjoint(Q))


def block_diag(*blocks: np.ndarray) -> np.ndarray:
    """scipy's block_diag, tolerant of 0x0 blocks."""
    real = [b for b in blocks if b.size]
    if not real:
        size = sum(b.shape[0] for b in blocks)
        return np.zeros((size, size), dtype=complex)
    return linalg.block_diag(*real).astype(complex)
