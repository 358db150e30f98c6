"""
Operator Core
=============
Finite-dimensional tuples of commuting contractions and the quantities the
dilation constructions are built from:

    - Szegő defect S(T) = sum over k in {0,1}^n of (-1)^|k| T^k T^{*k}
    - its PSD square root (defect operator) and defect-space basis
    - purity (spectral radius < 1, confirmed by adjoint powers)
    - sub-tuples T^_i, T^_{p,q} and the product tuple T^_{pq}
    - membership in the dilation class for a pair (p, q)

All operator indices in the public functions are 1-based.

Usage:
    from src.components.operator_core import OperatorTuple, class_membership

    T = OperatorTuple.from_matrices([T1, T2, T3])
    report = class_membership(T, p=1, q=2)
    print(report.in_Tpq)
"""

from dataclasses import dataclass
from itertools import combinations, product
from math import ceil, log
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy import linalg

from config.config import ToleranceConfig, default_tolerances
from src.exception import InputError, NotSzegoPositive
from src.logger import logger
from src.utils import adjoint, hermitian_part, op_norm, spectral_radius


# ============================================================================
# TYPES
# ============================================================================

@dataclass(frozen=True)
class OperatorTuple:
    """Ordered tuple of equal-size square complex matrices (read-only)."""
    ops: Tuple[np.ndarray, ...]
    dim: Optional[int] = None

    def __post_init__(self):
        mats = []
        for idx, op in enumerate(self.ops, start=1):
            arr = np.array(op, dtype=complex)
            if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
                raise InputError(
                    f"operator {idx} is not a square matrix (shape {arr.shape})")
            if not np.all(np.isfinite(arr)):
                raise InputError(f"operator {idx} has non-finite entries")
            arr.setflags(write=False)
            mats.append(arr)
        sizes = {m.shape[0] for m in mats}
        if len(sizes) > 1:
            raise InputError(f"operators have unequal dimensions {sorted(sizes)}")
        if mats:
            d = mats[0].shape[0]
            if self.dim is not None and self.dim != d:
                raise InputError(f"declared dim {self.dim} but operators are {d}x{d}")
        elif self.dim is None:
            raise InputError("an empty tuple needs an explicit dim")
        else:
            d = self.dim
        object.__setattr__(self, "ops", tuple(mats))
        object.__setattr__(self, "dim", int(d))

    @classmethod
    def from_matrices(cls, matrices: Sequence) -> "OperatorTuple":
        if len(matrices) == 0:
            raise InputError("a tuple needs at least one operator")
        return cls(tuple(matrices))

    @property
    def n(self) -> int:
        return len(self.ops)

    def op(self, i: int) -> np.ndarray:
        """Operator T_i (1-based)."""
        _check_index(self, i)
        return self.ops[i - 1]

    def adjoint(self, i: int) -> np.ndarray:
        return adjoint(self.op(i))

    def __len__(self) -> int:
        return self.n

    def __iter__(self):
        return iter(self.ops)


@dataclass(frozen=True)
class DefectData:
    """Defect operator of a Szegő-positive tuple.

    ``coords`` maps H onto the defect space in the orthonormal ``basis``:
    ``||coords @ h||^2 == <S h, h>`` up to the rank threshold.
    """
    gram: np.ndarray
    sqrt: np.ndarray
    basis: np.ndarray
    rank: int

    @property
    def coords(self) -> np.ndarray:
        return adjoint(self.basis) @ self.sqrt


class ClassReport(BaseModel):
    """Result of validate_tuple / class_membership."""
    n: int
    dim: int
    is_contractive: bool
    contraction_excess: float
    is_commuting: bool
    commutator_residual: float
    is_strict: bool
    is_doubly_commuting: Optional[bool] = None
    pure_flags: List[bool] = Field(default_factory=list)
    szego_min_eig: Dict[str, float] = Field(default_factory=dict)
    defect_ranks: Dict[str, int] = Field(default_factory=dict)
    product_pure: Optional[bool] = None
    p: Optional[int] = None
    q: Optional[int] = None
    in_Tpq: Optional[bool] = None
    in_Ppq: Optional[bool] = None
    failures: List[str] = Field(default_factory=list)


# ============================================================================
# INDEX HELPERS
# ============================================================================

def _check_index(T: OperatorTuple, i: int) -> None:
    if not isinstance(i, (int, np.integer)) or not 1 <= i <= T.n:
        raise InputError(f"operator index {i} outside 1..{T.n}")


def _check_pair(T: OperatorTuple, p: int, q: int) -> None:
    _check_index(T, p)
    _check_index(T, q)
    if not p < q:
        raise InputError(f"need p < q, got p={p}, q={q}")


# ============================================================================
# BASIC CHECKS
# ============================================================================

def validate_tuple(T: OperatorTuple,
                   tol: ToleranceConfig = default_tolerances) -> ClassReport:
    """Contractivity and commutativity of a tuple (partial ClassReport)."""
    norms = [op_norm(A) for A in T.ops]
    excess = max([0.0] + [nrm - 1.0 for nrm in norms])
    commutator = 0.0
    for A, B in combinations(T.ops, 2):
        commutator = max(commutator, op_norm(A @ B - B @ A))

    failures = []
    is_contractive = excess <= tol.eps_contraction
    is_commuting = commutator <= tol.commute_tol(T.dim)
    if not is_contractive:
        failures.append(f"not contractive: max norm exceeds 1 by {excess:.3e}")
    if not is_commuting:
        failures.append(f"not commuting: commutator norm {commutator:.3e}")

    return ClassReport(
        n=T.n, dim=T.dim,
        is_contractive=is_contractive,
        contraction_excess=excess,
        is_commuting=is_commuting,
        commutator_residual=commutator,
        is_strict=all(nrm < 1.0 for nrm in norms),
        is_doubly_commuting=is_doubly_commuting(T, tol),
        failures=failures,
    )


def is_doubly_commuting(T: OperatorTuple,
                        tol: ToleranceConfig = default_tolerances) -> bool:
    """T_i^* T_j == T_j T_i^* for every i != j."""
    for i, j in product(range(T.n), repeat=2):
        if i == j:
            continue
        A, B = T.ops[i], T.ops[j]
        if op_norm(adjoint(A) @ B - B @ adjoint(A)) > tol.commute_tol(T.dim):
            return False
    return True


# ============================================================================
# SZEGŐ DEFECT
# ============================================================================

def szego_defect(T: OperatorTuple) -> np.ndarray:
    """Alternating sum S(T), computed by S <- S - T_k S T_k^* per operator."""
    S = np.eye(T.dim, dtype=complex)
    for A in T.ops:
        S = S - A @ S @ adjoint(A)
    return hermitian_part(S)


def szego_defect_expanded(T: OperatorTuple) -> np.ndarray:
    """The literal 2^n-term alternating sum."""
    S = np.zeros((T.dim, T.dim), dtype=complex)
    for k in product((0, 1), repeat=T.n):
        M = np.eye(T.dim, dtype=complex)
        for A, bit in zip(T.ops, k):
            if bit:
                M = M @ A
        S += (-1) ** sum(k) * (M @ adjoint(M))
    return hermitian_part(S)


def szego_kernel_inverse(z: Sequence[complex], w: Sequence[complex]) -> complex:
    """prod_i (1 - z_i conj(w_i)), the inverse Szegő kernel of the polydisc."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if z.shape != w.shape:
        raise InputError(f"points of different length {z.shape} and {w.shape}")
    return complex(np.prod(1.0 - z * np.conj(w)))


def defect_sqrt(S: np.ndarray,
                tol: ToleranceConfig = default_tolerances) -> DefectData:
    """PSD square root of a Szegő defect and an orthonormal defect-space basis.

    Args:
        S: Hermitian matrix (a Szegő defect)
        tol: eigenvalues below ``-eps_psd * (1 + ||S||)`` are a hard failure;
             the rest are clipped to zero before the square root

    Returns:
        DefectData with ``sqrt`` Hermitian PSD, ``basis`` spanning the
        eigenvectors whose eigenvalue exceeds both ``eps_rank * max_eig`` and
        the PSD tolerance.

    Raises:
        NotSzegoPositive: S has a significantly negative eigenvalue
    """
    S = hermitian_part(np.asarray(S, dtype=complex))
    if S.shape[0] != S.shape[1]:
        raise InputError(f"defect must be square, got shape {S.shape}")
    d = S.shape[0]
    if d == 0:
        empty = np.zeros((0, 0), dtype=complex)
        return DefectData(gram=S, sqrt=empty, basis=empty, rank=0)

    w, V = linalg.eigh(S)
    floor = tol.psd_tol(op_norm(S))
    if w[0] < -floor:
        raise NotSzegoPositive(
            f"minimum eigenvalue {w[0]:.3e} below -{floor:.3e}")

    w = np.clip(w, 0.0, None)
    root = hermitian_part((V * np.sqrt(w)) @ adjoint(V))
    top = w[-1]
    keep = w > max(tol.eps_rank * top, floor)
    basis = V[:, keep]
    return DefectData(gram=S, sqrt=root, basis=basis, rank=int(keep.sum()))


def szego_min_eigenvalue(T: OperatorTuple) -> float:
    return float(linalg.eigvalsh(szego_defect(T))[0])


# ============================================================================
# PURITY
# ============================================================================

def decay_length(A: np.ndarray, target: float, cap: int) -> Optional[int]:
    """Smallest m in 1..cap with ||A^{*m}|| < target, else None."""
    A_star = adjoint(np.asarray(A, dtype=complex))
    power = np.eye(A_star.shape[0], dtype=complex)
    for m in range(1, cap + 1):
        power = power @ A_star
        if op_norm(power) < target:
            return m
    return None


def _power_confirms(A: np.ndarray, rho: float,
                    tol: ToleranceConfig) -> bool:
    """Check ||A^{*m}|| < eps_residual at m from the spectral radius.

    Non-normal matrices can need more powers than the spectral estimate, so
    m is doubled until it passes or exceeds m_max.
    """
    base = rho + tol.rho_pure
    if base >= 1.0 or tol.eps_residual <= 0.0:
        m = tol.m_max
    else:
        m = ceil(log(tol.eps_residual) / log(base)) if base > 0 else 1
    m = max(1, min(m, tol.m_max))
    A_star = adjoint(A)
    while True:
        if op_norm(np.linalg.matrix_power(A_star, m)) < tol.eps_residual:
            return True
        if m >= tol.m_max:
            return False
        m = min(2 * m, tol.m_max)


def is_pure(T: OperatorTuple,
            tol: ToleranceConfig = default_tolerances) -> List[bool]:
    """Per-operator purity: spectral radius <= 1 - rho_pure, power-confirmed."""
    flags = []
    for idx, A in enumerate(T.ops, start=1):
        rho = spectral_radius(A)
        if rho > 1.0 - tol.rho_pure:
            flags.append(False)
            continue
        confirmed = _power_confirms(A, rho, tol)
        if not confirmed:
            logger.warning(
                f"operator {idx}: spectral radius {rho:.6f} but adjoint powers "
                f"stay above {tol.eps_residual:.1e} up to m_max={tol.m_max}")
        flags.append(confirmed)
    return flags


# ============================================================================
# SUB-TUPLES
# ============================================================================

def subtuple(T: OperatorTuple, drop: int) -> OperatorTuple:
    """T with T_drop removed."""
    _check_index(T, drop)
    return OperatorTuple(
        tuple(A for i, A in enumerate(T.ops, start=1) if i != drop), dim=T.dim)


def subtuple_pq(T: OperatorTuple, p: int, q: int) -> OperatorTuple:
    """T with both T_p and T_q removed."""
    _check_pair(T, p, q)
    return OperatorTuple(
        tuple(A for i, A in enumerate(T.ops, start=1) if i not in (p, q)),
        dim=T.dim)


def product_tuple(T: OperatorTuple, p: int, q: int) -> OperatorTuple:
    """T_p T_q in slot p, T_q removed, every other operator in order."""
    _check_pair(T, p, q)
    ops = []
    for i, A in enumerate(T.ops, start=1):
        if i == p:
            ops.append(A @ T.op(q))
        elif i != q:
            ops.append(A)
    return OperatorTuple(tuple(ops), dim=T.dim)


def scale_tuple(T: OperatorTuple, r: float) -> OperatorTuple:
    """r * T for 0 < r < 1; the result is a strict contraction tuple."""
    if not 0.0 < r < 1.0:
        raise InputError(f"scale must lie in (0, 1), got {r}")
    return OperatorTuple(tuple(r * A for A in T.ops), dim=T.dim)


# ============================================================================
# CLASS MEMBERSHIP
# ============================================================================

def class_membership(T: OperatorTuple, p: int, q: int,
                     tol: ToleranceConfig = default_tolerances) -> ClassReport:
    """Membership of T in the dilation class for the pair (p, q).

    The class asks for a commuting contractive tuple whose sub-tuple without
    T_p is pure and whose sub-tuples without T_p and without T_q are both
    Szegő-positive.
    """
    if T.n < 3:
        raise InputError(f"class membership needs n >= 3, got n={T.n}")
    _check_pair(T, p, q)
    report = validate_tuple(T, tol)
    failures = list(report.failures)

    pure_flags = is_pure(T, tol)
    hat_p_pure = all(flag for i, flag in enumerate(pure_flags, start=1) if i != p)
    if not hat_p_pure:
        failures.append(f"sub-tuple without T_{p} is not pure")

    min_eigs: Dict[str, float] = {}
    ranks: Dict[str, int] = {}
    positive = True
    labels = {f"T_hat_{p}": subtuple(T, p), f"T_hat_{q}": subtuple(T, q),
              f"T_hat_{p}{q}": product_tuple(T, p, q)}
    for label, sub in labels.items():
        S = szego_defect(sub)
        min_eigs[label] = float(linalg.eigvalsh(S)[0])
        ok = min_eigs[label] >= -tol.psd_tol(op_norm(S))
        if ok:
            ranks[label] = defect_sqrt(S, tol).rank
        elif label != f"T_hat_{p}{q}":
            positive = False
            failures.append(
                f"{label} not Szegő-positive (min eigenvalue {min_eigs[label]:.3e})")

    product_flags = is_pure(labels[f"T_hat_{p}{q}"], tol)
    in_class = (report.is_contractive and report.is_commuting
                and hat_p_pure and positive)

    report = report.model_copy(update=dict(
        pure_flags=pure_flags,
        szego_min_eig=min_eigs,
        defect_ranks=ranks,
        product_pure=all(product_flags),
        p=p, q=q,
        in_Tpq=in_class,
        in_Ppq=in_class and report.is_strict,
        failures=failures,
    ))
    logger.info(f"class membership (p={p}, q={q}): in_Tpq={in_class}")
    return report


def defect_identity_check(T: OperatorTuple, p: int, q: int) -> Tuple[float, float]:
    """Residuals of the two defect identities of the product tuple.

    D_pq^2 = D_p^2 + T_q D_q^2 T_q^*  and  D_pq^2 = T_p D_p^2 T_p^* + D_q^2,
    where D_p, D_q, D_pq are the Szegő defects of T^_p, T^_q and T^_{pq}.
    """
    _check_pair(T, p, q)
    D_p = szego_defect(subtuple(T, p))
    D_q = szego_defect(subtuple(T, q))
    D_pq = szego_defect(product_tuple(T, p, q))
    Tp, Tq = T.op(p), T.op(q)
    first = op_norm(D_pq - (D_p + Tq @ D_q @ adjoint(Tq)))
    second = op_norm(D_pq - (Tp @ D_p @ adjoint(Tp) + D_q))
    return first, second
