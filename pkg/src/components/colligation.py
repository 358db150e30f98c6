"""
Colligations and Transfer Functions
===================================
Block unitaries U = [[A, B], [C, D]] on E (+) F, the transfer function

    tau_U(z) = A + z B (I - z D)^{-1} C

and the operator-valued analytic symbols built from them. Also holds the
unitary completion used to turn a Gram-matching pair of vector families
into a colligation, and the unitary / completely non-unitary split of a
contraction.

Usage:
    from src.components.colligation import complete_to_unitary, transfer_eval

    U = complete_to_unitary(X, Y, split=r)
    value = transfer_eval(U, 0.3 + 0.1j)
"""

from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from config.config import ToleranceConfig, default_tolerances
from src.exception import (
    BoundarySingular, DecompositionError, InputError, NeedsPadding, NotIsometric,
)
from src.components.operator_core import defect_sqrt, subtuple, szego_defect
from src.logger import logger
from src.utils import adjoint, block_diag, complement_basis, null_basis, op_norm

BOUNDARY_SINGULAR_TOL = 1e-12
BOUNDARY_NUDGE = 1e-9
MAX_NUDGES = 3


# ============================================================================
# UNITARY COLLIGATION
# ============================================================================

@dataclass(frozen=True)
class UnitaryColligation:
    """Square block matrix with the E-block of size ``split``.

    ``pad_dim`` records how many zero coordinates were appended during
    completion (0 when the completion needed none).
    """
    matrix: np.ndarray
    split: int
    pad_dim: int = 0

    def __post_init__(self):
        M = np.array(self.matrix, dtype=complex)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise InputError(f"colligation must be square, got {M.shape}")
        if not 0 <= self.split <= M.shape[0]:
            raise InputError(f"split {self.split} outside 0..{M.shape[0]}")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def A(self) -> np.ndarray:
        return self.matrix[:self.split, :self.split]

    @property
    def B(self) -> np.ndarray:
        return self.matrix[:self.split, self.split:]

    @property
    def C(self) -> np.ndarray:
        return self.matrix[self.split:, :self.split]

    @property
    def D(self) -> np.ndarray:
        return self.matrix[self.split:, self.split:]

    def adjoint(self) -> "UnitaryColligation":
        """Colligation of U^*; its transfer function is A^* + z C^*(I - zD^*)^{-1} B^*."""
        return UnitaryColligation(adjoint(self.matrix), self.split, self.pad_dim)

    def unitarity_defect(self) -> float:
        eye = np.eye(self.size)
        M = self.matrix
        return max(op_norm(adjoint(M) @ M - eye), op_norm(M @ adjoint(M) - eye))

    def check_unitary(self, tol: ToleranceConfig = default_tolerances) -> None:
        defect = self.unitarity_defect()
        if defect > tol.eps_unitary * max(1, self.size):
            raise NotIsometric(f"colligation is not unitary (defect {defect:.3e})")


# ============================================================================
# UNITARY COMPLETION
# ============================================================================

def complete_to_unitary(X: np.ndarray, Y: np.ndarray,
                        split: Optional[int] = None,
                        allow_padding: bool = False,
                        pad_dim: Optional[int] = None,
                        tol: ToleranceConfig = default_tolerances) -> UnitaryColligation:
    """Extend x_j -> y_j (columns of X and Y) to a unitary.

    The domain and image spans are matched exactly; their orthogonal
    complements are matched by SVD-ordered orthonormal bases, so the result
    is deterministic. When X and Y live in spaces of different dimension
    the smaller one is padded with zero coordinates.

    Args:
        X: (a, r) domain vectors as columns
        Y: (b, r) image vectors as columns
        split: size of the E-block of the returned colligation
               (defaults to the whole space)
        allow_padding: permit appending zero coordinates
        pad_dim: coordinates appended to the smaller space (at least |a - b|);
                 the larger space receives ``pad_dim - |a - b|``

    Raises:
        NotIsometric: Gram matrices of X and Y disagree
        NeedsPadding: a dimension deficit exists and padding is not allowed
    """
    X = np.atleast_2d(np.asarray(X, dtype=complex))
    Y = np.atleast_2d(np.asarray(Y, dtype=complex))
    if X.shape[1] != Y.shape[1]:
        raise InputError(
            f"need equally many domain and image vectors, got {X.shape[1]} and {Y.shape[1]}")

    gram_x = adjoint(X) @ X
    gap = op_norm(gram_x - adjoint(Y) @ Y)
    if gap > tol.eps_mat * (1.0 + op_norm(gram_x)):
        raise NotIsometric(f"Gram matrices differ by {gap:.3e}")

    a, b = X.shape[0], Y.shape[0]
    deficit = abs(a - b)
    pad = deficit if pad_dim is None else int(pad_dim)
    if pad < deficit:
        raise InputError(f"pad_dim {pad} smaller than the dimension deficit {deficit}")
    if pad and not allow_padding:
        raise NeedsPadding(
            f"completion needs {pad} extra dimensions (domain {a}, image {b})")

    ambient = max(a, b) + (pad - deficit)
    Xp = np.vstack([X, np.zeros((ambient - a, X.shape[1]), dtype=complex)])
    Yp = np.vstack([Y, np.zeros((ambient - b, Y.shape[1]), dtype=complex)])

    u, s, vh = linalg.svd(Xp, full_matrices=False)
    rank = int(np.sum(s > tol.eps_rank * max(1.0, s[0] if s.size else 0.0)))
    if rank == 0:
        U = np.eye(ambient, dtype=complex)
    else:
        dom = u[:, :rank]
        img = (Yp @ adjoint(vh[:rank])) / s[:rank]
        img, _ = linalg.polar(img)
        U = img @ adjoint(dom) + complement_basis(img) @ adjoint(complement_basis(dom))

    miss = op_norm(U @ Xp - Yp)
    if miss > tol.eps_mat * (1.0 + op_norm(Xp)) * 10:
        raise NotIsometric(f"completed unitary misses the prescribed images by {miss:.3e}")

    colligation = UnitaryColligation(U, ambient if split is None else split, pad)
    colligation.check_unitary(tol)
    logger.debug(f"unitary completion: ambient={ambient}, rank={rank}, pad={pad}")
    return colligation


# ============================================================================
# TRANSFER FUNCTION
# ============================================================================

def transfer_eval(U: UnitaryColligation, z: complex) -> np.ndarray:
    """tau_U(z) = A + z B (I - z D)^{-1} C for |z| <= 1."""
    z = complex(z)
    if abs(z) > 1.0 + 1e-12:
        raise InputError(f"transfer function evaluated outside the closed disc: |z|={abs(z)}")
    A, B, C, D = U.A, U.B, U.C, U.D
    if D.size == 0:
        return A.copy()
    M = np.eye(D.shape[0]) - z * D
    if abs(z) >= 1.0 - 1e-12:
        smallest = linalg.svdvals(M)[-1]
        if smallest < BOUNDARY_SINGULAR_TOL:
            raise BoundarySingular(
                f"I - zD singular at z={z:.6f} (smallest singular value {smallest:.1e})")
    return A + z * (B @ linalg.solve(M, C))


def schur_identity_residual(U: UnitaryColligation, z: complex) -> float:
    """|| (I - tau^* tau) - (1 - |z|^2) G^* G ||  with  G = (I - zD)^{-1} C."""
    z = complex(z)
    tau = transfer_eval(U, z)
    lhs = np.eye(tau.shape[1]) - adjoint(tau) @ tau
    D, C = U.D, U.C
    if D.size == 0:
        rhs = (1.0 - abs(z) ** 2) * (adjoint(C) @ C)
    else:
        G = linalg.solve(np.eye(D.shape[0]) - z * D, C)
        rhs = (1.0 - abs(z) ** 2) * (adjoint(G) @ G)
    return op_norm(lhs - rhs)


def transfer_taylor(U: UnitaryColligation, order: int) -> List[np.ndarray]:
    """Taylor coefficients [A, BC, BDC, BD^2C, ...] up to z^order."""
    if order < 0:
        raise InputError(f"order must be >= 0, got {order}")
    coeffs = [np.array(U.A, dtype=complex)]
    if U.D.size == 0:
        return coeffs + [np.zeros_like(coeffs[0]) for _ in range(order)]
    M = np.array(U.C, dtype=complex)
    for _ in range(order):
        coeffs.append(U.B @ M)
        M = U.D @ M
    return coeffs


# ============================================================================
# ANALYTIC SYMBOLS
# ============================================================================

@dataclass(frozen=True)
class AnalyticSymbol:
    """Operator-valued analytic function of one variable in a given slot.

    Exactly one representation is set: a finite Taylor list or a colligation
    (whose transfer function is the symbol). ``slot`` is 1-based among the
    model variables.
    """
    slot: int
    taylor: Optional[Tuple[np.ndarray, ...]] = None
    colligation: Optional[UnitaryColligation] = None

    def __post_init__(self):
        if (self.taylor is None) == (self.colligation is None):
            raise InputError("a symbol needs exactly one of taylor / colligation")
        if self.slot < 1:
            raise InputError(f"symbol slot must be >= 1, got {self.slot}")
        if self.taylor is not None:
            coeffs = tuple(np.array(c, dtype=complex) for c in self.taylor)
            if not coeffs:
                raise InputError("a Taylor symbol needs at least one coefficient")
            shape = coeffs[0].shape
            if len(shape) != 2 or shape[0] != shape[1] or any(c.shape != shape for c in coeffs):
                raise InputError("Taylor coefficients must be equal square matrices")
            for c in coeffs:
                c.setflags(write=False)
            object.__setattr__(self, "taylor", coeffs)

    @classmethod
    def from_taylor(cls, slot: int, coeffs: Sequence[np.ndarray]) -> "AnalyticSymbol":
        return cls(slot=slot, taylor=tuple(coeffs))

    @classmethod
    def from_colligation(cls, slot: int, U: UnitaryColligation) -> "AnalyticSymbol":
        return cls(slot=slot, colligation=U)

    @property
    def dim(self) -> int:
        if self.taylor is not None:
            return self.taylor[0].shape[0]
        return self.colligation.split

    @property
    def degree(self) -> Optional[int]:
        """Polynomial degree, or None for a rational (colligation) symbol."""
        return None if self.taylor is None else len(self.taylor) - 1

    def coefficients(self, order: int) -> List[np.ndarray]:
        """Taylor coefficients of z^0..z^order (zero-padded)."""
        if self.taylor is None:
            return transfer_taylor(self.colligation, order)
        coeffs = list(self.taylor[:order + 1])
        zero = np.zeros_like(self.taylor[0])
        return coeffs + [zero] * (order + 1 - len(coeffs))

    def evaluate(self, z: complex) -> np.ndarray:
        if self.taylor is None:
            return transfer_eval(self.colligation, z)
        value = np.zeros_like(self.taylor[0])
        for c in reversed(self.taylor):
            value = value * z + c
        return value


def boundary_eval(symbol: AnalyticSymbol, theta: float) -> Tuple[np.ndarray, float]:
    """Value at e^{i theta}, nudging theta by 1e-9 when I - zD is singular."""
    angle = float(theta)
    for attempt in range(MAX_NUDGES + 1):
        try:
            return symbol.evaluate(np.exp(1j * angle)), angle
        except BoundarySingular:
            if attempt == MAX_NUDGES:
                raise
            logger.warning(f"boundary point theta={angle:.12f} singular, nudging")
            angle += BOUNDARY_NUDGE
    raise BoundarySingular(f"no regular boundary point near theta={theta}")


def _boundary_angles(samples: int) -> np.ndarray:
    if samples < 1:
        raise InputError(f"need at least one boundary sample, got {samples}")
    return 2.0 * np.pi * np.arange(samples) / samples


def inner_check(symbol: AnalyticSymbol, samples: int = 64) -> float:
    """max over boundary samples of || Phi^* Phi - I ||."""
    worst = 0.0
    for theta in _boundary_angles(samples):
        value, _ = boundary_eval(symbol, theta)
        worst = max(worst, op_norm(adjoint(value) @ value - np.eye(value.shape[1])))
    return worst


def contractivity_check(symbol: AnalyticSymbol, samples: int = 64) -> float:
    """max(0, sup ||Phi(e^{i theta})|| - 1) over boundary samples."""
    worst = 0.0
    for theta in _boundary_angles(samples):
        value, _ = boundary_eval(symbol, theta)
        worst = max(worst, op_norm(value) - 1.0)
    return worst


# ============================================================================
# UNITARY / COMPLETELY NON-UNITARY SPLIT
# ============================================================================

class CanonicalDecomposition(NamedTuple):
    basis_u: np.ndarray
    basis_c: np.ndarray
    A_u: np.ndarray
    A_c: np.ndarray


def canonical_decomposition(A: np.ndarray,
                            tol: ToleranceConfig = default_tolerances) -> CanonicalDecomposition:
    """Split a contraction into its unitary part and its c.n.u. part.

    Starts from ker(I - A^*A) intersected with ker(I - AA^*) and keeps
    intersecting with the preimages under A and A^* until the subspace is
    stable; this takes at most dim steps.
    """
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"need a square matrix, got shape {A.shape}")
    if op_norm(A) > 1.0 + tol.eps_contraction:
        raise InputError(f"not a contraction: norm {op_norm(A):.6f}")
    d = A.shape[0]
    eye = np.eye(d)

    Q = null_basis(np.vstack([eye - adjoint(A) @ A, eye - A @ adjoint(A)]), tol.eps_rank)
    for _ in range(d):
        if Q.shape[1] == 0:
            break
        outside = eye - Q @ adjoint(Q)
        stay = null_basis(np.vstack([outside @ A @ Q, outside @ adjoint(A) @ Q]),
                          tol.eps_rank)
        if stay.shape[1] == Q.shape[1]:
            break
        Q = Q @ stay

    basis_c = complement_basis(Q)
    A_u = adjoint(Q) @ A @ Q
    A_c = adjoint(basis_c) @ A @ basis_c
    logger.debug(f"canonical decomposition: unitary part {Q.shape[1]}, c.n.u. part {basis_c.shape[1]}")
    return CanonicalDecomposition(Q, basis_c, A_u, A_c)


def reduced_colligation(U: UnitaryColligation, basis_c: np.ndarray,
                        tol: ToleranceConfig = default_tolerances) -> UnitaryColligation:
    """[[A_c, B], [C|_{H_c}, D]] written in the c.n.u. basis of the A-block."""
    if basis_c.shape[0] != U.split:
        raise InputError(
            f"basis has {basis_c.shape[0]} rows but the E-block has size {U.split}")
    top = np.hstack([adjoint(basis_c) @ U.A @ basis_c, adjoint(basis_c) @ U.B])
    bottom = np.hstack([U.C @ basis_c, U.D])
    reduced = UnitaryColligation(np.vstack([top, bottom]), basis_c.shape[1], U.pad_dim)
    defect = reduced.unitarity_defect()
    if defect > tol.eps_unitary * max(1, reduced.size) * 10:
        raise DecompositionError(f"reduced colligation not unitary (defect {defect:.3e})")
    return reduced


def decomposition_residual(U: UnitaryColligation, decomposition: CanonicalDecomposition,
                           z: complex, tol: ToleranceConfig = default_tolerances) -> float:
    """|| tau_U(z) - diag(A_u, tau_{U'}(z)) || in the basis (basis_u, basis_c)."""
    basis = np.hstack([decomposition.basis_u, decomposition.basis_c])
    tau = adjoint(basis) @ transfer_eval(U, z) @ basis
    reduced = reduced_colligation(U, decomposition.basis_c, tol)
    expected = block_diag(decomposition.A_u, transfer_eval(reduced, z))
    return op_norm(tau - expected)


# ============================================================================
# SERIES IDENTITY OF THE FINITE-RANK COLLIGATION
# ============================================================================

def series_identity_check(T, p: int, q: int, U: UnitaryColligation, order: int,
                         tol: ToleranceConfig = default_tolerances) -> float:
    """Truncated series form of W_p T_p^* through the finite-rank colligation.

    Returns || W_p T_p^* - (A W_p + sum_{i=0..order} B D^i C W_p T_q^{*(i+1)}) ||
    where W_p is the defect map of T^_p (and U is the completion built on the
    defect spaces of T^_p and T^_q). The remainder is B D^{order+1} W_q
    T_q^{*(order+2)}, so the residual is at most ||D_q|| ||T_q^{*(order+2)}||.
    """
    W_p = defect_sqrt(szego_defect(subtuple(T, p)), tol).coords
    if W_p.shape[0] != U.split:
        raise InputError(
            f"colligation E-block {U.split} does not match defect rank {W_p.shape[0]}")
    Tp_star, Tq_star = T.adjoint(p), T.adjoint(q)

    series = U.A @ W_p
    M = U.C @ W_p @ Tq_star          # D^i C W_p T_q^{*(i+1)}
    for _ in range(order + 1):
        series = series + U.B @ M
        M = U.D @ M @ Tq_star
    return op_norm(W_p @ Tp_star - series)
