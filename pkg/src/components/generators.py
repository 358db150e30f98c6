"""
Random Tuple Generators
=======================
Reproducible random inputs for the verification campaigns:

    gen_diagonal            doubly commuting diagonal tuples (pure, in every class)
    gen_model_compression   compressions of the degree-one model pair to the
                            polynomials of per-variable degree <= N
    gen_random_colligation  Haar-random block unitaries
    gen_random_contraction  contractions with a prescribed unitary part
    gen_polynomials         random polynomials with coefficients in the unit disc

Every generator takes a seed; the same seed always yields the same output.
"""

from functools import reduce
from typing import List, Optional

import numpy as np
from scipy.linalg import qr

from src.components.colligation import UnitaryColligation
from src.components.operator_core import OperatorTuple
from src.components.vn_variety import Polynomial
from src.exception import InputError
from src.logger import logger
from src.utils import adjoint, block_diag


def haar_unitary(size: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary: QR of a complex Ginibre matrix with R's phases removed."""
    z = (rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))) / np.sqrt(2)
    q, r = qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_projection(size: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    """Orthogonal projection onto the span of ``rank`` Haar-random orthonormal vectors."""
    if not 0 <= rank <= size:
        raise InputError(f"projection rank {rank} outside 0..{size}")
    frame = haar_unitary(size, rng)[:, :rank]
    return frame @ adjoint(frame)


def _disc_samples(rng: np.random.Generator, count: int, radius: float) -> np.ndarray:
    """Uniform samples in the disc of the given radius."""
    r = radius * np.sqrt(rng.uniform(size=count))
    return r * np.exp(2j * np.pi * rng.uniform(size=count))


def gen_diagonal(n: int, dim: int, rho_max: float, seed: int) -> OperatorTuple:
    """n diagonal dim x dim matrices with entries uniform in |z| <= rho_max."""
    if not 0.0 <= rho_max < 1.0:
        raise InputError(f"rho_max must lie in [0, 1), got {rho_max}")
    if n < 1 or dim < 1:
        raise InputError(f"need n >= 1 and dim >= 1, got n={n}, dim={dim}")
    rng = np.random.default_rng(seed)
    return OperatorTuple(tuple(np.diag(_disc_samples(rng, dim, rho_max)) for _ in range(n)))


# ============================================================================
# MODEL COMPRESSION
# ============================================================================

def _slot_factor(m: int, N: int, slot: int, single: np.ndarray,
                 coeff: np.ndarray) -> np.ndarray:
    """I (x) .. (x) single (x) .. (x) I (x) coeff, ``single`` at ``slot`` (1-based)."""
    factors = [np.eye(N + 1)] * m
    factors[slot - 1] = single
    return reduce(np.kron, factors + [coeff])


def gen_model_compression(n: int, p: int, q: int, e_dim: int, N: int, seed: int,
                          projection_rank: Optional[int] = None) -> OperatorTuple:
    """Compress the model tuple of a degree-one pair to degree <= N polynomials.

    U is Haar on C^e_dim and P a random projection of rank ``projection_rank``
    (default e_dim // 2, at least 1). Phi_p = (P + zP^perp)U^* and
    Phi_q = U(P^perp + zP) act in variable p of the (n-1)-variable model,
    coordinate i < q (i != p) is z_i and coordinate i > q is z_{i-1}. The
    truncation space is invariant under every model adjoint, so each T_i
    is the adjoint of the restricted model adjoint.
    """
    if not 1 <= p < q <= n or n < 3:
        raise InputError(f"need n >= 3 and 1 <= p < q <= n, got n={n}, p={p}, q={q}")
    if e_dim < 1 or N < 1:
        raise InputError(f"need e_dim >= 1 and N >= 1, got e_dim={e_dim}, N={N}")
    rank = max(1, e_dim // 2) if projection_rank is None else projection_rank
    rng = np.random.default_rng(seed)
    U = haar_unitary(e_dim, rng)
    P = random_projection(e_dim, rank, rng)
    P_perp = np.eye(e_dim) - P

    m = n - 1
    eye_e = np.eye(e_dim)
    shift_star = np.eye(N + 1, k=1)     # coefficient k <- coefficient k + 1
    stay = np.eye(N + 1)

    def symbol_adjoint(c0: np.ndarray, c1: np.ndarray) -> np.ndarray:
        return (_slot_factor(m, N, p, stay, adjoint(c0))
                + _slot_factor(m, N, p, shift_star, adjoint(c1)))

    ops = []
    for i in range(1, n + 1):
        if i == p:
            restricted = symbol_adjoint(P @ adjoint(U), P_perp @ adjoint(U))
        elif i == q:
            restricted = symbol_adjoint(U @ P_perp, U @ P)
        else:
            slot = i if i < q else i - 1
            restricted = _slot_factor(m, N, slot, shift_star, eye_e)
        ops.append(adjoint(restricted))
    logger.debug(f"model compression: n={n}, (p, q)=({p}, {q}), e_dim={e_dim}, N={N}, "
                 f"projection rank {rank}, dim {ops[0].shape[0]}")
    return OperatorTuple(tuple(ops))


# ============================================================================
# COLLIGATIONS, CONTRACTIONS, POLYNOMIALS
# ============================================================================

def gen_random_colligation(size: int, split: int, seed: int) -> UnitaryColligation:
    rng = np.random.default_rng(seed)
    return UnitaryColligation(haar_unitary(size, rng), split)


def gen_random_contraction(dim: int, seed: int, unitary_dim: int = 0,
                           radius: float = 0.95) -> np.ndarray:
    """Unitary block of size ``unitary_dim`` (+) strict contraction, in a random basis."""
    if not 0 <= unitary_dim <= dim:
        raise InputError(f"unitary_dim {unitary_dim} outside 0..{dim}")
    rng = np.random.default_rng(seed)
    rest = dim - unitary_dim
    strict = np.zeros((rest, rest), dtype=complex)
    if rest:
        g = rng.standard_normal((rest, rest)) + 1j * rng.standard_normal((rest, rest))
        strict = radius * rng.uniform(0.1, 1.0) * g / np.linalg.norm(g, 2)
    unitary = haar_unitary(unitary_dim, rng) if unitary_dim else np.zeros((0, 0))
    W = haar_unitary(dim, rng)
    return W @ block_diag(unitary, strict) @ adjoint(W)


def gen_polynomials(n: int, count: int, max_degree: int, seed: int,
                    terms: int = 6) -> List[Polynomial]:
    """``count`` polynomials of total degree <= max_degree, coefficients in the unit disc."""
    if max_degree < 0 or count < 0 or terms < 1:
        raise InputError("need max_degree >= 0, count >= 0 and terms >= 1")
    rng = np.random.default_rng(seed)
    polys = []
    for _ in range(count):
        coefficients = {}
        for _ in range(terms):
            degree = int(rng.integers(0, max_degree + 1))
            k = np.zeros(n, dtype=int)
            for slot in rng.integers(0, n, size=degree):
                k[slot] += 1
            coefficients[tuple(int(x) for x in k)] = complex(_disc_samples(rng, 1, 1.0)[0])
        polys.append(Polynomial.from_dict(n, coefficients))
    return polys
