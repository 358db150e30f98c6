"""
Hardy-Space Model
=================
Truncated vector-valued Hardy space over m variables, the canonical
isometry of a Szegő-positive tuple into it, and the model operators
(shifts and analytic symbol multipliers) acting on its elements.

A HardyVector stores Taylor coefficients in a sparse mapping from
multi-indices to coefficient vectors; absent indices are zero. Cutoffs are
per-coordinate degree bounds, so the index set is a box.

Usage:
    from src.components.hardy_model import make_embedding, embed

    E = make_embedding(source_tuple)
    v = embed(E, h)
    print(v.norm_sq(), embedding_residual(E, h))
"""

from dataclasses import dataclass, field
from itertools import product
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import fft

from config.config import HardyConfig, ToleranceConfig, default_hardy, default_tolerances
from src.components.colligation import AnalyticSymbol
from src.components.operator_core import (
    DefectData, OperatorTuple, decay_length, defect_sqrt, szego_defect,
)
from src.exception import InputError, TruncationError
from src.logger import logger
from src.utils import adjoint

MultiIndex = Tuple[int, ...]
Cutoff = Union[int, Sequence[int]]


def as_cutoff(N: Cutoff, var_count: int) -> Tuple[int, ...]:
    """Normalise an int or per-slot sequence to a per-slot cutoff tuple."""
    if isinstance(N, (int, np.integer)):
        box = (int(N),) * var_count
    else:
        box = tuple(int(c) for c in N)
    if len(box) != var_count:
        raise InputError(f"cutoff {box} does not have {var_count} entries")
    if any(c < 0 for c in box):
        raise InputError(f"cutoff entries must be >= 0, got {box}")
    return box


def box_indices(cutoff: Sequence[int]) -> Iterator[MultiIndex]:
    """All multi-indices k with 0 <= k_j <= cutoff_j, lexicographic order."""
    return product(*(range(c + 1) for c in cutoff))


def _within(k: MultiIndex, box: Sequence[int]) -> bool:
    return all(kj <= bj for kj, bj in zip(k, box))


def _bump(k: MultiIndex, slot: int, step: int) -> MultiIndex:
    """k + step * e_slot (slot is 1-based)."""
    out = list(k)
    out[slot - 1] += step
    return tuple(out)


# ============================================================================
# HARDY VECTORS
# ============================================================================

@dataclass(frozen=True)
class HardyVector:
    """Sparse element of the truncated Hardy space H^2_{C^e}(D^m)."""
    var_count: int
    coeff_dim: int
    cutoff: Tuple[int, ...]
    coeffs: Mapping[MultiIndex, np.ndarray] = field(default_factory=dict)

    def coefficient(self, k: MultiIndex) -> np.ndarray:
        value = self.coeffs.get(tuple(k))
        return np.zeros(self.coeff_dim, dtype=complex) if value is None else value

    def norm_sq(self, box: Optional[Sequence[int]] = None) -> float:
        return float(sum(np.vdot(c, c).real for k, c in self.coeffs.items()
                         if box is None or _within(k, box)))

    def norm(self) -> float:
        return float(np.sqrt(self.norm_sq()))

    def inner(self, other: "HardyVector", box: Optional[Sequence[int]] = None) -> complex:
        """<self, other>, conjugate-linear in ``self``, optionally over a box."""
        total = 0j
        for k, c in self.coeffs.items():
            if box is not None and not _within(k, box):
                continue
            d = other.coeffs.get(k)
            if d is not None:
                total += np.vdot(c, d)
        return complex(total)

    def distance(self, other: "HardyVector", box: Sequence[int]) -> float:
        """l2 distance of the coefficients inside ``box``."""
        keys = {k for k in self.coeffs if _within(k, box)}
        keys |= {k for k in other.coeffs if _within(k, box)}
        total = 0.0
        for k in keys:
            diff = self.coefficient(k) - other.coefficient(k)
            total += float(np.vdot(diff, diff).real)
        return float(np.sqrt(total))

    def _like(self, coeffs: Dict[MultiIndex, np.ndarray],
              cutoff: Optional[Tuple[int, ...]] = None) -> "HardyVector":
        return HardyVector(self.var_count, self.coeff_dim,
                           self.cutoff if cutoff is None else cutoff, coeffs)


def _accumulate(target: Dict[MultiIndex, np.ndarray], k: MultiIndex, value: np.ndarray) -> None:
    if k in target:
        target[k] = target[k] + value
    else:
        target[k] = value


def _check_slot(v: HardyVector, slot: int) -> None:
    if not 1 <= slot <= v.var_count:
        raise InputError(f"slot {slot} outside 1..{v.var_count}")


# ============================================================================
# CANONICAL EMBEDDING
# ============================================================================

@dataclass(frozen=True)
class CanonicalEmbedding:
    """Coefficient rule k -> M D_T T^{*k} of the canonical isometry.

    ``source`` is the tuple whose defect is used, ``isometry`` an optional
    map applied after the defect coordinates (identity when None).
    """
    source: OperatorTuple
    defect: DefectData
    cutoff: Tuple[int, ...]
    isometry: Optional[np.ndarray] = None

    @property
    def var_count(self) -> int:
        return self.source.n

    @property
    def coeff_dim(self) -> int:
        return self.defect.rank if self.isometry is None else self.isometry.shape[0]

    @property
    def coefficient_map(self) -> np.ndarray:
        coords = self.defect.coords
        return coords if self.isometry is None else self.isometry @ coords

    def coefficient_rule(self, k: MultiIndex) -> np.ndarray:
        """The matrix sending h to the k-th coefficient of its embedding."""
        M = self.coefficient_map
        for slot, power in enumerate(k, start=1):
            if power:
                M = M @ np.linalg.matrix_power(self.source.adjoint(slot), power)
        return M


def slot_cutoffs(source: OperatorTuple, target: float, floor: int, cap: int) -> Tuple[int, ...]:
    """Per-slot cutoff where ||T_j^{*N}|| drops below sqrt(target), in [floor, cap]."""
    bound = float(np.sqrt(target))
    cutoffs = []
    for A in source.ops:
        length = decay_length(A, bound, cap)
        cutoffs.append(cap if length is None else max(floor, min(cap, length)))
    return tuple(cutoffs)


def make_embedding(source: OperatorTuple,
                   tol: ToleranceConfig = default_tolerances,
                   cutoff: Optional[Cutoff] = None,
                   isometry: Optional[np.ndarray] = None,
                   hardy: HardyConfig = default_hardy) -> CanonicalEmbedding:
    """Canonical isometry of a Szegő-positive tuple (NotSzegoPositive otherwise)."""
    defect = defect_sqrt(szego_defect(source), tol)
    if isometry is not None:
        isometry = np.asarray(isometry, dtype=complex)
        if isometry.shape[1] != defect.rank:
            raise InputError(
                f"isometry has {isometry.shape[1]} columns, defect rank is {defect.rank}")
    if cutoff is None:
        box = slot_cutoffs(source, hardy.residual_target,
                           hardy.default_cutoff, hardy.max_cutoff)
    else:
        box = as_cutoff(cutoff, source.n)
    return CanonicalEmbedding(source, defect, box, isometry)


def _state_vectors(E: CanonicalEmbedding, H: np.ndarray,
                   box: Tuple[int, ...]) -> Dict[MultiIndex, np.ndarray]:
    """T^{*k} H for every k in the box (parent k - e_i, i the first nonzero slot)."""
    adjoints = [adjoint(A) for A in E.source.ops]
    states: Dict[MultiIndex, np.ndarray] = {}
    for k in box_indices(box):
        if not any(k):
            states[k] = H
            continue
        slot = next(i for i, kj in enumerate(k) if kj)
        parent = k[:slot] + (k[slot] - 1,) + k[slot + 1:]
        states[k] = adjoints[slot] @ states[parent]
    return states


def embed_many(E: CanonicalEmbedding, H: np.ndarray,
               cutoff: Optional[Cutoff] = None) -> List[HardyVector]:
    """Embed every column of H."""
    H = np.asarray(H, dtype=complex)
    if H.ndim == 1:
        H = H[:, None]
    if H.shape[0] != E.source.dim:
        raise InputError(f"vector of length {H.shape[0]} in a space of dim {E.source.dim}")
    box = E.cutoff if cutoff is None else as_cutoff(cutoff, E.var_count)
    M = E.coefficient_map
    columns: List[Dict[MultiIndex, np.ndarray]] = [{} for _ in range(H.shape[1])]
    for k, state in _state_vectors(E, H, box).items():
        block = M @ state
        for j in range(H.shape[1]):
            if np.any(block[:, j]):
                columns[j][k] = block[:, j]
    return [HardyVector(E.var_count, E.coeff_dim, box, coeffs) for coeffs in columns]


def embed(E: CanonicalEmbedding, h: np.ndarray, cutoff: Optional[Cutoff] = None) -> HardyVector:
    """Pi h = sum_k z^k M D_T T^{*k} h, truncated at the cutoff."""
    return embed_many(E, np.asarray(h, dtype=complex).reshape(-1, 1), cutoff)[0]


def embedding_residual(E: CanonicalEmbedding, h: np.ndarray,
                       N: Optional[Cutoff] = None) -> float:
    """||h||^2 minus the mass of its embedding inside the cutoff box."""
    h = np.asarray(h, dtype=complex).ravel()
    return float(np.vdot(h, h).real) - embed(E, h, N).norm_sq()


def adaptive_cutoff(E: CanonicalEmbedding, probes: np.ndarray,
                    start: Optional[int] = None,
                    target: Optional[float] = None,
                    cap: Optional[int] = None,
                    hardy: HardyConfig = default_hardy) -> Tuple[Tuple[int, ...], float]:
    """Raise cutoffs until the worst probe residual is below target.

    Starts from the per-slot decay estimate (never below ``start``) and adds
    2 to every slot below the cap per round.
    """
    start = hardy.default_cutoff if start is None else start
    target = hardy.residual_target if target is None else target
    cap = hardy.max_cutoff if cap is None else cap
    probes = np.asarray(probes, dtype=complex).reshape(E.source.dim, -1)

    box = slot_cutoffs(E.source, target, min(start, cap), cap)
    while True:
        worst = max(embedding_residual(E, probes[:, j], box) for j in range(probes.shape[1]))
        if worst < target:
            return box, worst
        if all(c >= cap for c in box):
            logger.warning(f"cutoff cap {cap} reached with residual {worst:.3e} > {target:.1e}")
            return box, worst
        box = tuple(min(cap, c + 2) for c in box)


# ============================================================================
# MODEL OPERATORS
# ============================================================================

def shift_adjoint(v: HardyVector, i: int) -> HardyVector:
    """M_{z_i}^*: coefficient k of the output is coefficient k + e_i of v."""
    _check_slot(v, i)
    coeffs = {_bump(k, i, -1): c for k, c in v.coeffs.items() if k[i - 1] >= 1}
    return v._like(coeffs)


def shift(v: HardyVector, i: int) -> HardyVector:
    """M_{z_i}, dropping whatever leaves the cutoff box."""
    _check_slot(v, i)
    coeffs = {_bump(k, i, 1): c for k, c in v.coeffs.items()
              if k[i - 1] + 1 <= v.cutoff[i - 1]}
    return v._like(coeffs)


def _symbol_coefficients(v: HardyVector, symbol: AnalyticSymbol,
                         box: Tuple[int, ...]) -> List[np.ndarray]:
    _check_slot(v, symbol.slot)
    if symbol.dim != v.coeff_dim:
        raise InputError(
            f"symbol acts on dimension {symbol.dim}, vector coefficients have {v.coeff_dim}")
    order = max(v.cutoff[symbol.slot - 1], box[symbol.slot - 1])
    if symbol.degree is not None:
        order = min(order, symbol.degree)
    return symbol.coefficients(order)


def symbol_mult(v: HardyVector, symbol: AnalyticSymbol,
                N: Optional[Cutoff] = None) -> HardyVector:
    """M_Phi v: coefficient k is sum_t Phi_t v(k - t e_j), kept inside the box."""
    box = v.cutoff if N is None else as_cutoff(N, v.var_count)
    coeffs_phi = _symbol_coefficients(v, symbol, box)
    j = symbol.slot
    out: Dict[MultiIndex, np.ndarray] = {}
    for k, c in v.coeffs.items():
        for t in range(box[j - 1] - k[j - 1] + 1):
            target = _bump(k, j, t)
            if t < len(coeffs_phi) and _within(target, box):
                _accumulate(out, target, coeffs_phi[t] @ c)
    return v._like(out, box)


def symbol_mult_adjoint(v: HardyVector, symbol: AnalyticSymbol,
                        N: Optional[Cutoff] = None) -> HardyVector:
    """M_Phi^* v: coefficient k is sum_t Phi_t^* v(k + t e_j) over the stored v."""
    box = v.cutoff if N is None else as_cutoff(N, v.var_count)
    coeffs_phi = [adjoint(c) for c in _symbol_coefficients(v, symbol, box)]
    j = symbol.slot
    out: Dict[MultiIndex, np.ndarray] = {}
    for k, c in v.coeffs.items():
        # only shifts that land inside the box
        for t in range(max(0, k[j - 1] - box[j - 1]), min(k[j - 1], len(coeffs_phi) - 1) + 1):
            target = _bump(k, j, -t)
            if _within(target, box):
                _accumulate(out, target, coeffs_phi[t] @ c)
    return v._like(out, box)


@dataclass(frozen=True)
class ModelShift:
    """Coordinate realised as the shift M_{z_slot}."""
    slot: int

    def reach(self, tail_length: int) -> Tuple[int, int]:
        return self.slot, 1


@dataclass(frozen=True)
class ModelSymbol:
    """Coordinate realised as the multiplier M_Phi in the symbol's slot."""
    symbol: AnalyticSymbol

    @property
    def slot(self) -> int:
        return self.symbol.slot

    def reach(self, tail_length: int) -> Tuple[int, int]:
        degree = self.symbol.degree
        return self.slot, (tail_length if degree is None else max(degree, 1))


ModelOperator = Union[ModelShift, ModelSymbol]


def apply_model(op: ModelOperator, v: HardyVector) -> HardyVector:
    if isinstance(op, ModelShift):
        return shift(v, op.slot)
    return symbol_mult(v, op.symbol)


def apply_model_adjoint(op: ModelOperator, v: HardyVector) -> HardyVector:
    if isinstance(op, ModelShift):
        return shift_adjoint(v, op.slot)
    return symbol_mult_adjoint(v, op.symbol)


def extended_cutoff(N: Cutoff, var_count: int,
                    ops: Iterable[Tuple[ModelOperator, int]], tail_length: int) -> Tuple[int, ...]:
    """Box N enlarged so ``power`` applications of each adjoint stay exact on N.

    ``ops`` pairs each model operator with how many times its adjoint is applied.
    """
    box = list(as_cutoff(N, var_count))
    extra = [0] * var_count
    for op, power in ops:
        slot, reach = op.reach(tail_length)
        extra[slot - 1] += reach * power
    return tuple(b + e for b, e in zip(box, extra))


# ============================================================================
# DENSE BOX ARRAYS
# ============================================================================
# Coefficients of several vectors on one box as an array of shape
# box + (coeff_dim, columns). Forward model operators are causal, so their
# action on such an array is exact inside the box.

# symbols with more Taylor terms than this are convolved through an FFT
DIRECT_TERMS = 16


def box_entries(box: Sequence[int], width: int, columns: int) -> int:
    return int(np.prod([c + 1 for c in box])) * width * columns


def embed_dense(E: CanonicalEmbedding, H: np.ndarray, box: Cutoff,
                max_entries: Optional[int] = None) -> np.ndarray:
    """Coefficients of Pi h for every column of H on the box, as one array."""
    H = np.asarray(H, dtype=complex)
    if H.ndim == 1:
        H = H[:, None]
    if H.shape[0] != E.source.dim:
        raise InputError(f"vector of length {H.shape[0]} in a space of dim {E.source.dim}")
    box = as_cutoff(box, E.var_count)
    if max_entries is not None:
        size = box_entries(box, max(E.source.dim, E.coeff_dim), H.shape[1])
        if size > max_entries:
            raise TruncationError(
                f"box {box} needs {size} coefficients, limit is {max_entries}")

    states = H
    for axis, (A, c) in enumerate(zip(E.source.ops, box)):
        A_star = adjoint(A)
        layers = [states]
        for _ in range(c):
            layers.append(A_star @ layers[-1])
        states = np.stack(layers, axis=axis)
    return E.coefficient_map @ states


def _shift_box(y: np.ndarray, slot: int) -> np.ndarray:
    axis = slot - 1
    out = np.zeros_like(y)
    target = [slice(None)] * y.ndim
    source = [slice(None)] * y.ndim
    target[axis] = slice(1, None)
    source[axis] = slice(None, -1)
    out[tuple(target)] = y[tuple(source)]
    return out


def _symbol_box(y: np.ndarray, symbol: AnalyticSymbol) -> np.ndarray:
    var_count = y.ndim - 2
    axis = symbol.slot - 1
    if not 0 <= axis < var_count:
        raise InputError(f"slot {symbol.slot} outside 1..{var_count}")
    if symbol.dim != y.shape[-2]:
        raise InputError(
            f"symbol acts on dimension {symbol.dim}, vector coefficients have {y.shape[-2]}")
    K = y.shape[axis]
    order = K - 1 if symbol.degree is None else min(K - 1, symbol.degree)
    coeffs = np.stack(symbol.coefficients(order))

    moved = np.moveaxis(y, [axis, var_count], [0, 1])
    shape = moved.shape
    flat = moved.reshape(shape[0], shape[1], -1)
    if len(coeffs) <= DIRECT_TERMS:
        out = np.zeros_like(flat)
        for t, phi in enumerate(coeffs):
            out[t:] += phi @ flat[:K - t]
    else:
        size = fft.next_fast_len(K + len(coeffs) - 1)
        spectrum = fft.fft(coeffs, n=size, axis=0) @ fft.fft(flat, n=size, axis=0)
        out = fft.ifft(spectrum, axis=0)[:K]
    return np.moveaxis(out.reshape(shape), [0, 1], [axis, var_count])


def apply_model_box(op: ModelOperator, y: np.ndarray) -> np.ndarray:
    """Forward model operator on a dense box array (see ``embed_dense``)."""
    if isinstance(op, ModelShift):
        if not 1 <= op.slot <= y.ndim - 2:
            raise InputError(f"slot {op.slot} outside 1..{y.ndim - 2}")
        return _shift_box(y, op.slot)
    return _symbol_box(y, op.symbol)


# ============================================================================
# INTERTWINING
# ============================================================================

def default_probes(dim: int) -> np.ndarray:
    """Standard basis of C^dim as columns."""
    return np.eye(dim, dtype=complex)


def verify_intertwining(T: OperatorTuple, package, probes: Optional[np.ndarray] = None,
                        N: Optional[int] = None,
                        hardy: HardyConfig = default_hardy) -> Dict[int, float]:
    """Residual of Pi T_i^* h = V_i^* Pi h per coordinate i, worst over probes.

    Coefficients are compared on the box [0..N]^m. Embeddings are computed on
    that box extended by the reach of every model adjoint, so each compared
    coefficient is exact (up to the Taylor tail of a rational symbol, whose
    length comes from the package).

    Args:
        T: the tuple being dilated
        package: a DilationPackage (``embedding``, ``coordinate_map``, ``tail_length``)
        probes: columns of vectors in H (standard basis by default)
        N: comparison cutoff (``hardy.default_cutoff`` by default)
    """
    E: CanonicalEmbedding = package.embedding
    if len(package.coordinate_map) != T.n:
        raise InputError(
            f"package has {len(package.coordinate_map)} coordinates, tuple has {T.n}")
    probes = default_probes(T.dim) if probes is None else np.asarray(probes, dtype=complex)
    N = hardy.default_cutoff if N is None else N
    box = as_cutoff(N, E.var_count)
    big = extended_cutoff(box, E.var_count, [(op, 1) for op in package.coordinate_map],
                          package.tail_length)

    embedded = embed_many(E, probes, big)
    residuals: Dict[int, float] = {}
    for i, op in enumerate(package.coordinate_map, start=1):
        lhs = embed_many(E, T.adjoint(i) @ probes, big)
        worst = 0.0
        for left, right in zip(lhs, embedded):
            worst = max(worst, left.distance(apply_model_adjoint(op, right), box))
        residuals[i] = worst
        logger.debug(f"intertwining coordinate {i}: residual {worst:.3e}")
    return residuals
