"""
Isometric Dilations
===================
Builds commuting isometric dilations of a tuple in the dilation class for
(p, q) on a vector-valued Hardy space in n-1 variables, verifies them, and
compresses model operators back to H.

Two constructions:

    finite-rank   defect spaces of T^_p and T^_q, one unitary U, the
                  coordinate T_p realised by the rational inner symbol
                  tau_{U*} in the slot of T_q; every other coordinate is a
                  shift.
    general       E = D_pad (+) D_{T^q} (+) D_{T^p}, canonical isometry of
                  the product tuple T^_{pq} composed with an isometry V, and
                  the degree-one pair Phi_p = (P + zP^perp)U^*,
                  Phi_q = U(P^perp + zP) with Phi_p Phi_q = z I.

Usage:
    from src.components.dilation import DilationPipeline

    package, report = DilationPipeline().run(T, p=1, q=2, mode="general")
    print(report.passed)
"""

import sys
from dataclasses import dataclass, replace
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy import linalg

from config.config import (
    HardyConfig, ToleranceConfig, VNConfig, default_hardy, default_tolerances, default_vn,
)
from src.components.colligation import (
    AnalyticSymbol, UnitaryColligation, boundary_eval, complete_to_unitary,
    contractivity_check, inner_check, series_identity_check, transfer_taylor,
)
from src.components.hardy_model import (
    CanonicalEmbedding, ModelOperator, ModelShift, ModelSymbol, apply_model_box,
    as_cutoff, default_probes, embed_dense, embedding_residual, make_embedding,
    verify_intertwining,
)
from src.components.operator_core import (
    OperatorTuple, class_membership, decay_length, defect_sqrt, product_tuple,
    subtuple, szego_defect,
)
from src.exception import (
    CustomException, InputError, NotInClass, NotIsometric, TruncationError,
)
from src.logger import logger
from src.utils import adjoint, op_norm

FINITE_RANK = "finite-rank"
GENERAL = "general"
MODES = (FINITE_RANK, GENERAL)
SERIES_ORDER = 30


# ============================================================================
# TYPES
# ============================================================================

@dataclass(frozen=True)
class DilationPackage:
    """Everything needed to apply and check a dilation.

    ``coordinate_map[i-1]`` is the model operator realising T_i;
    ``symbols`` maps a coordinate index to its analytic symbol.
    """
    mode: str
    p: int
    q: int
    embedding: CanonicalEmbedding
    coordinate_map: Tuple[ModelOperator, ...]
    colligations: Mapping[str, UnitaryColligation]
    symbols: Mapping[int, AnalyticSymbol]
    tail_length: int = 1
    padded: bool = False

    @property
    def symbol_slots(self) -> Dict[int, int]:
        return {i: s.slot for i, s in self.symbols.items()}

    def summary(self, taylor_order: int = 8) -> Dict[str, object]:
        """Plain summary: colligation blocks and symbol Taylor coefficients."""
        blocks = {name: {"A": U.A, "B": U.B, "C": U.C, "D": U.D, "pad_dim": U.pad_dim}
                  for name, U in self.colligations.items()}
        symbols = {}
        for i, sym in self.symbols.items():
            order = taylor_order if sym.degree is None else sym.degree
            symbols[str(i)] = {"slot": sym.slot,
                               "taylor": sym.coefficients(order)}
        return {
            "mode": self.mode, "p": self.p, "q": self.q,
            "coefficient_dim": self.embedding.coeff_dim,
            "variables": self.embedding.var_count,
            "cutoff": list(self.embedding.cutoff),
            "coordinate_map": [
                f"shift(z_{op.slot})" if isinstance(op, ModelShift) else f"symbol(z_{op.slot})"
                for op in self.coordinate_map],
            "colligations": blocks,
            "symbols": symbols,
        }


class DilationReport(BaseModel):
    """Residual table of verify_dilation."""
    mode: str
    p: int
    q: int
    intertwining: Dict[int, float]
    compression: Dict[int, float]
    isometry_residual: float
    symbol_deviation: Dict[int, float] = Field(default_factory=dict)
    bcl_residual: Optional[float] = None
    transfer_form_residual: Optional[float] = None
    series_residual: Optional[float] = None
    tolerance: float
    passed: bool


# ============================================================================
# BUILDERS
# ============================================================================

def _require_class(T: OperatorTuple, p: int, q: int, tol: ToleranceConfig) -> None:
    report = class_membership(T, p, q, tol)
    if not report.in_Tpq:
        raise NotInClass(f"tuple not in the class for (p={p}, q={q}): "
                         + "; ".join(report.failures))


def build_finite_rank_dilation(T: OperatorTuple, p: int, q: int,
                               tol: ToleranceConfig = default_tolerances,
                               N: Optional[int] = None,
                               allow_padding: bool = False,
                               pad_dim: Optional[int] = None,
                               hardy: HardyConfig = default_hardy) -> DilationPackage:
    """Dilation on H^2 over the defect space of T^_p with one rational symbol.

    The unitary U on D_{T^p} (+) D_{T^q} maps (D_p h, D_q T_q^* h) to
    (D_p T_p^* h, D_q h); T_p becomes multiplication by tau_{U*} in the
    variable of T_q. With ``allow_padding`` the ambient space may carry
    ``pad_dim`` extra coordinates and the symbol is only checked to be
    contractive.
    """
    _require_class(T, p, q, tol)
    logger.info("=" * 60)
    logger.info(f"finite-rank dilation for (p={p}, q={q}), n={T.n}, dim={T.dim}")

    W_p = defect_sqrt(szego_defect(subtuple(T, p)), tol).coords
    W_q = defect_sqrt(szego_defect(subtuple(T, q)), tol).coords
    X = np.vstack([W_p, W_q @ T.adjoint(q)])
    Y = np.vstack([W_p @ T.adjoint(p), W_q])
    U = complete_to_unitary(X, Y, split=W_p.shape[0], allow_padding=allow_padding,
                            pad_dim=pad_dim, tol=tol)

    symbol = AnalyticSymbol.from_colligation(q - 1, U.adjoint())
    coordinate_map: List[ModelOperator] = []
    for i in range(1, T.n + 1):
        if i < p:
            coordinate_map.append(ModelShift(i))
        elif i == p:
            coordinate_map.append(ModelSymbol(symbol))
        else:
            coordinate_map.append(ModelShift(i - 1))

    tail = decay_length(T.op(q), tol.eps_residual * 1e-2, hardy.tail_cap)
    embedding = make_embedding(subtuple(T, p), tol, cutoff=N, hardy=hardy)
    logger.info(f"defect ranks: T^_p {W_p.shape[0]}, T^_q {W_q.shape[0]}; "
                f"colligation size {U.size}, pad {U.pad_dim}")
    return DilationPackage(
        mode=FINITE_RANK, p=p, q=q,
        embedding=embedding,
        coordinate_map=tuple(coordinate_map),
        colligations={"U": U},
        symbols={p: symbol},
        tail_length=hardy.tail_cap if tail is None else tail,
        padded=U.pad_dim > 0,
    )


def _inclusion(total: int, start: int, size: int) -> np.ndarray:
    """Columns e_start..e_{start+size-1} of the identity on C^total."""
    iota = np.zeros((total, size), dtype=complex)
    iota[start:start + size, :] = np.eye(size)
    return iota


def build_general_dilation(T: OperatorTuple, p: int, q: int,
                           tol: ToleranceConfig = default_tolerances,
                           N: Optional[int] = None,
                           pad_dim: int = 0,
                           hardy: HardyConfig = default_hardy) -> DilationPackage:
    """Dilation over the product tuple T^_{pq} with a degree-one symbol pair.

    E = D_pad (+) D_{T^q} (+) D_{T^p}. U maps (0, D_q T_q^* h, D_p h) to
    (0, D_q h, D_p T_p^* h) and V sends D_{T^pq} h to (0, D_q h, D_p T_p^* h).
    Both symbols live in slot p of the model; P is the projection onto the
    D_{T^p} block.
    """
    if pad_dim < 0:
        raise InputError(f"pad_dim must be >= 0, got {pad_dim}")
    _require_class(T, p, q, tol)
    logger.info("=" * 60)
    logger.info(f"general dilation for (p={p}, q={q}), n={T.n}, dim={T.dim}")

    W_p = defect_sqrt(szego_defect(subtuple(T, p)), tol).coords
    W_q = defect_sqrt(szego_defect(subtuple(T, q)), tol).coords
    r_p, r_q = W_p.shape[0], W_q.shape[0]
    pad_rows = np.zeros((pad_dim, T.dim), dtype=complex)
    X = np.vstack([pad_rows, W_q @ T.adjoint(q), W_p])
    Y = np.vstack([pad_rows, W_q, W_p @ T.adjoint(p)])
    U = replace(complete_to_unitary(X, Y, tol=tol), pad_dim=pad_dim)
    e = U.size

    source = product_tuple(T, p, q)
    W_pq = defect_sqrt(szego_defect(source), tol).coords
    V = Y @ linalg.pinv(W_pq)
    drift = op_norm(adjoint(V) @ V - np.eye(V.shape[1]))
    if drift > tol.eps_residual:
        raise NotIsometric(f"V fails to be an isometry (defect {drift:.3e})")
    if V.shape[1]:
        V, _ = linalg.polar(V)

    P = np.zeros((e, e), dtype=complex)
    P[e - r_p:, e - r_p:] = np.eye(r_p)
    P_perp = np.eye(e) - P
    Um = U.matrix
    phi_p = AnalyticSymbol.from_taylor(p, [P @ adjoint(Um), P_perp @ adjoint(Um)])
    phi_q = AnalyticSymbol.from_taylor(p, [Um @ P_perp, Um @ P])

    # degree-one colligations whose adjoint transfer functions are phi_p and phi_q
    iota_q = _inclusion(e, 0, pad_dim + r_q)
    iota_p = _inclusion(e, e - r_p, r_p)
    U1 = UnitaryColligation(np.block([
        [Um @ P, Um @ iota_q],
        [adjoint(iota_q), np.zeros((pad_dim + r_q, pad_dim + r_q))]]), e, pad_dim)
    U2 = UnitaryColligation(np.block([
        [P_perp @ adjoint(Um), iota_p],
        [adjoint(iota_p) @ adjoint(Um), np.zeros((r_p, r_p))]]), e, pad_dim)
    U1.check_unitary(tol)
    U2.check_unitary(tol)

    coordinate_map: List[ModelOperator] = []
    for i in range(1, T.n + 1):
        if i == p:
            coordinate_map.append(ModelSymbol(phi_p))
        elif i == q:
            coordinate_map.append(ModelSymbol(phi_q))
        elif i < q:
            coordinate_map.append(ModelShift(i))
        else:
            coordinate_map.append(ModelShift(i - 1))

    embedding = make_embedding(source, tol, cutoff=N, isometry=V, hardy=hardy)
    logger.info(f"defect ranks: T^_p {r_p}, T^_q {r_q}, T^_pq {W_pq.shape[0]}; "
                f"coefficient space {e} (pad {pad_dim})")
    return DilationPackage(
        mode=GENERAL, p=p, q=q,
        embedding=embedding,
        coordinate_map=tuple(coordinate_map),
        colligations={"U": U, "U1": U1, "U2": U2},
        symbols={p: phi_p, q: phi_q},
        tail_length=1,
        padded=pad_dim > 0,
    )


# ============================================================================
# COMPRESSION
# ============================================================================

def _monomials(package: DilationPackage, what) -> List[Tuple[Tuple[int, ...], complex]]:
    n = len(package.coordinate_map)
    if isinstance(what, (int, np.integer)):
        if not 1 <= what <= n:
            raise InputError(f"coordinate {what} outside 1..{n}")
        k = [0] * n
        k[int(what) - 1] = 1
        return [(tuple(k), 1.0)]
    if getattr(what, "n", None) != n:
        raise InputError(f"polynomial in {getattr(what, 'n', '?')} variables, tuple has {n}")
    return [(tuple(k), complex(c)) for k, c in what.terms]


def compression_box(package: DilationPackage, probes: Optional[np.ndarray] = None,
                    N: Optional[int] = None,
                    hardy: HardyConfig = default_hardy) -> np.ndarray:
    """Dense embedding of the probes on the box used for compressions.

    Without N, slot j is cut where ||T_j^{*m}||^2 drops below
    compress_target / (n - 1), which bounds the mass left outside the box.
    A slot that does not decay within compress_cap, a box above
    compress_max_entries, or a probe losing more than sqrt(compress_target)
    of its mass raises TruncationError.
    """
    E = package.embedding
    probes = default_probes(E.source.dim) if probes is None else np.asarray(probes, dtype=complex)
    if N is not None:
        return embed_dense(E, probes, as_cutoff(N, E.var_count), hardy.compress_max_entries)

    bound = float(np.sqrt(hardy.compress_target / max(1, E.var_count)))
    box = []
    for slot, A in enumerate(E.source.ops, start=1):
        length = decay_length(A, bound, hardy.compress_cap)
        if length is None:
            raise TruncationError(
                f"model slot {slot}: adjoint powers stay above {bound:.1e} "
                f"up to compress_cap={hardy.compress_cap}")
        box.append(length)
    embedded = embed_dense(E, probes, tuple(box), hardy.compress_max_entries)

    kept = np.sum(np.abs(embedded) ** 2, axis=tuple(range(embedded.ndim - 1)))
    lost = float(np.max(np.sum(np.abs(probes) ** 2, axis=0) - kept))
    if lost > np.sqrt(hardy.compress_target):
        raise TruncationError(f"embedding keeps all but {lost:.3e} of a probe on box {tuple(box)}")
    logger.debug(f"compression box {tuple(box)}, mass lost {lost:.3e}")
    return embedded


def compress(package: DilationPackage, what, probes: Optional[np.ndarray] = None,
             N: Optional[int] = None,
             hardy: HardyConfig = default_hardy,
             embedded: Optional[np.ndarray] = None) -> np.ndarray:
    """Pi^* p(V) Pi on the probe span, for a coordinate index or a polynomial.

    Entry (a, b) is <Pi x_a, p(V) Pi x_b> over the compression box. The
    forward model operators are exact there, so the error is the pairing of
    the two embedding tails. Pass ``embedded`` (from ``compression_box``) to
    reuse one embedding across calls.
    """
    terms = _monomials(package, what)
    if embedded is None:
        embedded = compression_box(package, probes, N, hardy)
    r = embedded.shape[-1]
    left = embedded.reshape(-1, r).conj().T

    result = np.zeros((r, r), dtype=complex)
    for k, c in terms:
        if c == 0:
            continue
        y = embedded
        for op, power in zip(package.coordinate_map, k):
            for _ in range(power):
                y = apply_model_box(op, y)
        result += c * (left @ y.reshape(-1, r))
    return result


# ============================================================================
# VERIFICATION
# ============================================================================

def bcl_residual(phi_p: AnalyticSymbol, phi_q: AnalyticSymbol, samples: int = 64) -> float:
    """max over boundary samples of ||Phi_p Phi_q - zI|| and ||Phi_q Phi_p - zI||."""
    worst = 0.0
    for theta in 2.0 * np.pi * np.arange(samples) / samples:
        a, _ = boundary_eval(phi_p, theta)
        b, _ = boundary_eval(phi_q, theta)
        zI = np.exp(1j * theta) * np.eye(a.shape[0])
        worst = max(worst, op_norm(a @ b - zI), op_norm(b @ a - zI))
    return worst


def _transfer_form_residual(package: DilationPackage) -> float:
    worst = 0.0
    for index, name in ((package.p, "U1"), (package.q, "U2")):
        expected = transfer_taylor(package.colligations[name].adjoint(), 1)
        actual = package.symbols[index].coefficients(1)
        worst = max(worst, max(op_norm(x - y) for x, y in zip(expected, actual)))
    return worst


def verify_dilation(package: DilationPackage, T: OperatorTuple,
                    probes: Optional[np.ndarray] = None,
                    N: Optional[int] = None,
                    tol: ToleranceConfig = default_tolerances,
                    hardy: HardyConfig = default_hardy,
                    vn: VNConfig = default_vn) -> DilationReport:
    """Residual table of a dilation package against the tuple it dilates.

    ``passed`` covers intertwining, compression, the symbol checks, the BCL
    identity and the transfer form; the isometry residual depends on the
    truncation and is reported only.
    """
    probes = default_probes(T.dim) if probes is None else np.asarray(probes, dtype=complex)
    intertwining = verify_intertwining(T, package, probes, N, hardy)
    embedded = compression_box(package, probes, hardy=hardy)
    compression = {i: op_norm(compress(package, i, embedded=embedded)
                              - adjoint(probes) @ T.op(i) @ probes)
                   for i in range(1, T.n + 1)}
    isometry = max(embedding_residual(package.embedding, probes[:, j])
                   for j in range(probes.shape[1]))

    deviation: Dict[int, float] = {}
    for i, sym in package.symbols.items():
        if package.padded and package.mode == FINITE_RANK:
            deviation[i] = contractivity_check(sym, vn.boundary_samples)
        else:
            deviation[i] = inner_check(sym, vn.boundary_samples)

    bcl = transfer_form = series = None
    if package.mode == GENERAL:
        bcl = bcl_residual(package.symbols[package.p], package.symbols[package.q],
                           vn.boundary_samples)
        transfer_form = _transfer_form_residual(package)
    else:
        series = series_identity_check(T, package.p, package.q,
                                      package.colligations["U"], SERIES_ORDER, tol)

    checked = list(intertwining.values()) + list(compression.values()) \
        + list(deviation.values()) + [x for x in (bcl, transfer_form) if x is not None]
    passed = max(checked) <= tol.eps_residual
    logger.info(f"verify {package.mode} dilation: max residual {max(checked):.3e}, "
                f"passed={passed}")
    return DilationReport(
        mode=package.mode, p=package.p, q=package.q,
        intertwining=intertwining, compression=compression,
        isometry_residual=isometry, symbol_deviation=deviation,
        bcl_residual=bcl, transfer_form_residual=transfer_form,
        series_residual=series, tolerance=tol.eps_residual, passed=passed,
    )


# ============================================================================
# PIPELINE
# ============================================================================

class DilationPipeline:
    """Build and verify a dilation of one tuple."""

    def __init__(self, tol: Optional[ToleranceConfig] = None,
                 hardy: Optional[HardyConfig] = None,
                 vn: Optional[VNConfig] = None):
        self.tol = tol or default_tolerances
        self.hardy = hardy or default_hardy
        self.vn = vn or default_vn
        logger.info("DilationPipeline initialized")

    def build(self, T: OperatorTuple, p: int, q: int, mode: str = FINITE_RANK,
              N: Optional[int] = None, allow_padding: bool = False,
              pad_dim: Optional[int] = None) -> DilationPackage:
        if mode not in MODES:
            raise InputError(f"unknown mode {mode!r}, expected one of {MODES}")
        if mode == FINITE_RANK:
            return build_finite_rank_dilation(T, p, q, self.tol, N, allow_padding,
                                              pad_dim, self.hardy)
        return build_general_dilation(T, p, q, self.tol, N, pad_dim or 0, self.hardy)

    def run(self, T: OperatorTuple, p: int, q: int, mode: str = FINITE_RANK,
            N: Optional[int] = None, allow_padding: bool = False,
            pad_dim: Optional[int] = None) -> Tuple[DilationPackage, DilationReport]:
        try:
            package = self.build(T, p, q, mode, N, allow_padding, pad_dim)
            report = verify_dilation(package, T, N=N, tol=self.tol,
                                     hardy=self.hardy, vn=self.vn)
            return package, report
        except CustomException:
            raise
        except Exception as e:
            raise CustomException(e, sys)
