"""
Von Neumann Comparisons
=======================
Operator norms of polynomials in a tuple against suprema of |p| over the
torus (classical bound) and over boundary samples of the variety cut out
by the finite-rank symbol (refined bound).

Usage:
    from src.components.vn_variety import Polynomial, vn_report

    poly = Polynomial.from_dict(3, {(1, 0, 0): 1.0, (0, 1, 1): 0.5j})
    rows = vn_report(T, 1, 2, [poly], mode="refined")
"""

import sys
from dataclasses import dataclass
from itertools import product
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from pydantic import BaseModel
from scipy import linalg

from config.config import (
    HardyConfig, ToleranceConfig, VNConfig, default_hardy, default_tolerances, default_vn,
)
from src.components.colligation import (
    AnalyticSymbol, CanonicalDecomposition, boundary_eval, canonical_decomposition,
    reduced_colligation,
)
from src.components.dilation import DilationPackage, build_finite_rank_dilation
from src.components.hardy_model import ModelShift
from src.components.operator_core import OperatorTuple, class_membership
from src.exception import CustomException, EmptyVariety, InputError, NotInClass
from src.logger import logger

CLASSICAL = "classical"
REFINED = "refined"
# torus slices evaluated at once; bounds memory of the vectorised grid
CHUNK_AXES = 3


# ============================================================================
# POLYNOMIALS
# ============================================================================

@dataclass(frozen=True)
class Polynomial:
    """Finite sum of c_k z^k in n variables."""
    n: int
    terms: Tuple[Tuple[Tuple[int, ...], complex], ...]

    def __post_init__(self):
        if self.n < 1:
            raise InputError(f"a polynomial needs n >= 1, got {self.n}")
        clean = []
        for k, c in self.terms:
            k = tuple(int(x) for x in k)
            if len(k) != self.n:
                raise InputError(f"multi-index {k} does not have {self.n} entries")
            if any(x < 0 for x in k):
                raise InputError(f"multi-index {k} has a negative entry")
            clean.append((k, complex(c)))
        object.__setattr__(self, "terms", tuple(clean))

    @classmethod
    def from_dict(cls, n: int, coefficients: Mapping[Sequence[int], complex]) -> "Polynomial":
        return cls(n, tuple((tuple(k), c) for k, c in coefficients.items()))

    @property
    def degree(self) -> int:
        return max((sum(k) for k, _ in self.terms), default=0)

    def lipschitz_bound(self) -> float:
        """sum |c| |k|, a bound on the angular derivative of p on the torus."""
        return float(sum(abs(c) * sum(k) for k, c in self.terms))

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Values at points of shape (..., n)."""
        points = np.asarray(points, dtype=complex)
        if points.shape[-1] != self.n:
            raise InputError(f"points have {points.shape[-1]} coordinates, need {self.n}")
        value = np.zeros(points.shape[:-1], dtype=complex)
        for k, c in self.terms:
            value = value + c * np.prod(points ** np.asarray(k), axis=-1)
        return value


def grid_slack(poly: Polynomial, G: int) -> float:
    """L pi sqrt(n) / G: covers the distance from any torus point to the grid."""
    return poly.lipschitz_bound() * np.pi * np.sqrt(poly.n) / G


# ============================================================================
# OPERATOR SIDE
# ============================================================================

def eval_poly_tuple(poly: Polynomial, T: OperatorTuple) -> np.ndarray:
    """p(T) with cached operator powers."""
    if poly.n != T.n:
        raise InputError(f"polynomial in {poly.n} variables, tuple has {T.n}")
    top = [max((k[i] for k, _ in poly.terms), default=0) for i in range(T.n)]
    powers = []
    for A, m in zip(T.ops, top):
        chain = [np.eye(T.dim, dtype=complex)]
        for _ in range(m):
            chain.append(chain[-1] @ A)
        powers.append(chain)
    result = np.zeros((T.dim, T.dim), dtype=complex)
    for k, c in poly.terms:
        M = np.eye(T.dim, dtype=complex)
        for i, power in enumerate(k):
            if power:
                M = M @ powers[i][power]
        result += c * M
    return result


def poly_op_norm(poly: Polynomial, T: OperatorTuple) -> float:
    return float(linalg.norm(eval_poly_tuple(poly, T), 2))


# ============================================================================
# TORUS SIDE
# ============================================================================

def _grid_points(G: int) -> np.ndarray:
    if G < 1:
        raise InputError(f"grid size must be >= 1, got {G}")
    return np.exp(2j * np.pi * np.arange(G) / G)


def _direct_grid(poly: Polynomial, z: np.ndarray, prefix: Tuple[int, ...],
                 inner_axes: int) -> np.ndarray:
    G = z.size
    shape = (G,) * inner_axes
    outer = len(prefix)
    values = np.zeros(shape, dtype=complex)
    for k, c in poly.terms:
        term = complex(c) * np.prod([z[j] ** k[i] for i, j in enumerate(prefix)])
        grid = np.full(shape, term, dtype=complex)
        for axis in range(inner_axes):
            view = [1] * inner_axes
            view[axis] = G
            grid = grid * (z ** k[outer + axis]).reshape(view)
        values += grid
    return values


def torus_sup(poly: Polynomial, G: int) -> float:
    """max |p| over the G^n grid of the torus.

    Small n with every degree below G goes through one inverse FFT of the
    coefficient array; otherwise the last three axes are vectorised and the
    leading ones looped.
    """
    z = _grid_points(G)
    n = poly.n
    if n <= CHUNK_AXES and all(max(k) < G for k, _ in poly.terms if k):
        coeffs = np.zeros((G,) * n, dtype=complex)
        for k, c in poly.terms:
            coeffs[k] += c
        return float(np.max(np.abs(np.fft.ifftn(coeffs) * G ** n)))

    inner_axes = min(n, CHUNK_AXES)
    best = 0.0
    for prefix in product(range(G), repeat=n - inner_axes):
        best = max(best, float(np.max(np.abs(_direct_grid(poly, z, prefix, inner_axes)))))
    return best


# ============================================================================
# VARIETY SAMPLES
# ============================================================================

@dataclass(frozen=True)
class VarietySampleSet:
    """Boundary samples (lambda, theta_1..theta_{n-1}) of the refined variety.

    ``frame`` has columns part, lambda_re, lambda_im, theta1..theta{n-1};
    part is "u" for the unitary constant block and "c" for the c.n.u. block.
    """
    n: int
    grid: int
    frame: pd.DataFrame

    @property
    def theta_columns(self) -> List[str]:
        return [f"theta{j}" for j in range(1, self.n)]

    def __len__(self) -> int:
        return len(self.frame)

    def part(self, name: str) -> pd.DataFrame:
        return self.frame[self.frame["part"] == name]


def variety_from_symbol(symbol: AnalyticSymbol, n: int, G: int,
                        decomposition: Optional[CanonicalDecomposition] = None,
                        tol: ToleranceConfig = default_tolerances) -> VarietySampleSet:
    """Sample the variety of a rational inner symbol on the boundary.

    The symbol's constant block splits into a unitary part (giving the
    constant eigenvalues of the u-part) and a c.n.u. part whose reduced
    colligation gives eigenvalues at each theta_1 of the grid. The other
    n-2 angles run over the same grid.
    """
    if symbol.colligation is None:
        raise InputError("variety sampling needs a colligation-form symbol")
    if n < 3:
        raise InputError(f"variety sampling needs n >= 3, got {n}")
    U = symbol.colligation
    decomposition = decomposition or canonical_decomposition(U.A, tol)
    angles = 2.0 * np.pi * np.arange(G) / G

    rows: List[Tuple[str, complex, float]] = []
    if decomposition.basis_u.shape[1]:
        for lam in linalg.eigvals(decomposition.A_u):
            rows.extend(("u", lam, theta) for theta in angles)
    if decomposition.basis_c.shape[1]:
        reduced = reduced_colligation(U, decomposition.basis_c, tol)
        reduced_symbol = AnalyticSymbol.from_colligation(symbol.slot, reduced)
        for theta in angles:
            value, used = boundary_eval(reduced_symbol, theta)
            rows.extend(("c", lam, used) for lam in linalg.eigvals(value))

    columns = ["part", "lambda_re", "lambda_im"] + [f"theta{j}" for j in range(1, n)]
    records = []
    for part, lam, theta in rows:
        for rest in product(angles, repeat=n - 2):
            records.append((part, float(np.real(lam)), float(np.imag(lam)), float(theta)) + rest)
    frame = pd.DataFrame.from_records(records, columns=columns)
    logger.info(f"variety samples: {len(frame)} rows "
                f"(u-part dim {decomposition.basis_u.shape[1]}, "
                f"c-part dim {decomposition.basis_c.shape[1]})")
    return VarietySampleSet(n=n, grid=G, frame=frame)


def variety_sup(poly: Polynomial, samples: VarietySampleSet) -> float:
    """max |p(lambda, e^{i theta_1}, ..., e^{i theta_{n-1}})| over the samples."""
    if len(samples) == 0:
        raise EmptyVariety("no variety samples to take a supremum over")
    if poly.n != samples.n:
        raise InputError(f"polynomial in {poly.n} variables, samples have {samples.n}")
    frame = samples.frame
    lam = frame["lambda_re"].to_numpy() + 1j * frame["lambda_im"].to_numpy()
    thetas = frame[samples.theta_columns].to_numpy()
    points = np.column_stack([lam, np.exp(1j * thetas)])
    return float(np.max(np.abs(poly.evaluate(points))))


def boundary_unimodularity(samples: VarietySampleSet) -> float:
    """max ||lambda| - 1| over the samples (0 for an empty set)."""
    if len(samples) == 0:
        return 0.0
    lam = np.hypot(samples.frame["lambda_re"].to_numpy(), samples.frame["lambda_im"].to_numpy())
    return float(np.max(np.abs(lam - 1.0)))


# ============================================================================
# MODEL SIDE
# ============================================================================

def model_symbol_sup(package: DilationPackage, poly: Polynomial, G: int) -> float:
    """max over the (n-1)-torus grid of ||p(model symbols)||.

    Shifts contribute e^{i theta_slot} I, symbols their boundary value in
    their slot; the result bounds ||p(T)|| from above.
    """
    n = len(package.coordinate_map)
    if poly.n != n:
        raise InputError(f"polynomial in {poly.n} variables, package has {n} coordinates")
    m = package.embedding.var_count
    e = package.embedding.coeff_dim
    angles = 2.0 * np.pi * np.arange(G) / G
    cache: Dict[Tuple[int, float], np.ndarray] = {}
    best = 0.0
    for point in product(angles, repeat=m):
        values = []
        for op in package.coordinate_map:
            theta = point[op.slot - 1]
            if isinstance(op, ModelShift):
                values.append(np.exp(1j * theta) * np.eye(e))
            else:
                key = (id(op), theta)
                if key not in cache:
                    cache[key] = boundary_eval(op.symbol, theta)[0]
                values.append(cache[key])
        total = np.zeros((e, e), dtype=complex)
        for k, c in poly.terms:
            M = np.eye(e, dtype=complex)
            for value, power in zip(values, k):
                if power:
                    M = M @ np.linalg.matrix_power(value, power)
            total += c * M
        best = max(best, float(linalg.norm(total, 2)))
    return best


# ============================================================================
# REPORT
# ============================================================================

class VNReport(BaseModel):
    """One row of the von Neumann comparison table."""
    poly_index: int
    degree: int
    op_norm: float
    torus_sup: float
    slack: float
    violation: bool
    grid: int
    variety_sup: Optional[float] = None
    refined_slack: Optional[float] = None
    refined_violation: Optional[bool] = None
    model_sup: Optional[float] = None
    notice: Optional[str] = None


def _report_one(index: int, poly: Polynomial, T: OperatorTuple, G: int,
                samples: Optional[VarietySampleSet], refined_grid: int,
                package: Optional[DilationPackage], model_bound: bool,
                notice: Optional[str], tol: ToleranceConfig) -> VNReport:
    norm = poly_op_norm(poly, T)
    sup = torus_sup(poly, G)
    slack = grid_slack(poly, G)
    row = dict(poly_index=index, degree=poly.degree, op_norm=norm, torus_sup=sup,
               slack=slack, violation=bool(norm > sup + slack + tol.eps_residual),
               grid=G, notice=notice)
    if samples is not None:
        v_sup = variety_sup(poly, samples)
        v_slack = grid_slack(poly, refined_grid)
        row.update(variety_sup=v_sup, refined_slack=v_slack,
                   refined_violation=bool(norm > v_sup + v_slack + tol.eps_residual))
    if model_bound and package is not None:
        row["model_sup"] = model_symbol_sup(package, poly, G)
    return VNReport(**row)


def vn_report(T: OperatorTuple, p_idx: int, q_idx: int, polys: Sequence[Polynomial],
              G: Optional[int] = None, mode: str = CLASSICAL,
              tol: ToleranceConfig = default_tolerances,
              vn: VNConfig = default_vn,
              hardy: HardyConfig = default_hardy,
              model_bound: bool = False) -> List[VNReport]:
    """Classical (and optionally refined) von Neumann comparison per polynomial.

    Refined mode is only defined for (p, q) = (1, 2); other pairs fall back
    to the classical comparison with a notice.
    """
    if mode not in (CLASSICAL, REFINED):
        raise InputError(f"unknown mode {mode!r}")
    G = vn.grid if G is None else G
    membership = class_membership(T, p_idx, q_idx, tol)
    if not membership.in_Tpq:
        raise NotInClass("; ".join(membership.failures))

    notice = None
    samples = package = None
    if mode == REFINED and (p_idx, q_idx) != (1, 2):
        notice = f"refined mode needs (p, q) = (1, 2); classical comparison for ({p_idx}, {q_idx})"
        logger.warning(notice)
        mode = CLASSICAL
    if mode == REFINED or model_bound:
        package = build_finite_rank_dilation(T, p_idx, q_idx, tol, hardy=hardy)
    if mode == REFINED:
        samples = variety_from_symbol(package.symbols[p_idx], T.n, vn.refined_grid, tol=tol)

    logger.info("=" * 60)
    logger.info(f"von Neumann comparison: {len(polys)} polynomials, mode={mode}, grid={G}")
    try:
        rows = Parallel(n_jobs=vn.n_jobs, prefer="threads")(
            delayed(_report_one)(i, poly, T, G, samples, vn.refined_grid,
                                 package, model_bound, notice, tol)
            for i, poly in enumerate(polys))
    except CustomException:
        raise
    except Exception as e:
        raise CustomException(e, sys)
    violations = sum(r.violation or bool(r.refined_violation) for r in rows)
    logger.info(f"von Neumann comparison done: {violations} violations")
    return rows


def reports_frame(rows: Sequence[VNReport]) -> pd.DataFrame:
    """VN rows as a DataFrame for printing and CSV output."""
    return pd.DataFrame([r.model_dump() for r in rows])
