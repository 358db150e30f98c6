import time
from dataclasses import replace
from itertools import product

import numpy as np
import pytest

from config.config import HardyConfig
from src.components.colligation import AnalyticSymbol, series_identity_check
from src.components.dilation import (
    FINITE_RANK, GENERAL, DilationPipeline, bcl_residual, build_finite_rank_dilation,
    build_general_dilation, compress, compression_box, verify_dilation,
)
from src.components.generators import gen_diagonal, gen_model_compression
from src.components.hardy_model import ModelSymbol, verify_intertwining
from src.components.operator_core import OperatorTuple, subtuple, szego_defect
from src.components.vn_variety import Polynomial, eval_poly_tuple
from src.exception import InputError, NeedsPadding, NotInClass, TruncationError
from src.utils import spectral_radius


def _scalar(*values) -> OperatorTuple:
    return OperatorTuple(tuple(np.array([[v]], dtype=complex) for v in values))


def _max_residual(report) -> float:
    values = list(report.intertwining.values()) + list(report.compression.values())
    return max(values)


def test_finite_rank_dilation_of_scalar_tuple():
    T = _scalar(0.5, 0.4, 0.3)
    package, report = DilationPipeline().run(T, 1, 2, mode=FINITE_RANK)

    assert report.passed
    assert _max_residual(report) <= 1e-8
    assert report.symbol_deviation[1] <= 1e-8
    # T_1 is the symbol in the variable of T_2, every other coordinate a shift
    assert isinstance(package.coordinate_map[0], ModelSymbol)
    assert package.symbol_slots == {1: 1}


@pytest.mark.parametrize("p,q", [(1, 2), (2, 3), (1, 3)])
def test_finite_rank_dilation_of_diagonal_tuples(p, q):
    T = gen_diagonal(3, 3, 0.6, seed=p + 10 * q)
    package = build_finite_rank_dilation(T, p, q)
    report = verify_dilation(package, T)

    assert report.passed
    assert max(report.intertwining.values()) <= 1e-8
    assert max(report.compression.values()) <= 1e-8


def test_general_dilation_of_scalar_tuple():
    T = _scalar(0.3, 0.4, 0.5)
    package, report = DilationPipeline().run(T, 1, 2, mode=GENERAL)

    assert report.passed
    assert _max_residual(report) <= 1e-8
    assert report.bcl_residual <= 1e-10
    assert report.transfer_form_residual <= 1e-10
    assert set(package.colligations) == {"U", "U1", "U2"}


@pytest.mark.parametrize("seed", range(3))
def test_general_dilation_of_model_compressions(seed):
    T = gen_model_compression(3, 1, 2, 2, 1, seed)
    package = build_general_dilation(T, 1, 2)
    report = verify_dilation(package, T)

    assert report.passed
    assert report.bcl_residual <= 1e-10
    assert max(report.intertwining.values()) <= 1e-8
    assert max(report.compression.values()) <= 1e-8


def test_general_dilation_with_padding_and_four_variables():
    T = gen_diagonal(4, 2, 0.6, seed=21)
    package = build_general_dilation(T, 2, 4, pad_dim=1)
    report = verify_dilation(package, T)

    assert package.padded
    assert package.embedding.coeff_dim == package.colligations["U"].size
    assert report.passed


def test_negative_control_negated_symbol():
    """Flipping the sign of Phi_p breaks the intertwining of T_p."""
    T = _scalar(0.3, 0.4, 0.5)
    package = build_general_dilation(T, 1, 2)
    phi_p = package.symbols[1]
    flipped = AnalyticSymbol.from_taylor(phi_p.slot, [-c for c in phi_p.taylor])
    bad = replace(package, coordinate_map=(ModelSymbol(flipped),) + package.coordinate_map[1:])

    assert verify_intertwining(T, bad)[1] >= 1e-2
    assert verify_intertwining(T, package)[1] <= 1e-8


def test_padded_finite_rank_dilation():
    T = gen_diagonal(3, 2, 0.5, seed=4)
    with pytest.raises(NeedsPadding):
        build_finite_rank_dilation(T, 1, 2, pad_dim=1)

    package = build_finite_rank_dilation(T, 1, 2, allow_padding=True, pad_dim=1)
    report = verify_dilation(package, T)
    assert package.padded
    assert report.symbol_deviation[1] <= 1e-8
    assert report.passed


def test_dilation_requires_class_membership():
    J = np.array([[0.0, 1.0], [0.0, 0.0]])
    T = OperatorTuple((J, np.zeros((2, 2)), J))
    with pytest.raises(NotInClass):
        build_finite_rank_dilation(T, 1, 2)
    with pytest.raises(InputError):
        DilationPipeline().build(_scalar(0.1, 0.2, 0.3), 1, 2, mode="spectral")


@pytest.mark.parametrize("seed", range(5))
def test_series_identity_tail_bound(seed):
    T = gen_diagonal(3, 3, 0.6, seed=seed)
    package = build_finite_rank_dilation(T, 1, 2)
    m = 30
    residual = series_identity_check(T, 1, 2, package.colligations["U"], m)

    D_q = np.linalg.norm(szego_defect(subtuple(T, 2)), 2) ** 0.5
    bound = D_q * spectral_radius(T.op(2)) ** (m + 2) + 1e-10
    assert residual <= bound


def test_compress_polynomial():
    T = _scalar(0.3, 0.4, 0.5)
    package = build_general_dilation(T, 1, 2)
    poly = Polynomial.from_dict(3, {(1, 1, 0): 1.0, (0, 0, 2): 0.5j, (0, 0, 0): -0.25})

    compressed = compress(package, poly)
    assert np.allclose(compressed, eval_poly_tuple(poly, T), atol=1e-9)


def test_bcl_pair_of_general_package():
    T = gen_diagonal(3, 2, 0.6, seed=9)
    package = build_general_dilation(T, 1, 3)
    assert bcl_residual(package.symbols[1], package.symbols[3], 64) <= 1e-10


def test_package_summary():
    T = _scalar(0.5, 0.4, 0.3)
    summary = build_finite_rank_dilation(T, 1, 2).summary(taylor_order=4)

    assert summary["mode"] == FINITE_RANK
    assert summary["coordinate_map"] == ["symbol(z_1)", "shift(z_1)", "shift(z_2)"]
    assert len(summary["symbols"]["1"]["taylor"]) == 5


def test_series_identity_on_scalars():
    # 1. geometric tail of T_q = 0.4
    T = _scalar(0.3, 0.4, 0.5)
    U = build_finite_rank_dilation(T, 1, 2).colligations["U"]
    D_q = np.sqrt((1 - 0.3 ** 2) * (1 - 0.5 ** 2))
    assert series_identity_check(T, 1, 2, U, 20) <= D_q * 0.4 ** 22 + 1e-12

    # 2. T_q = 0 leaves only the constant term
    T = _scalar(0.3, 0.0, 0.5)
    U = build_finite_rank_dilation(T, 1, 2).colligations["U"]
    assert series_identity_check(T, 1, 2, U, 0) <= 1e-12


@pytest.mark.parametrize("seed", range(3))
def test_finite_rank_dilation_of_model_compressions(seed):
    """Non-normal tuples whose sub-tuple decays slowly still compress back exactly."""
    T = gen_model_compression(3, 1, 2, 2, 1, seed)
    package = build_finite_rank_dilation(T, 1, 2)
    report = verify_dilation(package, T)

    assert report.passed
    assert max(report.intertwining.values()) <= 1e-8
    assert max(report.compression.values()) <= 1e-8


@pytest.mark.parametrize("mode", [FINITE_RANK, GENERAL])
def test_monomial_compressions(mode):
    T = gen_model_compression(3, 1, 2, 2, 1, seed=0)
    package = DilationPipeline().build(T, 1, 2, mode=mode)
    embedded = compression_box(package)

    for k in product(range(5), repeat=3):
        if sum(k) > 4:
            continue
        monomial = Polynomial.from_dict(3, {k: 1.0})
        compressed = compress(package, monomial, embedded=embedded)
        assert np.allclose(compressed, eval_poly_tuple(monomial, T), atol=1e-8), k


CAMPAIGN = [("diag", seed) for seed in range(3)] + [("model", seed) for seed in range(3)]


@pytest.mark.parametrize("mode", [FINITE_RANK, GENERAL])
@pytest.mark.parametrize("kind,seed", CAMPAIGN)
def test_dilation_campaign(kind, seed, mode):
    if kind == "diag":
        T = gen_diagonal(3, 3, 0.8, seed=seed)
    else:
        T = gen_model_compression(3, 1, 2, 2, 1, seed)

    start = time.perf_counter()
    _, report = DilationPipeline().run(T, 1, 2, mode=mode)
    elapsed = time.perf_counter() - start

    assert report.passed
    assert elapsed < 60.0


def test_compression_box_fails_loudly():
    T = gen_model_compression(3, 1, 2, 2, 1, seed=2)
    package = build_finite_rank_dilation(T, 1, 2)

    # 1. a cap below the decay length of the slow slot
    with pytest.raises(TruncationError):
        compression_box(package, hardy=HardyConfig(compress_cap=8))
    # 2. a box larger than the entry limit
    with pytest.raises(TruncationError):
        compression_box(package, hardy=HardyConfig(compress_max_entries=100))
    # 3. an explicit cutoff skips the checks
    assert compression_box(package, N=2).shape == (3, 3, package.embedding.coeff_dim, T.dim)
