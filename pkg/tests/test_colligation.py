import numpy as np
import pytest

from src.components.colligation import (
    AnalyticSymbol, UnitaryColligation, boundary_eval, canonical_decomposition,
    complete_to_unitary, contractivity_check, decomposition_residual, inner_check,
    reduced_colligation, schur_identity_residual, transfer_eval, transfer_taylor,
)
from src.components.generators import gen_random_colligation, gen_random_contraction, haar_unitary
from src.exception import (
    BoundarySingular, DecompositionError, InputError, NeedsPadding, NotIsometric,
)
from src.utils import block_diag

INTERIOR = [0.0, 0.3, -0.5j, 0.6 + 0.2j, 0.9 * np.exp(2.0j)]


def test_complete_to_unitary_maps_prescribed_vectors():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
    Y = haar_unitary(5, rng) @ X

    U = complete_to_unitary(X, Y, split=2)

    assert np.allclose(U.matrix @ X, Y, atol=1e-10)
    assert U.unitarity_defect() <= 1e-10
    assert U.A.shape == (2, 2)
    assert U.D.shape == (3, 3)


def test_complete_to_unitary_errors():
    X = np.array([[1.0], [0.0]])

    # 1. Gram mismatch
    with pytest.raises(NotIsometric):
        complete_to_unitary(X, 2 * X)

    # 2. Dimension deficit without padding
    X3 = np.array([[1.0], [0.0], [0.0]])
    with pytest.raises(NeedsPadding):
        complete_to_unitary(X3, X)

    # 3. Padding appends zero coordinates to the smaller side
    U = complete_to_unitary(X3, X, allow_padding=True)
    assert U.size == 3
    assert U.pad_dim == 1
    assert np.allclose(U.matrix @ X3, np.vstack([X, [[0.0]]]))


def test_explicit_padding_enlarges_both_sides():
    X = np.array([[0.6], [0.8]])
    Y = np.array([[0.8], [-0.6]])
    with pytest.raises(NeedsPadding):
        complete_to_unitary(X, Y, pad_dim=1)
    U = complete_to_unitary(X, Y, allow_padding=True, pad_dim=2)
    assert U.size == 4
    assert U.unitarity_defect() <= 1e-10


@pytest.mark.parametrize("seed", range(10))
def test_transfer_identity_and_contractivity(seed):
    U = gen_random_colligation(6, 2, seed)
    for z in INTERIOR:
        assert schur_identity_residual(U, z) <= 1e-10
        assert np.linalg.norm(transfer_eval(U, z), 2) <= 1 + 1e-10


def test_transfer_outside_disc():
    U = gen_random_colligation(4, 2, seed=1)
    with pytest.raises(InputError):
        transfer_eval(U, 1.5)


def test_taylor_series_matches_evaluation():
    U = gen_random_colligation(5, 2, seed=4)
    z = 0.3 + 0.1j
    series = sum(c * z ** k for k, c in enumerate(transfer_taylor(U, 60)))
    assert np.allclose(series, transfer_eval(U, z), atol=1e-12)


def test_adjoint_colligation():
    U = gen_random_colligation(5, 2, seed=2)
    z = -0.4 + 0.3j
    A, B, C, D = U.A, U.B, U.C, U.D
    expected = A.conj().T + z * C.conj().T @ np.linalg.solve(np.eye(3) - z * D.conj().T, B.conj().T)
    assert np.allclose(transfer_eval(U.adjoint(), z), expected, atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_random_colligations_are_inner(seed):
    symbol = AnalyticSymbol.from_colligation(1, gen_random_colligation(5, 2, seed))
    assert inner_check(symbol, 64) <= 1e-8
    assert contractivity_check(symbol, 64) <= 1e-10


def test_symbol_representations():
    # 1. exactly one representation
    with pytest.raises(InputError):
        AnalyticSymbol(slot=1)
    with pytest.raises(InputError):
        AnalyticSymbol.from_taylor(0, [np.eye(2)])

    # 2. Taylor symbols evaluate by Horner and pad their coefficients
    symbol = AnalyticSymbol.from_taylor(2, [np.eye(2), 2 * np.eye(2)])
    assert symbol.degree == 1
    assert np.allclose(symbol.evaluate(0.5), 2 * np.eye(2))
    assert len(symbol.coefficients(4)) == 5
    assert np.allclose(symbol.coefficients(4)[3], 0)


def test_boundary_eval_nudges_singular_points():
    # D = 1 makes I - zD singular at z = 1
    U = UnitaryColligation(np.diag([1j, 1.0]), split=1)
    symbol = AnalyticSymbol.from_colligation(1, U)

    with pytest.raises(BoundarySingular):
        transfer_eval(U, 1.0)
    value, used = boundary_eval(symbol, 0.0)
    assert used == pytest.approx(1e-9)
    assert np.allclose(value, [[1j]])


def test_canonical_decomposition_of_diagonal():
    parts = canonical_decomposition(np.diag([1.0, 0.5]))

    assert parts.basis_u.shape == (2, 1)
    assert parts.basis_c.shape == (2, 1)
    assert np.allclose(np.abs(parts.A_u), [[1.0]])
    assert np.allclose(parts.A_c, [[0.5]])


@pytest.mark.parametrize("seed", range(10))
def test_canonical_decomposition_of_random_contractions(seed):
    unitary_dim = seed % 3
    A = gen_random_contraction(6, seed, unitary_dim=unitary_dim)
    parts = canonical_decomposition(A)

    # 1. unitary part has the planted size and is unitary
    assert parts.basis_u.shape[1] == unitary_dim
    if unitary_dim:
        eye = np.eye(unitary_dim)
        assert np.linalg.norm(parts.A_u.conj().T @ parts.A_u - eye, 2) <= 1e-10

    # 2. the c.n.u. part has no unitary part left
    assert canonical_decomposition(parts.A_c).basis_u.shape[1] == 0


def _colligation_with_unitary_part(seed: int) -> UnitaryColligation:
    """A-block = W (+) A', W a 2x2 unitary, in a rotated basis."""
    rng = np.random.default_rng(seed)
    W = haar_unitary(2, rng)
    H = haar_unitary(4, rng)
    M = block_diag(W, H)                       # E = C^2 (+) C^2, F = C^2
    Q = block_diag(haar_unitary(4, rng), np.eye(2))
    return UnitaryColligation(Q @ M @ Q.conj().T, split=4)


@pytest.mark.parametrize("seed", range(5))
def test_decomposition_residual(seed):
    U = _colligation_with_unitary_part(seed)
    parts = canonical_decomposition(U.A)

    assert parts.basis_u.shape[1] == 2
    for z in INTERIOR:
        assert decomposition_residual(U, parts, z) <= 1e-10


def test_reduced_colligation_rejects_wrong_basis():
    U = _colligation_with_unitary_part(0)
    parts = canonical_decomposition(U.A)
    # a single vector from the unitary part does not reduce the colligation
    with pytest.raises(DecompositionError):
        reduced_colligation(U, parts.basis_u[:, :1])
