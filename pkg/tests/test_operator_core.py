import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from config.config import ToleranceConfig, default_tolerances
from src.components.generators import (
    gen_diagonal, gen_model_compression, gen_random_contraction, haar_unitary,
)
from src.components.operator_core import (
    OperatorTuple, class_membership, decay_length, defect_identity_check, defect_sqrt,
    is_doubly_commuting, is_pure, product_tuple, scale_tuple, subtuple, subtuple_pq,
    szego_defect, szego_defect_expanded, szego_min_eigenvalue, validate_tuple,
)
from src.exception import InputError, NotSzegoPositive
from src.utils import op_norm

JORDAN = np.array([[0.0, 1.0], [0.0, 0.0]])


def _normal_tuple(seed: int, n: int, dim: int, radius: float = 0.9) -> OperatorTuple:
    """Commuting normal tuple W diag(d_i) W^* (not diagonal in the standard basis)."""
    rng = np.random.default_rng(seed)
    W = haar_unitary(dim, rng)
    ops = []
    for _ in range(n):
        d = radius * np.sqrt(rng.uniform(size=dim)) * np.exp(2j * np.pi * rng.uniform(size=dim))
        ops.append(W @ np.diag(d) @ W.conj().T)
    return OperatorTuple(tuple(ops))


def test_tuple_validation():
    # 1. Non-square and unequal sizes are input errors
    with pytest.raises(InputError):
        OperatorTuple((np.zeros((2, 3)),))
    with pytest.raises(InputError):
        OperatorTuple((np.eye(2), np.eye(3)))
    with pytest.raises(InputError):
        OperatorTuple((np.array([[np.nan]]),))

    # 2. Indices are 1-based
    T = OperatorTuple((0.5 * np.eye(2), 0.25 * np.eye(2)))
    assert np.allclose(T.op(1), 0.5 * np.eye(2))
    with pytest.raises(InputError):
        T.op(0)
    with pytest.raises(InputError):
        T.op(3)

    # 3. Stored matrices are read-only
    with pytest.raises(ValueError):
        T.ops[0][0, 0] = 1.0


def test_validate_tuple_flags():
    report = validate_tuple(OperatorTuple((JORDAN, JORDAN.T)))
    assert report.is_contractive
    assert not report.is_commuting
    assert report.failures

    report = validate_tuple(OperatorTuple((1.5 * np.eye(2), np.eye(2))))
    assert not report.is_contractive
    assert report.contraction_excess == pytest.approx(0.5)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 4), dim=st.integers(1, 4))
def test_defect_recursion_matches_expanded_sum(seed, n, dim):
    T = _normal_tuple(seed, n, dim)
    assert np.allclose(szego_defect(T), szego_defect_expanded(T), atol=1e-12)


def test_defect_sqrt_properties():
    T = gen_diagonal(3, 4, 0.7, seed=3)
    S = szego_defect(T)
    data = defect_sqrt(S)

    # 1. sqrt is a PSD square root, coords factor S
    assert np.allclose(data.sqrt @ data.sqrt, S, atol=1e-12)
    assert np.allclose(data.coords.conj().T @ data.coords, S, atol=1e-12)

    # 2. full rank for a strict diagonal tuple
    assert data.rank == 4
    assert data.coords.shape == (4, 4)


def test_defect_sqrt_rejects_negative():
    with pytest.raises(NotSzegoPositive):
        defect_sqrt(np.diag([1.0, -0.1]))

    # tiny negative noise is clipped, not rejected
    data = defect_sqrt(np.diag([1.0, -1e-13]))
    assert data.rank == 1


def test_purity():
    # 1. spectral radius below one
    assert is_pure(OperatorTuple((0.5 * np.eye(2),))) == [True]
    # 2. unitary is not pure
    assert is_pure(OperatorTuple((np.eye(2),))) == [False]
    # 3. nilpotent needs the power confirmation
    assert is_pure(OperatorTuple((JORDAN,))) == [True]


@pytest.mark.parametrize("margin", [1e-6, default_tolerances.rho_pure, 1e-12])
def test_purity_near_the_unit_circle(margin):
    T = OperatorTuple((np.diag([1.0 - margin, 0.5]), 0.5 * np.eye(2)))
    assert is_pure(T) == [False, True]

    # no spectral estimate without a positive residual target
    tol = ToleranceConfig(eps_residual=0.0, m_max=50)
    assert is_pure(OperatorTuple((0.5 * np.eye(2),)), tol) == [False]


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), dim=st.integers(1, 4), unitary_dim=st.integers(0, 4))
def test_purity_matches_brute_force_powers(seed, dim, unitary_dim):
    unitary_dim = min(unitary_dim, dim)
    A = gen_random_contraction(dim, seed, unitary_dim)
    tol = default_tolerances

    brute = op_norm(np.linalg.matrix_power(A.conj().T, tol.m_max)) < tol.eps_residual
    assert is_pure(OperatorTuple((A,))) == [brute]
    assert brute == (unitary_dim == 0)


def test_decay_length():
    assert decay_length(0.5 * np.eye(2), 0.1, 100) == 4
    assert decay_length(np.eye(2), 0.5, 10) is None
    assert decay_length(JORDAN, 1e-3, 5) == 2


def test_subtuples_and_product():
    T = OperatorTuple(tuple(c * np.eye(1) for c in (0.5, 0.4, 0.3, 0.2)))

    assert [A[0, 0] for A in subtuple(T, 2)] == pytest.approx([0.5, 0.3, 0.2])
    assert [A[0, 0] for A in subtuple_pq(T, 1, 3)] == pytest.approx([0.4, 0.2])
    # T_p T_q sits in slot p, T_q is removed
    assert [A[0, 0] for A in product_tuple(T, 2, 4)] == pytest.approx([0.5, 0.08, 0.3])
    with pytest.raises(InputError):
        product_tuple(T, 3, 2)
    with pytest.raises(InputError):
        scale_tuple(T, 1.0)


@pytest.mark.parametrize("p,q", [(1, 2), (1, 3), (2, 3)])
def test_diagonal_tuples_are_in_every_class(p, q):
    T = gen_diagonal(3, 3, 0.6, seed=11)
    report = class_membership(T, p, q)

    assert report.in_Tpq
    assert report.in_Ppq
    assert report.is_doubly_commuting
    assert report.product_pure
    assert report.failures == []
    assert set(report.szego_min_eig) == {f"T_hat_{p}", f"T_hat_{q}", f"T_hat_{p}{q}"}


def test_class_membership_failures():
    # 1. n < 3
    with pytest.raises(InputError):
        class_membership(OperatorTuple((0.5 * np.eye(2), 0.5 * np.eye(2))), 1, 2)

    # 2. unitary coordinate outside T_p breaks purity of the sub-tuple
    T = OperatorTuple((0.5 * np.eye(2), np.eye(2), 0.3 * np.eye(2)))
    report = class_membership(T, 1, 2)
    assert not report.in_Tpq
    assert any("not pure" in f for f in report.failures)

    # 3. (J, J) is not Szegő-positive
    T = OperatorTuple((JORDAN, np.zeros((2, 2)), JORDAN))
    assert szego_min_eigenvalue(OperatorTuple((JORDAN, JORDAN))) == pytest.approx(-1.0)
    report = class_membership(T, 1, 2)
    assert not report.in_Tpq
    assert any("T_hat_2" in f for f in report.failures)


def test_doubly_commuting():
    assert is_doubly_commuting(gen_diagonal(3, 3, 0.6, seed=1))
    # J commutes with J^2 = 0 but not with J^*
    assert not is_doubly_commuting(OperatorTuple((JORDAN, JORDAN)))


@pytest.mark.parametrize("seed", range(5))
def test_defect_identities(seed):
    """Both defect identities of the product tuple hold for commuting tuples."""
    for T in (_normal_tuple(seed, 4, 4), gen_model_compression(3, 1, 2, 2, 1, seed)):
        first, second = defect_identity_check(T, 1, 2)
        assert first <= 1e-10
        assert second <= 1e-10


@pytest.mark.parametrize("seed", range(5))
def test_product_tuple_stays_in_class(seed):
    T = gen_model_compression(3, 1, 2, 2, 1, seed)
    report = class_membership(T, 1, 2)
    assert report.in_Tpq
    assert report.product_pure
    assert report.szego_min_eig["T_hat_12"] >= -1e-10


def test_scale_tuple_scales_commutators():
    rng = np.random.default_rng(2)
    A, B = (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)) for _ in range(2))
    A, B = A / op_norm(A), B / op_norm(B)
    r = 0.7

    scaled = scale_tuple(OperatorTuple((A, B)), r)
    commutator = A @ B - B @ A
    assert np.allclose(scaled.op(1) @ scaled.op(2) - scaled.op(2) @ scaled.op(1),
                       r ** 2 * commutator, atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 4), dim=st.integers(1, 4),
       r=st.floats(0.05, 0.95))
def test_scaling_keeps_diagonal_tuples_szego_positive(seed, n, dim, r):
    T = gen_diagonal(n, dim, 0.9, seed)
    before = szego_min_eigenvalue(T)
    after = szego_min_eigenvalue(scale_tuple(T, r))

    assert before >= -1e-12
    assert after >= before - 1e-12
