import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modglue import numlin
from modglue.errors import InvalidInputError

from oracles import power_iteration_top_singular, row_reduction_rank

RNG = np.random.default_rng(20240817)


def crand(m, n):
    return RNG.normal(size=(m, n)) + 1j * RNG.normal(size=(m, n))


class TestKernelBasis:
    def test_rank_one_diagonal(self):
        K = numlin.kernel_basis(np.diag([1.0, 0.0]))
        assert K.shape == (2, 1)
        assert abs(abs(K[1, 0]) - 1.0) < 1e-12 and abs(K[0, 0]) < 1e-12

    def test_zero_matrix_full_kernel(self):
        K = numlin.kernel_basis(np.zeros((2, 2)))
        assert K.shape == (2, 2)
        assert np.allclose(K.conj().T @ K, np.eye(2))

    def test_rank_nullity_against_row_reduction(self):
        # 3x5 built from 3x2 times 2x5: kernel dimension 3 by rank-nullity,
        # with the rank certified by the independent elimination oracle
        M = crand(3, 2) @ crand(2, 5)
        oracle_rank = row_reduction_rank(M)
        assert oracle_rank == 2
        K = numlin.kernel_basis(M)
        assert K.shape[1] == 5 - oracle_rank == 3
        assert numlin.op_norm(M @ K) <= 1e-10 * max(1.0, numlin.op_norm(M))
        assert np.allclose(K.conj().T @ K, np.eye(3), atol=1e-12)

    def test_empty_shapes(self):
        assert numlin.kernel_basis(np.zeros((0, 3))).shape == (3, 3)
        assert numlin.kernel_basis(np.zeros((3, 0))).shape == (0, 0)

    def test_rejects_nonfinite(self):
        with pytest.raises(InvalidInputError):
            numlin.kernel_basis(np.array([[np.nan, 0.0]]))
        with pytest.raises(InvalidInputError):
            numlin.op_norm(np.array([[np.inf]]))

    def test_rejects_bad_tol(self):
        with pytest.raises(InvalidInputError):
            numlin.kernel_basis(np.eye(2), tol=0.0)


class TestOpNorm:
    def test_identity(self):
        assert numlin.op_norm(np.eye(3)) == pytest.approx(1.0)

    def test_diagonal(self):
        assert numlin.op_norm(np.diag([2.0, 1.0])) == pytest.approx(2.0)

    def test_against_power_iteration(self):
        M = crand(4, 3)
        assert numlin.op_norm(M) == pytest.approx(
            power_iteration_top_singular(M), rel=1e-9
        )

    def test_empty(self):
        assert numlin.op_norm(np.zeros((0, 4))) == 0.0

    def test_submultiplicative_and_adjoint_invariant(self):
        for _ in range(25):
            A = crand(3, 4)
            B = crand(4, 2)
            na, nb, nab = numlin.op_norm(A), numlin.op_norm(B), numlin.op_norm(A @ B)
            assert nab <= na * nb * (1 + 1e-9)
            assert numlin.op_norm(A.conj().T) == pytest.approx(na, rel=1e-9)


class TestIsUnitary:
    def test_identity(self):
        assert numlin.is_unitary(np.eye(3), 1e-12)

    def test_phases(self):
        theta = 0.73
        assert numlin.is_unitary(np.diag([1.0, np.exp(1j * theta)]), 1e-12)

    def test_nonsquare_isometry_is_false(self):
        V = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).T[:, :2]  # 3x2 isometry
        assert V.shape == (3, 2)
        assert not numlin.is_unitary(V, 1e-9)

    def test_empty_is_unitary(self):
        assert numlin.is_unitary(np.zeros((0, 0)), 1e-12)


@settings(max_examples=40, deadline=None)
@given(
    m=st.integers(min_value=1, max_value=6),
    n=st.integers(min_value=1, max_value=6),
    r=st.integers(min_value=0, max_value=6),
    seed=st.integers(min_value=0, max_value=10**6),
)
def test_kernel_dim_plus_rank_is_cols(m, n, r, seed):
    rng = np.random.default_rng(seed)
    r = min(r, m, n)
    if r == 0:
        M = np.zeros((m, n), dtype=np.complex128)
    else:
        M = (rng.normal(size=(m, r)) + 1j * rng.normal(size=(m, r))) @ (
            rng.normal(size=(r, n)) + 1j * rng.normal(size=(r, n))
        )
    assert numlin.kernel_basis(M).shape[1] + numlin.rank(M) == n


def test_subspace_gap():
    Q = np.linalg.qr(crand(5, 5))[0]
    B1, B2 = Q[:, :2], Q[:, :2] @ np.linalg.qr(crand(2, 2))[0]
    assert numlin.subspace_gap(B1, B2) < 1e-12
    assert numlin.subspace_gap(Q[:, :2], Q[:, 2:4]) > 0.99
