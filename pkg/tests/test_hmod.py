import numpy as np
import pytest

from modglue import numlin
from modglue.cstar import AlgebraElement, algebra
from modglue.errors import InvalidInputError, NotAModuleMapError
from modglue.hmod import (
    AdjointableMap,
    ModuleVector,
    adjoint_of,
    apply_map,
    compose,
    coords,
    from_coords,
    identity_map,
    inner_product,
    is_unitary_module_map,
    map_norm,
    module,
    module_map,
    module_map_from_linear,
    restrict_map,
    restrict_module,
    restrict_vector,
    right_act,
    vec_norm,
)
from modglue.rng import Rng


def rand_vector(rng, mod):
    return ModuleVector(mod, tuple(rng.gauss_matrix(m, n) for (m, n) in mod.block_shapes()))


def rand_alg(rng, alg):
    return AlgebraElement(alg, tuple(rng.gauss_matrix(n, n) for n in alg.block_dims))


def rand_map(rng, src, tgt):
    return AdjointableMap(src, tgt, tuple(
        rng.gauss_matrix(p, m) for p, m in zip(tgt.mult, src.mult)
    ))


@pytest.fixture
def setup():
    A = algebra((2, 1, 3))
    X = module(A, (1, 2, 2))
    return A, X, Rng(31)


class TestInnerProduct:
    def test_single_block_example(self):
        A = algebra((2,))
        X = module(A, (1,))
        x = ModuleVector(X, (np.array([[1.0, 0.0]]),))
        ip = inner_product(x, x)
        assert np.allclose(ip.blocks[0], np.diag([1.0, 0.0]))

    def test_right_linearity(self, setup):
        A, X, rng = setup
        x, y = rand_vector(rng, X), rand_vector(rng, X)
        a = rand_alg(rng, A)
        lhs = inner_product(x, right_act(y, a))
        rhs = inner_product(x, y) * a
        assert (lhs - rhs).norm() < 1e-12

    def test_norm_consistency(self, setup):
        # ||x||^2 computed two ways: blockwise sup norm vs algebra norm of <x|x>
        A, X, rng = setup
        for _ in range(10):
            x = rand_vector(rng, X)
            assert vec_norm(x) ** 2 == pytest.approx(
                numlin.op_norm(max(inner_product(x, x).blocks, key=numlin.op_norm)),
                rel=1e-9,
            )

    def test_cauchy_schwarz(self, setup):
        A, X, rng = setup
        for _ in range(20):
            x, y = rand_vector(rng, X), rand_vector(rng, X)
            assert inner_product(x, y).norm() <= vec_norm(x) * vec_norm(y) * (1 + 1e-9)

    def test_module_mismatch(self, setup):
        A, X, rng = setup
        Y = module(A, (2, 2, 2))
        with pytest.raises(InvalidInputError):
            inner_product(rand_vector(rng, X), rand_vector(rng, Y))


class TestRightAction:
    def test_identity_and_zero(self, setup):
        A, X, rng = setup
        x = rand_vector(rng, X)
        assert vec_norm(right_act(x, A.identity()) - x) == 0.0
        assert vec_norm(right_act(x, A.zero())) == 0.0

    def test_associativity(self, setup):
        A, X, rng = setup
        x = rand_vector(rng, X)
        a, b = rand_alg(rng, A), rand_alg(rng, A)
        lhs = right_act(right_act(x, a), b)
        rhs = right_act(x, a * b)
        assert vec_norm(lhs - rhs) < 1e-12


class TestRestriction:
    def test_shapes(self):
        A = algebra((2, 1, 3))
        X = module(A, (1, 2, 2))
        sub = restrict_module(X, {0, 1})
        assert sub.mult == (1, 2) and sub.algebra.block_dims == (2, 1)

    def test_full_restriction_identity(self, setup):
        A, X, rng = setup
        x = rand_vector(rng, X)
        assert vec_norm(restrict_vector(x, {0, 1, 2}) - x) == 0.0

    def test_quotient_norm_is_projection_distance(self, setup):
        # ||x|_F|| equals the distance from x to the submodule supported off F
        A, X, rng = setup
        F = {0, 2}
        x = rand_vector(rng, X)
        killed = ModuleVector(X, tuple(
            np.zeros_like(b) if k in F else b
            for k, b in zip(A.labels, x.blocks)
        ))
        assert vec_norm(restrict_vector(x, F)) == pytest.approx(
            vec_norm(x - killed), rel=1e-12
        )
        # and is a lower bound for any other candidate in the submodule
        for _ in range(10):
            v = rand_vector(rng, X)
            v = ModuleVector(X, tuple(
                np.zeros_like(b) if k in F else b
                for k, b in zip(A.labels, v.blocks)
            ))
            assert vec_norm(x - v) >= vec_norm(restrict_vector(x, F)) - 1e-12

    def test_restrict_map_functorial(self, setup):
        A, X, rng = setup
        Y = module(A, (2, 1, 3))
        Z = module(A, (1, 1, 1))
        a = rand_map(rng, X, Y)
        b = rand_map(rng, Y, Z)
        F = {1, 2}
        lhs = restrict_map(compose(b, a), F)
        rhs = compose(restrict_map(b, F), restrict_map(a, F))
        assert map_norm(lhs - rhs) == 0.0
        assert map_norm(restrict_map(adjoint_of(a), F) - adjoint_of(restrict_map(a, F))) == 0.0


class TestAdjointable:
    def test_adjoint_of_identity(self, setup):
        A, X, _ = setup
        assert map_norm(adjoint_of(identity_map(X)) - identity_map(X)) == 0.0

    def test_double_adjoint(self, setup):
        A, X, rng = setup
        Y = module(A, (3, 1, 2))
        a = rand_map(rng, X, Y)
        assert map_norm(adjoint_of(adjoint_of(a)) - a) == 0.0

    def test_adjoint_identity_on_vectors(self, setup):
        A, X, rng = setup
        Y = module(A, (3, 1, 2))
        a = rand_map(rng, X, Y)
        for _ in range(10):
            x, y = rand_vector(rng, X), rand_vector(rng, Y)
            lhs = inner_product(apply_map(a, x), y)
            rhs = inner_product(x, apply_map(adjoint_of(a), y))
            assert (lhs - rhs).norm() < 1e-12

    def test_norm_is_max_block(self, setup):
        A, X, rng = setup
        a = rand_map(rng, X, X)
        assert map_norm(a) == pytest.approx(
            max(numlin.op_norm(b) for b in a.blocks)
        )


class TestUnitaryMaps:
    def test_identity_and_phases(self, setup):
        A, X, rng = setup
        assert is_unitary_module_map(identity_map(X), 1e-12)
        phased = module_map(X, X, tuple(
            np.exp(1j * 0.3 * (k + 1)) * np.eye(m) for k, m in enumerate(X.mult)
        ))
        assert is_unitary_module_map(phased, 1e-12)

    def test_nonsquare_block_fails(self):
        A = algebra((2, 1))
        X = module(A, (1, 2))
        Y = module(A, (2, 2))
        bad = module_map(X, Y, (np.zeros((2, 1)), np.eye(2)))
        assert not is_unitary_module_map(bad, 1e-9)

    def test_unitary_preserves_inner_products(self, setup):
        A, X, rng = setup
        U = module_map(X, X, tuple(rng.unitary(m) for m in X.mult))
        assert is_unitary_module_map(U, 1e-12)
        x, y = rand_vector(rng, X), rand_vector(rng, X)
        lhs = inner_product(apply_map(U, x), apply_map(U, y))
        assert (lhs - inner_product(x, y)).norm() < 1e-12


class TestModuleMapFromLinear:
    def test_scalar_recovered(self, setup):
        A, X, _ = setup
        rec = module_map_from_linear(lambda v: 2.0 * v, X, X)
        for b, m in zip(rec.blocks, X.mult):
            assert np.allclose(b, 2.0 * np.eye(m))

    def test_left_multiplication_round_trip(self, setup):
        A, X, rng = setup
        Y = module(A, (2, 2, 1))
        T = rand_map(rng, X, Y)
        rec = module_map_from_linear(lambda v: apply_map(T, v), X, Y)
        assert map_norm(rec - T) < 1e-12

    def test_right_multiplication_rejected(self, setup):
        # right multiplication by a non-central element is not left multiplication
        A, X, rng = setup
        a = rand_alg(rng, A)

        with pytest.raises(NotAModuleMapError) as err:
            module_map_from_linear(lambda v: right_act(v, a), X, X)
        assert err.value.residual > 1e-3

    def test_succeeds_iff_commutes_with_right_action(self):
        # brute force over random linear maps on a small module
        A = algebra((2, 2))
        X = module(A, (2, 1))
        rng = Rng(77)
        d = X.dim
        hits = 0
        for trial in range(12):
            L = rng.gauss_matrix(d, d)

            def act(v, L=L):
                return from_coords(X, L @ coords(v))

            commutes = True
            for _, _, _, unit in A.matrix_units():
                for x in X.basis_vectors():
                    lhs = act(right_act(x, unit))
                    rhs = right_act(act(x), unit)
                    if vec_norm(lhs - rhs) > 1e-9:
                        commutes = False
                        break
                if not commutes:
                    break
            try:
                module_map_from_linear(act, X, X)
                ok = True
            except NotAModuleMapError:
                ok = False
            assert ok == commutes
            hits += ok
        assert hits == 0  # random dense maps essentially never commute

    def test_coords_round_trip(self, setup):
        A, X, rng = setup
        x = rand_vector(rng, X)
        assert vec_norm(from_coords(X, coords(x)) - x) == 0.0
