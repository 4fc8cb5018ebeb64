import numpy as np
import pytest

from modglue import gen, numlin, tensor
from modglue.cstar import AlgebraElement, algebra, cover, restrict_algebra, sum_algebra
from modglue.errors import InvalidInputError
from modglue.gen import GenConfig
from modglue.glue import glue, pull_apart
from modglue.hmod import (
    ModuleVector,
    coords,
    inner_product,
    module,
    restrict_module,
    restrict_vector,
    vec_norm,
)
from modglue.rng import Rng


@pytest.fixture
def coherent_datum():
    cfg = GenConfig(seed=41, max_blocks=3, max_block_dim=2, max_cover_sets=3,
                    max_mult=2, twist_mode="coherent")
    return gen.random_gluing_instance(cfg).datum


@pytest.fixture
def twisted_datum():
    # guaranteed essential triple overlap on a single block
    A = algebra((1,))
    cov = cover(1, [{0}, {0}, {0}])
    Z = module(restrict_algebra(A, {0}), (1,))
    from modglue.glue import make_gluing_datum

    entries = [(0, 1, 0, np.eye(1)), (1, 2, 0, np.eye(1)), (0, 2, 0, -np.eye(1))]
    return make_gluing_datum(A, cov, (Z, Z, Z), entries)


def rand_family(rng, D):
    return tuple(gen.random_vector(rng, m) for m in D.modules)


class TestEtaMap:
    def test_single_set_cover_is_identity(self):
        X = module(algebra((2, 2)), (1, 2))
        cov = cover(2, [{0, 1}])
        x = gen.random_vector(Rng(1), X)
        parts = tensor.eta_map(x, cov)
        assert len(parts) == 1
        assert vec_norm(parts[0] - restrict_vector(x, {0, 1})) == 0.0

    def test_isometric_on_random_vectors(self, coherent_datum):
        D = coherent_datum
        model = tensor.pair_model(D)
        rng = Rng(2)
        for _ in range(200):
            z = rand_family(rng, D)
            t = tensor.eta_map(z, model)
            assert abs(tensor.pair_norm(t) - tensor.family_norm(z)) <= 1e-9

    def test_amplified_isometry_level_two(self, coherent_datum):
        D = coherent_datum
        model = tensor.pair_model(D)
        rng = Rng(3)
        zs = [rand_family(rng, D) for _ in range(4)]
        grid = [[zs[0], zs[1]], [zs[2], zs[3]]]
        tgrid = [[tensor.eta_map(zs[0], model), tensor.eta_map(zs[1], model)],
                 [tensor.eta_map(zs[2], model), tensor.eta_map(zs[3], model)]]
        assert abs(
            tensor.pair_norm_amp2(tgrid) - tensor.family_norm_amp2(grid)
        ) <= 1e-9


class TestPhiEmbed:
    def test_mu_projections(self, coherent_datum):
        D = coherent_datum
        model = tensor.pair_model(D)
        if not model.entries:
            pytest.skip("degenerate")
        (i, j) = model.entries[0]
        space = model.space(i, j)
        v = gen.random_vector(Rng(4), space)
        t = tensor.phi_embed(model, i, j, v)
        assert vec_norm(t.comp(i, j) - v) == 0.0
        for (p, q) in model.entries:
            if (p, q) != (i, j):
                assert vec_norm(t.comp(p, q)) == 0.0

    def test_phi_isometric_levels_one_and_two(self, coherent_datum):
        D = coherent_datum
        model = tensor.pair_model(D)
        if not model.entries:
            pytest.skip("degenerate")
        (i, j) = model.entries[-1]
        space = model.space(i, j)
        rng = Rng(16)
        vs = [gen.random_vector(rng, space) for _ in range(4)]
        for v in vs:
            assert abs(
                tensor.pair_norm(tensor.phi_embed(model, i, j, v)) - vec_norm(v)
            ) <= 1e-12
        grid = [[vs[0], vs[1]], [vs[2], vs[3]]]
        tgrid = [[tensor.phi_embed(model, i, j, v) for v in row] for row in grid]
        vnorm = max(
            tensor._amp2_block_norm(
                [[grid[r][c].blocks[b] for c in range(2)] for r in range(2)]
            )
            for b in range(len(vs[0].blocks))
        ) if vs[0].blocks else 0.0
        assert abs(tensor.pair_norm_amp2(tgrid) - vnorm) <= 1e-12

    def test_epsilon_of_phi(self, coherent_datum):
        # diagonal placement comes back; off-diagonal is annihilated
        D = coherent_datum
        model = tensor.pair_model(D)
        for (i, j) in model.entries:
            v = gen.random_vector(Rng(5), model.space(i, j))
            parts = tensor.epsilon_map(tensor.phi_embed(model, i, j, v))
            if i == j:
                assert vec_norm(parts[i] - v) == 0.0
            else:
                assert tensor.family_norm(parts) == 0.0


class TestDeltaMap:
    def test_trivial_datum_gives_eta(self):
        X = module(algebra((2, 1)), (2, 1))
        cov = cover(2, [{0, 1}, {0}])
        D = pull_apart(X, cov)
        model = tensor.pair_model(D)
        z = tuple(gen.random_vector(Rng(6), m) for m in D.modules)
        diff = tensor.delta_map(D, z) - tensor.eta_map(z, model)
        assert tensor.pair_norm(diff) == 0.0

    def test_isometric_for_unitary_transitions(self, coherent_datum):
        D = coherent_datum
        rng = Rng(7)
        for _ in range(50):
            z = rand_family(rng, D)
            t = tensor.delta_map(D, z)
            assert abs(tensor.pair_norm(t) - tensor.family_norm(z)) <= 1e-9

    def test_counit_identity(self, coherent_datum):
        D = coherent_datum
        rng = Rng(8)
        for _ in range(20):
            z = rand_family(rng, D)
            back = tensor.epsilon_map(tensor.delta_map(D, z))
            assert tensor.family_norm(tuple(a - b for a, b in zip(back, z))) <= 1e-12

    def test_b_linearity(self, coherent_datum):
        D = coherent_datum
        B = sum_algebra(D.algebra, D.cover)
        rng = Rng(9)
        z = rand_family(rng, D)
        b = AlgebraElement(B.flat, tuple(rng.gauss_matrix(n, n) for n in B.flat.block_dims))
        lhs = tensor.delta_map(D, tensor.family_right_act(z, b, B))
        rhs = tensor.pair_right_act(tensor.delta_map(D, z), b)
        assert tensor.pair_norm(lhs - rhs) <= 1e-12


class TestLiftToTriple:
    def test_single_set_cover_all_kinds_agree(self):
        X = module(algebra((2,)), (2,))
        cov = cover(1, [{0}])
        D = pull_apart(X, cov)
        model = tensor.pair_model(D)
        z = tuple(gen.random_vector(Rng(10), m) for m in D.modules)
        t = tensor.eta_map(z, model)
        lifts = [tensor.lift_to_triple(kind, D, t) for kind in
                 ("eta_tensor_id", "id_tensor_etaB", "delta_tensor_id")]
        for a in lifts[1:]:
            assert tensor.triple_norm(
                tensor.TripleTensorVector(a.model, tuple(
                    x - y for x, y in zip(a.comps, lifts[0].comps)
                ))
            ) == 0.0

    def test_coassociativity_on_coherent_data(self, coherent_datum):
        D = coherent_datum
        rng = Rng(11)
        for _ in range(10):
            z = rand_family(rng, D)
            t = tensor.delta_map(D, z)
            lhs = tensor.lift_to_triple("delta_tensor_id", D, t)
            rhs = tensor.lift_to_triple("eta_tensor_id", D, t)
            assert tensor.triple_norm(lhs - rhs) <= 1e-12

    def test_unknown_kind_rejected(self, coherent_datum):
        model = tensor.pair_model(coherent_datum)
        with pytest.raises(InvalidInputError):
            tensor.lift_to_triple("bogus", coherent_datum, model.zero())

    def test_pair_level_image_eta_dimension(self, twisted_datum):
        # ker(eta (x) id - id (x) eta_B) at the pair level has dim Z
        D = twisted_datum
        model = tensor.pair_model(D)
        tm = tensor.triple_model(D)
        pair_l = tensor._pair_layout(model)
        trip_l = tensor._triple_layout(tm)
        M_eta = np.zeros((trip_l.dim, pair_l.dim), dtype=np.complex128)
        M_idb = np.zeros((trip_l.dim, pair_l.dim), dtype=np.complex128)
        for (i, j, l) in tm.entries:
            for k in sorted(tm.cover.overlap(i, j, l)):
                m = pair_l.shapes[((i, l), k)][0]
                trip_l.place(M_eta, ((i, j, l), k), pair_l, ((i, l), k), np.eye(m))
                trip_l.place(M_idb, ((i, j, l), k), pair_l, ((i, j), k), np.eye(m))
        fam_dim = sum(m.dim for m in D.modules)
        assert numlin.kernel_basis(M_eta - M_idb).shape[1] == fam_dim


class TestGenericBalancedTensor:
    def test_x_tensor_own_algebra_recovers_x(self):
        A = algebra((2, 1))
        X = module(A, (1, 2))
        gbt = tensor.generic_balanced_tensor(
            [tensor.module_factor(X), tensor.algebra_summand_factor(A, {0, 1})]
        )
        assert gbt.dim == X.dim

    def test_matrix_multiplication_model_dimension(self):
        # C^{2x1} (x)_{M_1} C^{1x3} has dimension 6
        M1 = algebra((1,))
        left = module(M1, (2,))

        def left_mat(a):
            return a.blocks[0][0, 0] * np.eye(3)

        right = tensor.TensorFactor(3, left_algebra=M1, left_mat=left_mat)
        gbt = tensor.generic_balanced_tensor([tensor.module_factor(left), right])
        assert gbt.plain_dim == 6 and gbt.dim == 6

    def test_relation_rank_plus_quotient_is_plain(self):
        A = algebra((2,))
        X = module(A, (2,))
        cov = cover(1, [{0}, {0}])
        gbt = tensor.generic_balanced_tensor(
            [tensor.module_factor(X), tensor.b_factor(A, cov)]
        )
        assert gbt.relation_rank + gbt.dim == gbt.plain_dim

    def test_mismatched_middles_rejected(self):
        A, B = algebra((2,)), algebra((3,))
        with pytest.raises(InvalidInputError):
            tensor.generic_balanced_tensor(
                [tensor.module_factor(module(A, (1,))),
                 tensor.algebra_summand_factor(B, {0})]
            )


class TestPsiNu:
    def test_psi_single_set_is_reshaping(self):
        A = algebra((2, 1))
        X = module(A, (1, 1))
        cov = cover(2, [{0, 1}])
        psi = tensor.psi_iso(X, cov)
        B = sum_algebra(A, cov)
        x = gen.random_vector(Rng(12), X)
        parts = psi.apply(x, B.flat.identity())
        assert vec_norm(parts[0] - restrict_vector(x, {0, 1})) == 0.0

    def test_psi_dimension_count(self):
        A = algebra((2, 1, 3))
        X = module(A, (1, 2, 2))
        cov = cover(3, [{0, 1}, {1, 2}])
        psi = tensor.psi_iso(X, cov)
        expected = sum(
            X.mult[k] * A.block_dims[k] for F in cov.sets for k in sorted(F)
        )
        assert sum(m.dim for m in psi.summands) == expected

    def test_psi_oracle(self):
        A = algebra((2, 1))
        X = module(A, (1, 2))
        cov = cover(2, [{0, 1}, {1}])
        rep = tensor.psi_oracle_check(X, cov)
        assert rep.passed

    def test_nu_same_set_recovers_module(self):
        A = algebra((2, 2))
        Y = module(restrict_algebra(A, {0, 1}), (1, 2))
        nu = tensor.nu_iso(Y, A, {0, 1})
        assert nu.target.mult == Y.mult
        rep = tensor.nu_oracle_check(Y, A, {0, 1})
        assert rep.passed and rep.oracle_dim == Y.dim

    def test_nu_disjoint_sets_give_zero(self):
        A = algebra((2, 2))
        Y = module(restrict_algebra(A, {0}), (2,))
        nu = tensor.nu_iso(Y, A, {1})
        assert nu.target.dim == 0
        rep = tensor.nu_oracle_check(Y, A, {1})
        assert rep.passed and rep.oracle_dim == 0

    def test_nu_round_trip(self):
        A = algebra((2, 1))
        Y = module(restrict_algebra(A, {0, 1}), (2, 1))
        nu = tensor.nu_iso(Y, A, {1})
        v = gen.random_vector(Rng(13), nu.target)
        y, a = nu.inverse(v)
        assert vec_norm(nu.apply(y, a) - v) < 1e-12

    def test_nu_dimension_matches_oracle(self):
        A = algebra((2, 1, 2))
        Y = module(restrict_algebra(A, {0, 1}), (1, 2))
        rep = tensor.nu_oracle_check(Y, A, {1, 2})
        expected = sum(
            Y.mult[Y.algebra.position(k)] * A.block_dims[k] for k in {1}
        )
        assert rep.oracle_dim == rep.model_dim == expected


class TestGluedTensorImage:
    def test_inclusion_into_pair_model_is_isometric(self, coherent_datum):
        # the induced map of the glued submodule's tensor square into the
        # pair model preserves the direct-sum Hilbert norms
        D = coherent_datum
        gd = glue(D)
        model = tensor.pair_model(D)
        summands = tuple(
            restrict_module(gd.module, F) for F in D.cover.sets
        )
        rng = Rng(14)
        for _ in range(10):
            gs = tuple(gen.random_vector(rng, m) for m in summands)
            comps = []
            for (i, l), space in zip(model.entries, model.spaces):
                blocks = []
                for k in space.algebra.labels:
                    E = gd.stacked_basis[k]
                    c = gd.member_count(k)
                    ofs = {ii: o for (ii, o, _) in gd.layout[k]}[i]
                    m_i = D.mult_at(i, k)
                    W_i = np.sqrt(c) * E[ofs:ofs + m_i, :]
                    blocks.append(W_i @ gs[l].block(k))
                comps.append(ModuleVector(space, tuple(blocks)))
            t = tensor.PairTensorVector(model, tuple(comps))
            assert abs(tensor.pair_norm(t) - tensor.family_norm(gs)) <= 1e-9

    def test_epsilon_preserves_inner_products_on_glued_image(self, coherent_datum):
        # <eps(x)|eps(y)>_B = <x|y>_B for x, y in the image of (glued (x) B)
        from modglue.glue import family_inner

        D = coherent_datum
        gd = glue(D)
        model = tensor.pair_model(D)
        B = sum_algebra(D.algebra, D.cover)
        rng = Rng(15)
        for _ in range(5):
            g1 = gen.random_vector(rng, gd.module)
            g2 = gen.random_vector(rng, gd.module)
            b1 = AlgebraElement(B.flat, tuple(
                rng.gauss_matrix(n, n) for n in B.flat.block_dims
            ))
            b2 = AlgebraElement(B.flat, tuple(
                rng.gauss_matrix(n, n) for n in B.flat.block_dims
            ))
            x = tensor.pair_from_family_and_b(model, gd.embed(g1), b1)
            y = tensor.pair_from_family_and_b(model, gd.embed(g2), b2)
            lhs = family_inner(
                tensor.epsilon_map(x), tensor.epsilon_map(y), D.algebra, D.cover
            )
            # Hilbert B-module inner product of glued (x) B on elementary
            # tensors: b* eta(<g1|g2>) b'
            ip = inner_product(g1, g2)
            eta_ip = AlgebraElement(
                B.flat, tuple(ip.block(k) for (_, k) in B.flat.labels)
            )
            rhs = b1.adjoint() * eta_ip * b2
            assert (lhs - rhs).norm() <= 1e-9


class TestModelOracles:
    def test_pair_model_agrees(self, coherent_datum):
        rep = tensor.pair_model_oracle_check(coherent_datum, trials=3)
        assert rep.passed

    def test_pair_model_agrees_twisted(self, twisted_datum):
        rep = tensor.pair_model_oracle_check(twisted_datum, trials=3)
        assert rep.passed

    def test_triple_model_agrees(self, twisted_datum):
        rep = tensor.triple_model_oracle_check(twisted_datum, trials=2)
        assert rep.passed

    def test_point_separation(self, coherent_datum):
        # the joint kernel of all pair projections is zero by construction:
        # components are the coordinates themselves
        model = tensor.pair_model(coherent_datum)
        t = model.zero()
        assert tensor.pair_norm(t) == 0.0
        u = tensor.pair_coords(t)
        assert u.size == model.dim
