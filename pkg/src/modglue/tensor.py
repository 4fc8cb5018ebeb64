"""Finite models of the balanced tensor products used by the gluing theory,
their structural maps, and a brute-force balanced-quotient oracle.

For a family Z = (Z_i) over the restrictions A|F_i, the tensor square with
the sum algebra B is modelled by components indexed by ordered pairs (i, j)
with nonempty overlap: the component of an elementary tensor z (x) b at (i, j)
is z_i|F_ij * b_j|F_ij.  The cube gets ordered triples.  These projections
separate points, so the models are definitional; the independent oracle is a
generic quotient of the plain coordinate tensor space by the span of the
balancing relations, built from nothing but action matrices and an SVD.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numlin
from .cstar import (
    AlgebraElement,
    ClosedCover,
    FdCStarAlgebra,
    restrict_algebra,
    restrict_element,
    sum_algebra,
)
from .errors import InvalidInputError
from .hmod import (
    HilbertModule,
    ModuleVector,
    coords,
    from_coords,
    inner_product,
    restrict_module,
    restrict_vector,
    right_act,
    vec_norm,
)

# ---------------------------------------------------------------------------
# Pair and triple models


@dataclass(eq=False)
class PairTensorModel:
    """Component spaces Z_i|F_ij for ordered pairs with nonempty overlap."""

    cover: ClosedCover
    modules: tuple  # Z_i over A|F_i

    def __post_init__(self):
        self.entries = tuple(self.cover.pairs(include_diagonal=True))
        self.spaces = tuple(
            restrict_module(self.modules[i], self.cover.overlap(i, j))
            for (i, j) in self.entries
        )
        dims = [s.dim for s in self.spaces]
        self.offsets = np.concatenate([[0], np.cumsum(dims)]).astype(int)
        self.dim = int(self.offsets[-1])

    def zero(self) -> "PairTensorVector":
        return PairTensorVector(self, tuple(s.zero_vector() for s in self.spaces))

    def space(self, i: int, j: int) -> HilbertModule:
        return self.spaces[self.entries.index((i, j))]


@dataclass(eq=False)
class PairTensorVector:
    model: PairTensorModel
    comps: tuple  # ModuleVector per entry, aligned with model.entries

    def comp(self, i: int, j: int) -> ModuleVector:
        return self.comps[self.model.entries.index((i, j))]

    def __add__(self, other):
        return PairTensorVector(
            self.model, tuple(a + b for a, b in zip(self.comps, other.comps))
        )

    def __sub__(self, other):
        return PairTensorVector(
            self.model, tuple(a - b for a, b in zip(self.comps, other.comps))
        )

    def __rmul__(self, scalar):
        return PairTensorVector(self.model, tuple(scalar * c for c in self.comps))


@dataclass(eq=False)
class TripleTensorModel:
    """Component spaces Z_i|F_ijl for ordered triples with nonempty overlap."""

    cover: ClosedCover
    modules: tuple

    def __post_init__(self):
        self.entries = tuple(self.cover.triples())
        self.spaces = tuple(
            restrict_module(self.modules[i], self.cover.overlap(i, j, l))
            for (i, j, l) in self.entries
        )
        dims = [s.dim for s in self.spaces]
        self.offsets = np.concatenate([[0], np.cumsum(dims)]).astype(int)
        self.dim = int(self.offsets[-1])

    def zero(self) -> "TripleTensorVector":
        return TripleTensorVector(self, tuple(s.zero_vector() for s in self.spaces))


@dataclass(eq=False)
class TripleTensorVector:
    model: TripleTensorModel
    comps: tuple

    def comp(self, i, j, l) -> ModuleVector:
        return self.comps[self.model.entries.index((i, j, l))]

    def __sub__(self, other):
        return TripleTensorVector(
            self.model, tuple(a - b for a, b in zip(self.comps, other.comps))
        )


def pair_model(datum_or_cover, modules=None) -> PairTensorModel:
    """Build the pair model from a gluing datum or from (cover, modules)."""
    if modules is None:
        return PairTensorModel(datum_or_cover.cover, tuple(datum_or_cover.modules))
    return PairTensorModel(datum_or_cover, tuple(modules))


def triple_model(datum_or_cover, modules=None) -> TripleTensorModel:
    if modules is None:
        return TripleTensorModel(datum_or_cover.cover, tuple(datum_or_cover.modules))
    return TripleTensorModel(datum_or_cover, tuple(modules))


# ---------------------------------------------------------------------------
# Norms (levels 1 and 2)


def family_norm(parts) -> float:
    return max((vec_norm(p) for p in parts), default=0.0)


def pair_norm(t: PairTensorVector) -> float:
    return max((vec_norm(c) for c in t.comps), default=0.0)


def triple_norm(t: TripleTensorVector) -> float:
    return max((vec_norm(c) for c in t.comps), default=0.0)


def _amp2_block_norm(blocks_grid) -> float:
    """Operator norm of the 2x2 block matrix assembled from four equal shapes."""
    return numlin.op_norm(
        np.block([[blocks_grid[0][0], blocks_grid[0][1]],
                  [blocks_grid[1][0], blocks_grid[1][1]]])
    )


def family_norm_amp2(grid) -> float:
    """Amplified norm of a 2x2 grid of family vectors (same family shape)."""
    worst = 0.0
    nparts = len(grid[0][0])
    for p in range(nparts):
        nblocks = len(grid[0][0][p].blocks)
        for b in range(nblocks):
            worst = max(
                worst,
                _amp2_block_norm(
                    [[grid[r][c][p].blocks[b] for c in range(2)] for r in range(2)]
                ),
            )
    return worst


def pair_norm_amp2(grid) -> float:
    """Amplified norm of a 2x2 grid of pair-model vectors."""
    worst = 0.0
    ncomps = len(grid[0][0].comps)
    for e in range(ncomps):
        nblocks = len(grid[0][0].comps[e].blocks)
        for b in range(nblocks):
            worst = max(
                worst,
                _amp2_block_norm(
                    [[grid[r][c].comps[e].blocks[b] for c in range(2)] for r in range(2)]
                ),
            )
    return worst


# ---------------------------------------------------------------------------
# Structural maps


def eta_map(arg, ctx):
    """The unit map x |-> x (x) 1 in model coordinates.

    For a module vector over A with a cover: returns the restriction family
    (x|F_i)_i.  For a family over the per-set modules with a pair model:
    returns the pair vector with component (i, j) equal to z_i|F_ij.
    """
    if isinstance(arg, ModuleVector) and isinstance(ctx, ClosedCover):
        return tuple(restrict_vector(arg, F) for F in ctx.sets)
    if isinstance(ctx, PairTensorModel):
        parts = tuple(arg)
        comps = []
        for (i, j), space in zip(ctx.entries, ctx.spaces):
            comps.append(restrict_vector(parts[i], ctx.cover.overlap(i, j)))
        return PairTensorVector(ctx, tuple(comps))
    raise InvalidInputError("eta_map expects (vector, cover) or (family, pair model)")


def phi_embed(model: PairTensorModel, i: int, j: int, v: ModuleVector) -> PairTensorVector:
    """Place a vector of Z_i|F_ij at component (i, j), zero elsewhere."""
    t = model.zero()
    idx = model.entries.index((i, j))
    space = model.spaces[idx]
    if v.module.mult != space.mult or v.module.algebra.labels != space.algebra.labels:
        raise InvalidInputError("vector does not live in Z_i restricted to the overlap")
    comps = list(t.comps)
    comps[idx] = v
    return PairTensorVector(model, tuple(comps))


def delta_map(datum, parts) -> PairTensorVector:
    """Component (i, j) = zeta_ij(z_j|F_ij); the comultiplication of the datum."""
    model = pair_model(datum)
    comps = []
    for (i, j), space in zip(model.entries, model.spaces):
        zj = restrict_vector(parts[j], model.cover.overlap(i, j))
        blocks = tuple(
            datum.zeta_block(i, j, k) @ zj.block(k)
            for k in space.algebra.labels
        )
        comps.append(ModuleVector(space, blocks))
    return PairTensorVector(model, tuple(comps))


def epsilon_map(t: PairTensorVector):
    """Diagonal extraction: component i of the output is t_(i,i)."""
    model = t.model
    parts = []
    for i, Z in enumerate(model.modules):
        if (i, i) not in model.entries:  # empty cover set: Z_i is zero
            parts.append(Z.zero_vector())
            continue
        d = t.comp(i, i)
        parts.append(ModuleVector(Z, tuple(d.block(k) for k in Z.algebra.labels)))
    return tuple(parts)


_TRIPLE_KINDS = ("eta_tensor_id", "id_tensor_etaB", "delta_tensor_id")


def lift_to_triple(kind: str, datum, t: PairTensorVector) -> TripleTensorVector:
    """One-leg amplifications of eta and delta from the pair to the triple model."""
    if kind not in _TRIPLE_KINDS:
        raise InvalidInputError(f"unknown lift kind {kind!r}; expected one of {_TRIPLE_KINDS}")
    tm = triple_model(datum)
    comps = []
    for (i, j, l), space in zip(tm.entries, tm.spaces):
        F = tm.cover.overlap(i, j, l)
        if kind == "eta_tensor_id":
            v = restrict_vector(t.comp(i, l), F)
        elif kind == "id_tensor_etaB":
            v = restrict_vector(t.comp(i, j), F)
        else:
            w = restrict_vector(t.comp(j, l), F)
            v = ModuleVector(
                space,
                tuple(datum.zeta_block(i, j, k) @ w.block(k) for k in space.algebra.labels),
            )
        comps.append(ModuleVector(space, tuple(v.block(k) for k in space.algebra.labels)))
    return TripleTensorVector(tm, tuple(comps))


def pair_right_act(t: PairTensorVector, b: AlgebraElement) -> PairTensorVector:
    """Right B-action on the pair model: component (i, j) acted on by b_j|F_ij."""
    comps = []
    for (i, j), c in zip(t.model.entries, t.comps):
        F = t.model.cover.overlap(i, j)
        bj = AlgebraElement(
            restrict_algebra_from_b(b, j),
            tuple(b.block((j, k)) for k in sorted_labels_of_b(b, j)),
        )
        comps.append(right_act(c, restrict_element(bj, F)))
    return PairTensorVector(t.model, tuple(comps))


def restrict_algebra_from_b(b: AlgebraElement, j: int) -> FdCStarAlgebra:
    labels = sorted_labels_of_b(b, j)
    dims = tuple(b.algebra.block_dims[b.algebra.position((j, k))] for k in labels)
    return FdCStarAlgebra(dims, labels)


def sorted_labels_of_b(b: AlgebraElement, j: int) -> tuple:
    return tuple(k for (i, k) in b.algebra.labels if i == j)


def pair_from_family_and_b(model: PairTensorModel, parts, b: AlgebraElement) -> PairTensorVector:
    """Model vector of the elementary tensor z (x) b for z given as a family."""
    return pair_right_act(eta_map(parts, model), b)


def family_right_act(parts, b: AlgebraElement, B) -> tuple:
    """Right action of a sum-algebra element on a family: z_i acted by b_i."""
    return tuple(
        right_act(p, B.component(b, i)) for i, p in enumerate(parts)
    )


# ---------------------------------------------------------------------------
# Coordinates and matrices of the structural maps


def family_coords(parts) -> np.ndarray:
    arrs = [coords(p) for p in parts]
    return np.concatenate(arrs) if arrs else np.zeros(0, dtype=np.complex128)


def family_from_coords(modules, u) -> tuple:
    u = np.asarray(u, dtype=np.complex128).reshape(-1)
    parts, ofs = [], 0
    for mod in modules:
        parts.append(from_coords(mod, u[ofs:ofs + mod.dim]))
        ofs += mod.dim
    return tuple(parts)


def pair_coords(t: PairTensorVector) -> np.ndarray:
    arrs = [coords(c) for c in t.comps]
    return np.concatenate(arrs) if arrs else np.zeros(0, dtype=np.complex128)


def pair_from_coords(model: PairTensorModel, u) -> PairTensorVector:
    u = np.asarray(u, dtype=np.complex128).reshape(-1)
    comps = []
    for space, ofs in zip(model.spaces, model.offsets):
        comps.append(from_coords(space, u[ofs:ofs + space.dim]))
    return PairTensorVector(model, tuple(comps))


def triple_coords(t: TripleTensorVector) -> np.ndarray:
    arrs = [coords(c) for c in t.comps]
    return np.concatenate(arrs) if arrs else np.zeros(0, dtype=np.complex128)


def _matrix_of(fn, dom_dim: int, cod_dim: int) -> np.ndarray:
    M = np.zeros((cod_dim, dom_dim), dtype=np.complex128)
    for s in range(dom_dim):
        e = np.zeros(dom_dim, dtype=np.complex128)
        e[s] = 1.0
        M[:, s] = fn(e)
    return M


class _Layout:
    """Offset table for flat coordinates split into keyed (rows x cols) slots."""

    def __init__(self, slots):
        self.offsets = {}
        self.shapes = {}
        ofs = 0
        for key, m, n in slots:
            self.offsets[key] = ofs
            self.shapes[key] = (m, n)
            ofs += m * n
        self.dim = ofs

    def place(self, M: np.ndarray, out_key, in_layout: "_Layout", in_key, T: np.ndarray):
        """Add kron(T, I_n) mapping the in slot to the out slot of matrix M."""
        ro = self.offsets[out_key]
        co = in_layout.offsets[in_key]
        n = self.shapes[out_key][1]
        blk = np.kron(T, np.eye(n))
        M[ro:ro + blk.shape[0], co:co + blk.shape[1]] += blk


def _family_layout(modules) -> _Layout:
    slots = []
    for i, mod in enumerate(modules):
        for lab, m, n in zip(mod.algebra.labels, mod.mult, mod.algebra.block_dims):
            slots.append(((i, lab), m, n))
    return _Layout(slots)


def _pair_layout(model: PairTensorModel) -> _Layout:
    slots = []
    for (i, j), space in zip(model.entries, model.spaces):
        for lab, m, n in zip(space.algebra.labels, space.mult, space.algebra.block_dims):
            slots.append((((i, j), lab), m, n))
    return _Layout(slots)


def _triple_layout(tm: TripleTensorModel) -> _Layout:
    slots = []
    for (i, j, l), space in zip(tm.entries, tm.spaces):
        for lab, m, n in zip(space.algebra.labels, space.mult, space.algebra.block_dims):
            slots.append((((i, j, l), lab), m, n))
    return _Layout(slots)


def eta_matrix(datum) -> np.ndarray:
    """Matrix of eta: family coordinates -> pair coordinates."""
    model = pair_model(datum)
    fam = _family_layout(model.modules)
    pair = _pair_layout(model)
    M = np.zeros((pair.dim, fam.dim), dtype=np.complex128)
    for (i, j) in model.entries:
        for k in sorted(model.cover.overlap(i, j)):
            m = fam.shapes[(i, k)][0]
            pair.place(M, ((i, j), k), fam, (i, k), np.eye(m))
    return M


def delta_matrix(datum) -> np.ndarray:
    model = pair_model(datum)
    fam = _family_layout(model.modules)
    pair = _pair_layout(model)
    M = np.zeros((pair.dim, fam.dim), dtype=np.complex128)
    for (i, j) in model.entries:
        for k in sorted(model.cover.overlap(i, j)):
            pair.place(M, ((i, j), k), fam, (j, k), datum.zeta_block(i, j, k))
    return M


def eta_minus_delta_matrix(datum) -> np.ndarray:
    return eta_matrix(datum) - delta_matrix(datum)


def eta_minus_delta_tensor_id_matrix(datum) -> np.ndarray:
    """Matrix of (eta - delta) (x) id: pair coordinates -> triple coordinates."""
    model = pair_model(datum)
    tm = triple_model(datum)
    pair = _pair_layout(model)
    trip = _triple_layout(tm)
    M = np.zeros((trip.dim, pair.dim), dtype=np.complex128)
    for (i, j, l) in tm.entries:
        for k in sorted(tm.cover.overlap(i, j, l)):
            m = pair.shapes[((i, l), k)][0]
            trip.place(M, ((i, j, l), k), pair, ((i, l), k), np.eye(m))
            trip.place(M, ((i, j, l), k), pair, ((j, l), k), -datum.zeta_block(i, j, k))
    return M


def image_eta_matrices(X: HilbertModule, cover: ClosedCover):
    """The two maps of the image-of-the-unit identity, at the family level.

    Returns (M_unit, M_eta_id, M_id_etaB): the matrix of x |-> (x|F_i)_i from
    module coordinates to family coordinates, and the two maps from family
    coordinates to pair coordinates whose difference has the unit's image as
    kernel: component (i, j) equal to t_j|F_ij, resp. t_i|F_ij.
    """
    modules = tuple(restrict_module(X, F) for F in cover.sets)
    model = PairTensorModel(cover, modules)
    fam = _family_layout(modules)
    pair = _pair_layout(model)

    mod_layout = _Layout(
        [((0, lab), m, n)
         for lab, m, n in zip(X.algebra.labels, X.mult, X.algebra.block_dims)]
    )
    M_unit = np.zeros((fam.dim, mod_layout.dim), dtype=np.complex128)
    for i in range(cover.num_sets):
        for k in sorted(cover.sets[i]):
            m = mod_layout.shapes[(0, k)][0]
            fam.place(M_unit, (i, k), mod_layout, (0, k), np.eye(m))

    M_eta_id = np.zeros((pair.dim, fam.dim), dtype=np.complex128)
    M_id_etaB = np.zeros((pair.dim, fam.dim), dtype=np.complex128)
    for (i, j) in model.entries:
        for k in sorted(cover.overlap(i, j)):
            m = fam.shapes[(i, k)][0]
            pair.place(M_eta_id, ((i, j), k), fam, (j, k), np.eye(m))
            pair.place(M_id_etaB, ((i, j), k), fam, (i, k), np.eye(m))
    return M_unit, M_eta_id, M_id_etaB


def glued_tensor_subspace_basis(glued) -> np.ndarray:
    """Orthonormal basis, in pair coordinates, of the image of (glued (x) B).

    The sum over l of the restrictions G|F_l maps into the pair model by
    sending the l-th summand to the components (i, l) through the embedding;
    this realizes the tensor square of the glued module inside that of Z.
    """
    D = glued.datum
    model = pair_model(D)
    pair = _pair_layout(model)
    summands = tuple(restrict_module(glued.module, F) for F in D.cover.sets)
    dom = _family_layout(summands)
    M = np.zeros((pair.dim, dom.dim), dtype=np.complex128)
    for (i, l) in model.entries:
        for k in sorted(D.cover.overlap(i, l)):
            E = glued.stacked_basis[k]
            c = glued.member_count(k)
            ofs = {ii: o for (ii, o, _) in glued.layout[k]}[i]
            m_i = D.mult_at(i, k)
            W_i = np.sqrt(c) * E[ofs:ofs + m_i, :]
            pair.place(M, ((i, l), k), dom, (l, k), W_i)
    return numlin.orth_basis(M)


# ---------------------------------------------------------------------------
# Psi and nu evaluators


@dataclass(eq=False)
class PsiIso:
    """Evaluator for the unitary X (x) B ~ direct sum of the restrictions."""

    module: HilbertModule
    cover: ClosedCover
    summands: tuple  # X|F_i

    def apply(self, x: ModuleVector, b: AlgebraElement):
        """Image of the elementary tensor x (x) b: the family (x|F_i * b_i)."""
        parts = []
        for i, F in enumerate(self.cover.sets):
            xi = restrict_vector(x, F)
            bi = AlgebraElement(
                xi.module.algebra, tuple(b.block((i, k)) for k in xi.module.algebra.labels)
            )
            parts.append(right_act(xi, bi))
        return tuple(parts)


def psi_iso(X: HilbertModule, cover: ClosedCover) -> PsiIso:
    if cover.prim_size != X.algebra.num_blocks:
        raise InvalidInputError("cover does not match module algebra")
    return PsiIso(X, cover, tuple(restrict_module(X, F) for F in cover.sets))


@dataclass(eq=False)
class NuIso:
    """Evaluator for Y (x) A|F_j ~ Y|F_ij and its inverse, Y over A|F_i."""

    source: HilbertModule  # Y
    summand_j: FdCStarAlgebra  # A|F_j
    target: HilbertModule  # Y|F_ij

    def apply(self, y: ModuleVector, a: AlgebraElement) -> ModuleVector:
        """y (x) a |-> y|F_ij * a|F_ij."""
        F = frozenset(self.target.algebra.labels)
        return right_act(restrict_vector(y, F), restrict_element(a, F))

    def inverse(self, v: ModuleVector):
        """A representative (y, a) with nu(y (x) a) = v: zero-padded lift and unit."""
        y = self.source.zero_vector()
        for k in self.target.algebra.labels:
            y.blocks[self.source.algebra.position(k)][:, :] = v.block(k)
        return y, self.summand_j.identity()


def nu_iso(Y: HilbertModule, base: FdCStarAlgebra, F_j) -> NuIso:
    F_j = frozenset(F_j)
    F_ij = frozenset(Y.algebra.labels) & F_j
    return NuIso(Y, restrict_algebra(base, F_j), restrict_module(Y, F_ij))


# ---------------------------------------------------------------------------
# Generic balanced tensor quotient (the oracle)


@dataclass(eq=False)
class TensorFactor:
    """A coordinate space with matrix-valued actions of its neighbour algebras."""

    dim: int
    left_algebra: FdCStarAlgebra = None
    right_algebra: FdCStarAlgebra = None
    left_mat: object = None  # AlgebraElement -> (dim, dim) ndarray
    right_mat: object = None


def module_factor(X: HilbertModule, middle: FdCStarAlgebra = None) -> TensorFactor:
    """A Hilbert module as a left leg: right action of the given algebra.

    The middle algebra defaults to the module's own; a larger algebra whose
    labels contain the module's acts through restriction.
    """
    middle = middle or X.algebra

    def right_mat(a: AlgebraElement) -> np.ndarray:
        blocks = []
        for lab, m in zip(X.algebra.labels, X.mult):
            ak = a.block(lab)
            blocks.append(np.kron(np.eye(m), ak.T))
        return _block_diag(blocks, X.dim)

    return TensorFactor(X.dim, right_algebra=middle, right_mat=right_mat)


def family_factor(cover: ClosedCover, modules, base: FdCStarAlgebra) -> TensorFactor:
    """A per-set module family as a left leg with the base algebra acting."""
    modules = tuple(modules)
    dim = sum(m.dim for m in modules)

    def right_mat(a: AlgebraElement) -> np.ndarray:
        blocks = []
        for mod in modules:
            for lab, m in zip(mod.algebra.labels, mod.mult):
                blocks.append(np.kron(np.eye(m), a.block(lab).T))
        return _block_diag(blocks, dim)

    return TensorFactor(dim, right_algebra=base, right_mat=right_mat)


def algebra_summand_factor(base: FdCStarAlgebra, F) -> TensorFactor:
    """A restriction A|F as a two-sided leg for the base algebra."""
    sub = restrict_algebra(base, F)
    dim = sub.dim

    def left_mat(a: AlgebraElement) -> np.ndarray:
        blocks = [np.kron(a.block(lab), np.eye(n)) for lab, n in zip(sub.labels, sub.block_dims)]
        return _block_diag(blocks, dim)

    def right_mat(a: AlgebraElement) -> np.ndarray:
        blocks = [np.kron(np.eye(n), a.block(lab).T) for lab, n in zip(sub.labels, sub.block_dims)]
        return _block_diag(blocks, dim)

    return TensorFactor(dim, left_algebra=base, right_algebra=base,
                        left_mat=left_mat, right_mat=right_mat)


def b_factor(base: FdCStarAlgebra, cover: ClosedCover) -> TensorFactor:
    """The sum algebra B as a two-sided leg for the base algebra."""
    B = sum_algebra(base, cover)
    dim = B.flat.dim

    def left_mat(a: AlgebraElement) -> np.ndarray:
        blocks = [
            np.kron(a.block(k), np.eye(n))
            for (i, k), n in zip(B.flat.labels, B.flat.block_dims)
        ]
        return _block_diag(blocks, dim)

    def right_mat(a: AlgebraElement) -> np.ndarray:
        blocks = [
            np.kron(np.eye(n), a.block(k).T)
            for (i, k), n in zip(B.flat.labels, B.flat.block_dims)
        ]
        return _block_diag(blocks, dim)

    return TensorFactor(dim, left_algebra=base, right_algebra=base,
                        left_mat=left_mat, right_mat=right_mat)


def _block_diag(blocks, dim) -> np.ndarray:
    M = np.zeros((dim, dim), dtype=np.complex128)
    ofs = 0
    for b in blocks:
        d = b.shape[0]
        M[ofs:ofs + d, ofs:ofs + d] = b
        ofs += d
    return M


@dataclass(eq=False)
class GenericBalancedTensor:
    """Quotient of the plain coordinate tensor by the balancing relations.

    complement holds an orthonormal basis of the orthogonal complement of the
    relation span; its column count is the quotient dimension.
    """

    factors: tuple
    plain_dim: int
    relation_basis: np.ndarray
    complement: np.ndarray

    @property
    def dim(self) -> int:
        return self.complement.shape[1]

    @property
    def relation_rank(self) -> int:
        return self.relation_basis.shape[1]

    def project(self, u) -> np.ndarray:
        """Coordinates of the class of a plain tensor in the complement basis."""
        return self.complement.conj().T @ np.asarray(u, dtype=np.complex128)

    def represent(self, q) -> np.ndarray:
        return self.complement @ np.asarray(q, dtype=np.complex128)


def generic_balanced_tensor(factors, tol: float = numlin.DEFAULT_RANK_TOL) -> GenericBalancedTensor:
    """Span the relations x*a (x) y - x (x) a*y in every slot and quotient them out."""
    factors = tuple(factors)
    if len(factors) < 2:
        raise InvalidInputError("need at least two tensor factors")
    dims = [f.dim for f in factors]
    plain = int(np.prod(dims))
    rel_cols = []
    for s in range(len(factors) - 1):
        left, right = factors[s], factors[s + 1]
        mid = left.right_algebra
        if (
            mid is None
            or right.left_algebra is None
            or mid.labels != right.left_algebra.labels
            or mid.block_dims != right.left_algebra.block_dims
        ):
            raise InvalidInputError(f"factors {s} and {s + 1} do not share a middle algebra")
        for _, _, _, unit in mid.matrix_units():
            R = left.right_mat(unit)
            L = right.left_mat(unit)
            A1 = _slot_matrix(dims, s, R)
            A2 = _slot_matrix(dims, s + 1, L)
            diff = A1 - A2
            norms = np.linalg.norm(diff, axis=0)
            keep = diff[:, norms > 1e-14]
            if keep.size:
                rel_cols.append(keep)
    if rel_cols:
        rel = np.hstack(rel_cols)
    else:
        rel = np.zeros((plain, 0), dtype=np.complex128)
    relation_basis = numlin.orth_basis(rel, tol)
    complement = numlin.kernel_basis(rel.conj().T, tol)
    return GenericBalancedTensor(factors, plain, relation_basis, complement)


def _slot_matrix(dims, s, M) -> np.ndarray:
    out = np.eye(1, dtype=np.complex128)
    for idx, d in enumerate(dims):
        out = np.kron(out, M if idx == s else np.eye(d))
    return out


# ---------------------------------------------------------------------------
# Oracle agreement checks


@dataclass
class OracleReport:
    plain_dim: int
    oracle_dim: int
    model_dim: int
    relation_residual: float
    inner_residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return (
            self.oracle_dim == self.model_dim
            and self.relation_residual <= self.tol
            and self.inner_residual <= self.tol
        )


def psi_oracle_check(X: HilbertModule, cover: ClosedCover, tol: float = 1e-9,
                     trials: int = 10, seed: int = 0) -> OracleReport:
    """Compare the direct-sum model of X (x) B against the balanced quotient."""
    from .rng import Rng

    A = X.algebra
    B = sum_algebra(A, cover)
    gbt = generic_balanced_tensor([module_factor(X), b_factor(A, cover)])
    psi = psi_iso(X, cover)
    fam_dim = sum(m.dim for m in psi.summands)

    def model_map(u):
        U = np.asarray(u, dtype=np.complex128).reshape(X.dim, B.flat.dim)
        out = np.zeros(fam_dim, dtype=np.complex128)
        for s in range(X.dim):
            xs = from_coords(X, _unit(X.dim, s))
            b = _b_from_coords(B, U[s])
            out += family_coords(psi.apply(xs, b))
        return out

    M = _matrix_of(model_map, gbt.plain_dim, fam_dim)
    rel_res = numlin.op_norm(M @ gbt.relation_basis)
    model_dim = numlin.rank(M)

    rng = Rng(seed)
    worst = 0.0
    for _ in range(trials):
        u = rng.gauss_vector(gbt.plain_dim)
        v = rng.gauss_vector(gbt.plain_dim)
        lhs = _xb_oracle_inner(X, B, u, v)
        pu = family_from_coords(psi.summands, M @ u)
        pv = family_from_coords(psi.summands, M @ v)
        rhs = _family_inner_b(pu, pv, B)
        worst = max(worst, (lhs - rhs).norm())
    return OracleReport(gbt.plain_dim, gbt.dim, model_dim, rel_res, worst, tol)


def _unit(dim, s):
    e = np.zeros(dim, dtype=np.complex128)
    e[s] = 1.0
    return e


def _b_from_coords(B, u) -> AlgebraElement:
    blocks, ofs = [], 0
    for n in B.flat.block_dims:
        blocks.append(u[ofs:ofs + n * n].reshape(n, n))
        ofs += n * n
    return AlgebraElement(B.flat, tuple(blocks))


def _family_inner_b(parts1, parts2, B) -> AlgebraElement:
    per_set = [inner_product(x, y) for x, y in zip(parts1, parts2)]
    return B.assemble(per_set)


def _xb_oracle_inner(X, B, u, v) -> AlgebraElement:
    """<u|v> on X (x) B from the defining formula b* <x|x'> b', sesquilinearly."""
    U = np.asarray(u).reshape(X.dim, B.flat.dim)
    V = np.asarray(v).reshape(X.dim, B.flat.dim)
    out = B.flat.zero()
    for s in range(X.dim):
        xs = from_coords(X, _unit(X.dim, s))
        for t in range(X.dim):
            xt = from_coords(X, _unit(X.dim, t))
            a = inner_product(xs, xt)  # in A
            eta_a = _eta_on_flat(a, B)
            bu = _b_from_coords(B, U[s])
            bv = _b_from_coords(B, V[t])
            out = out + bu.adjoint() * eta_a * bv
    return out


def _eta_on_flat(a: AlgebraElement, B) -> AlgebraElement:
    return AlgebraElement(B.flat, tuple(a.block(k) for (_, k) in B.flat.labels))


def nu_oracle_check(Y: HilbertModule, base: FdCStarAlgebra, F_j, tol: float = 1e-9,
                    trials: int = 10, seed: int = 0) -> OracleReport:
    """Compare the restriction model of Y (x) A|F_j with the balanced quotient."""
    from .rng import Rng

    F_j = frozenset(F_j)
    sub_j = restrict_algebra(base, F_j)
    gbt = generic_balanced_tensor(
        [module_factor(Y, middle=base), algebra_summand_factor(base, F_j)]
    )
    nu = nu_iso(Y, base, F_j)

    def model_map(u):
        U = np.asarray(u, dtype=np.complex128).reshape(Y.dim, sub_j.dim)
        out = np.zeros(nu.target.dim, dtype=np.complex128)
        for s in range(Y.dim):
            ys = from_coords(Y, _unit(Y.dim, s))
            a = _element_from_coords(sub_j, U[s])
            out += coords(nu.apply(ys, a))
        return out

    M = _matrix_of(model_map, gbt.plain_dim, nu.target.dim)
    rel_res = numlin.op_norm(M @ gbt.relation_basis)
    model_dim = numlin.rank(M)

    rng = Rng(seed)
    worst = 0.0
    for _ in range(trials):
        u = rng.gauss_vector(gbt.plain_dim)
        v = rng.gauss_vector(gbt.plain_dim)
        lhs = _ya_oracle_inner(Y, sub_j, u, v)
        yu = from_coords(nu.target, M @ u)
        yv = from_coords(nu.target, M @ v)
        rhs = _restricted_inner(yu, yv, sub_j)
        worst = max(worst, (lhs - rhs).norm())
    return OracleReport(gbt.plain_dim, gbt.dim, model_dim, rel_res, worst, tol)


def _element_from_coords(alg: FdCStarAlgebra, u) -> AlgebraElement:
    blocks, ofs = [], 0
    for n in alg.block_dims:
        blocks.append(np.asarray(u[ofs:ofs + n * n]).reshape(n, n))
        ofs += n * n
    return AlgebraElement(alg, tuple(blocks))


def _ya_oracle_inner(Y, sub_j, u, v) -> AlgebraElement:
    """<u|v> on Y (x) A|F_j: a* (<y|y'> restricted) a', valued in A|F_j."""
    U = np.asarray(u).reshape(Y.dim, sub_j.dim)
    V = np.asarray(v).reshape(Y.dim, sub_j.dim)
    out = sub_j.zero()
    for s in range(Y.dim):
        ys = from_coords(Y, _unit(Y.dim, s))
        for t in range(Y.dim):
            yt = from_coords(Y, _unit(Y.dim, t))
            ip = inner_product(ys, yt)  # over Y's algebra
            mid = _spread_element(ip, sub_j)
            au = _element_from_coords(sub_j, U[s])
            av = _element_from_coords(sub_j, V[t])
            out = out + au.adjoint() * mid * av
    return out


def _spread_element(a: AlgebraElement, target: FdCStarAlgebra) -> AlgebraElement:
    """View an element of a restriction inside another restriction: shared
    labels copy over, labels absent from the source act as zero."""
    blocks = []
    for lab, n in zip(target.labels, target.block_dims):
        if lab in a.algebra.labels:
            blocks.append(a.block(lab))
        else:
            blocks.append(np.zeros((n, n), dtype=np.complex128))
    return AlgebraElement(target, tuple(blocks))


def _restricted_inner(x: ModuleVector, y: ModuleVector, target: FdCStarAlgebra) -> AlgebraElement:
    return _spread_element(inner_product(x, y), target)


def pair_model_oracle_check(datum, tol: float = 1e-9, trials: int = 10, seed: int = 0) -> OracleReport:
    """Compare the pair model of Z (x) B with the balanced quotient.

    Dimension and relation agreement certify that the pair projections
    realize the quotient bijectively; the inner-product check compares the
    pair-algebra-valued form computed from Z's structure alone against the
    componentwise inner products of the model.
    """
    from .rng import Rng

    A = datum.algebra
    cover = datum.cover
    modules = tuple(datum.modules)
    B = sum_algebra(A, cover)
    model = pair_model(cover, modules)
    gbt = generic_balanced_tensor([family_factor(cover, modules, A), b_factor(A, cover)])
    fam_dim = sum(m.dim for m in modules)

    def model_map(u):
        U = np.asarray(u, dtype=np.complex128).reshape(fam_dim, B.flat.dim)
        out = np.zeros(model.dim, dtype=np.complex128)
        for s in range(fam_dim):
            zs = family_from_coords(modules, _unit(fam_dim, s))
            b = _b_from_coords(B, U[s])
            out += pair_coords(pair_from_family_and_b(model, zs, b))
        return out

    M = _matrix_of(model_map, gbt.plain_dim, model.dim)
    rel_res = numlin.op_norm(M @ gbt.relation_basis)
    model_dim = numlin.rank(M)

    rng = Rng(seed)
    worst = 0.0
    for _ in range(trials):
        u = rng.gauss_vector(gbt.plain_dim)
        v = rng.gauss_vector(gbt.plain_dim)
        tu = pair_from_coords(model, M @ u)
        tv = pair_from_coords(model, M @ v)
        for idx, (i, j) in enumerate(model.entries):
            lhs = _zb_pair_form(modules, B, cover, u, v, i, j)
            rhs = inner_product(tu.comps[idx], tv.comps[idx])
            worst = max(worst, (lhs - rhs).norm())
    return OracleReport(gbt.plain_dim, gbt.dim, model_dim, rel_res, worst, tol)


def _zb_pair_form(modules, B, cover, u, v, i, j) -> AlgebraElement:
    """(i,j)-component of the pair-algebra form on Z (x) B, from Z's inner
    product and restriction only: (b_j* <z_i|w_i> c_j)|F_ij, sesquilinear."""
    fam_dim = sum(m.dim for m in modules)
    F = cover.overlap(i, j)
    target = restrict_algebra(modules[i].algebra, F & frozenset(modules[i].algebra.labels))
    U = np.asarray(u).reshape(fam_dim, B.flat.dim)
    V = np.asarray(v).reshape(fam_dim, B.flat.dim)
    out = target.zero()
    for s in range(fam_dim):
        zs = family_from_coords(modules, _unit(fam_dim, s))
        for t in range(fam_dim):
            zt = family_from_coords(modules, _unit(fam_dim, t))
            ip = inner_product(zs[i], zt[i])  # over A|F_i
            bu = _b_from_coords(B, U[s])
            bv = _b_from_coords(B, V[t])
            bu_j = _b_set_component(bu, B, j)
            bv_j = _b_set_component(bv, B, j)
            term = bu_j.adjoint() * _spread_element(ip, bu_j.algebra) * bv_j
            out = out + _spread_element(restrict_element(term, F & frozenset(bu_j.algebra.labels)), target)
    return out


def _b_set_component(b: AlgebraElement, B, j: int) -> AlgebraElement:
    return B.component(b, j)


def triple_model_oracle_check(datum, tol: float = 1e-9, trials: int = 6, seed: int = 0) -> OracleReport:
    """Compare the triple model of Z (x) B (x) B with the balanced quotient."""
    from .rng import Rng

    A = datum.algebra
    cover = datum.cover
    modules = tuple(datum.modules)
    B = sum_algebra(A, cover)
    tm = triple_model(datum)
    gbt = generic_balanced_tensor(
        [family_factor(cover, modules, A), b_factor(A, cover), b_factor(A, cover)]
    )
    fam_dim = sum(m.dim for m in modules)
    bdim = B.flat.dim

    def mu_of_elementary(zs, b1, b2):
        out = tm.zero()
        comps = list(out.comps)
        for idx, (i, j, l) in enumerate(tm.entries):
            F = cover.overlap(i, j, l)
            space = tm.spaces[idx]
            zi = restrict_vector(zs[i], F)
            bj = restrict_element(B.component(b1, j), F)
            bl = restrict_element(B.component(b2, l), F)
            comps[idx] = right_act(right_act(zi, bj), bl)
        return TripleTensorVector(tm, tuple(comps))

    def model_map(u):
        U = np.asarray(u, dtype=np.complex128).reshape(fam_dim, bdim, bdim)
        out = np.zeros(tm.dim, dtype=np.complex128)
        for s in range(fam_dim):
            zs = family_from_coords(modules, _unit(fam_dim, s))
            for t in range(bdim):
                b1 = _b_from_coords(B, _unit(bdim, t))
                b2 = _b_from_coords(B, U[s, t])
                out += triple_coords(mu_of_elementary(zs, b1, b2))
        return out

    M = _matrix_of(model_map, gbt.plain_dim, tm.dim)
    rel_res = numlin.op_norm(M @ gbt.relation_basis)
    model_dim = numlin.rank(M)

    rng = Rng(seed)
    worst = 0.0
    for _ in range(trials):
        u = rng.gauss_vector(gbt.plain_dim)
        v = rng.gauss_vector(gbt.plain_dim)
        for idx, (i, j, l) in enumerate(tm.entries):
            lhs = _zbb_triple_form(modules, B, cover, u, v, i, j, l)
            tu = M @ u
            tv = M @ v
            ofs = tm.offsets[idx]
            space = tm.spaces[idx]
            cu = from_coords(space, tu[ofs:ofs + space.dim])
            cv = from_coords(space, tv[ofs:ofs + space.dim])
            rhs = inner_product(cu, cv)
            worst = max(worst, (lhs - rhs).norm())
    return OracleReport(gbt.plain_dim, gbt.dim, model_dim, rel_res, worst, tol)


def _zbb_triple_form(modules, B, cover, u, v, i, j, l) -> AlgebraElement:
    F = cover.overlap(i, j, l)
    target = restrict_algebra(modules[i].algebra, F & frozenset(modules[i].algebra.labels))
    return _zbb_triple_form_factored(modules, B, cover, u, v, i, j, l, target)


def _zbb_triple_form_factored(modules, B, cover, u, v, i, j, l, target) -> AlgebraElement:
    """Factored evaluation: group coordinates as (z, b, b') and contract the
    two B legs per pair of z-basis indices."""
    fam_dim = sum(m.dim for m in modules)
    bdim = B.flat.dim
    F = frozenset(target.labels)
    U = np.asarray(u).reshape(fam_dim, bdim * bdim)
    V = np.asarray(v).reshape(fam_dim, bdim * bdim)
    out = target.zero()
    for s in range(fam_dim):
        zs = family_from_coords(modules, _unit(fam_dim, s))
        for t in range(fam_dim):
            zt = family_from_coords(modules, _unit(fam_dim, t))
            mid = _spread_element(inner_product(zs[i], zt[i]), target)
            bu = _double_b_combo(B, U[s], j, l, F)
            bv = _double_b_combo(B, V[t], j, l, F)
            # <b (x) b' | mid | c (x) c'> = b'* b* mid c c' with all factors
            # restricted to the triple overlap
            out = out + bu.adjoint() * mid * bv
    return out


def _double_b_combo(B, w, j, l, F) -> AlgebraElement:
    """The element sum_{t,q} w[t*bdim+q] (b_t)_j (b_q)_l restricted to F.

    Multiplication happens inside the restriction of the base algebra, where
    both set components live after restriction.
    """
    bdim = B.flat.dim
    target = None
    acc = None
    for t in range(bdim):
        col = w[t * bdim:(t + 1) * bdim]
        if not np.any(col):
            continue
        bt = B.component(_b_from_coords(B, _unit(bdim, t)), j)
        bq = B.component(_b_from_coords(B, np.asarray(col)), l)
        bt_r = restrict_element(bt, F & frozenset(bt.algebra.labels))
        bq_r = restrict_element(bq, F & frozenset(bq.algebra.labels))
        if target is None:
            target = restrict_algebra(B.base, F)
            acc = target.zero()
        prod = _spread_element(bt_r, target) * _spread_element(bq_r, target)
        acc = acc + prod
    if acc is None:
        target = restrict_algebra(B.base, F)
        acc = target.zero()
    return acc
