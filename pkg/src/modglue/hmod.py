"""Hilbert modules over finite-dimensional C*-algebras.

A module of multiplicity (m_k) over the algebra with blocks (n_k) is the
direct sum of the rectangular matrix spaces C^{m_k x n_k}; the inner product
is blockwise x_k* y_k, the right action is blockwise right multiplication,
and every adjointable map is blockwise left multiplication.  Restriction to a
closed label set deletes blocks, exactly as for algebra elements.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numlin
from .cstar import AlgebraElement, FdCStarAlgebra, restrict_algebra
from .errors import InvalidInputError, NotAModuleMapError


@dataclass(frozen=True)
class HilbertModule:
    algebra: FdCStarAlgebra
    mult: tuple  # one nonnegative integer per algebra block

    def __post_init__(self):
        if len(self.mult) != self.algebra.num_blocks:
            raise InvalidInputError("multiplicity vector has wrong length")
        if any(int(m) < 0 for m in self.mult):
            raise InvalidInputError("multiplicities must be >= 0")

    @property
    def dim(self) -> int:
        return sum(m * n for m, n in zip(self.mult, self.algebra.block_dims))

    def block_shapes(self):
        return tuple(
            (m, n) for m, n in zip(self.mult, self.algebra.block_dims)
        )

    def zero_vector(self) -> "ModuleVector":
        return ModuleVector(
            self,
            tuple(np.zeros(s, dtype=np.complex128) for s in self.block_shapes()),
        )

    def basis_vectors(self):
        """Yield the standard coordinate basis, block by block, row-major."""
        for pos, (m, n) in enumerate(self.block_shapes()):
            for s in range(m):
                for t in range(n):
                    v = self.zero_vector()
                    v.blocks[pos][s, t] = 1.0
                    yield v


def module(alg: FdCStarAlgebra, mult) -> HilbertModule:
    return HilbertModule(alg, tuple(int(m) for m in mult))


@dataclass(eq=False)
class ModuleVector:
    module: HilbertModule
    blocks: tuple  # m_k x n_k matrices

    def __post_init__(self):
        self.blocks = tuple(
            numlin.as_cmatrix(b, shape)
            for b, shape in zip(self.blocks, self.module.block_shapes())
        )
        if len(self.blocks) != self.module.algebra.num_blocks:
            raise InvalidInputError("wrong number of blocks")

    def __add__(self, other):
        _same_module(self, other)
        return ModuleVector(
            self.module, tuple(a + b for a, b in zip(self.blocks, other.blocks))
        )

    def __sub__(self, other):
        _same_module(self, other)
        return ModuleVector(
            self.module, tuple(a - b for a, b in zip(self.blocks, other.blocks))
        )

    def __rmul__(self, scalar):
        return ModuleVector(self.module, tuple(scalar * b for b in self.blocks))

    def block(self, label) -> np.ndarray:
        return self.blocks[self.module.algebra.position(label)]


def vector(mod: HilbertModule, blocks) -> ModuleVector:
    return ModuleVector(mod, tuple(blocks))


def _same_module(x: ModuleVector, y: ModuleVector):
    if x.module.algebra.labels != y.module.algebra.labels or x.module.mult != y.module.mult:
        raise InvalidInputError("vectors live in different modules")


def inner_product(x: ModuleVector, y: ModuleVector) -> AlgebraElement:
    """Algebra-valued inner product, blockwise x_k* y_k (linear in y)."""
    _same_module(x, y)
    return AlgebraElement(
        x.module.algebra, tuple(a.conj().T @ b for a, b in zip(x.blocks, y.blocks))
    )


def right_act(x: ModuleVector, a: AlgebraElement) -> ModuleVector:
    if a.algebra.labels != x.module.algebra.labels:
        raise InvalidInputError("algebra element does not match module")
    return ModuleVector(
        x.module, tuple(xb @ ab for xb, ab in zip(x.blocks, a.blocks))
    )


def vec_norm(x: ModuleVector) -> float:
    """Hilbert-module norm ||<x|x>||^(1/2) = max blockwise operator norm."""
    return max((numlin.op_norm(b) for b in x.blocks), default=0.0)


def restrict_module(X: HilbertModule, F) -> HilbertModule:
    sub = restrict_algebra(X.algebra, F)
    keep = [X.algebra.position(lab) for lab in sub.labels]
    return HilbertModule(sub, tuple(X.mult[i] for i in keep))


def restrict_vector(x: ModuleVector, F) -> ModuleVector:
    sub = restrict_module(x.module, F)
    return ModuleVector(sub, tuple(x.block(lab) for lab in sub.algebra.labels))


@dataclass(eq=False)
class AdjointableMap:
    """Blockwise left multiplication T_k: source block -> target block."""

    source: HilbertModule
    target: HilbertModule
    blocks: tuple  # p_k x m_k matrices

    def __post_init__(self):
        if self.source.algebra.labels != self.target.algebra.labels:
            raise InvalidInputError("source and target must share an algebra")
        shapes = tuple(
            (p, m) for p, m in zip(self.target.mult, self.source.mult)
        )
        self.blocks = tuple(
            numlin.as_cmatrix(b, s) for b, s in zip(self.blocks, shapes)
        )
        if len(self.blocks) != len(shapes):
            raise InvalidInputError("wrong number of blocks")

    def __add__(self, other):
        _composable_like(self, other)
        return AdjointableMap(
            self.source, self.target,
            tuple(a + b for a, b in zip(self.blocks, other.blocks)),
        )

    def __sub__(self, other):
        _composable_like(self, other)
        return AdjointableMap(
            self.source, self.target,
            tuple(a - b for a, b in zip(self.blocks, other.blocks)),
        )

    def __rmul__(self, scalar):
        return AdjointableMap(
            self.source, self.target, tuple(scalar * b for b in self.blocks)
        )

    def block(self, label) -> np.ndarray:
        return self.blocks[self.source.algebra.position(label)]


def _composable_like(a: AdjointableMap, b: AdjointableMap):
    if a.source.mult != b.source.mult or a.target.mult != b.target.mult:
        raise InvalidInputError("maps have different source/target shapes")
    if a.source.algebra.labels != b.source.algebra.labels:
        raise InvalidInputError("maps live over different algebras")


def module_map(source: HilbertModule, target: HilbertModule, blocks) -> AdjointableMap:
    return AdjointableMap(source, target, tuple(blocks))


def identity_map(X: HilbertModule) -> AdjointableMap:
    return AdjointableMap(
        X, X, tuple(np.eye(m, dtype=np.complex128) for m in X.mult)
    )


def adjoint_of(alpha: AdjointableMap) -> AdjointableMap:
    return AdjointableMap(
        alpha.target, alpha.source, tuple(b.conj().T for b in alpha.blocks)
    )


def apply_map(alpha: AdjointableMap, x: ModuleVector) -> ModuleVector:
    if (x.module.mult != alpha.source.mult
            or x.module.algebra.labels != alpha.source.algebra.labels):
        raise InvalidInputError("vector does not live in the map's source")
    return ModuleVector(
        alpha.target, tuple(T @ xb for T, xb in zip(alpha.blocks, x.blocks))
    )


def compose(alpha: AdjointableMap, beta: AdjointableMap) -> AdjointableMap:
    """alpha after beta."""
    if beta.target.mult != alpha.source.mult:
        raise InvalidInputError("maps are not composable")
    return AdjointableMap(
        beta.source, alpha.target,
        tuple(a @ b for a, b in zip(alpha.blocks, beta.blocks)),
    )


def map_norm(alpha: AdjointableMap) -> float:
    return max((numlin.op_norm(b) for b in alpha.blocks), default=0.0)


def restrict_map(alpha: AdjointableMap, F) -> AdjointableMap:
    src = restrict_module(alpha.source, F)
    tgt = restrict_module(alpha.target, F)
    return AdjointableMap(
        src, tgt, tuple(alpha.block(lab) for lab in src.algebra.labels)
    )


def is_unitary_module_map(alpha: AdjointableMap, tol: float) -> bool:
    """True iff every block is unitary (forcing equal multiplicities blockwise)."""
    return all(numlin.is_unitary(b, tol) for b in alpha.blocks)


def unitary_residual(alpha: AdjointableMap) -> float:
    """Largest deviation of any block from unitarity; inf on non-square blocks."""
    worst = 0.0
    for T in alpha.blocks:
        p, m = T.shape
        if p != m:
            return float("inf")
        if m == 0:
            continue
        eye = np.eye(m)
        worst = max(
            worst,
            numlin.op_norm(T.conj().T @ T - eye),
            numlin.op_norm(T @ T.conj().T - eye),
        )
    return worst


def coords(x: ModuleVector) -> np.ndarray:
    """Flatten to a coordinate vector, blocks in order, row-major within blocks."""
    parts = [b.reshape(-1) for b in x.blocks]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.complex128)


def from_coords(mod: HilbertModule, u) -> ModuleVector:
    u = np.asarray(u, dtype=np.complex128).reshape(-1)
    if u.size != mod.dim:
        raise InvalidInputError(f"coordinate vector has length {u.size}, expected {mod.dim}")
    blocks, ofs = [], 0
    for (m, n) in mod.block_shapes():
        blocks.append(u[ofs:ofs + m * n].reshape(m, n))
        ofs += m * n
    return ModuleVector(mod, tuple(blocks))


def map_matrix(alpha: AdjointableMap) -> np.ndarray:
    """Matrix of the map on flat coordinates: direct sum of T_k (x) I_{n_k}."""
    D_out, D_in = alpha.target.dim, alpha.source.dim
    M = np.zeros((D_out, D_in), dtype=np.complex128)
    ro = co = 0
    for T, n in zip(alpha.blocks, alpha.source.algebra.block_dims):
        p, m = T.shape
        M[ro:ro + p * n, co:co + m * n] = np.kron(T, np.eye(n))
        ro += p * n
        co += m * n
    return M


def module_map_from_linear(L, X: HilbertModule, Y: HilbertModule, tol: float = 1e-9) -> AdjointableMap:
    """Recover the blockwise left-multiplication form of a linear map, or reject.

    L is a callable ModuleVector -> ModuleVector on coordinates.  The block
    matrices are probed on basis vectors; L is then checked to commute with
    the right action of every matrix unit.  A residual above tol raises
    NotAModuleMapError with the largest violation found.
    """
    if X.algebra.labels != Y.algebra.labels:
        raise InvalidInputError("modules live over different algebras")
    blocks = []
    for pos, ((m, n), p) in enumerate(zip(X.block_shapes(), Y.mult)):
        T = np.zeros((p, m), dtype=np.complex128)
        for s in range(m):
            probe = X.zero_vector()
            if n > 0:
                probe.blocks[pos][s, 0] = 1.0
                T[:, s] = apply_map_or_call(L, probe).blocks[pos][:, 0]
        blocks.append(T)
    candidate = AdjointableMap(X, Y, tuple(blocks))

    worst = 0.0
    for x in X.basis_vectors():
        Lx = apply_map_or_call(L, x)
        worst = max(worst, vec_norm(Lx - apply_map(candidate, x)))
        for _, _, _, unit in X.algebra.matrix_units():
            lhs = apply_map_or_call(L, right_act(x, unit))
            rhs = right_act(Lx, unit)
            worst = max(worst, vec_norm(lhs - rhs))
            if worst > tol:
                raise NotAModuleMapError(
                    f"map does not commute with the right action (residual {worst:.3e})",
                    residual=worst,
                )
    if worst > tol:
        raise NotAModuleMapError(
            f"map is not blockwise left multiplication (residual {worst:.3e})",
            residual=worst,
        )
    return candidate


def apply_map_or_call(L, x: ModuleVector) -> ModuleVector:
    if isinstance(L, AdjointableMap):
        return apply_map(L, x)
    return L(x)
