"""Seeded random instances: algebras, covers, modules, maps, gluing data and
bimodule gluing data.

All draws come from the portable generator in rng.py, in a fixed order, so a
(seed, config) pair reproduces an instance exactly.  Coherent transitions are
built as coboundaries V_i V_j* of per-set unitaries, which satisfies the
triple-overlap condition by construction; the random-unitary mode draws each
pair transition independently and generically breaks it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cstar import ClosedCover, FdCStarAlgebra, algebra, cover
from .errors import InvalidInputError
from .glue import GluingDatum, make_gluing_datum
from .hmod import AdjointableMap, HilbertModule, ModuleVector, module, module_map
from .rng import Rng

TWIST_MODES = ("coherent", "random_unitary", "prescribed_phases")
KINDS = ("module", "gluing", "bimodule")


@dataclass(frozen=True)
class GenConfig:
    seed: int
    max_blocks: int = 6
    max_block_dim: int = 4
    max_cover_sets: int = 4
    max_mult: int = 5
    twist_mode: str = "coherent"
    phases: tuple = ()  # entries (i, j, re, im), applied on the lowest shared block
    kind: str = "gluing"

    def __post_init__(self):
        if not (1 <= self.max_blocks <= 6):
            raise InvalidInputError("max_blocks must be in 1..6")
        if not (1 <= self.max_block_dim <= 4):
            raise InvalidInputError("max_block_dim must be in 1..4")
        if not (1 <= self.max_cover_sets <= 4):
            raise InvalidInputError("max_cover_sets must be in 1..4")
        if not (1 <= self.max_mult <= 5):
            raise InvalidInputError("max_mult must be in 1..5")
        if self.twist_mode not in TWIST_MODES:
            raise InvalidInputError(f"twist_mode must be one of {TWIST_MODES}")
        if self.kind not in KINDS:
            raise InvalidInputError(f"kind must be one of {KINDS}")


def random_algebra(rng: Rng, cfg: GenConfig) -> FdCStarAlgebra:
    K = rng.randint(1, cfg.max_blocks)
    return algebra(tuple(rng.randint(1, cfg.max_block_dim) for _ in range(K)))


def random_cover(rng: Rng, alg: FdCStarAlgebra, cfg: GenConfig) -> ClosedCover:
    """Random subsets, then patch uncovered labels into random sets."""
    K = alg.num_blocks
    N = rng.randint(1, cfg.max_cover_sets)
    sets = []
    for _ in range(N):
        s = {k for k in range(K) if rng.randint(0, 1) == 1}
        sets.append(s)
    for k in range(K):
        if not any(k in s for s in sets):
            sets[rng.randint(0, N - 1)].add(k)
    return cover(K, [frozenset(s) for s in sets])


def random_module(rng: Rng, alg: FdCStarAlgebra, cfg: GenConfig, min_mult: int = 0) -> HilbertModule:
    return module(alg, tuple(rng.randint(min_mult, cfg.max_mult) for _ in alg.block_dims))


def random_vector(rng: Rng, mod: HilbertModule) -> ModuleVector:
    return ModuleVector(
        mod, tuple(rng.gauss_matrix(m, n) for (m, n) in mod.block_shapes())
    )


def random_map(rng: Rng, src: HilbertModule, tgt: HilbertModule) -> AdjointableMap:
    return module_map(
        src, tgt,
        tuple(rng.gauss_matrix(p, m) for p, m in zip(tgt.mult, src.mult)),
    )


def random_gluing_datum(
    rng: Rng,
    alg: FdCStarAlgebra,
    cov: ClosedCover,
    cfg: GenConfig,
    mult=None,
) -> GluingDatum:
    """Per-set restrictions of a global multiplicity profile, with transitions
    drawn according to cfg.twist_mode."""
    from .hmod import restrict_module

    K = alg.num_blocks
    if mult is None:
        mult = tuple(rng.randint(0, cfg.max_mult) for _ in range(K))
    profile = module(alg, mult)
    modules = tuple(restrict_module(profile, F) for F in cov.sets)

    entries = []
    if cfg.twist_mode == "coherent":
        V = {}
        for i in range(cov.num_sets):
            for k in sorted(cov.sets[i]):
                V[(i, k)] = rng.unitary(mult[k])
        for i in range(cov.num_sets):
            for j in range(cov.num_sets):
                if i == j:
                    continue
                for k in sorted(cov.overlap(i, j)):
                    if i < j:
                        entries.append((i, j, k, V[(i, k)] @ V[(j, k)].conj().T))
    elif cfg.twist_mode == "random_unitary":
        for i in range(cov.num_sets):
            for j in range(i + 1, cov.num_sets):
                for k in sorted(cov.overlap(i, j)):
                    entries.append((i, j, k, rng.unitary(mult[k])))
    else:  # prescribed_phases
        block = _lowest_common_block(cov, cfg)
        for i in range(cov.num_sets):
            for j in range(i + 1, cov.num_sets):
                for k in sorted(cov.overlap(i, j)):
                    U = np.eye(mult[k], dtype=np.complex128)
                    if k == block:
                        for (pi, pj, re, im) in cfg.phases:
                            if (pi, pj) == (i, j):
                                U = complex(re, im) * U
                            elif (pi, pj) == (j, i):
                                U = np.conj(complex(re, im)) * U
                    entries.append((i, j, k, U))
    return make_gluing_datum(alg, cov, modules, entries)


def _lowest_common_block(cov: ClosedCover, cfg: GenConfig):
    """The designated block for prescribed phases: lowest label shared by all
    pairs mentioned in the phase list (falls back to label 0)."""
    mentioned = {i for (i, j, _, _) in cfg.phases} | {j for (i, j, _, _) in cfg.phases}
    if mentioned:
        shared = None
        for i in mentioned:
            shared = cov.sets[i] if shared is None else shared & cov.sets[i]
        if shared:
            return min(shared)
    return 0


def twist_by_coboundary(rng: Rng, datum: GluingDatum) -> GluingDatum:
    """Conjugate a datum by per-set unitaries: an isomorphic, still-valid datum."""
    cov = datum.cover
    V = {}
    for i in range(cov.num_sets):
        for k in sorted(cov.sets[i]):
            V[(i, k)] = rng.unitary(datum.mult_at(i, k))
    entries = []
    for (i, j) in cov.pairs(include_diagonal=False):
        if i < j:
            for k in sorted(cov.overlap(i, j)):
                entries.append(
                    (i, j, k, V[(i, k)] @ datum.zeta_block(i, j, k) @ V[(j, k)].conj().T)
                )
    return make_gluing_datum(datum.algebra, cov, datum.modules, entries)


@dataclass(frozen=True)
class GluingInstance:
    algebra: FdCStarAlgebra
    cover: ClosedCover
    datum: GluingDatum


@dataclass(frozen=True)
class ModuleInstance:
    algebra: FdCStarAlgebra
    cover: ClosedCover
    module: HilbertModule


def _instance_cover(rng: Rng, alg: FdCStarAlgebra, cfg: GenConfig) -> ClosedCover:
    """Random cover, except in prescribed-phases mode, where every mentioned
    set must exist and share the designated block: all sets are then full."""
    if cfg.twist_mode != "prescribed_phases":
        return random_cover(rng, alg, cfg)
    mentioned = {i for (i, j, _, _) in cfg.phases} | {j for (i, j, _, _) in cfg.phases}
    n_sets = max(mentioned, default=1) + 1
    full = frozenset(range(alg.num_blocks))
    return cover(alg.num_blocks, [full] * n_sets)


def random_module_instance(cfg: GenConfig) -> ModuleInstance:
    rng = Rng(cfg.seed)
    alg = random_algebra(rng, cfg)
    cov = _instance_cover(rng, alg, cfg)
    return ModuleInstance(alg, cov, random_module(rng, alg, cfg))


def random_gluing_instance(cfg: GenConfig) -> GluingInstance:
    rng = Rng(cfg.seed)
    alg = random_algebra(rng, cfg)
    cov = _instance_cover(rng, alg, cfg)
    return GluingInstance(alg, cov, random_gluing_datum(rng, alg, cov, cfg))


def random_bimodule_instance(cfg: GenConfig):
    """Deferred to avoid a circular import; see morita.random_bimodule_datum."""
    from . import morita

    rng = Rng(cfg.seed)
    left = random_algebra(rng, cfg)
    right = algebra(
        tuple(rng.randint(1, cfg.max_block_dim) for _ in left.block_dims)
    )
    cov = _instance_cover(rng, left, cfg)
    datum = morita.random_bimodule_datum(rng, left, right, cov, cfg)
    return datum


def random_instance(cfg: GenConfig):
    """Dispatch on cfg.kind; the uniform entry point used by the CLI."""
    if cfg.kind == "module":
        return random_module_instance(cfg)
    if cfg.kind == "gluing":
        return random_gluing_instance(cfg)
    return random_bimodule_instance(cfg)
