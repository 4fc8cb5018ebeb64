"""JSON file formats for instances and reports.

The schema is minimal and language-neutral: algebras are block dimension
lists, covers are lists of 0-based label lists, complex scalars are [re, im]
pairs, and matrices are lists of rows (row-major).  Transition lists may omit
mirrors: an unlisted (j, i) defaults to the adjoint of the listed (i, j), and
diagonal transitions are always the identity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .cstar import ClosedCover, FdCStarAlgebra, algebra, cover, restrict_algebra
from .errors import FormatError
from .glue import GluingDatum, make_gluing_datum
from .hmod import HilbertModule, module
from .morita import (
    BimoduleGluingDatum,
    EquivalenceBimodule,
    make_bimodule_datum,
)


def matrix_to_json(M: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(M)]


def matrix_from_json(data, shape) -> np.ndarray:
    M = np.zeros(shape, dtype=np.complex128)
    if len(data) != shape[0]:
        raise FormatError(f"matrix has {len(data)} rows, expected {shape[0]}")
    for r, row in enumerate(data):
        if len(row) != shape[1]:
            raise FormatError(f"matrix row {r} has {len(row)} entries, expected {shape[1]}")
        for c, z in enumerate(row):
            M[r, c] = complex(z[0], z[1])
    return M


def algebra_to_json(A: FdCStarAlgebra) -> dict:
    return {"blocks": [int(n) for n in A.block_dims]}


def algebra_from_json(obj) -> FdCStarAlgebra:
    return algebra(tuple(int(n) for n in obj["blocks"]))


def cover_to_json(cov: ClosedCover) -> dict:
    return {"sets": [sorted(int(k) for k in s) for s in cov.sets]}


def cover_from_json(obj, prim_size: int) -> ClosedCover:
    return cover(prim_size, [frozenset(int(k) for k in s) for s in obj["sets"]])


def gluing_to_json(D: GluingDatum) -> dict:
    out = {
        "kind": "gluing",
        "algebra": algebra_to_json(D.algebra),
        "cover": cover_to_json(D.cover),
        "modules": [{"mult": [int(m) for m in mod.mult]} for mod in D.modules],
        "zeta": [],
    }
    for (i, j) in sorted(D.zeta):
        if i > j:
            continue  # mirrors are implied
        for k in sorted(D.zeta[(i, j)]):
            out["zeta"].append(
                {"i": i, "j": j, "k": int(k), "matrix": matrix_to_json(D.zeta[(i, j)][k])}
            )
    return out


def gluing_from_json(obj) -> GluingDatum:
    A = algebra_from_json(obj["algebra"])
    cov = cover_from_json(obj["cover"], A.num_blocks)
    modules = []
    for i, spec in enumerate(obj["modules"]):
        sub = restrict_algebra(A, cov.sets[i])
        mult = tuple(int(m) for m in spec["mult"])
        if len(mult) != sub.num_blocks:
            raise FormatError(f"module {i} multiplicity length mismatch")
        modules.append(module(sub, mult))
    entries = []
    for e in obj.get("zeta", []):
        i, j, k = int(e["i"]), int(e["j"]), int(e["k"])
        mi = modules[i].mult[modules[i].algebra.position(k)]
        mj = modules[j].mult[modules[j].algebra.position(k)]
        entries.append((i, j, k, matrix_from_json(e["matrix"], (mi, mj))))
    return make_gluing_datum(A, cov, tuple(modules), entries)


def module_instance_to_json(A: FdCStarAlgebra, cov: ClosedCover, X: HilbertModule) -> dict:
    return {
        "kind": "module",
        "algebra": algebra_to_json(A),
        "cover": cover_to_json(cov),
        "module": {"mult": [int(m) for m in X.mult]},
    }


def module_instance_from_json(obj):
    A = algebra_from_json(obj["algebra"])
    cov = cover_from_json(obj["cover"], A.num_blocks)
    X = module(A, tuple(int(m) for m in obj["module"]["mult"]))
    return A, cov, X


def bimodule_to_json(M: EquivalenceBimodule) -> dict:
    return {
        "kind": "bimodule",
        "left_blocks": [int(n) for n in M.left_algebra.block_dims],
        "right_blocks": [int(n) for n in M.right_algebra.block_dims],
        "twist": [matrix_to_json(u) for u in M.twist],
    }


def bimodule_from_json(obj) -> EquivalenceBimodule:
    left = algebra(tuple(int(n) for n in obj["left_blocks"]))
    right = algebra(tuple(int(n) for n in obj["right_blocks"]))
    twist = tuple(
        matrix_from_json(t, (m, m)) for t, m in zip(obj["twist"], left.block_dims)
    )
    return EquivalenceBimodule(left, right, twist)


def bimodule_datum_to_json(D: BimoduleGluingDatum) -> dict:
    out = {
        "kind": "bimodule_datum",
        "left_blocks": [int(n) for n in D.left_algebra.block_dims],
        "right_blocks": [int(n) for n in D.right_algebra.block_dims],
        "cover": cover_to_json(D.cover),
        "bimodules": [
            {"twist": [matrix_to_json(u) for u in Mi.twist]} for Mi in D.bimodules
        ],
        "nu": [],
    }
    for (i, j) in sorted(D.nu):
        if i > j:
            continue
        for k in sorted(D.nu[(i, j)]):
            out["nu"].append(
                {"i": i, "j": j, "k": int(k), "matrix": matrix_to_json(D.nu[(i, j)][k])}
            )
    return out


def bimodule_datum_from_json(obj) -> BimoduleGluingDatum:
    left = algebra(tuple(int(n) for n in obj["left_blocks"]))
    right = algebra(tuple(int(n) for n in obj["right_blocks"]))
    cov = cover_from_json(obj["cover"], left.num_blocks)
    bims = []
    for i, spec in enumerate(obj["bimodules"]):
        subL = restrict_algebra(left, cov.sets[i])
        subR = restrict_algebra(right, cov.sets[i])
        twist = tuple(
            matrix_from_json(t, (m, m))
            for t, m in zip(spec["twist"], subL.block_dims)
        )
        bims.append(EquivalenceBimodule(subL, subR, twist))
    entries = []
    for e in obj.get("nu", []):
        i, j, k = int(e["i"]), int(e["j"]), int(e["k"])
        mi = bims[i].mult[bims[i].left_algebra.position(k)]
        mj = bims[j].mult[bims[j].left_algebra.position(k)]
        entries.append((i, j, k, matrix_from_json(e["matrix"], (mi, mj))))
    return make_bimodule_datum(left, right, cov, tuple(bims), entries)


def instance_to_json(obj) -> dict:
    """Serialize any supported instance object, tagged by kind."""
    from .gen import GluingInstance, ModuleInstance

    if isinstance(obj, GluingDatum):
        return gluing_to_json(obj)
    if isinstance(obj, BimoduleGluingDatum):
        return bimodule_datum_to_json(obj)
    if isinstance(obj, EquivalenceBimodule):
        return bimodule_to_json(obj)
    if isinstance(obj, GluingInstance):
        return gluing_to_json(obj.datum)
    if isinstance(obj, ModuleInstance):
        return module_instance_to_json(obj.algebra, obj.cover, obj.module)
    raise FormatError(f"cannot serialize object of type {type(obj).__name__}")


def parse_instance(obj):
    """Inverse of instance_to_json, dispatching on the kind tag."""
    try:
        kind = obj["kind"]
    except (TypeError, KeyError):
        raise FormatError("instance file must be an object with a 'kind' tag") from None
    try:
        if kind == "gluing":
            return gluing_from_json(obj)
        if kind == "module":
            return module_instance_from_json(obj)
        if kind == "bimodule":
            return bimodule_from_json(obj)
        if kind == "bimodule_datum":
            return bimodule_datum_from_json(obj)
    except FormatError:
        raise
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise FormatError(f"malformed {kind} instance: {exc}") from exc
    raise FormatError(f"unknown instance kind {kind!r}")


def canonical_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def load_instance_file(path):
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    return parse_instance(obj)


@dataclass
class Report:
    """One machine-readable verdict line."""

    check: str
    passed: bool
    max_residual: float
    tol: float
    fingerprint: str
    wall_time: float
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "check": self.check,
            "pass": bool(self.passed),
            "max_residual": float(self.max_residual),
            "tol": float(self.tol),
            "fingerprint": self.fingerprint,
            "wall_time": round(float(self.wall_time), 6),
        }
        if self.details:
            out["details"] = self.details
        return out

    def line(self) -> str:
        return canonical_dumps(self.to_json())
