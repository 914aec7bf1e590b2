"""JSON and CSV formats for spaces, elements, functionals and reports."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from matreg.matspace import LevelElement, MatrixSpace, SpaceError, build_space

STATUSES = ("optimal", "feasible", "infinite", "infeasible", "certified_yes", "certified_no",
            "undecided", "pass", "fail", "holds", "fails", "not_comparable", "error")


class FormatError(ValueError):
    pass


def matrix_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise FormatError("expected a matrix")
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def matrix_from_json(obj) -> np.ndarray:
    if isinstance(obj, dict):
        if "re" not in obj:
            raise FormatError("matrix object needs an 're' field")
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
        if re.shape != im.shape:
            raise FormatError("real and imaginary parts differ in shape")
        m = re + 1j * im
    else:
        m = np.asarray(obj, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise FormatError(f"matrix of shape {m.shape} is not square")
    if not np.all(np.isfinite(m)):
        raise FormatError("matrix has non-finite entries")
    return m


def _read(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from None


# spaces


def space_to_json(space: MatrixSpace) -> dict:
    return {"name": space.name, "ambient_dim": space.k,
            "generators": [matrix_to_json(b) for b in space.basis]}


def space_from_json(obj: dict) -> MatrixSpace:
    try:
        k = int(obj["ambient_dim"])
        gens = [matrix_from_json(g) for g in obj["generators"]]
    except KeyError as exc:
        raise FormatError(f"space definition lacks {exc}") from None
    for g in gens:
        if g.shape != (k, k):
            raise FormatError(f"generator of shape {g.shape} does not match ambient_dim {k}")
    if not gens:
        raise SpaceError("empty generator list")
    return build_space(gens, name=obj.get("name", "user"))


def load_space(path) -> MatrixSpace:
    return space_from_json(_read(path))


def dump_space(space: MatrixSpace, path) -> None:
    Path(path).write_text(json.dumps(space_to_json(space), indent=1))


# elements and functionals


def element_from_json(space: MatrixSpace, obj: dict, level: int | None = None,
                      tol: float = 1e-9) -> LevelElement:
    """``{"level": n, "matrix": {re, im}}`` or a bare matrix object; must lie in M_n(V)."""
    if isinstance(obj, dict) and "matrix" in obj:
        level = obj.get("level", level)
        obj = obj["matrix"]
    m = matrix_from_json(obj)
    if m.shape[0] % space.k:
        raise FormatError(f"matrix size {m.shape[0]} is not a multiple of k={space.k}")
    n = m.shape[0] // space.k
    if level is not None and int(level) != n:
        raise FormatError(f"matrix size implies level {n}, not {level}")
    return LevelElement.from_matrix(space, m, n, tol)


def element_to_json(x: LevelElement) -> dict:
    return {"space": x.space.name, "level": x.level, "matrix": matrix_to_json(x.concrete)}


def functional_from_json(space: MatrixSpace, obj: dict):
    from matreg.duality import MatrixFunctional

    try:
        n = int(obj["n"])
        reps = obj["representatives"]
    except KeyError as exc:
        raise FormatError(f"functional definition lacks {exc}") from None
    if len(reps) != n or any(len(row) != n for row in reps):
        raise FormatError(f"representatives must form an {n} x {n} array")
    arr = np.array([[matrix_from_json(r) for r in row] for row in reps])
    if arr.shape[2:] != (space.k, space.k):
        raise FormatError(f"representatives must be {space.k} x {space.k}")
    return MatrixFunctional(space, arr)


def functional_to_json(F) -> dict:
    return {"space": F.space.name, "n": F.n,
            "representatives": [[matrix_to_json(r) for r in row] for row in F.representatives]}


# reports


def encode(value):
    """JSON-safe encoding: matrices as {re, im}, infinities as strings, nan as null."""
    if isinstance(value, LevelElement):
        return element_to_json(value)
    if isinstance(value, np.ndarray):
        if value.ndim == 2:
            return matrix_to_json(value)
        return [encode(v) for v in value]
    if isinstance(value, (complex, np.complexfloating)):
        if value.imag == 0:
            return encode(float(value.real))
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "+inf" if v > 0 else "-inf"
        return v
    if isinstance(value, dict):
        return {str(k): encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [encode(v) for v in value]
    if value is None or isinstance(value, str):
        return value
    if hasattr(value, "__dataclass_fields__"):
        return encode({k: getattr(value, k) for k in value.__dataclass_fields__})
    return str(value)


def decode_number(v) -> float:
    if v == "+inf":
        return math.inf
    if v == "-inf":
        return -math.inf
    if v is None:
        return math.nan
    return float(v)


@dataclass
class Report:
    op: str
    space: str | None
    level: int | None
    value: object
    status: str
    witness_residuals: dict = field(default_factory=dict)
    seed: int | None = None
    tolerances: dict = field(default_factory=dict)
    runtime_ms: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return encode({k: getattr(self, k) for k in self.__dataclass_fields__})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, allow_nan=False)

    @classmethod
    def from_dict(cls, obj: dict) -> "Report":
        missing = [k for k in ("op", "space", "level", "value", "status", "witness_residuals",
                               "seed", "tolerances", "runtime_ms") if k not in obj]
        if missing:
            raise FormatError(f"report lacks fields {missing}")
        if obj["status"] not in STATUSES:
            raise FormatError(f"unknown status {obj['status']!r}")
        return cls(**{k: obj[k] for k in cls.__dataclass_fields__ if k in obj})

    @classmethod
    def from_json(cls, text: str) -> "Report":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["field", "index", "re", "im"])
        for key, val in _flatten("", self.to_dict()):
            w.writerow([key] + val)
        return buf.getvalue()


def _flatten(prefix: str, obj):
    """Rows (field, [index, re, im]); matrices become one row per entry, row-major."""
    if isinstance(obj, dict) and set(obj) == {"re", "im"} and isinstance(obj["re"], list):
        re, im = np.asarray(obj["re"]), np.asarray(obj["im"])
        for idx in np.ndindex(re.shape):
            yield prefix, [",".join(map(str, idx)), re[idx], im[idx]]
        return
    if isinstance(obj, dict) and set(obj) == {"re", "im"}:
        yield prefix, ["", obj["re"], obj["im"]]
        return
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(f"{prefix}.{k}" if prefix else k, v)
        return
    if isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _flatten(f"{prefix}[{i}]", v)
        return
    yield prefix, ["", obj, ""]
