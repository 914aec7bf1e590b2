"""Modeling layer for semidefinite programs over complex Hermitian matrices.

Every decision variable is a real coordinate vector.  A variable *block*
maps its coordinates to a complex matrix through a fixed basis tensor, so
Hermitian matrices, general complex matrices, real scalars and coefficient
vectors of a subspace all share one representation.  Expressions are
affine, matrix valued, and carry their coefficient tensors per block.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class VarBlock:
    name: str
    index: int
    offset: int
    basis: np.ndarray  # (size, rows, cols); value = sum_j x_j basis[j]

    @property
    def size(self) -> int:
        return self.basis.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.basis.shape[1], self.basis.shape[2]


def hermitian_basis(m: int) -> np.ndarray:
    """Real-orthonormal basis of the m x m Hermitian matrices (m*m elements)."""
    out = np.zeros((m * m, m, m), dtype=complex)
    j = 0
    s = 1.0 / np.sqrt(2.0)
    for a in range(m):
        out[j, a, a] = 1.0
        j += 1
    for a in range(m):
        for b in range(a + 1, m):
            out[j, a, b] = out[j, b, a] = s
            j += 1
            out[j, a, b] = -1j * s
            out[j, b, a] = 1j * s
            j += 1
    return out


def complex_basis(rows: int, cols: int) -> np.ndarray:
    out = np.zeros((2 * rows * cols, rows, cols), dtype=complex)
    j = 0
    for a in range(rows):
        for b in range(cols):
            out[j, a, b] = 1.0
            out[j + 1, a, b] = 1j
            j += 2
    return out


class Affine:
    """Complex matrix expression ``const + sum_blocks coef_block . x_block``."""

    __array_ufunc__ = None  # let ``ndarray @ Affine`` reach __rmatmul__

    def __init__(self, const: np.ndarray, coef: dict[int, np.ndarray] | None = None):
        const = np.asarray(const, dtype=complex)
        if const.ndim == 0:
            const = const.reshape(1, 1)
        self.const = const
        self.coef = dict(coef or {})

    @property
    def shape(self) -> tuple[int, int]:
        return self.const.shape

    @classmethod
    def constant(cls, value) -> "Affine":
        return cls(np.asarray(value, dtype=complex))

    @staticmethod
    def lift(value) -> "Affine":
        return value if isinstance(value, Affine) else Affine.constant(value)

    # -- arithmetic -------------------------------------------------------
    def _combine(self, other, sign: float) -> "Affine":
        other = Affine.lift(other)
        if other.shape != self.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        coef = dict(self.coef)
        for k, v in other.coef.items():
            coef[k] = coef[k] + sign * v if k in coef else sign * v
        return Affine(self.const + sign * other.const, coef)

    def __add__(self, other):
        return self._combine(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __rsub__(self, other):
        return Affine.lift(other)._combine(self, -1.0)

    def __neg__(self):
        return Affine(-self.const, {k: -v for k, v in self.coef.items()})

    def __mul__(self, s):
        if not np.isscalar(s):
            raise TypeError("use @ for matrix products")
        return Affine(s * self.const, {k: s * v for k, v in self.coef.items()})

    __rmul__ = __mul__

    def __matmul__(self, right):
        right = np.asarray(right, dtype=complex)
        return Affine(self.const @ right, {k: v @ right for k, v in self.coef.items()})

    def __rmatmul__(self, left):
        left = np.asarray(left, dtype=complex)
        return Affine(left @ self.const,
                      {k: np.einsum("ab,jbc->jac", left, v) for k, v in self.coef.items()})

    @property
    def H(self) -> "Affine":
        # coordinates are real, so the adjoint acts on each coefficient
        return Affine(self.const.conj().T,
                      {k: np.conj(np.swapaxes(v, 1, 2)) for k, v in self.coef.items()})

    def trace(self) -> "Affine":
        return Affine(np.trace(self.const).reshape(1, 1),
                      {k: np.trace(v, axis1=1, axis2=2).reshape(-1, 1, 1)
                       for k, v in self.coef.items()})

    def real(self) -> "Affine":
        return Affine(self.const.real.astype(complex),
                      {k: v.real.astype(complex) for k, v in self.coef.items()})

    def kron_left(self, c: np.ndarray) -> "Affine":
        """``c (x) self``."""
        c = np.asarray(c, dtype=complex)
        return Affine(np.kron(c, self.const),
                      {k: np.stack([np.kron(c, m) for m in v]) for k, v in self.coef.items()})

    def kron_right(self, c: np.ndarray) -> "Affine":
        """``self (x) c``."""
        c = np.asarray(c, dtype=complex)
        return Affine(np.kron(self.const, c),
                      {k: np.stack([np.kron(m, c) for m in v]) for k, v in self.coef.items()})

    def partial_trace_first(self, d1: int) -> "Affine":
        """Trace out the first tensor factor of dimension d1."""
        r, c = self.shape
        d2r, d2c = r // d1, c // d1

        def tr(m):
            return np.einsum("aiaj->ij", m.reshape(d1, d2r, d1, d2c))

        def trb(v):
            return np.einsum("naiaj->nij", v.reshape(v.shape[0], d1, d2r, d1, d2c))

        return Affine(tr(self.const), {k: trb(v) for k, v in self.coef.items()})

    @staticmethod
    def block(rows: list[list]) -> "Affine":
        """Assemble a block matrix; ``None`` or scalar 0 entries are zero blocks."""
        heights = []
        for row in rows:
            h = None
            for e in row:
                if isinstance(e, Affine) or (e is not None and np.ndim(e) == 2):
                    h = np.shape(e)[0] if not isinstance(e, Affine) else e.shape[0]
                    break
            if h is None:
                raise ValueError("every block row needs one sized entry")
            heights.append(h)
        widths = []
        for j in range(len(rows[0])):
            w = None
            for row in rows:
                e = row[j]
                if isinstance(e, Affine) or (e is not None and np.ndim(e) == 2):
                    w = np.shape(e)[1] if not isinstance(e, Affine) else e.shape[1]
                    break
            if w is None:
                raise ValueError("every block column needs one sized entry")
            widths.append(w)
        R, C = sum(heights), sum(widths)
        const = np.zeros((R, C), dtype=complex)
        coef: dict[int, np.ndarray] = {}
        r0 = 0
        for i, row in enumerate(rows):
            c0 = 0
            for j, e in enumerate(row):
                h, w = heights[i], widths[j]
                if e is not None and not (np.isscalar(e) and e == 0):
                    e = Affine.lift(e)
                    if e.shape != (h, w):
                        raise ValueError(f"block ({i},{j}) has shape {e.shape}, expected {(h, w)}")
                    const[r0:r0 + h, c0:c0 + w] = e.const
                    for k, v in e.coef.items():
                        if k not in coef:
                            # block sizes are fixed per variable block
                            coef[k] = np.zeros((v.shape[0], R, C), dtype=complex)
                        coef[k][:, r0:r0 + h, c0:c0 + w] += v
                c0 += w
            r0 += h
        return Affine(const, coef)

    # -- evaluation -------------------------------------------------------
    def value(self, blocks: list[VarBlock], x: np.ndarray) -> np.ndarray:
        out = self.const.copy()
        for k, v in self.coef.items():
            b = blocks[k]
            out = out + np.tensordot(x[b.offset:b.offset + b.size], v, axes=1)
        return out

    def homogeneous(self) -> "Affine":
        return Affine(np.zeros_like(self.const), self.coef)


@dataclass
class ConicProgram:
    """minimize objective  s.t.  equalities == 0,  psd expressions >= 0.

    Matrix variables are Hermitian (or subspace-restricted) blocks, free
    variables are real scalars or general complex matrices.  The objective is
    the real part of a 1x1 affine expression.
    """

    blocks: list[VarBlock] = field(default_factory=list)
    objective: Affine = field(default_factory=lambda: Affine.constant(0.0))
    equalities: list[tuple[str, Affine]] = field(default_factory=list)
    psd: list[tuple[str, Affine]] = field(default_factory=list)

    @property
    def n_real(self) -> int:
        return sum(b.size for b in self.blocks)

    def _add_block(self, name: str, basis: np.ndarray) -> Affine:
        basis = np.asarray(basis, dtype=complex)
        if basis.ndim != 3 or basis.shape[0] == 0:
            raise ValueError(f"variable {name!r} needs a nonempty (size, rows, cols) basis")
        blk = VarBlock(name, len(self.blocks), self.n_real, basis)
        self.blocks.append(blk)
        return Affine(np.zeros(blk.shape, dtype=complex), {blk.index: basis})

    def hermitian(self, name: str, m: int) -> Affine:
        return self._add_block(name, hermitian_basis(m))

    def complex(self, name: str, rows: int, cols: int) -> Affine:
        return self._add_block(name, complex_basis(rows, cols))

    def scalar(self, name: str) -> Affine:
        return self._add_block(name, np.ones((1, 1, 1), dtype=complex))

    def in_span(self, name: str, basis: np.ndarray) -> Affine:
        """Variable ranging over the real span of the given matrices."""
        return self._add_block(name, basis)

    def minimize(self, expr) -> None:
        expr = Affine.lift(expr)
        if expr.shape != (1, 1):
            raise ValueError("objective must be scalar")
        self.objective = expr

    def maximize(self, expr) -> None:
        self.minimize(-Affine.lift(expr))

    def add_equality(self, expr, label: str = "") -> None:
        self.equalities.append((label or f"eq{len(self.equalities)}", Affine.lift(expr)))

    def add_psd(self, expr, label: str = "") -> None:
        expr = Affine.lift(expr)
        r, c = expr.shape
        if r != c:
            raise ValueError(f"PSD constraint {label!r} is not square")
        herm = np.abs(expr.const - expr.const.conj().T).max(initial=0.0)
        for v in expr.coef.values():
            herm = max(herm, np.abs(v - np.conj(np.swapaxes(v, 1, 2))).max(initial=0.0))
        if herm > 1e-12 * max(1.0, np.abs(expr.const).max(initial=0.0)):
            raise ValueError(f"PSD constraint {label!r} is not Hermitian (residual {herm:.2e})")
        self.psd.append((label or f"psd{len(self.psd)}", expr))

    def coefficient_columns(self, expr: Affine) -> np.ndarray:
        """Dense tensor (n_real, rows, cols) of the linear part of ``expr``."""
        out = np.zeros((self.n_real,) + expr.shape, dtype=complex)
        for k, v in expr.coef.items():
            b = self.blocks[k]
            out[b.offset:b.offset + b.size] = v
        return out

    def evaluate(self, expr: Affine, x: np.ndarray) -> np.ndarray:
        return expr.value(self.blocks, x)

    def unpack(self, x: np.ndarray) -> dict[str, np.ndarray]:
        out = {}
        for b in self.blocks:
            out[b.name] = np.tensordot(x[b.offset:b.offset + b.size], b.basis, axes=1)
        return out

    def to_json(self) -> str:
        """Self-describing dump for cross-checking against external solvers."""

        def mat(a):
            return {"re": np.real(a).tolist(), "im": np.imag(a).tolist()}

        def expr_json(e: Affine):
            cols = self.coefficient_columns(e)
            return {"const": mat(e.const),
                    "terms": [{"var": int(j), "coef": mat(cols[j])}
                              for j in range(self.n_real) if np.any(cols[j] != 0)]}

        doc = {
            "variables": [{"name": b.name, "offset": b.offset, "size": b.size,
                           "shape": list(b.shape)} for b in self.blocks],
            "objective": {"sense": "minimize", "expr": expr_json(self.objective.real())},
            "equalities": [{"label": lab, "expr": expr_json(e)} for lab, e in self.equalities],
            "psd": [{"label": lab, "expr": expr_json(e)} for lab, e in self.psd],
        }
        return json.dumps(doc)
