"""Involutive subspaces of M_k, their matrix levels, and the inherited cones.

A :class:`MatrixSpace` stores a Hilbert-Schmidt orthonormal basis made of
Hermitian matrices.  A complex subspace closed under the adjoint always has
such a basis, and with it the adjoint of an element is just the conjugate
transpose of its coefficient blocks.

Inner product convention: ``<A, B> = Tr(A* B)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

BASIS_TOL = 1e-10
RECON_TOL = 1e-9
DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class Limits:
    max_level: int = 6
    max_dim: int = 8


LIMITS = Limits()


class SpaceError(ValueError):
    pass


def hs_inner(a: np.ndarray, b: np.ndarray) -> complex:
    return complex(np.vdot(a, b))


def spectral_norm(m: np.ndarray) -> float:
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def matrix_unit(n: int, p: int, q: int) -> np.ndarray:
    e = np.zeros((n, n), dtype=complex)
    e[p, q] = 1.0
    return e


def check_finite(m: np.ndarray, what: str = "matrix") -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if not np.all(np.isfinite(m)):
        raise SpaceError(f"{what} has non-finite entries")
    return m


@dataclass(frozen=True, eq=False)
class MatrixSpace:
    """Adjoint-closed subspace V of M_k with a Hermitian HS-orthonormal basis."""

    ambient_dim: int
    basis: np.ndarray  # (d, k, k)
    name: str = "V"

    def __post_init__(self):
        b = np.array(self.basis, dtype=complex)
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)
        k, d = self.ambient_dim, b.shape[0]
        if b.ndim != 3 or b.shape[1:] != (k, k):
            raise SpaceError(f"basis must have shape (d, {k}, {k})")
        if d == 0:
            raise SpaceError("the zero space is not supported")
        if d > k * k:
            raise SpaceError("more basis elements than the ambient dimension allows")
        flat = b.reshape(d, -1)
        gram = flat.conj() @ flat.T
        if np.abs(gram - np.eye(d)).max() > BASIS_TOL:
            raise SpaceError("basis is not Hilbert-Schmidt orthonormal")
        if self.adjoint_residual() > BASIS_TOL:
            raise SpaceError("span of the basis is not closed under the adjoint")

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def k(self) -> int:
        return self.ambient_dim

    def coefficients(self, m: np.ndarray) -> np.ndarray:
        """HS coefficients ``Tr(b_i* m)`` of a k x k matrix (or a stack of them)."""
        m = np.asarray(m, dtype=complex)
        return np.einsum("iab,...ab->...i", self.basis.conj(), m)

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        return np.einsum("...i,iab->...ab", np.asarray(coeffs, dtype=complex), self.basis)

    def project_matrix(self, m: np.ndarray) -> np.ndarray:
        return self.synthesize(self.coefficients(m))

    def residual(self, m: np.ndarray) -> float:
        return float(np.linalg.norm(np.asarray(m) - self.project_matrix(m)))

    def adjoint_residual(self) -> float:
        adj = np.conj(np.swapaxes(self.basis, 1, 2))
        return max(self.residual(a) for a in adj)

    def contains(self, m: np.ndarray, tol: float = BASIS_TOL) -> bool:
        return self.residual(m) <= tol * max(1.0, float(np.linalg.norm(m)))

    def complement_basis(self) -> np.ndarray:
        """Hermitian HS-orthonormal basis of the orthogonal complement in M_k."""
        k = self.ambient_dim
        full = _hermitian_units(k)
        return _extend_orthonormal(self.basis, full)[self.dim:]

    def __repr__(self) -> str:
        return f"MatrixSpace({self.name!r}, k={self.ambient_dim}, dim={self.dim})"


def _hermitian_units(k: int) -> np.ndarray:
    out = []
    s = 1 / np.sqrt(2)
    for a in range(k):
        out.append(matrix_unit(k, a, a))
    for a in range(k):
        for b in range(a + 1, k):
            out.append(s * (matrix_unit(k, a, b) + matrix_unit(k, b, a)))
            out.append(s * 1j * (matrix_unit(k, a, b) - matrix_unit(k, b, a)))
    return np.array(out)


def _real_vec(h: np.ndarray) -> np.ndarray:
    # for Hermitian matrices Tr(AB) equals the Euclidean product of these vectors
    return np.concatenate([h.real.reshape(-1), h.imag.reshape(-1)])


def _mgs(candidates: Sequence[np.ndarray], cutoff: float, start: Sequence[np.ndarray] = ()):
    """Modified Gram-Schmidt (with one re-orthogonalization pass) on Hermitian matrices."""
    kept = [np.array(b) for b in start]
    for c in candidates:
        v = np.array(c, dtype=complex)
        for _ in range(2):
            for q in kept:
                v = v - np.real(np.vdot(q, v)) * q
        nv = np.linalg.norm(v)
        if nv > cutoff:
            kept.append(v / nv)
    return kept


def _extend_orthonormal(basis: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    return np.array(_mgs(candidates, 1e-8, start=basis))


def build_space(generators: Sequence[np.ndarray], tol: float = BASIS_TOL,
                name: str = "V") -> MatrixSpace:
    """Smallest adjoint-closed subspace containing the generators.

    The span of ``g`` and ``g*`` equals the complex span of the Hermitian
    matrices ``(g + g*)/2`` and ``(g - g*)/(2i)``; those are orthonormalized
    over the reals with a rank cutoff ``tol * (largest candidate norm)``.
    """
    gens = [check_finite(g, "generator") for g in generators]
    if not gens:
        raise SpaceError("empty generator list")
    k = gens[0].shape[0]
    for g in gens:
        if g.ndim != 2 or g.shape != (k, k):
            raise SpaceError(f"generators must all be square of size {k}")
    if tol <= 0:
        raise SpaceError("tol must be positive")
    cands = []
    for g in gens:
        cands.append(0.5 * (g + g.conj().T))
        cands.append(-0.5j * (g - g.conj().T))
    largest = max(np.linalg.norm(c) for c in cands)
    if largest == 0.0:
        raise SpaceError("all generators are zero")
    basis = _mgs(cands, tol * largest)
    return MatrixSpace(k, np.array(basis), name)


# ---------------------------------------------------------------------------
# matrix levels


@dataclass(frozen=True, eq=False)
class LevelElement:
    """Element x of M_n(V), kept both as an nk x nk matrix and as coefficients.

    ``coeffs[p, q, i]`` is the coefficient of ``E_pq (x) b_i``.
    """

    space: MatrixSpace
    coeffs: np.ndarray  # (n, n, d)
    concrete: np.ndarray = field(default=None)  # (nk, nk)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        n = c.shape[0]
        if c.ndim != 3 or c.shape != (n, n, self.space.dim):
            raise SpaceError(f"coeffs must have shape (n, n, {self.space.dim})")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        recon = assemble(self.space, c)
        if self.concrete is None:
            m = recon
        else:
            m = np.array(self.concrete, dtype=complex)
            if np.linalg.norm(m - recon) > RECON_TOL * max(1.0, np.linalg.norm(recon)):
                raise SpaceError("concrete matrix does not match the coefficients")
        m.setflags(write=False)
        object.__setattr__(self, "concrete", m)

    @property
    def level(self) -> int:
        return self.coeffs.shape[0]

    n = level

    @classmethod
    def zero(cls, space: MatrixSpace, n: int) -> "LevelElement":
        return cls(space, np.zeros((n, n, space.dim), dtype=complex))

    @classmethod
    def from_matrix(cls, space: MatrixSpace, m: np.ndarray, n: int | None = None,
                    tol: float = 1e-9) -> "LevelElement":
        """Exact constructor: raises unless ``m`` lies in M_n(V)."""
        el, res = project(space, m, n)
        if res > tol * max(1.0, float(np.linalg.norm(m))):
            raise SpaceError(f"matrix is not in M_n(V) (residual {res:.2e})")
        return el

    def block(self, p: int, q: int) -> np.ndarray:
        k = self.space.k
        return self.concrete[p * k:(p + 1) * k, q * k:(q + 1) * k]

    def __add__(self, other: "LevelElement") -> "LevelElement":
        _same(self, other)
        return LevelElement(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other: "LevelElement") -> "LevelElement":
        _same(self, other)
        return LevelElement(self.space, self.coeffs - other.coeffs)

    def __neg__(self) -> "LevelElement":
        return LevelElement(self.space, -self.coeffs)

    def __mul__(self, s) -> "LevelElement":
        return LevelElement(self.space, complex(s) * self.coeffs)

    __rmul__ = __mul__

    @property
    def H(self) -> "LevelElement":
        return involution(self)

    def is_hermitian(self, tol: float = BASIS_TOL) -> bool:
        return hermitian_residual(self) <= tol * max(1.0, level_norm(self))

    def __repr__(self) -> str:
        return f"LevelElement(space={self.space.name!r}, n={self.level})"


def _same(x: LevelElement, y: LevelElement) -> None:
    if x.space is not y.space:
        raise SpaceError("elements live in different spaces")
    if x.level != y.level:
        raise SpaceError("elements live at different levels")


def assemble(space: MatrixSpace, coeffs: np.ndarray) -> np.ndarray:
    n, k = coeffs.shape[0], space.k
    blocks = np.einsum("pqi,iab->paqb", coeffs, space.basis)
    return blocks.reshape(n * k, n * k)


def split_blocks(m: np.ndarray, k: int) -> np.ndarray:
    """(nk, nk) -> (n, n, k, k) with ``out[p, q]`` the (p, q) block."""
    n = m.shape[0] // k
    return m.reshape(n, k, n, k).transpose(0, 2, 1, 3)


def project(space: MatrixSpace, m: np.ndarray, n: int | None = None):
    """HS-nearest element of M_n(V) and the HS distance to it."""
    m = check_finite(m)
    k = space.k
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % k:
        raise SpaceError(f"matrix of shape {m.shape} is not nk x nk for k={k}")
    if n is not None and m.shape[0] != n * k:
        raise SpaceError(f"expected a {n * k} x {n * k} matrix")
    blocks = split_blocks(m, k)
    coeffs = space.coefficients(blocks)
    el = LevelElement(space, coeffs)
    return el, float(np.linalg.norm(m - el.concrete))


def embed(space: MatrixSpace, v: np.ndarray) -> LevelElement:
    """A single matrix of V as an element of M_1(V)."""
    return LevelElement.from_matrix(space, v, 1)


def involution(x: LevelElement) -> LevelElement:
    return LevelElement(x.space, np.conj(np.transpose(x.coeffs, (1, 0, 2))))


def hermitian_residual(x: LevelElement) -> float:
    return float(np.abs(x.concrete - x.concrete.conj().T).max(initial=0.0))


def level_norm(x: LevelElement) -> float:
    return spectral_norm(x.concrete)


@dataclass(frozen=True)
class ConeMembershipResult:
    member: Literal["yes", "no", "marginal"]
    min_eigenvalue: float
    subspace_residual: float
    hermitian_residual: float
    tol: float

    def __bool__(self) -> bool:
        return self.member == "yes"


def cone_member(x: LevelElement, tol: float = DEFAULT_TOL) -> ConeMembershipResult:
    """Tri-state membership in M_n(V)^+ = M_n(V) cap PSD.

    Tolerances are relative to ``max(1, ||x||)``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    m = x.concrete
    scale = max(1.0, level_norm(x))
    herm = hermitian_residual(x) / scale
    lam = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0]) / scale
    _, sub = project(x.space, m)
    sub /= scale
    if lam >= -tol and herm <= tol and sub <= tol:
        member = "yes"
    elif lam < -10 * tol or herm > 10 * tol or sub > 10 * tol:
        member = "no"
    else:
        member = "marginal"
    return ConeMembershipResult(member, lam * scale, sub * scale, herm * scale, tol)


def compress(x: LevelElement, alpha: np.ndarray, beta: np.ndarray) -> LevelElement:
    """``(alpha (x) I_k) x (beta (x) I_k)`` for alpha n x m and beta m x n."""
    alpha = np.atleast_2d(np.asarray(alpha, dtype=complex))
    beta = np.atleast_2d(np.asarray(beta, dtype=complex))
    m = x.level
    if alpha.shape[1] != m or beta.shape[0] != m or alpha.shape[0] != beta.shape[1]:
        raise SpaceError(f"shapes {alpha.shape}, {beta.shape} do not fit level {m}")
    return LevelElement(x.space, np.einsum("np,pqi,qm->nmi", alpha, x.coeffs, beta))


def direct_sum(x: LevelElement, y: LevelElement) -> LevelElement:
    if x.space is not y.space:
        raise SpaceError("direct sum needs elements of the same space")
    m, n, d = x.level, y.level, x.space.dim
    c = np.zeros((m + n, m + n, d), dtype=complex)
    c[:m, :m] = x.coeffs
    c[m:, m:] = y.coeffs
    return LevelElement(x.space, c)


def block_element(blocks: list[list[LevelElement]]) -> LevelElement:
    """Assemble a block matrix of level elements into a single element."""
    space = blocks[0][0].space
    rows = [np.concatenate([b.coeffs for b in row], axis=1) for row in blocks]
    return LevelElement(space, np.concatenate(rows, axis=0))


def identity_element(space: MatrixSpace, n: int, tol: float = 1e-9) -> LevelElement | None:
    """I_{nk} as an element of M_n(V), or None when I_k is not in V."""
    eye = np.eye(space.k)
    if not space.contains(eye, tol):
        return None
    return LevelElement.from_matrix(space, np.eye(n * space.k), n)


def level_basis(space: MatrixSpace, n: int) -> np.ndarray:
    """Complex basis ``E_pq (x) b_i`` of M_n(V), shape (n*n*d, nk, nk)."""
    out = []
    for p in range(n):
        for q in range(n):
            for b in space.basis:
                out.append(np.kron(matrix_unit(n, p, q), b))
    return np.array(out)


def hermitian_level_basis(space: MatrixSpace, n: int) -> np.ndarray:
    """Real HS-orthonormal basis of the Hermitian part of M_n(V), n*n*d elements."""
    s = 1 / np.sqrt(2)
    out = []
    for p in range(n):
        for b in space.basis:
            out.append(np.kron(matrix_unit(n, p, p), b))
    for p in range(n):
        for q in range(p + 1, n):
            sym = s * (matrix_unit(n, p, q) + matrix_unit(n, q, p))
            anti = s * 1j * (matrix_unit(n, p, q) - matrix_unit(n, q, p))
            for b in space.basis:
                out.append(np.kron(sym, b))
                out.append(np.kron(anti, b))
    return np.array(out)


def check_limits(space: MatrixSpace, n: int, limits: Limits = LIMITS) -> None:
    if n < 1:
        raise SpaceError("level must be positive")
    if n > limits.max_level:
        raise SpaceError(f"level {n} exceeds the cap {limits.max_level}")
    if space.k > limits.max_dim:
        raise SpaceError(f"ambient dimension {space.k} exceeds the cap {limits.max_dim}")
