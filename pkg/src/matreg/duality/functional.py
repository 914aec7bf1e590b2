"""Matrix functionals F = [f_ij] in M_n(V*), stored by HS Riesz representatives.

Conventions used everywhere downstream:

* ``f_ij(v) = Tr(R_ij* v)``, so ``R_ij = sum_l c_ijl b_l`` gives ``f_ij(b_l) = conj(c_ijl)``.
* ``apply(F, v)`` at level m is ``sum_pq E_pq (x) F(v_pq)``: level index outer,
  functional index inner.
* ``choi()`` is the Choi matrix ``sum_ab E_ab (x) G(E_ab)`` of the canonical
  extension ``G = F o P_V`` to M_k, input factor first.
* The involution is ``F*(v) = F(v*)*``, i.e. ``R_ij -> R_ji*``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from matreg.matspace import (
    LevelElement,
    MatrixSpace,
    SpaceError,
    check_finite,
)


@dataclass(frozen=True, eq=False)
class MatrixFunctional:
    space: MatrixSpace
    representatives: np.ndarray  # (n, n, k, k); projected into V on construction
    projection_residual: float = field(default=0.0, init=False)

    def __post_init__(self):
        r = check_finite(np.array(self.representatives, dtype=complex), "representatives")
        k = self.space.k
        if r.ndim != 4 or r.shape[0] != r.shape[1] or r.shape[2:] != (k, k):
            raise SpaceError(f"representatives must have shape (n, n, {k}, {k}), got {r.shape}")
        coeffs = self.space.coefficients(r)
        canon = np.einsum("ijl,lab->ijab", coeffs, self.space.basis)
        object.__setattr__(self, "projection_residual", float(np.linalg.norm(r - canon)))
        canon.setflags(write=False)
        coeffs.setflags(write=False)
        object.__setattr__(self, "representatives", canon)
        object.__setattr__(self, "_coeffs", coeffs)

    # constructors

    @classmethod
    def from_coeffs(cls, space: MatrixSpace, coeffs: np.ndarray) -> "MatrixFunctional":
        coeffs = np.asarray(coeffs, dtype=complex)
        return cls(space, np.einsum("ijl,lab->ijab", coeffs, space.basis))

    @classmethod
    def from_map(cls, space: MatrixSpace, fn, n: int) -> "MatrixFunctional":
        """Restriction to V of a linear map ``fn: M_k -> M_n``."""
        k = space.k
        reps = np.zeros((n, n, k, k), dtype=complex)
        for a in range(k):
            for b in range(k):
                e = np.zeros((k, k), dtype=complex)
                e[a, b] = 1.0
                reps[:, :, a, b] = np.conj(np.asarray(fn(e), dtype=complex))
        return cls(space, reps)

    @classmethod
    def from_kraus(cls, space: MatrixSpace, kraus: np.ndarray) -> "MatrixFunctional":
        """Restriction of ``v -> sum_l K_l* v K_l`` (each K_l is k x n)."""
        kraus = np.asarray(kraus, dtype=complex)
        return cls(space, np.einsum("lai,lbj->ijab", kraus, kraus.conj()))

    @classmethod
    def zero(cls, space: MatrixSpace, n: int) -> "MatrixFunctional":
        return cls(space, np.zeros((n, n, space.k, space.k), dtype=complex))

    # basic structure

    @property
    def n(self) -> int:
        return self.representatives.shape[0]

    size = n

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    def __call__(self, v: np.ndarray) -> np.ndarray:
        """F(v) for a single k x k matrix v (the V-component is used)."""
        v = np.asarray(v, dtype=complex)
        return np.einsum("ijab,ab->ij", self.representatives.conj(), v)

    def adjoint(self) -> "MatrixFunctional":
        return MatrixFunctional(
            self.space, np.conj(np.transpose(self.representatives, (1, 0, 3, 2))))

    @property
    def H(self) -> "MatrixFunctional":
        return self.adjoint()

    def hermitian_residual(self) -> float:
        return float(np.abs(self.representatives - self.adjoint().representatives).max(initial=0.0))

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return self.hermitian_residual() <= tol * max(1.0, self.scale())

    def scale(self) -> float:
        return float(np.abs(self.representatives).max(initial=0.0))

    def __add__(self, other: "MatrixFunctional") -> "MatrixFunctional":
        _same(self, other)
        return MatrixFunctional(self.space, self.representatives + other.representatives)

    def __sub__(self, other: "MatrixFunctional") -> "MatrixFunctional":
        _same(self, other)
        return MatrixFunctional(self.space, self.representatives - other.representatives)

    def __neg__(self) -> "MatrixFunctional":
        return MatrixFunctional(self.space, -self.representatives)

    def __mul__(self, s) -> "MatrixFunctional":
        # scalar multiples act on values: (sF)(v) = s F(v), so R scales by conj(s)
        return MatrixFunctional(self.space, np.conj(complex(s)) * self.representatives)

    __rmul__ = __mul__

    def block_matrix(self) -> np.ndarray:
        """``[R_ij]`` as an nk x nk matrix; its HS pairing with [v_ij] is sum_ij f_ij(v_ij)."""
        n, k = self.n, self.space.k
        return self.representatives.transpose(0, 2, 1, 3).reshape(n * k, n * k)

    def choi(self) -> np.ndarray:
        n, k = self.n, self.space.k
        return np.conj(self.representatives).transpose(2, 0, 3, 1).reshape(k * n, k * n)

    def pairing(self, v: LevelElement) -> complex:
        """The scalar ``sum_ij f_ij(v_ij)`` for v at level n."""
        if v.level != self.n:
            raise SpaceError("pairing needs an element at the functional's size")
        return complex(np.vdot(self.block_matrix(), v.concrete))

    def __repr__(self) -> str:
        return f"MatrixFunctional(space={self.space.name!r}, n={self.n})"


def _same(F: MatrixFunctional, G: MatrixFunctional) -> None:
    if F.space is not G.space or F.n != G.n:
        raise SpaceError("functionals live on different spaces or sizes")


def apply(F: MatrixFunctional, v: LevelElement) -> np.ndarray:
    """``F_m(v) = [F(v_pq)]``, an mn x mn matrix in (level, functional) order."""
    if v.space is not F.space:
        raise SpaceError("functional and element live in different spaces")
    m, n = v.level, F.n
    out = np.einsum("ijl,pql->piqj", np.conj(F.coeffs), v.coeffs)
    return out.reshape(m * n, m * n)


def linear_form(F: MatrixFunctional, u: np.ndarray, w: np.ndarray, m: int) -> np.ndarray:
    """Matrix L (mk x mk) with ``Tr(L v) = u* F_m(v) w`` for every v in M_m(V)."""
    n, k = F.n, F.space.k
    u = np.asarray(u, dtype=complex).reshape(m, n)
    w = np.asarray(w, dtype=complex).reshape(m, n)
    # coefficient of v along b_l is Tr(b_l v) because the basis is Hermitian
    blocks = np.einsum("pi,qj,ijl,lab->qapb", u.conj(), w, np.conj(F.coeffs), F.space.basis)
    return blocks.reshape(m * k, m * k)


def offdiag(F: MatrixFunctional) -> MatrixFunctional:
    """``[[0, F], [F*, 0]]`` in M_2n(V*)."""
    n, k = F.n, F.space.k
    reps = np.zeros((2 * n, 2 * n, k, k), dtype=complex)
    reps[:n, n:] = F.representatives
    reps[n:, :n] = F.adjoint().representatives
    return MatrixFunctional(F.space, reps)


def extension_apply(choi: np.ndarray, x: np.ndarray, n: int) -> np.ndarray:
    """Evaluate the map M_k -> M_n with the given Choi matrix (input factor first)."""
    k = x.shape[0]
    J = np.asarray(choi).reshape(k, n, k, n)
    return np.einsum("ab,aibj->ij", x, J)


def functional_from_values(space: MatrixSpace, values: np.ndarray) -> MatrixFunctional:
    """Functional with ``F(b_l) = values[l]`` (shape (d, n, n))."""
    values = np.asarray(values, dtype=complex)
    return MatrixFunctional.from_coeffs(space, np.conj(np.transpose(values, (1, 2, 0))))

