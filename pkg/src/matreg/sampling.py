"""Seeded random elements, cone elements and functionals."""

from __future__ import annotations

import numpy as np

from matreg.conic import ConicProgram, Settings, solve
from matreg.matspace import (
    LevelElement,
    MatrixSpace,
    hermitian_level_basis,
    identity_element,
    project,
)


def _gauss(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def random_element(space: MatrixSpace, n: int, rng: np.random.Generator) -> LevelElement:
    """Independent complex Gaussian coefficients."""
    return LevelElement(space, _gauss(rng, (n, n, space.dim)))


def random_hermitian(space: MatrixSpace, n: int, rng: np.random.Generator) -> LevelElement:
    """GUE sample in M_{nk}, projected onto M_n(V) and re-Hermitized."""
    g = _gauss(rng, (n * space.k, n * space.k))
    x, _ = project(space, 0.5 * (g + g.conj().T), n)
    return LevelElement(space, 0.5 * (x.coeffs + np.conj(np.transpose(x.coeffs, (1, 0, 2)))))


def random_cone_element(space: MatrixSpace, n: int, rng: np.random.Generator,
                        settings: Settings | None = None) -> LevelElement | None:
    """A nonzero element of M_n(V)^+, or None when the cone is {0}.

    With the identity in V a shifted Hermitian sample is used; otherwise a
    random linear functional is minimized over the trace slice of the cone.
    """
    h = random_hermitian(space, n, rng)
    eye = identity_element(space, n)
    if eye is not None:
        lam = np.linalg.eigvalsh(h.concrete)[0]
        return h + (-lam + rng.uniform(0.0, 1.0)) * eye
    basis = hermitian_level_basis(space, n)
    prog = ConicProgram()
    v = prog.in_span("v", basis)
    prog.add_psd(v, "cone")
    prog.add_equality(v.trace() - n, "trace")
    prog.minimize((h.concrete @ v).trace().real())
    sol = solve(prog, settings)
    if not sol.ok:
        return None
    el, _ = project(space, sol.values["v"], n)
    return LevelElement(space, 0.5 * (el.coeffs + np.conj(np.transpose(el.coeffs, (1, 0, 2)))))


def unit_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = _gauss(rng, dim)
    return v / np.linalg.norm(v)


def random_functional(space: MatrixSpace, n: int, rng: np.random.Generator,
                      hermitian: bool = False):
    from matreg.duality import MatrixFunctional

    F = MatrixFunctional.from_coeffs(space, _gauss(rng, (n, n, space.dim)))
    if hermitian:
        F = 0.5 * (F + F.adjoint())
    return F


def random_kraus(k: int, n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Kraus operators K_l (k x n) of a CP map v -> sum_l K_l* v K_l from M_k to M_n."""
    rank = rank or k * n
    return _gauss(rng, (rank, k, n)) / np.sqrt(rank)


def random_cp_functional(space: MatrixSpace, n: int, rng: np.random.Generator,
                         rank: int | None = None):
    """Restriction to V of a random CP map M_k -> M_n."""
    from matreg.duality import MatrixFunctional

    return MatrixFunctional.from_kraus(space, random_kraus(space.k, n, rng, rank))
