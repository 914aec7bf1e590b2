from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from matreg import atlas
from matreg.matspace import (
    LevelElement,
    SpaceError,
    build_space,
    compress,
    cone_member,
    direct_sum,
    embed,
    identity_element,
    involution,
    level_norm,
    matrix_unit,
    project,
)
from matreg.sampling import random_cone_element, random_element, random_hermitian

from conftest import random_complex

SPACES = [atlas.full(2), atlas.full(3), atlas.diagonal(3), atlas.corner(1), atlas.corner(2)]


def _gram_ok(space):
    B = space.basis.reshape(space.dim, -1)
    return np.abs(B.conj() @ B.T - np.eye(space.dim)).max() <= 1e-10


# build_space


def test_single_corner_generator_closes_under_adjoint():
    V = build_space([matrix_unit(2, 0, 1)])
    assert V.dim == 2
    assert V.contains(matrix_unit(2, 1, 0))
    assert V.residual(matrix_unit(2, 1, 0)) <= 1e-12


def test_identity_generates_one_dimension():
    assert build_space([np.eye(3)]).dim == 1


def test_redundant_generators_rank(rng):
    A = random_complex(rng, 3, 3)
    gens = [A, A.conj().T, A + A.conj().T]
    V = build_space(gens)
    # rank oracle: the real span of {A, A*} closed under adjoint, via SVD of stacked vectors
    stacked = np.array([g.reshape(-1) for g in gens + [g.conj().T for g in gens]])
    assert V.dim == np.linalg.matrix_rank(stacked, tol=1e-9) == 2


def test_zero_space_rejected():
    with pytest.raises(SpaceError):
        build_space([np.zeros((2, 2))])


def test_mixed_sizes_rejected():
    with pytest.raises((SpaceError, ValueError)):
        build_space([np.eye(2), np.eye(3)])


def test_nonfinite_rejected():
    with pytest.raises((SpaceError, ValueError)):
        build_space([np.array([[np.nan, 0], [0, 1]])])


@pytest.mark.parametrize("V", SPACES, ids=lambda V: V.name)
def test_construction_invariants(V):
    assert _gram_ok(V)
    assert V.adjoint_residual() <= 1e-10
    assert V.dim <= V.k ** 2


@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_random_generators_satisfy_invariants(seed, count):
    rng = np.random.default_rng(seed)
    V = build_space([random_complex(rng, 3, 3) for _ in range(count)])
    assert _gram_ok(V)
    assert V.adjoint_residual() <= 1e-10


# project


def test_project_basis_element(full2):
    el, res = project(full2, full2.basis[1], 1)
    assert res <= 1e-12
    assert np.allclose(el.concrete, full2.basis[1])


def test_project_orthogonal_part(rng):
    V = atlas.diagonal(2)
    M = random_complex(rng, 2, 2)
    M -= np.diag(np.diag(M))
    el, res = project(V, M, 1)
    assert np.allclose(el.concrete, 0)
    assert res == pytest.approx(np.linalg.norm(M), abs=1e-12)


def test_project_splits_inside_and_outside(rng, diag3):
    inside = diag3.synthesize(random_complex(rng, 3))
    outside = np.tensordot(random_complex(rng, len(diag3.complement_basis())),
                           diag3.complement_basis(), axes=1)
    el, res = project(diag3, inside + outside, 1)
    assert np.allclose(el.concrete, inside, atol=1e-12)
    assert res == pytest.approx(np.linalg.norm(outside), rel=1e-10)


def test_level_reconstruction(rng, corner2):
    x = random_element(corner2, 3, rng)
    recon = sum(x.coeffs[p, q, i] * np.kron(matrix_unit(3, p, q), corner2.basis[i])
                for p in range(3) for q in range(3) for i in range(corner2.dim))
    assert np.linalg.norm(recon - x.concrete) <= 1e-9


def test_from_matrix_rejects_outside(diag3):
    with pytest.raises(SpaceError):
        LevelElement.from_matrix(diag3, np.ones((3, 3)), 1)


# involution and norms


def test_involution_fixes_hermitian(rng, full2):
    x = random_hermitian(full2, 2, rng)
    assert np.allclose(involution(x).concrete, x.concrete)


@pytest.mark.parametrize("V", SPACES, ids=lambda V: V.name)
def test_involution_coefficient_law(rng, V):
    x = random_element(V, 2, rng)
    assert np.allclose(involution(x).concrete, x.concrete.conj().T, atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_involution_isometry(rng, n):
    for V in SPACES[:3]:
        for _ in range(50 if n == 1 else 5):
            x = random_element(V, n, rng)
            assert abs(level_norm(involution(x)) - level_norm(x)) <= 1e-12 * max(1, level_norm(x))


def test_identity_has_norm_one(full3, diag3, corner2):
    assert level_norm(identity_element(full3, 2)) == pytest.approx(1.0)
    assert level_norm(identity_element(diag3, 1)) == pytest.approx(1.0)
    assert identity_element(corner2, 1) is None


def test_corner_norm_is_max_block_norm(rng, corner2):
    a, b = random_complex(rng, 2, 2), random_complex(rng, 2, 2)
    z = np.zeros((2, 2))
    x = embed(corner2, np.block([[z, a], [b, z]]))
    expected = max(np.linalg.svd(a, compute_uv=False)[0], np.linalg.svd(b, compute_uv=False)[0])
    assert level_norm(x) == pytest.approx(expected, rel=1e-12)


def test_rank_one_scaling(rng):
    v = random_complex(rng, 3)
    b = np.outer(v, v.conj())
    b /= np.linalg.norm(b)
    V = build_space([b])
    x = embed(V, 2 * b)
    assert level_norm(x) == pytest.approx(2 * np.linalg.eigvalsh(b)[-1], rel=1e-12)


# cone membership


def test_zero_is_positive(corner2):
    assert cone_member(LevelElement.zero(corner2, 2)).member == "yes"


def test_corner_cone_trivial(rng, corner2):
    for _ in range(50):
        assert cone_member(random_hermitian(corner2, 1, rng)).member == "no"


def test_squares_positive_in_full(rng, full3):
    for _ in range(20):
        v = random_complex(rng, 3, 3)
        assert cone_member(embed(full3, v.conj().T @ v)).member == "yes"


def test_marginal_band(full2):
    eps = 5e-8
    x = embed(full2, np.diag([1.0, -eps]))
    assert cone_member(x, 1e-8).member == "marginal"
    assert cone_member(embed(full2, np.diag([1.0, -1e-6])), 1e-8).member == "no"


def test_cone_properness(rng, diag3):
    x = random_cone_element(diag3, 2, rng)
    assert not (cone_member(x) and cone_member(-x))
    tiny = x * 1e-10
    both = cone_member(tiny) and cone_member(-tiny)
    assert not both or level_norm(tiny) <= 10 * 1e-8


def test_compression_preserves_cone(rng, full2, diag3):
    for V in (full2, diag3):
        for _ in range(50):
            x = random_cone_element(V, 2, rng)
            alpha = random_complex(rng, 2, 3)
            assert cone_member(compress(x, alpha.conj().T, alpha)).member == "yes"


# compress and direct sums


def test_compress_identity(rng, full2):
    x = random_element(full2, 2, rng)
    assert np.allclose(compress(x, np.eye(2), np.eye(2)).concrete, x.concrete)


def test_compress_isometry_row(rng, full2):
    a = random_hermitian(full2, 1, rng)
    x = direct_sum(a, a)
    alpha = np.array([[1, 1]]) / np.sqrt(2)
    y = compress(x, alpha, alpha.conj().T)
    assert np.allclose(y.concrete, a.concrete)


def test_compress_submultiplicative(rng, diag3):
    for _ in range(50):
        x = random_element(diag3, 2, rng)
        alpha, beta = random_complex(rng, 3, 2), random_complex(rng, 2, 3)
        lhs = level_norm(compress(x, alpha, beta))
        rhs = np.linalg.norm(alpha, 2) * level_norm(x) * np.linalg.norm(beta, 2)
        assert lhs <= rhs * (1 + 1e-12)


def test_compress_shape_errors(rng, full2):
    with pytest.raises(SpaceError):
        compress(random_element(full2, 2, rng), np.eye(3), np.eye(2))


def test_direct_sum_norms(rng, corner2):
    x, y = random_element(corner2, 1, rng), random_element(corner2, 2, rng)
    nx = level_norm(x)
    assert level_norm(direct_sum(x, LevelElement.zero(corner2, 1))) == pytest.approx(nx, abs=1e-10)
    assert level_norm(direct_sum(x, x)) == pytest.approx(nx, abs=1e-10)
    assert level_norm(direct_sum(x, y)) == pytest.approx(max(nx, level_norm(y)), abs=1e-10)


@given(st.integers(0, 2**32 - 1), st.sampled_from(range(len(SPACES))), st.integers(1, 3))
def test_direct_sum_property(seed, idx, n):
    rng = np.random.default_rng(seed)
    V = SPACES[idx]
    x, y = random_element(V, n, rng), random_element(V, 1, rng)
    assert abs(level_norm(direct_sum(x, y)) - max(level_norm(x), level_norm(y))) <= 1e-10


def test_elements_are_immutable(rng, full2):
    x = random_element(full2, 1, rng)
    with pytest.raises(ValueError):
        x.concrete[0, 0] = 1.0
