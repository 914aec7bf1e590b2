from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from matreg import atlas
from matreg.duality import (
    MatrixFunctional,
    apply,
    arveson_extend,
    attaining_functional,
    bidual_check,
    corner_unitization,
    cp_membership,
    dual_cb_norm,
    extension_pipeline,
    nu,
    nu_dual,
    offdiag,
    phi_witness,
)
from matreg.matspace import (
    LevelElement,
    build_space,
    cone_member,
    embed,
    identity_element,
    level_norm,
)
from matreg.sampling import (
    random_cp_functional,
    random_element,
    random_functional,
    random_hermitian,
    unit_vector,
)
from matreg.serialization import functional_from_json, functional_to_json

from conftest import random_complex


def identity_map(V, n=None):
    return MatrixFunctional.from_map(V, lambda e: e, n or V.k)


def transpose_map(V):
    return MatrixFunctional.from_map(V, lambda e: e.T, V.k)


def swap_eigs(k):
    # oracle: the Choi matrix of the transpose is the swap operator, spectrum {+1, -1}
    swap = np.zeros((k * k, k * k))
    for a in range(k):
        for b in range(k):
            swap[a * k + b, b * k + a] = 1
    return np.linalg.eigvalsh(swap)


# functionals and apply


def test_representatives_projected_into_space(rng, diag3):
    F = MatrixFunctional(diag3, random_complex(rng, 2, 2, 3, 3))
    for i in range(2):
        for j in range(2):
            assert diag3.residual(F.representatives[i, j]) <= 1e-9
    assert F.projection_residual > 0


def test_apply_zero(rng, full2):
    v = random_element(full2, 2, rng)
    assert np.array_equal(apply(MatrixFunctional.zero(full2, 3), v), np.zeros((6, 6)))


def test_trace_functional(full2):
    F = MatrixFunctional(full2, np.eye(2)[None, None])
    v = embed(full2, np.diag([1.0, 0.0]))
    assert apply(F, v)[0, 0] == pytest.approx(1.0)


def test_apply_matches_map(rng, full2):
    A = random_complex(rng, 2, 2)
    fn = lambda e: A @ e @ A.conj().T
    F = MatrixFunctional.from_map(full2, fn, 2)
    v = random_element(full2, 1, rng)
    assert np.allclose(apply(F, v), fn(v.concrete))


@given(st.integers(0, 2**32 - 1))
def test_apply_bilinear(seed):
    rng = np.random.default_rng(seed)
    V = atlas.corner(1)
    F = random_functional(V, 2, rng)
    v, w = random_element(V, 2, rng), random_element(V, 2, rng)
    a = complex(*rng.normal(size=2))
    assert np.allclose(apply(F, v * a + w), a * apply(F, v) + apply(F, w), atol=1e-10)


def test_involution_on_functionals(rng, diag3):
    F = random_functional(diag3, 2, rng)
    v = random_element(diag3, 1, rng)
    lhs = apply(F.adjoint(), v)
    rhs = apply(F, v.H).conj().T
    assert np.allclose(lhs, rhs)


# dual cb-norm


def test_cb_norm_scalar_identity():
    V = build_space([np.eye(1)])
    r = dual_cb_norm(MatrixFunctional(V, np.ones((1, 1, 1, 1))))
    assert r.value == pytest.approx(1.0, abs=1e-6)


def test_cb_norm_trace(full2):
    F = MatrixFunctional(full2, np.eye(2)[None, None])
    r = dual_cb_norm(F)
    assert r.value == pytest.approx(np.linalg.svd(np.eye(2), compute_uv=False).sum(), abs=1e-6)
    assert r.lower <= r.value + 1e-6


def test_cb_norm_corner_coordinate(corner1):
    F = MatrixFunctional.from_map(corner1, lambda e: e[:1, 1:], 1)
    r = dual_cb_norm(F)
    assert r.value == pytest.approx(1.0, abs=1e-6)
    assert r.lower == pytest.approx(1.0, abs=1e-4)


def test_cb_norm_transpose(full2):
    r = dual_cb_norm(transpose_map(full2))
    assert r.value == pytest.approx(2.0, abs=1e-6)


def test_cb_sandwich(rng):
    for V in (atlas.full(2), atlas.diagonal(3), atlas.corner(1)):
        for n in (1, 2):
            r = dual_cb_norm(random_functional(V, n, rng), samples=8, seed=1)
            assert r.decided and r.sandwich_ok
            assert r.lower <= r.value + 1e-6


def test_cb_scaling(rng, diag3):
    F = random_functional(diag3, 2, rng)
    a, b = dual_cb_norm(F).value, dual_cb_norm(F * (-3j)).value
    assert b == pytest.approx(3 * a, rel=1e-6)


# CP membership


def test_identity_is_cp(full2):
    r = cp_membership(identity_map(full2), seed=0)
    assert r.verdict == "certified_yes"
    assert np.linalg.eigvalsh(r.witness)[0] >= -1e-8


def test_transpose_is_not_cp(full2):
    r = cp_membership(transpose_map(full2), seed=0)
    assert r.verdict == "certified_no"
    assert cone_member(r.witness).member == "yes"
    assert r.min_output_eigenvalue == pytest.approx(swap_eigs(2)[0], abs=1e-3)


def test_corner_everything_cp(rng, corner1):
    for _ in range(3):
        F = random_functional(corner1, 2, rng, hermitian=True)
        assert cp_membership(F, seed=0).verdict == "certified_yes"


def test_non_selfadjoint_refuted(rng, full2):
    F = random_functional(full2, 1, rng)
    assert cp_membership(F, seed=0).verdict == "certified_no"


def test_yes_certificate_survives_sampling(rng, diag3):
    F = random_cp_functional(diag3, 2, rng)
    r = cp_membership(F, seed=2)
    assert r.verdict == "certified_yes"
    worst = math.inf
    for _ in range(500):
        v = random_element(diag3, 1 + int(rng.integers(2)), rng)
        p = LevelElement.from_matrix(diag3, v.concrete @ v.concrete.conj().T)
        worst = min(worst, np.linalg.eigvalsh(apply(F, p))[0] / max(1, level_norm(p)))
    assert worst >= -10 * 1e-8


# nu


def test_nu_zero(full2):
    r = nu(LevelElement.zero(full2, 2))
    assert r.lower == r.upper == 0


def test_nu_full_hermitian(rng, full2):
    for _ in range(3):
        x = random_hermitian(full2, 2, rng)
        H = np.block([[np.zeros((4, 4)), x.concrete], [x.concrete, np.zeros((4, 4))]])
        oracle = np.abs(np.linalg.eigvalsh(H)).max()
        r = nu(x)
        assert r.lower - 1e-8 <= oracle <= r.upper / math.cos(math.pi / 64) + 1e-8


def test_nu_corner_equals_norm(rng, corner2):
    for _ in range(3):
        x = random_element(corner2, 1, rng)
        r = nu(x)
        assert abs(r.upper - level_norm(x)) <= 1e-3 * level_norm(x)
        assert abs(r.lower - level_norm(x)) <= 1e-3 * level_norm(x)


def test_nu_grid_sandwich(rng, diag3):
    for _ in range(10):
        x = random_element(diag3, 1, rng)
        for N in (8, 64):
            r = nu(x, N)
            assert r.lower <= r.upper
            assert r.upper <= r.lower / math.cos(math.pi / N) + 1e-8
            assert r.upper <= level_norm(x) + 1e-6


def test_nu_grid_monotone_in_full_mode(rng, diag3):
    x = random_element(diag3, 1, rng)
    slack = [nu(x, N, mode="full").slack for N in (8, 16)]
    assert slack[1] <= slack[0] + 1e-9


def test_nu_full_matches_collapsed(rng, full2):
    x = random_element(full2, 1, rng)
    a, b = nu(x, 16), nu(x, 16, mode="full")
    assert abs(a.upper - b.upper) <= 1e-5 * max(1, a.upper)


def test_nu_rejects_small_grid(rng, full2):
    with pytest.raises(ValueError):
        nu(random_element(full2, 1, rng), 4)


def test_nu_dual_below_cb(rng):
    for V in (atlas.full(2), atlas.diagonal(3)):
        F = random_functional(V, 2, rng)
        r, c = nu_dual(F), dual_cb_norm(F)
        assert r.decided and r.lower_certified
        assert r.upper <= c.value + 1e-6
        assert c.value <= 2 * r.upper + 1e-5


def test_nu_dual_without_unit_not_certified(rng, corner1):
    r = nu_dual(random_functional(corner1, 1, rng))
    assert not r.lower_certified


# phi witness


def _phi_inputs(rng, V, n):
    x = random_element(V, n, rng)
    x = x * (0.5 / level_norm(x))
    a = identity_element(V, n) * 0.9
    return x, a, a


def test_phi_zero(rng, full2):
    x, a, d = _phi_inputs(rng, full2, 1)
    r = phi_witness(x, a, d, unit_vector(2, rng), MatrixFunctional.zero(full2, 1), samples=1)
    assert abs(r["value"]) <= 1e-12 and r["identity_ok"]


def test_phi_identity(rng, full2):
    x, a, d = _phi_inputs(rng, full2, 2)
    r = phi_witness(x, a, d, unit_vector(8, rng), random_functional(full2, 2, rng), samples=2)
    assert r["identity_residual"] <= 1e-8
    assert r["positivity_ok"] and r["contractive_ok"]


def test_phi_norm_chain(rng, full2):
    F = random_functional(full2, 1, rng)
    best = 0.0
    for _ in range(8):
        x, a, d = _phi_inputs(rng, full2, 1)
        r = phi_witness(x, a, d, unit_vector(2, rng), F, samples=1)
        best = max(best, 2 * abs(r["value"]))
    assert best <= dual_cb_norm(F).value + 1e-6


def test_phi_preconditions(rng, full2):
    x, a, d = _phi_inputs(rng, full2, 1)
    with pytest.raises(ValueError):
        phi_witness(x, a * 2, d, unit_vector(2, rng), MatrixFunctional.zero(full2, 1))
    with pytest.raises(ValueError):
        phi_witness(x, a, d, np.ones(3), MatrixFunctional.zero(full2, 1))


# unitization and extensions


def test_unitization_dimension(corner1, diag3):
    X = corner_unitization(diag3)
    assert X.dim == 2 * diag3.dim + 2
    assert X.residual(np.eye(6)) <= 1e-10
    Y = corner_unitization(corner1)
    assert Y.k == 4 and Y.dim == 2 * corner1.dim + 2


def test_arveson_random_kraus(rng):
    for _ in range(3):
        gens = [random_hermitian(atlas.full(3), 1, rng).concrete for _ in range(3)]
        S = build_space(gens)
        f = random_cp_functional(S, 2, rng)
        e = arveson_extend(f)
        assert e.status == "feasible"
        assert e.restriction_residual <= 1e-6
        assert np.linalg.eigvalsh(e.choi)[0] >= -1e-7


def test_arveson_transpose_infeasible(full2):
    assert arveson_extend(transpose_map(full2)).status == "infeasible"


def test_arveson_ucp_needs_unit(rng, corner1):
    with pytest.raises(ValueError):
        arveson_extend(random_cp_functional(corner1, 1, rng), mode="ucp")


def test_pipeline(rng):
    for V in (atlas.full(2), atlas.corner(1)):
        p = extension_pipeline(random_functional(V, 1, rng))
        assert p.ok
        assert p.corner_residual <= 1e-6
        assert p.phi1_norm <= 1 + 1e-4 and p.phi2_norm <= 1 + 1e-4


# bidual


def test_vector_state_attains_identity(full2):
    v = identity_element(full2, 1)
    F = attaining_functional(v)
    assert F.pairing(v) == pytest.approx(1.0, abs=1e-12)
    assert cp_membership(F, seed=0).verdict == "certified_yes"


def test_bidual_diag2():
    r = bidual_check(atlas.diagonal(2), (1, 2), 2, seed=1)
    assert r["isometry_residual"] <= 1e-5 and r["isometry_ok"]


def test_bidual_corner_separates():
    r = bidual_check(atlas.corner(2), (1,), 2, seed=2)
    assert r["separation_tried"] == 2 and r["separation_succeeded"] == 2


# serialization of functionals


def test_functional_json_roundtrip(rng, corner2):
    F = random_functional(corner2, 2, rng)
    G = functional_from_json(corner2, json.loads(json.dumps(functional_to_json(F))))
    assert np.allclose(F.representatives, G.representatives)


def test_offdiag_is_selfadjoint(rng, full2):
    F = random_functional(full2, 2, rng)
    assert offdiag(F).is_hermitian()
