from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from matreg import atlas
from matreg.acceptance import nonunital_space
from matreg.matspace import (
    LevelElement,
    block_element,
    compress,
    cone_member,
    direct_sum,
    embed,
    identity_element,
    level_norm,
)
from matreg.norms import (
    order_interval_check,
    order_unit_bound,
    os_constant_estimate,
    reg_norm,
    regularity_profile,
)
from matreg.sampling import random_cone_element, random_element, random_hermitian

from conftest import random_complex


def _check_witness(x, r):
    big = block_element([[r.witness_a, x], [x.H, r.witness_d]]).concrete
    assert np.linalg.eigvalsh(big)[0] >= -1e-7 * max(1, r.value)
    assert max(level_norm(r.witness_a), level_norm(r.witness_d)) == pytest.approx(r.value, abs=1e-6)


# reg_norm


def test_full_algebra_equals_spectral_norm(rng, full3):
    for n in (1, 2):
        for _ in range(5):
            x = random_element(full3, n, rng)
            r = reg_norm(x)
            assert r.status == "optimal"
            assert r.value == pytest.approx(level_norm(x), abs=1e-5)
            _check_witness(x, r)


def test_feasible_point_oracle(rng, full3):
    # a = d = ||x|| I is feasible, so reg <= ||x||: the SDP must not exceed it
    x = random_element(full3, 1, rng)
    nx = level_norm(x)
    big = np.block([[nx * np.eye(3), x.concrete], [x.concrete.conj().T, nx * np.eye(3)]])
    assert np.linalg.eigvalsh(big)[0] >= -1e-10
    assert reg_norm(x).value <= nx + 1e-6


def test_corner_is_infinite(rng, corner2):
    x = random_element(corner2, 1, rng)
    r = reg_norm(x)
    assert r.status == "infinite" and math.isinf(r.value) and not r.finite
    assert r.witness_a is None


def test_zero(corner2):
    r = reg_norm(LevelElement.zero(corner2, 2))
    assert r.value == 0 and r.finite
    assert level_norm(r.witness_a) == 0 and level_norm(r.witness_d) == 0


def test_domination_nonunital(rng):
    V = nonunital_space()
    for _ in range(10):
        x = random_element(V, 1 + int(rng.integers(2)), rng)
        r = reg_norm(x)
        assert r.finite
        assert r.value >= level_norm(x) - 1e-6
        _check_witness(x, r)


def test_nonunital_gap_exists():
    # x = E_12: reg needs a, d in span{diag(1,2)} with ad >= |x|^2 entrywise -> strictly above 1
    V = nonunital_space()
    x = embed(V, np.array([[0, 1], [0, 0]], dtype=complex))
    r = reg_norm(x)
    assert r.value > level_norm(x) + 1e-3


V_AX = [nonunital_space(), atlas.full(2), atlas.diagonal(2)]


@given(st.integers(0, 2**32 - 1), st.sampled_from(range(len(V_AX))))
def test_reg_axioms(seed, idx):
    rng = np.random.default_rng(seed)
    V = V_AX[idx]
    x, y = random_element(V, 1, rng), random_element(V, 1, rng)
    rx, ry = reg_norm(x).value, reg_norm(y).value
    assert reg_norm(x + y).value <= rx + ry + 1e-6
    lam = complex(*rng.normal(size=2))
    assert abs(reg_norm(x * lam).value - abs(lam) * rx) <= 1e-6 * max(1, rx)
    assert abs(reg_norm(x.H).value - rx) <= 1e-6
    s = reg_norm(direct_sum(x, y)).value
    assert abs(s - max(rx, ry)) <= 1e-6


def test_compression_bound(rng):
    V = nonunital_space()
    for _ in range(5):
        z = random_element(V, 2, rng)
        alpha, beta = random_complex(rng, 1, 2), random_complex(rng, 2, 1)
        bound = np.linalg.norm(alpha, 2) * np.linalg.norm(beta, 2) * reg_norm(z).value
        assert reg_norm(compress(z, alpha, beta)).value <= bound + 1e-6


def test_positive_elements(rng):
    for V in V_AX:
        a = random_cone_element(V, 2, rng)
        assert abs(reg_norm(a).value - level_norm(a)) <= 1e-6


# order intervals


def test_order_self(rng, full2):
    x = random_cone_element(full2, 1, rng)
    assert order_interval_check(x, x).verdict == "holds"


def test_order_identity_bound(rng, diag3):
    x = random_hermitian(diag3, 2, rng)
    y = identity_element(diag3, 2) * level_norm(x)
    assert order_interval_check(x, y, 1e-7).verdict == "holds"


def test_order_shifted(rng, full2):
    for _ in range(10):
        x = random_hermitian(full2, 1, rng)
        y = x + identity_element(full2, 1) * 0.3
        r = order_interval_check(x, y, 1e-7)
        # -y <= x needs x + y = 2x + 0.3 I >= 0, which fails for indefinite x
        expected = np.linalg.eigvalsh(2 * x.concrete + 0.3 * np.eye(2))[0] >= 0
        assert (r.verdict == "holds") == expected
        if r.verdict == "holds":
            assert r.norm_x <= r.norm_y


def test_order_rejects_non_hermitian(rng, full2):
    x = random_element(full2, 1, rng)
    with pytest.raises(ValueError):
        order_interval_check(x, x)


def test_order_unit_bound(rng, diag3, corner2):
    x = random_hermitian(diag3, 1, rng)
    u = order_unit_bound(x)
    assert level_norm(u) == pytest.approx(level_norm(x), abs=1e-6)
    assert order_unit_bound(random_hermitian(corner2, 1, rng)) is None


# profiles


def test_full_profile():
    prof = regularity_profile(atlas.full(2), (1, 2), 100, seed=3)
    assert prof.samples == 200
    assert abs(prof.empirical_K - 1) <= 1e-4
    assert prof.condition1_violations == 0 and prof.condition1_checked > 0
    assert min(prof.ratios) >= 1 - 1e-6


def test_diag_profile():
    prof = regularity_profile(atlas.diagonal(3), (1, 2), 20, seed=4)
    assert abs(prof.empirical_K - 1) <= 1e-4
    assert prof.condition1_violations == 0 and prof.regular


def test_corner_profile_non_regular():
    prof = regularity_profile(atlas.corner(2), (1,), 4, seed=5)
    assert not prof.regular and math.isinf(prof.empirical_K)


def test_profile_reproducible():
    a = regularity_profile(atlas.full(2), (1,), 6, seed=9)
    b = regularity_profile(atlas.full(2), (1,), 6, seed=9)
    assert a.ratios == b.ratios


def test_os_constant_full_and_corner():
    assert os_constant_estimate(atlas.full(2), (1, 2), 3, seed=1).estimate <= 1 + 1e-3
    assert os_constant_estimate(atlas.corner(2), (1, 2), 3, seed=2).estimate <= 1 + 1e-3


def test_os_constant_lower_bound_of_one():
    r = os_constant_estimate(atlas.diagonal(3), (1,), 4, seed=3)
    assert r.estimate >= 1 - 1e-6 and r.undecided == 0
