from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from matreg.conic import Affine, ConicProgram, Settings, Status, feasibility, realify, solve
from matreg.conic.solver import TOLERANCE_LADDER

from conftest import random_complex


def _herm(rng, m):
    g = random_complex(rng, m, m)
    return 0.5 * (g + g.conj().T)


def _lambda_max_program(A):
    prog = ConicProgram()
    t = prog.scalar("t")
    prog.add_psd(t.kron_left(np.eye(len(A))) - A, "bound")
    prog.minimize(t)
    return prog


# realify


def test_realify_identity():
    assert np.array_equal(realify(np.eye(3)), np.eye(6))


def test_realify_spectrum():
    H = np.array([[0, 1j], [-1j, 0]])
    assert np.allclose(np.sort(np.linalg.eigvalsh(realify(H))), [-1, -1, 1, 1])


def test_realify_inner_product_factor_two(rng):
    for _ in range(20):
        A, B = _herm(rng, 4), _herm(rng, 4)
        lhs = np.sum(realify(A) * realify(B))
        assert lhs == pytest.approx(2 * np.vdot(A, B).real, rel=1e-12)


def test_realify_doubles_eigenvalues(rng):
    for _ in range(100):
        H = _herm(rng, 3)
        ev = np.linalg.eigvalsh(H)
        assert np.allclose(np.linalg.eigvalsh(realify(H)), np.repeat(ev, 2), atol=1e-9)


def test_realify_rejects_non_hermitian(rng):
    with pytest.raises(ValueError):
        realify(random_complex(rng, 3, 3))


# solve


def test_lambda_max(rng):
    for _ in range(5):
        A = _herm(rng, 6)
        sol = solve(_lambda_max_program(A))
        assert sol.status is Status.OPTIMAL
        assert sol.objective == pytest.approx(np.linalg.eigvalsh(A)[-1], abs=1e-7)
        assert sol.gap <= 1e-8 and sol.max_residual <= 1e-8


def test_trace_norm(rng):
    X = random_complex(rng, 3, 4)
    prog = ConicProgram()
    W1, W2 = prog.hermitian("W1", 3), prog.hermitian("W2", 4)
    prog.add_psd(Affine.block([[W1, X], [X.conj().T, W2]]), "gadget")
    prog.minimize(0.5 * (W1.trace() + W2.trace()).real())
    sol = solve(prog)
    assert sol.ok
    assert sol.objective == pytest.approx(np.linalg.svd(X, compute_uv=False).sum(), abs=1e-6)


def test_negative_trace_infeasible():
    prog = ConicProgram()
    X = prog.hermitian("X", 3)
    prog.add_psd(X, "psd")
    prog.add_equality(X.trace() + 1, "trace")
    sol = solve(prog)
    assert sol.status is Status.INFEASIBLE
    assert sol.certificate["margin"] > 1e-8


def test_unbounded_detected():
    prog = ConicProgram()
    t = prog.scalar("t")
    prog.add_psd(t.kron_left(np.eye(2)), "pos")
    prog.maximize(t)
    assert solve(prog).status in (Status.UNBOUNDED, Status.NUMERICAL_LIMIT)


# feasibility


def test_feasible_trace_one():
    prog = ConicProgram()
    X = prog.hermitian("X", 3)
    prog.add_psd(X, "psd")
    prog.add_equality(X.trace() - 1, "trace")
    sol = feasibility(prog)
    assert sol.label == "Feasible"
    Xv = sol.values["X"]
    assert abs(np.trace(Xv) - 1) <= 1e-8
    assert np.linalg.eigvalsh(Xv)[0] >= -1e-8


def test_coordinate_equality_infeasible():
    prog = ConicProgram()
    X = prog.hermitian("X", 2)
    prog.add_psd(X, "psd")
    prog.add_equality(X + np.eye(2), "fix")
    assert feasibility(prog).status is Status.INFEASIBLE


def test_witness_satisfies_equalities(rng):
    prog = ConicProgram()
    X = prog.hermitian("X", 3)
    prog.add_psd(X, "psd")
    C = _herm(rng, 3)
    target = np.linalg.eigvalsh(C)[-1] - 0.5
    prog.add_equality((X @ C).trace().real() - target * (X.trace().real()), "mix")
    prog.add_equality(X.trace() - 1, "trace")
    sol = feasibility(prog)
    assert sol.ok
    Xv = sol.values["X"]
    assert abs(np.trace(Xv @ C).real - target) <= 1e-8
    assert abs(np.trace(Xv) - 1) <= 1e-8


# structure


def test_determinism(rng):
    A = _herm(rng, 5)
    a, b = solve(_lambda_max_program(A)), solve(_lambda_max_program(A))
    assert a.status == b.status
    assert f"{a.objective:.12g}" == f"{b.objective:.12g}"


def test_non_hermitian_constraint_rejected(rng):
    prog = ConicProgram()
    t = prog.scalar("t")
    with pytest.raises(ValueError):
        prog.add_psd(t.kron_left(np.eye(2)) - random_complex(rng, 2, 2), "bad")


def test_constant_program():
    prog = ConicProgram()
    prog.add_psd(Affine.constant(np.eye(2)), "const")
    assert solve(prog).ok
    prog2 = ConicProgram()
    prog2.add_psd(Affine.constant(-np.eye(2)), "const")
    assert solve(prog2).status is Status.INFEASIBLE


def test_program_dump_is_json(rng):
    prog = _lambda_max_program(_herm(rng, 3))
    doc = json.loads(prog.to_json())
    assert doc["variables"][0]["name"] == "t"
    assert doc["objective"]["sense"] == "minimize"


def test_iteration_cap_gives_numerical_limit(rng):
    A = _herm(rng, 6)
    capped = solve(_lambda_max_program(A), Settings(max_iter=1))
    assert capped.status is Status.NUMERICAL_LIMIT
    assert capped.iterations <= len(TOLERANCE_LADDER)


@given(st.integers(0, 2**32 - 1), st.integers(2, 5))
def test_lambda_max_property(seed, m):
    rng = np.random.default_rng(seed)
    A = _herm(rng, m)
    sol = solve(_lambda_max_program(A))
    assert sol.ok
    assert abs(sol.objective - np.linalg.eigvalsh(A)[-1]) <= 1e-7 * max(1, abs(sol.objective))
