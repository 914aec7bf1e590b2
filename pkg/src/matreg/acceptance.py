"""Acceptance criteria 1-9 as runnable checks.

Each ``criterion_k`` returns a :class:`Criterion` with a pass flag and the
numbers behind it.  ``quick=True`` shrinks sample counts for the CLI selftest;
the test suite runs the full counts.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from matreg import atlas
from matreg.conic import ConicProgram, Affine, solve
from matreg.duality import (
    MatrixFunctional,
    arveson_extend,
    bidual_check,
    cp_membership,
    dual_cb_norm,
    extension_pipeline,
    nu,
    nu_dual,
)
from matreg.matspace import (
    build_space,
    compress,
    direct_sum,
    level_norm,
)
from matreg.norms import os_constant_estimate, reg_norm
from matreg.sampling import (
    random_cone_element,
    random_cp_functional,
    random_element,
    random_functional,
    random_hermitian,
)


@dataclass
class Criterion:
    number: int
    title: str
    passed: bool
    details: dict = field(default_factory=dict)
    runtime_s: float = 0.0

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_fmt(v)}" for k, v in self.details.items())
        return f"{flag} criterion {self.number} ({self.title}): {shown} [{self.runtime_s:.1f}s]"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.3g}"
    return str(v)


def nonunital_space():
    """span{diag(1, 2), E_12, E_21} in M_2: I is not in it, so reg and norm can differ."""
    e12 = np.array([[0, 1], [0, 0]], dtype=complex)
    return build_space([np.diag([1.0, 2.0]), e12], name="nonunital:2")


def _timed(fn):
    def run(*args, **kwargs) -> Criterion:
        t0 = time.perf_counter()
        c = fn(*args, **kwargs)
        c.runtime_s = time.perf_counter() - t0
        return c
    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


@_timed
def criterion_1(seed: int = 1, quick: bool = False) -> Criterion:
    """reg_norm equals the level norm on full:3."""
    rng = np.random.default_rng(seed)
    V = atlas.full(3)
    count = 20 if quick else 100
    worst, undecided = 0.0, 0
    t0 = time.perf_counter()
    for i in range(count):
        x = random_element(V, 1 + i % 2, rng)
        r = reg_norm(x)
        if not r.decided or not r.finite:
            undecided += 1
            continue
        worst = max(worst, abs(r.value - level_norm(x)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-5 and undecided == 0 and elapsed <= 60
    return Criterion(1, "full-algebra reg identity", ok,
                     {"samples": count, "max_abs_diff": worst, "undecided": undecided,
                      "seconds": elapsed})


@_timed
def criterion_2(seed: int = 2, quick: bool = False) -> Criterion:
    """corner:2: reg is infinite, nu brackets the norm, the os-constant estimate is 1."""
    rng = np.random.default_rng(seed)
    V = atlas.corner(2)
    count = 6 if quick else 20
    finite, bracket_fail, worst_rel = 0, 0, 0.0
    for i in range(count):
        x = random_element(V, 1 + i % 2, rng)
        nx = level_norm(x)
        if reg_norm(x).status != "infinite":
            finite += 1
        r = nu(x)
        rel = max(abs(r.lower - nx), abs(r.upper - nx)) / nx
        worst_rel = max(worst_rel, rel)
        if not (r.decided and r.lower <= nx * (1 + 5e-3) and r.upper >= nx * (1 - 5e-3)
                and rel <= 5e-3):
            bracket_fail += 1
    est = os_constant_estimate(V, (1, 2), 2 if quick else 5, seed=seed)
    ok = finite == 0 and bracket_fail == 0 and est.estimate <= 1 + 1e-3 and est.undecided == 0
    return Criterion(2, "trivial-cone counterexample", ok,
                     {"samples": count, "finite_reg": finite, "nu_bracket_failures": bracket_fail,
                      "max_rel_nu_error": worst_rel, "os_constant": est.estimate})


@_timed
def criterion_3(seed: int = 3, quick: bool = False) -> Criterion:
    """||F|| <= 2 nu_upper(F) on the duals of full:2 and diag:3."""
    rng = np.random.default_rng(seed)
    count = 6 if quick else 50
    violations, undecided, worst = 0, 0, 0.0
    for V in (atlas.full(2), atlas.diagonal(3)):
        for n in (1, 2):
            for i in range(count):
                F = random_functional(V, n, rng, hermitian=bool(i % 2))
                c = dual_cb_norm(F, samples=2)
                v = nu_dual(F)
                if not (c.decided and v.decided):
                    undecided += 1
                    continue
                worst = max(worst, c.value / v.upper)
                if c.value > 2 * v.upper + 1e-5:
                    violations += 1
    ok = violations == 0 and undecided == 0
    return Criterion(3, "constant 2", ok,
                     {"samples": 4 * count, "violations": violations, "undecided": undecided,
                      "max_norm_over_nu": worst})


@_timed
def criterion_4(seed: int = 4, quick: bool = False) -> Criterion:
    """nu never exceeds the norm, on V and on V*."""
    rng = np.random.default_rng(seed)
    spaces = [atlas.full(2), atlas.diagonal(3), atlas.corner(2), nonunital_space()]
    count = 2 if quick else 8
    violations, checked, undecided, worst = 0, 0, 0, -math.inf
    for V in spaces:
        for n in (1, 2):
            for _ in range(count):
                x = random_element(V, n, rng)
                r = nu(x)
                if not r.decided:
                    undecided += 1
                    continue
                checked += 1
                excess = r.upper - level_norm(x)
                worst = max(worst, excess)
                violations += excess > 1e-6
        for _ in range(count):
            F = random_functional(V, 1, rng)
            c, v = dual_cb_norm(F, samples=2), nu_dual(F)
            if not (c.decided and v.decided):
                undecided += 1
                continue
            checked += 1
            excess = v.upper - c.value
            worst = max(worst, excess)
            violations += excess > 1e-6
    ok = violations == 0 and undecided == 0
    return Criterion(4, "nu domination", ok,
                     {"checked": checked, "violations": violations, "undecided": undecided,
                      "max_nu_minus_norm": worst})


def _reg(x) -> float:
    r = reg_norm(x)
    if not r.decided:
        raise RuntimeError("undecided reg norm")
    return r.value


@_timed
def criterion_5(seed: int = 5, quick: bool = False) -> Criterion:
    """The six reg-norm axioms, 100 samples each, tolerance 1e-6."""
    rng = np.random.default_rng(seed)
    spaces = [nonunital_space(), atlas.full(2)]
    count = 10 if quick else 100
    tol = 1e-6
    fails = {"triangle": 0, "homogeneity": 0, "adjoint": 0, "direct_sum": 0,
             "compression": 0, "positive": 0}
    gap = 0.0
    for i in range(count):
        V = spaces[i % 2]
        x, y = random_element(V, 1, rng), random_element(V, 1, rng)
        rx, ry = _reg(x), _reg(y)
        gap = max(gap, rx / level_norm(x) - 1)
        if _reg(x + y) > rx + ry + tol:
            fails["triangle"] += 1
        lam = complex(rng.normal(), rng.normal())
        if abs(_reg(x * lam) - abs(lam) * rx) > tol:
            fails["homogeneity"] += 1
        if abs(_reg(x.H) - rx) > tol:
            fails["adjoint"] += 1
        s = _reg(direct_sum(x, y))
        if not (max(rx, ry) - tol <= s <= max(rx, ry) + tol):
            fails["direct_sum"] += 1
        z = random_element(V, 2, rng)
        alpha = rng.normal(size=(1, 2)) + 1j * rng.normal(size=(1, 2))
        beta = rng.normal(size=(2, 1)) + 1j * rng.normal(size=(2, 1))
        bound = np.linalg.norm(alpha, 2) * np.linalg.norm(beta, 2) * _reg(z)
        if _reg(compress(z, alpha, beta)) > bound + tol:
            fails["compression"] += 1
        a = random_cone_element(V, 1 + i % 2, rng)
        if a is not None and abs(_reg(a) - level_norm(a)) > tol:
            fails["positive"] += 1
    ok = all(v == 0 for v in fails.values())
    return Criterion(5, "reg-norm axioms", ok,
                     {"samples": count, **fails, "max_reg_over_norm_minus_1": gap})


@_timed
def criterion_6(seed: int = 6, quick: bool = False) -> Criterion:
    """Identity on M_2 is CP; transpose is not, with an explicit witness."""
    V = atlas.full(2)
    ident = MatrixFunctional.from_map(V, lambda e: e, 2)
    trans = MatrixFunctional.from_map(V, lambda e: e.T, 2)
    a = cp_membership(ident, seed=seed)
    b = cp_membership(trans, seed=seed)
    witness_ok = (b.verdict == "certified_no" and b.witness_kind == "cone_element"
                  and b.min_output_eigenvalue <= -0.9)
    ok = a.verdict == "certified_yes" and witness_ok
    return Criterion(6, "CP certification", ok,
                     {"identity": a.verdict, "transpose": b.verdict,
                      "transpose_min_eig": b.min_output_eigenvalue, "witness_level": b.level})


@_timed
def criterion_7(seed: int = 7, quick: bool = False) -> Criterion:
    """Arveson extensions from 3-dim subspaces of M_3, and the corner-unitization pipeline."""
    rng = np.random.default_rng(seed)
    count = 5 if quick else 20
    worst, infeasible = 0.0, 0
    for _ in range(count):
        gens = [random_hermitian(atlas.full(3), 1, rng).concrete for _ in range(3)]
        S = build_space(gens, name="random3")
        f = random_cp_functional(S, 2, rng)
        e = arveson_extend(f)
        if e.status != "feasible":
            infeasible += 1
            continue
        worst = max(worst, e.restriction_residual)
    pipe_fail, phi_worst, corner_worst = 0, 0.0, 0.0
    for V in (atlas.full(2), atlas.diagonal(3), atlas.corner(1)):
        p = extension_pipeline(random_functional(V, 2, rng))
        pipe_fail += not p.ok
        phi_worst = max(phi_worst, p.phi1_norm, p.phi2_norm)
        corner_worst = max(corner_worst, p.corner_residual)
    ok = infeasible == 0 and worst <= 1e-6 and pipe_fail == 0 and phi_worst <= 1 + 1e-4
    return Criterion(7, "Arveson pipeline", ok,
                     {"extensions": count, "infeasible": infeasible, "max_fidelity": worst,
                      "pipeline_failures": pipe_fail, "max_phi_norm": phi_worst,
                      "max_corner_residual": corner_worst})


@_timed
def criterion_8(seed: int = 8, quick: bool = False) -> Criterion:
    """Bidual isometry and order separation on full:2, diag:2, corner:2."""
    iso, sep_fail, pos_fail, undecided, tried = 0.0, 0, 0, 0, 0
    for V in (atlas.full(2), atlas.diagonal(2), atlas.corner(2)):
        r = bidual_check(V, (1, 2), 1 if quick else 3, seed)
        iso = max(iso, r["isometry_residual"])
        tried += r["separation_tried"]
        sep_fail += r["separation_tried"] - r["separation_succeeded"]
        pos_fail += not r["order_positive_ok"]
        undecided += r["undecided"]
    ok = iso <= 1e-5 and sep_fail == 0 and pos_fail == 0 and undecided == 0 and tried > 0
    return Criterion(8, "bidual identification", ok,
                     {"isometry_residual": iso, "separations": tried,
                      "separation_failures": sep_fail, "positivity_failures": pos_fail,
                      "undecided": undecided})


@_timed
def criterion_9(seed: int = 9, quick: bool = False) -> Criterion:
    """lambda_max and trace-norm SDPs against eigen/singular-value solvers."""
    rng = np.random.default_rng(seed)
    count = 10 if quick else 50
    worst, slowest = 0.0, 0.0
    for _ in range(count):
        g = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        A = 0.5 * (g + g.conj().T)
        prog = ConicProgram()
        t = prog.scalar("t")
        prog.add_psd(t.kron_left(np.eye(6)) - A, "bound")
        prog.minimize(t)
        t0 = time.perf_counter()
        sol = solve(prog)
        slowest = max(slowest, time.perf_counter() - t0)
        err = abs(sol.objective - np.linalg.eigvalsh(A)[-1]) if sol.ok else math.inf
        worst = max(worst, err)
    tn_worst = 0.0
    for _ in range(max(3, count // 5)):
        X = rng.normal(size=(4, 3)) + 1j * rng.normal(size=(4, 3))
        prog = ConicProgram()
        W1 = prog.hermitian("W1", 4)
        W2 = prog.hermitian("W2", 3)
        prog.add_psd(Affine.block([[W1, X], [X.conj().T, W2]]), "gadget")
        prog.minimize(0.5 * (W1.trace() + W2.trace()).real())
        sol = solve(prog)
        err = abs(sol.objective - np.linalg.svd(X, compute_uv=False).sum()) if sol.ok else math.inf
        tn_worst = max(tn_worst, err)
    ok = worst <= 1e-7 and slowest < 1.0 and tn_worst <= 1e-6
    return Criterion(9, "solver floor", ok,
                     {"lambda_max_err": worst, "slowest_solve_s": slowest,
                      "trace_norm_err": tn_worst})


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9]


def run_all(quick: bool = False, echo=None) -> list[Criterion]:
    out = []
    for fn in CRITERIA:
        c = fn(quick=quick)
        if echo:
            echo(c.line())
        out.append(c)
    return out
