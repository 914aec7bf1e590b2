"""Norm-side computations: the regularization norm, order intervals, regularity profiles."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from matreg.conic import Affine, ConicProgram, Settings, Status, solve
from matreg.matspace import (
    DEFAULT_TOL,
    LevelElement,
    MatrixSpace,
    check_limits,
    cone_member,
    hermitian_level_basis,
    level_norm,
    project,
)
from matreg.sampling import random_element, random_hermitian


@dataclass
class RegResult:
    value: float  # math.inf when no positive completion exists
    finite: bool
    witness_a: LevelElement | None
    witness_d: LevelElement | None
    status: str  # optimal | infinite | undecided
    solver_status: str
    residuals: dict = field(default_factory=dict)
    bound: float = math.nan  # best known upper bound when undecided
    runtime_ms: float = 0.0

    @property
    def decided(self) -> bool:
        return self.status != "undecided"


def _element(space: MatrixSpace, m: np.ndarray, n: int) -> LevelElement:
    el, _ = project(space, 0.5 * (m + m.conj().T), n)
    return el


def reg_norm(x: LevelElement, tol: float = DEFAULT_TOL,
             settings: Settings | None = None) -> RegResult:
    """inf max(||a||, ||d||) over a, d in M_n(V) with [[a, x], [x*, d]] >= 0.

    The diagonal blocks of a PSD matrix are PSD, so a and d land in the cone.
    """
    t0 = time.perf_counter()
    space, n = x.space, x.level
    check_limits(space, 2 * n)
    settings = settings or Settings(feas_tol=tol, gap_tol=tol)
    if level_norm(x) == 0.0:
        z = LevelElement.zero(space, n)
        return RegResult(0.0, True, z, z, "optimal", "Optimal", {"completion": 0.0})

    basis = hermitian_level_basis(space, n)
    m = n * space.k
    prog = ConicProgram()
    a = prog.in_span("a", basis)
    d = prog.in_span("d", basis)
    t = prog.scalar("t")
    prog.add_psd(Affine.block([[a, x.concrete], [x.concrete.conj().T, d]]), "completion")
    tI = t.kron_left(np.eye(m))
    prog.add_psd(tI - a, "bound_a")
    prog.add_psd(tI - d, "bound_d")
    prog.minimize(t)
    sol = solve(prog, settings)
    ms = 1e3 * (time.perf_counter() - t0)

    if sol.status is Status.INFEASIBLE:
        return RegResult(math.inf, False, None, None, "infinite", sol.label,
                         {"certificate_margin": sol.certificate.get("margin"),
                          "certificate_residual": sol.certificate.get("residual")},
                         runtime_ms=ms)
    if not sol.ok:
        return RegResult(math.nan, False, None, None, "undecided", sol.label,
                         {"solver": sol.max_residual}, bound=math.inf, runtime_ms=ms)

    A = _element(space, sol.values["a"], n)
    D = _element(space, sol.values["d"], n)
    big = np.block([[A.concrete, x.concrete], [x.concrete.conj().T, D.concrete]])
    residuals = {
        "completion": max(0.0, -float(np.linalg.eigvalsh(big)[0])),
        "subspace_a": project(space, sol.values["a"], n)[1],
        "subspace_d": project(space, sol.values["d"], n)[1],
        "witness_vs_value": abs(max(level_norm(A), level_norm(D)) - sol.objective),
        "solver": sol.max_residual,
        "gap": sol.gap,
    }
    return RegResult(float(sol.objective), True, A, D, "optimal", sol.label, residuals,
                     float(sol.objective), ms)


@dataclass
class OrderResult:
    verdict: str  # holds | fails | not_comparable
    norm_x: float
    norm_y: float
    lower_member: str  # cone_member(y + x)
    upper_member: str  # cone_member(y - x)


def order_interval_check(x: LevelElement, y: LevelElement,
                         tol: float = DEFAULT_TOL) -> OrderResult:
    """Is -y <= x <= y in M_n(V), and if so is ||x|| <= ||y||?"""
    if not (x.is_hermitian(max(tol, 1e-10)) and y.is_hermitian(max(tol, 1e-10))):
        raise ValueError("order intervals need Hermitian elements")
    lo = cone_member(y + x, tol).member
    hi = cone_member(y - x, tol).member
    nx, ny = level_norm(x), level_norm(y)
    if lo == "yes" and hi == "yes":
        verdict = "holds" if nx <= ny + tol * max(1.0, ny) else "fails"
    else:
        verdict = "not_comparable"
    return OrderResult(verdict, nx, ny, lo, hi)


def order_unit_bound(x: LevelElement, settings: Settings | None = None) -> LevelElement | None:
    """Least-norm u in M_n(V) with -u <= x <= u, or None when no such u exists."""
    space, n = x.space, x.level
    prog = ConicProgram()
    u = prog.in_span("u", hermitian_level_basis(space, n))
    t = prog.scalar("t")
    xc = x.concrete
    prog.add_psd(u - xc, "upper")
    prog.add_psd(u + xc, "lower")
    prog.add_psd(t.kron_left(np.eye(n * space.k)) - u, "norm")
    prog.minimize(t)
    sol = solve(prog, settings)
    if not sol.ok:
        return None
    return _element(space, sol.values["u"], n)


@dataclass
class RegularityProfile:
    space: str
    levels: list
    empirical_K: float
    samples: int
    worst_direction: LevelElement | None
    condition1_violations: int
    condition1_checked: int
    infinite_count: int
    undecided: int
    seed: int
    ratios: list = field(default_factory=list)
    runtime_ms: float = 0.0

    @property
    def regular(self) -> bool:
        """No infinite ratio was found (a sampled, not a proved, statement)."""
        return self.infinite_count == 0


def regularity_profile(space: MatrixSpace, levels=(1, 2), samples: int = 20, seed: int = 0,
                       tol: float = DEFAULT_TOL, settings: Settings | None = None
                       ) -> RegularityProfile:
    """Sampled sup of ||x||_reg / ||x|| per level, plus condition (1) bookkeeping.

    Samples alternate between Hermitian (GUE projected onto M_n(V)) and general
    (Gaussian coefficients) elements.  empirical_K is a lower bound on the true
    constant; the sup itself is not computed.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    best, worst, violations, checked, infinite, undecided = -math.inf, None, 0, 0, 0, 0
    ratios = []
    for n in levels:
        check_limits(space, 2 * n)
        for s in range(samples):
            hermitian = s % 2 == 0
            x = random_hermitian(space, n, rng) if hermitian else random_element(space, n, rng)
            nx = level_norm(x)
            if nx == 0:
                continue
            r = reg_norm(x, tol, settings)
            if not r.decided:
                undecided += 1
                continue
            ratio = r.value / nx
            ratios.append(ratio)
            if not r.finite:
                infinite += 1
            if ratio > best:
                best, worst = ratio, x
            if hermitian:
                u = order_unit_bound(x, settings)
                if u is not None:
                    checked += 1
                    if order_interval_check(x, u, 1e-6).verdict == "fails":
                        violations += 1
    return RegularityProfile(space.name, list(levels), max(ratios, default=1.0), len(ratios),
                             worst, violations, checked, infinite, undecided, seed, ratios,
                             1e3 * (time.perf_counter() - t0))


@dataclass
class OsConstantResult:
    estimate: float
    samples: int
    undecided: int
    worst_direction: LevelElement | None
    seed: int
    grid: int
    runtime_ms: float = 0.0


def os_constant_estimate(space: MatrixSpace, levels=(1, 2), samples: int = 10, grid: int = 64,
                         seed: int = 0, settings: Settings | None = None) -> OsConstantResult:
    """Sampled sup of ||x|| / nu_upper(x): a lower bound on the operator-system constant."""
    from matreg.duality import nu

    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    best, worst, count, undecided = 0.0, None, 0, 0
    for n in levels:
        for _ in range(samples):
            x = random_element(space, n, rng)
            nx = level_norm(x)
            if nx == 0:
                continue
            r = nu(x, grid, settings=settings)
            if not r.decided:
                undecided += 1
                continue
            count += 1
            ratio = math.inf if r.upper == 0 else nx / r.upper
            if ratio > best:
                best, worst = ratio, x
    return OsConstantResult(best, count, undecided, worst, seed, grid,
                            1e3 * (time.perf_counter() - t0))

