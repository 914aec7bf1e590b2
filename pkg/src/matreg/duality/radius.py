"""The modified numerical radius nu on V and on V*, and the phi_{x, xi} witness."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from matreg.conic import Affine, ConicProgram, Settings, hermitian_basis, solve
from matreg.duality.cb import dual_cb_norm
from matreg.duality.functional import MatrixFunctional, apply, offdiag
from matreg.matspace import (
    DEFAULT_TOL,
    LevelElement,
    block_element,
    check_limits,
    cone_member,
    hermitian_level_basis,
    level_norm,
    project,
    spectral_norm,
)
from matreg.sampling import random_cp_functional, random_functional

MIN_GRID = 8


@dataclass
class NuResult:
    lower: float
    upper: float
    grid: int
    theta: float = 0.0
    T1: np.ndarray | None = None  # contractive representative (trace norm <= 1)
    T2: np.ndarray | None = None  # positive representative, T1 - T2 orthogonal to the level
    decided: bool = True
    status: str = "Optimal"
    mode: str = "collapsed"
    dual_bound: float = np.inf
    residuals: dict = field(default_factory=dict)
    grid_values: list = field(default_factory=list)
    runtime_ms: float = 0.0
    lower_certified: bool = True

    @property
    def slack(self) -> float:
        return 1.0 / np.cos(np.pi / self.grid)


def _check_grid(grid: int) -> None:
    if grid < MIN_GRID:
        raise ValueError(f"grid size must be at least {MIN_GRID}, got {grid}")


def _trace_norm(m: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvalsh(0.5 * (m + m.conj().T))).sum())


def dilation(x: LevelElement) -> LevelElement:
    """``[[0, x], [x*, 0]]`` in M_2n(V)."""
    z = LevelElement.zero(x.space, x.level)
    return block_element([[z, x], [x.H, z]])


def _bracket(lower: float, dual: float, grid: int) -> float:
    return max(lower, min(lower / np.cos(np.pi / grid), dual))


def nu(x: LevelElement, grid: int = 64, mode: str = "collapsed",
       settings: Settings | None = None) -> NuResult:
    """Bounds on nu(x) = sup |phi([[0, x], [x*, 0]])| over positive contractive phi.

    ``collapsed`` solves one program: conjugation by diag(I, -I) maps the
    dilation H to -H and preserves cone and norm, so the Hermitian phase sup
    is attained at theta = 0.  ``full`` solves one program per grid phase with
    general (not necessarily Hermitian) positive functionals.
    """
    _check_grid(grid)
    if mode not in ("collapsed", "full"):
        raise ValueError("mode must be 'collapsed' or 'full'")
    t0 = time.perf_counter()
    space, n = x.space, x.level
    check_limits(space, 2 * n)
    if level_norm(x) == 0.0:
        return NuResult(0.0, 0.0, grid, mode=mode, dual_bound=0.0)
    if mode == "full":
        return _nu_full(x, grid, settings, t0)

    H = dilation(x).concrete
    m = H.shape[0]
    prog = ConicProgram()
    K = prog.in_span("K", hermitian_level_basis(space, 2 * n))
    t = prog.scalar("t")
    tI = t.kron_left(np.eye(m))
    prog.add_psd(tI - H - K, "upper")
    prog.add_psd(tI + H + K, "lower")
    prog.add_psd(K, "cone")
    prog.minimize(t)
    sol = solve(prog, settings)
    ms = 1e3 * (time.perf_counter() - t0)
    if not sol.ok:
        return NuResult(0.0, level_norm(x), grid, decided=False, status=sol.label,
                        runtime_ms=ms)

    Kv = sol.values["K"]
    dual = spectral_norm(H + Kv)
    Z1, Z2, Z3 = sol.psd_duals
    T1 = Z1 - Z2
    w, U = np.linalg.eigh(0.5 * (Z3 + Z3.conj().T))
    T2 = (U * np.clip(w, 0.0, None)) @ U.conj().T
    # move T1 onto T2's class so the two representatives define the same functional
    P = lambda M: project(space, M, 2 * n)[0].concrete  # noqa: E731
    T1 = T1 + P(T2 - T1)
    T1 = 0.5 * (T1 + T1.conj().T)
    tn = _trace_norm(T1)
    val = float(np.real(np.trace(T2 @ H)))
    lower = max(0.0, val) / max(1.0, tn)
    residuals = {
        "solver": sol.max_residual,
        "gap": sol.gap,
        "cone_K": max(0.0, -float(np.linalg.eigvalsh(Kv)[0])),
        "trace_norm_T1": tn,
    }
    return NuResult(lower, _bracket(lower, dual, grid), grid, 0.0, T1, T2, True, sol.label,
                    "collapsed", dual, residuals, [], ms)


def _nu_full(x: LevelElement, grid: int, settings, t0) -> NuResult:
    space, n = x.space, x.level
    H = dilation(x).concrete
    m = H.shape[0]
    basis = hermitian_level_basis(space, 2 * n)
    values, worst_gap, duals = [], 0.0, []
    for j in range(grid):
        theta = 2 * np.pi * j / grid
        prog = ConicProgram()
        K = prog.in_span("K", basis)
        A1 = prog.in_span("A1", basis)
        A2 = prog.in_span("A2", basis)
        t = prog.scalar("t")
        # Re phi >= 0 on the cone from K; Im phi = 0 on span(cone) = cone - cone
        M = np.exp(-1j * theta) * H + K + 1j * (A1 - A2)
        tI = t.kron_left(np.eye(m))
        prog.add_psd(Affine.block([[tI, M], [M.H, tI]]), "norm")
        for lab, e in (("cone", K), ("span+", A1), ("span-", A2)):
            prog.add_psd(e, lab)
        prog.minimize(t)
        sol = solve(prog, settings)
        if not sol.ok:
            return NuResult(0.0, level_norm(x), grid, decided=False, status=sol.label,
                            mode="full", runtime_ms=1e3 * (time.perf_counter() - t0))
        values.append(float(sol.objective))
        duals.append(float(sol.certificate["dual_objective"]))
        worst_gap = max(worst_gap, sol.gap)
    j = int(np.argmax(duals))
    lower = max(0.0, duals[j])
    upper = _bracket(lower, max(values), grid)
    return NuResult(lower, upper, grid, 2 * np.pi * j / grid, decided=True, mode="full",
                    dual_bound=max(values), residuals={"gap": worst_gap},
                    grid_values=values, runtime_ms=1e3 * (time.perf_counter() - t0))


def nu_dual(F: MatrixFunctional, grid: int = 64, tol: float = DEFAULT_TOL,
            settings: Settings | None = None) -> NuResult:
    """Bounds on nu of F viewed in the dual space M_n(V*).

    Functionals on M_N(V*) are ``G -> Tr(Y J_G)`` with Y Hermitian in
    conj(V) (x) M_N.  Positivity on CP-extendable maps is Y >= 0; the norm is
    the dual of the cb-norm, bounded through the two-block gadget
    ``[[I (x) s1, Y], [Y, I (x) s2]] >= 0`` with ``(Tr s1 + Tr s2)/2 <= 1``.

    Every CP map extends when I is in V, and then both bounds are certified.
    Otherwise the feasible functionals form a superset of the positive ones:
    the upper bound stays valid, the lower one is flagged uncertified.
    """
    _check_grid(grid)
    t0 = time.perf_counter()
    V, n, k = F.space, F.n, F.space.k
    N = 2 * n
    check_limits(V, N)
    if F.scale() == 0.0:
        return NuResult(0.0, 0.0, grid, mode="dual", dual_bound=0.0)
    JH = offdiag(F).choi()
    ybasis = np.array([np.kron(b.T, h) for b in V.basis for h in hermitian_basis(N)])
    prog = ConicProgram()
    Y = prog.in_span("Y", ybasis)
    s1 = prog.hermitian("s1", N)
    s2 = prog.hermitian("s2", N)
    prog.add_psd(Y, "positive")
    prog.add_psd(Affine.block([[s1.kron_left(np.eye(k)), Y], [Y, s2.kron_left(np.eye(k))]]),
                 "gadget")
    prog.add_psd(Affine.constant(np.eye(1)) - 0.5 * (s1.trace() + s2.trace()), "ball")
    prog.maximize((JH @ Y).trace().real())
    sol = solve(prog, settings)
    ms = 1e3 * (time.perf_counter() - t0)
    if not sol.ok:
        return NuResult(0.0, np.inf, grid, decided=False, status=sol.label, mode="dual",
                        runtime_ms=ms)

    Yv, S1, S2 = sol.values["Y"], sol.values["s1"], sol.values["s2"]
    gad = np.block([[np.kron(np.eye(k), S1), Yv], [Yv, np.kron(np.eye(k), S2)]])
    eps = max(0.0, -float(np.linalg.eigvalsh(gad)[0]))
    norm_bound = 0.5 * float(np.real(np.trace(S1) + np.trace(S2))) + N * eps
    y_min = float(np.linalg.eigvalsh(Yv)[0])
    val = float(np.real(np.trace(Yv @ JH)))
    lower = max(0.0, val) / max(1.0, norm_bound) if y_min >= -tol else 0.0
    dual = -float(sol.certificate["dual_objective"])
    residuals = {"solver": sol.max_residual, "gap": sol.gap, "positivity": max(0.0, -y_min),
                 "gadget": eps}
    exact = V.contains(np.eye(k), 1e-9)
    return NuResult(lower, _bracket(lower, dual, grid), grid, 0.0, Yv, Yv, True, sol.label,
                    "dual", dual, residuals, [], ms, exact)


# ---------------------------------------------------------------------------
# the phi_{x, xi} functional


def selection_pattern(n: int) -> np.ndarray:
    """0/1 matrix picking the (p, i) and (n+p, n+i) coordinates, p, i < n, of C^{2n} (x) C^{2n}."""
    N = 2 * n
    rows = [p * N + i for p in range(n) for i in range(n)]
    rows += [(n + p) * N + n + i for p in range(n) for i in range(n)]
    P = np.zeros((2 * n * n, N * N))
    P[np.arange(len(rows)), rows] = 1.0
    return P


def phi_value(G: MatrixFunctional, big: LevelElement, xi: np.ndarray, P: np.ndarray) -> complex:
    """``1/2 <P G_2n(big) P* xi, xi>``."""
    return 0.5 * complex(np.vdot(xi, P @ apply(G, big) @ P.T @ xi))


def phi_witness(x: LevelElement, a: LevelElement, d: LevelElement, xi: np.ndarray,
                F: MatrixFunctional, samples: int = 4, seed: int = 0, tol: float = DEFAULT_TOL,
                settings: Settings | None = None) -> dict:
    """Build phi_{x, xi}, evaluate it on [[0, F], [F*, 0]] and check its three properties."""
    t0 = time.perf_counter()
    n = x.level
    if F.n != n or a.level != n or d.level != n:
        raise ValueError("x, a, d and F must share the level n")
    xi = np.asarray(xi, dtype=complex).reshape(-1)
    if xi.size != 2 * n * n:
        raise ValueError(f"xi must have length {2 * n * n}")
    if np.linalg.norm(xi) > 1 + 1e-12:
        raise ValueError("xi must have norm at most one")
    if max(level_norm(a), level_norm(d)) >= 1:
        raise ValueError("a and d must have norm below one")
    big = block_element([[a, x], [x.H, d]])
    cm = cone_member(big, tol)
    if cm.member != "yes":
        raise ValueError(f"[[a, x], [x*, d]] is not in the cone (min eigenvalue {cm.min_eigenvalue:.2e})")

    P = selection_pattern(n)
    value = phi_value(offdiag(F), big, xi, P)
    Fx = apply(F, x)
    z = np.zeros_like(Fx)
    rhs = 0.5 * complex(np.vdot(xi, np.block([[z, Fx], [Fx.conj().T, z]]) @ xi))
    identity_residual = abs(value - rhs)

    rng = np.random.default_rng(seed)
    min_pos = np.inf
    for _ in range(samples):
        G = random_cp_functional(x.space, 2 * n, rng)
        min_pos = min(min_pos, phi_value(G, big, xi, P).real)
    max_abs = 0.0
    undecided = 0
    for _ in range(samples):
        G = random_functional(x.space, 2 * n, rng)
        nrm = dual_cb_norm(G, samples=2, settings=settings)
        if not nrm.decided or nrm.value == 0:
            undecided += 1
            continue
        max_abs = max(max_abs, abs(phi_value(G, big, xi, P)) / nrm.value)
    return {
        "op": "phi-witness",
        "value": value,
        "rhs": rhs,
        "identity_residual": identity_residual,
        "identity_ok": identity_residual <= 1e-8,
        "min_on_positive_samples": float(min_pos),
        "positivity_ok": bool(min_pos >= -tol),
        "max_abs_on_unit_samples": float(max_abs),
        "contractive_ok": bool(max_abs <= 1 + 1e-6),
        "undecided": undecided,
        "seed": seed,
        "runtime_ms": 1e3 * (time.perf_counter() - t0),
    }
