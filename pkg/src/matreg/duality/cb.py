"""Dual cb-norms, CP certificates and CP extensions.

Every quantity here is one semidefinite program over an extension of F to
the whole of M_k: the extension is free along the HS-complement of V.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from matreg.conic import Affine, ConicProgram, Settings, solve
from matreg.duality.functional import (
    MatrixFunctional,
    apply,
    extension_apply,
    functional_from_values,
    linear_form,
)
from matreg.matspace import (
    DEFAULT_TOL,
    LevelElement,
    MatrixSpace,
    build_space,
    check_limits,
    cone_member,
    hermitian_level_basis,
    level_norm,
    matrix_unit,
    project,
    spectral_norm,
)
from matreg.sampling import random_cone_element, random_element, unit_vector


def complement_space(space: MatrixSpace) -> MatrixSpace | None:
    """V-perp inside M_k as a space of its own, or None when V = M_k."""
    c = space.complement_basis()
    if len(c) == 0:
        return None
    return MatrixSpace(space.k, c, name=f"{space.name}-perp")


def _hermitize(el: LevelElement) -> LevelElement:
    return LevelElement(el.space, 0.5 * (el.coeffs + np.conj(np.transpose(el.coeffs, (1, 0, 2)))))


# ---------------------------------------------------------------------------
# dual cb-norm


@dataclass
class CbNormResult:
    value: float  # SDP optimum; nan when undecided
    lower: float  # sampled lower bound
    upper: float
    decided: bool
    status: str
    extension_choi: np.ndarray | None = None
    gap: float = np.nan
    max_residual: float = np.nan
    samples: int = 0
    seed: int = 0
    runtime_ms: float = 0.0

    @property
    def sandwich_ok(self) -> bool:
        return self.lower <= self.upper + 1e-6 * max(1.0, self.upper)


def _extension_choi_variable(prog: ConicProgram, F: MatrixFunctional) -> Affine:
    """Choi matrices of all extensions of F to M_k, as an affine expression."""
    n, k = F.n, F.space.k
    J = Affine.constant(F.choi())
    comp = F.space.complement_basis()
    if len(comp) == 0:
        return J
    units = []
    for c in comp:
        for i in range(n):
            for j in range(n):
                u = np.kron(c.conj(), matrix_unit(n, i, j))
                units.append(u)
                units.append(1j * u)
    return J + prog.in_span("C", np.array(units))


def sampled_cb_lower(F: MatrixFunctional, samples: int, rng: np.random.Generator,
                     refine: int = 8) -> tuple[float, LevelElement | None]:
    """sup ||F_n(x)|| over seeded unit-norm x in M_n(V), with a polar-ascent refinement.

    Every evaluated x has norm one, so the result is a valid lower bound.
    """
    space, n = F.space, F.n
    best, best_x = 0.0, None
    for _ in range(samples):
        x = random_element(space, n, rng)
        nx = level_norm(x)
        if nx == 0:
            continue
        x = x * (1.0 / nx)
        val = spectral_norm(apply(F, x))
        for _ in range(refine):
            U, _, Vh = np.linalg.svd(apply(F, x))
            L = linear_form(F, U[:, 0], Vh[0].conj(), n)
            A, _, Bh = np.linalg.svd(L)
            y, _ = project(space, Bh.conj().T @ A.conj().T, n)
            ny = level_norm(y)
            if ny == 0:
                break
            y = y * (1.0 / ny)
            v = spectral_norm(apply(F, y))
            if v <= val * (1 + 1e-12):
                break
            x, val = y, v
        if val > best:
            best, best_x = val, x
    return best, best_x


def dual_cb_norm(F: MatrixFunctional, samples: int = 16, seed: int = 0,
                 settings: Settings | None = None) -> CbNormResult:
    """||F||_{M_n(V*)} as the least cb-norm of an extension of F to M_k."""
    t0 = time.perf_counter()
    check_limits(F.space, F.n)
    n, k = F.n, F.space.k
    rng = np.random.default_rng(seed)
    lower, _ = sampled_cb_lower(F, samples, rng)
    if F.scale() == 0.0:
        return CbNormResult(0.0, 0.0, 0.0, True, "Optimal", np.zeros((k * n, k * n)),
                            0.0, 0.0, samples, seed, 1e3 * (time.perf_counter() - t0))

    prog = ConicProgram()
    J = _extension_choi_variable(prog, F)
    J1 = prog.hermitian("J1", k * n)
    J2 = prog.hermitian("J2", k * n)
    t = prog.scalar("t")
    prog.add_psd(Affine.block([[J1, J], [J.H, J2]]), "choi")
    tI = t.kron_left(np.eye(n))
    prog.add_psd(tI - J1.partial_trace_first(k), "out1")
    prog.add_psd(tI - J2.partial_trace_first(k), "out2")
    prog.minimize(t)
    sol = solve(prog, settings)
    ms = 1e3 * (time.perf_counter() - t0)
    if not sol.ok:
        return CbNormResult(np.nan, lower, np.inf, False, sol.label, None, sol.gap,
                            sol.max_residual, samples, seed, ms)
    choi = prog.evaluate(J, sol.x)
    value = float(sol.objective)
    return CbNormResult(value, lower, value, True, sol.label, choi, sol.gap,
                        sol.max_residual, samples, seed, ms)


# ---------------------------------------------------------------------------
# PSD completions: CP certificates and Arveson-type extensions


@dataclass
class Completion:
    status: str  # feasible | infeasible | undecided
    margin: float
    W: np.ndarray | None  # [W_ij] with W_ij in R_ij + V-perp, nk x nk
    solver_status: str


def psd_completion(F: MatrixFunctional, tol: float = DEFAULT_TOL,
                   settings: Settings | None = None) -> Completion:
    """Largest s with W - sI >= 0 over W = [R_ij] + M_n(V-perp)_sa, capped at s <= 1.

    A nonnegative optimum is a CP extension of F (its Choi matrix is a
    permutation of conj(W)); a negative one proves no such extension exists.
    """
    n, k = F.n, F.space.k
    R = F.block_matrix()
    R = 0.5 * (R + R.conj().T)
    scale = max(1.0, spectral_norm(R))
    prog = ConicProgram()
    W = Affine.constant(R)
    comp = complement_space(F.space)
    if comp is not None:
        W = W + prog.in_span("W", hermitian_level_basis(comp, n))
    s = prog.scalar("s")
    prog.add_psd(W - s.kron_left(np.eye(n * k)), "margin")
    prog.add_psd(Affine.constant(np.eye(1)) - s, "cap")
    prog.maximize(s)
    sol = solve(prog, settings)
    if not sol.ok:
        return Completion("undecided", np.nan, None, sol.label)
    margin = float(sol.values["s"].real[0, 0])
    Wv = prog.evaluate(W, sol.x)
    Wv = 0.5 * (Wv + Wv.conj().T)
    if margin >= -tol * scale:
        status = "feasible"
    elif margin < -10 * tol * scale:
        status = "infeasible"
    else:
        status = "undecided"
    return Completion(status, margin, Wv, sol.label)


def block_to_choi(W: np.ndarray, k: int, n: int) -> np.ndarray:
    """Choi matrix (input first) of the map whose full representatives are the blocks of W."""
    return np.conj(W.reshape(n, k, n, k).transpose(1, 0, 3, 2)).reshape(k * n, k * n)


@dataclass
class CpResult:
    verdict: str  # certified_yes | certified_no | undecided
    witness: object = None  # W (yes) or a LevelElement v (no)
    witness_kind: str | None = None
    level: int | None = None
    min_output_eigenvalue: float = np.nan
    completion_margin: float = np.nan
    agreement_residual: float = np.nan
    tol: float = DEFAULT_TOL
    searched: int = 0
    seed: int = 0
    runtime_ms: float = 0.0

    @property
    def decided(self) -> bool:
        return self.verdict != "undecided"


def _violation_search(F: MatrixFunctional, m: int, starts: list[np.ndarray], rounds: int,
                      settings: Settings | None):
    """min <F_m(v) eta, eta> over the trace slice of M_m(V)^+, alternating eta.

    Yields (lambda_min(F_m(v)), v) per start; stops early when the slice is empty.
    """
    prog = ConicProgram()
    v = prog.in_span("v", hermitian_level_basis(F.space, m))
    prog.add_psd(v, "cone")
    prog.add_equality(v.trace() - m, "trace")
    for eta in starts:
        best = (np.inf, None)
        for _ in range(rounds):
            L = linear_form(F, eta, eta, m)
            L = 0.5 * (L + L.conj().T)
            prog.minimize((L @ v).trace().real())
            sol = solve(prog, settings)
            if sol.status.value == "Infeasible":
                return
            if not sol.ok:
                break
            el, _ = project(F.space, sol.values["v"], m)
            el = _hermitize(el)
            w, vecs = np.linalg.eigh(apply(F, el))
            if w[0] < best[0]:
                best = (float(w[0]), el)
            if np.allclose(vecs[:, 0], eta, atol=1e-9):
                break
            eta = vecs[:, 0]
        if best[1] is not None:
            yield best


def cp_membership(F: MatrixFunctional, tol: float = DEFAULT_TOL, samples: int = 8,
                  seed: int = 0, rounds: int = 3,
                  settings: Settings | None = None) -> CpResult:
    """Tri-state decision of F in M_n(V*)^+ = CB(V, M_n) cap CP(V, M_n)."""
    t0 = time.perf_counter()
    check_limits(F.space, F.n)
    n, k = F.n, F.space.k
    rng = np.random.default_rng(seed)
    scale = max(1.0, F.scale())

    def done(res: CpResult) -> CpResult:
        res.tol, res.seed = tol, seed
        res.runtime_ms = 1e3 * (time.perf_counter() - t0)
        return res

    # positive cones sit in the self-adjoint part, so a positive F is self-adjoint
    if F.hermitian_residual() > 10 * tol * scale:
        witness = None
        for _ in range(samples):
            v = random_cone_element(F.space, n, rng, settings)
            if v is None:
                break
            out = apply(F, v)
            if np.abs(out - out.conj().T).max() > 10 * tol * scale:
                witness = v
                break
        return done(CpResult("certified_no", witness, "not_selfadjoint", n))

    comp = psd_completion(F, tol, settings)
    if comp.status == "feasible":
        W = comp.W
        lam = float(np.linalg.eigvalsh(W)[0])
        agree = float(np.linalg.norm(project(F.space, W, n)[0].concrete - F.block_matrix()))
        if lam >= -tol * scale and agree <= tol * scale:
            return done(CpResult("certified_yes", W, "choi", n, np.nan, comp.margin, agree))

    searched = 0
    for m in range(1, n + 1):
        starts = []
        if m == n:
            ent = np.eye(n).reshape(-1) / np.sqrt(n)
            starts.append(ent.astype(complex))
        starts += [unit_vector(m * n, rng) for _ in range(samples)]
        for lam, v in _violation_search(F, m, starts, rounds, settings):
            searched += 1
            if lam < -10 * tol and cone_member(v, tol).member == "yes":
                return done(CpResult("certified_no", v, "cone_element", m, lam, comp.margin,
                                     searched=searched))
    return done(CpResult("undecided", None, None, None, np.nan, comp.margin, searched=searched))


@dataclass
class ExtensionResult:
    status: str  # feasible | infeasible | undecided
    choi: np.ndarray | None
    margin: float
    restriction_residual: float = np.nan
    unital_residual: float = np.nan
    min_eigenvalue: float = np.nan
    mode: str = "cp"
    runtime_ms: float = 0.0

    def apply(self, x: np.ndarray) -> np.ndarray:
        n = self.choi.shape[0] // x.shape[0]
        return extension_apply(self.choi, x, n)


def arveson_extend(f: MatrixFunctional, mode: str = "cp", tol: float = DEFAULT_TOL,
                   settings: Settings | None = None) -> ExtensionResult:
    """CP (or UCP) extension to M_p of a map given on a subspace S of M_p."""
    if mode not in ("cp", "ucp"):
        raise ValueError("mode must be 'cp' or 'ucp'")
    t0 = time.perf_counter()
    S, n, p = f.space, f.n, f.space.k
    check_limits(S, n)
    if mode == "ucp":
        eye = np.eye(p)
        if not S.contains(eye, 1e-9):
            raise ValueError("ucp extension needs the identity in the domain")
        if np.abs(f(eye) - np.eye(n)).max() > 1e-8:
            raise ValueError("ucp extension needs a unital map")
    if f.hermitian_residual() > 10 * tol * max(1.0, f.scale()):
        return ExtensionResult("infeasible", None, np.nan, mode=mode,
                               runtime_ms=1e3 * (time.perf_counter() - t0))
    comp = psd_completion(f, tol, settings)
    ms = 1e3 * (time.perf_counter() - t0)
    if comp.status != "feasible":
        return ExtensionResult(comp.status, None, comp.margin, mode=mode, runtime_ms=ms)
    J = block_to_choi(comp.W, p, n)
    fidelity = max(float(np.abs(extension_apply(J, b, n) - f(b)).max()) for b in S.basis)
    unital = float(np.abs(extension_apply(J, np.eye(p), n) - np.eye(n)).max())
    lam = float(np.linalg.eigvalsh(J)[0])
    return ExtensionResult("feasible", J, comp.margin, fidelity,
                           unital if mode == "ucp" else np.nan, lam, mode, ms)


# ---------------------------------------------------------------------------
# corner unitization and the extension pipeline for dual functionals


def corner_unitization(space: MatrixSpace) -> MatrixSpace:
    """``{[[lambda I, x], [y, mu I]] : x, y in V}`` inside M_2k."""
    k = space.k
    z = np.zeros((k, k))
    gens = [np.block([[np.eye(k), z], [z, z]]), np.block([[z, z], [z, np.eye(k)]])]
    for b in space.basis:
        gens.append(np.block([[z, b], [z, z]]))
        gens.append(np.block([[z, z], [b, z]]))
    return build_space(gens, name=f"unitization({space.name})")


def corner_map(F: MatrixFunctional, X: MatrixSpace | None = None):
    """The map ``[[lambda I, x], [y, mu I]] -> [[lambda I, F(x)], [F*(y), mu I]]`` on X."""
    V, n, k = F.space, F.n, F.space.k
    X = X or corner_unitization(V)
    Fa = F.adjoint()
    reps = np.zeros((2 * n, 2 * n, 2 * k, 2 * k), dtype=complex)
    for i in range(n):
        reps[i, i, :k, :k] = np.eye(k) / k
        reps[n + i, n + i, k:, k:] = np.eye(k) / k
    reps[:n, n:, :k, k:] = F.representatives
    reps[n:, :n, k:, :k] = Fa.representatives
    return X, MatrixFunctional(X, reps)


@dataclass
class PipelineResult:
    scale: float  # F was multiplied by this before extending
    extension: ExtensionResult
    corner_residual: float
    phi1: MatrixFunctional | None = None
    phi2: MatrixFunctional | None = None
    phi1_norm: float = np.nan
    phi2_norm: float = np.nan
    extras: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return (self.extension.status == "feasible" and self.corner_residual <= 1e-6
                and self.phi1_norm <= 1 + 1e-4 and self.phi2_norm <= 1 + 1e-4)


def extension_pipeline(F: MatrixFunctional, target: float = 0.9,
                       settings: Settings | None = None) -> PipelineResult:
    """Scale F below norm one, extend its corner map UCP, read back F, phi_1 and phi_2.

    phi_1(x) and phi_2(x) are the diagonal corners of the extension at
    ``[[x, 0], [0, 0]]`` and ``[[0, 0], [0, x]]``; the off-diagonal corner at
    ``[[x, x], [x, x]]`` must reproduce F(x).
    """
    V, n, k = F.space, F.n, F.space.k
    norm = dual_cb_norm(F, samples=4, settings=settings)
    if not norm.decided:
        raise RuntimeError("cb-norm of F is undecided; cannot scale it below one")
    scale = 1.0 if norm.value < 1.0 else target / norm.value
    Fs = scale * F
    X, phi = corner_map(Fs)
    ext = arveson_extend(phi, "ucp", settings=settings)
    if ext.status != "feasible":
        return PipelineResult(scale, ext, np.inf)
    z = np.zeros((k, k))
    corner_res, v1, v2 = 0.0, [], []
    for b in V.basis:
        big = ext.apply(np.block([[b, b], [b, b]]))
        corner_res = max(corner_res, float(np.abs(big[:n, n:] - Fs(b)).max()))
        v1.append(ext.apply(np.block([[b, z], [z, z]]))[:n, :n])
        v2.append(ext.apply(np.block([[z, z], [z, b]]))[n:, n:])
    phi1 = functional_from_values(V, np.array(v1))
    phi2 = functional_from_values(V, np.array(v2))
    n1 = dual_cb_norm(phi1, samples=4, settings=settings)
    n2 = dual_cb_norm(phi2, samples=4, settings=settings)
    return PipelineResult(scale, ext, corner_res, phi1, phi2,
                          n1.value if n1.decided else np.inf,
                          n2.value if n2.decided else np.inf,
                          {"norm_F": norm.value})
