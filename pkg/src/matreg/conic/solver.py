"""Solve front-end, realification and the pluggable backend seam."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
import scipy.linalg

from matreg.conic.check import (
    Residuals,
    check_infeasibility,
    check_unboundedness,
    kkt_residuals,
)
from matreg.conic.model import ConicProgram

logger = logging.getLogger(__name__)


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    NUMERICAL_LIMIT = "NumericalLimit"


@dataclass(frozen=True)
class Settings:
    feas_tol: float = 1e-8
    gap_tol: float = 1e-8
    max_iter: int = 200
    backend: str = "cvxopt"


@dataclass
class ConicSolution:
    status: Status
    x: np.ndarray | None
    values: dict[str, np.ndarray]
    psd_duals: list[np.ndarray]
    eq_duals: list[np.ndarray]
    objective: float
    gap: float
    max_residual: float
    certificate: dict = field(default_factory=dict)
    iterations: int = 0
    backend: str = ""
    feasibility: bool = False

    @property
    def label(self) -> str:
        if self.feasibility and self.status is Status.OPTIMAL:
            return "Feasible"
        return self.status.value

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL


class MalformedProgram(ValueError):
    pass


def realify(H: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Real symmetric embedding ``[[A, -B], [B, A]]`` of ``H = A + iB``."""
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("realify needs a square matrix")
    if np.abs(H - H.conj().T).max(initial=0.0) > tol:
        raise ValueError("realify needs a Hermitian matrix")
    A, B = H.real, H.imag
    return np.block([[A, -B], [B, A]])


def _realify_stack(cols: np.ndarray) -> np.ndarray:
    A, B = cols.real, cols.imag
    top = np.concatenate([A, -B], axis=2)
    bot = np.concatenate([B, A], axis=2)
    return np.concatenate([top, bot], axis=1)


def _complexify_dual(zr: np.ndarray, m: int) -> np.ndarray:
    """Complex multiplier Z with Re Tr(A Z) = <realify(A), zr> for Hermitian A."""
    z11, z12 = zr[:m, :m], zr[:m, m:]
    z21, z22 = zr[m:, :m], zr[m:, m:]
    Z = (z11 + z22) + 1j * (z21 - z12)
    return 0.5 * (Z + Z.conj().T)


@dataclass
class RawResult:
    status: str  # optimal | infeasible | unbounded | unknown
    x: np.ndarray | None
    psd_duals: list[np.ndarray]
    eq_duals: list[np.ndarray]
    iterations: int = 0


class Backend(Protocol):
    name: str

    def run(self, prog: ConicProgram, settings: Settings) -> RawResult: ...


_BACKENDS: dict[str, Backend] = {}


def register_backend(backend: Backend) -> None:
    _BACKENDS[backend.name] = backend


def get_backend(name: str) -> Backend:
    try:
        return _BACKENDS[name]
    except KeyError:
        raise MalformedProgram(f"unknown conic backend {name!r}") from None


TOLERANCE_LADDER = (1e-1, 1e-2, 1.0)


class CvxoptBackend:
    """Dense primal-dual interior point (homogeneous embedding, NT scaling)."""

    name = "cvxopt"

    def run(self, prog: ConicProgram, settings: Settings) -> RawResult:
        import cvxopt
        from cvxopt import solvers

        n = prog.n_real
        c = prog.coefficient_columns(prog.objective).real.reshape(-1)

        g_rows, h_rows, dims_s = [], [], []
        for _, e in prog.psd:
            m = e.shape[0]
            cols = _realify_stack(prog.coefficient_columns(e))
            g_rows.append(-cols.reshape(n, -1).T)
            h_rows.append(_realify_stack(e.const[None])[0].reshape(-1))
            dims_s.append(2 * m)
        G = np.vstack(g_rows) if g_rows else np.zeros((0, n))
        h = np.concatenate(h_rows) if h_rows else np.zeros(0)

        a_rows, b_rows, eq_index = [], [], []
        for i, (_, e) in enumerate(prog.equalities):
            cols = prog.coefficient_columns(e).reshape(n, -1).T
            const = e.const.reshape(-1)
            a_rows += [cols.real, cols.imag]
            b_rows += [-const.real, -const.imag]
            size = const.size
            eq_index += [(i, part, j) for part in (0, 1) for j in range(size)]
        A = np.vstack(a_rows) if a_rows else np.zeros((0, n))
        b = np.concatenate(b_rows) if b_rows else np.zeros(0)
        A, b, keep, consistent = _independent_rows(A, b)
        if not consistent:
            return _equality_conflict(prog)
        eq_index = [eq_index[j] for j in keep]

        # reparametrize x = Q u when [G; A] has a nontrivial null space
        Q = _range_basis(np.vstack([G, A]) if A.size else G, n)
        if Q is not None:
            if np.abs(c @ (np.eye(n) - Q @ Q.T)).max(initial=0.0) > 1e-9 * (1 + np.abs(c).max()):
                direction = (np.eye(n) - Q @ Q.T) @ (-c)
                return RawResult("unbounded", direction, [], [])
            Gq, Aq, cq = G @ Q, A @ Q if A.size else A, Q.T @ c
        else:
            Gq, Aq, cq = G, A, c

        dims = {"l": 0, "q": [], "s": dims_s}
        args = [cvxopt.matrix(cq), cvxopt.matrix(Gq), cvxopt.matrix(h), dims]
        if Aq.size:
            args += [cvxopt.matrix(Aq), cvxopt.matrix(b)]
        # Tight internal tolerances occasionally make the iteration overshoot and
        # diverge after it has already converged; retry looser, the checker decides.
        sol = None
        for factor in TOLERANCE_LADDER:
            opts = {
                "show_progress": False,
                "maxiters": settings.max_iter,
                "abstol": settings.gap_tol * factor,
                "reltol": settings.gap_tol * factor,
                "feastol": settings.feas_tol * factor,
            }
            try:
                sol = solvers.conelp(*args, options=opts)
            except (ValueError, ArithmeticError) as exc:
                logger.debug("cvxopt failed at tolerance factor %g: %s", factor, exc)
                continue
            if sol["status"] != "unknown":
                break
        if sol is None:
            return RawResult("unknown", None, [], [])

        status = {"optimal": "optimal", "primal infeasible": "infeasible",
                  "dual infeasible": "unbounded"}.get(sol["status"], "unknown")
        x = None if sol["x"] is None else np.array(sol["x"]).reshape(-1)
        if x is not None and Q is not None:
            x = Q @ x
        Zs, Ws = [], []
        if sol["z"] is not None:
            z = np.array(sol["z"]).reshape(-1)
            pos = 0
            for (_, e), s in zip(prog.psd, dims_s):
                zr = z[pos:pos + s * s].reshape(s, s, order="F")
                Zs.append(_complexify_dual(0.5 * (zr + zr.T), s // 2))
                pos += s * s
            y = np.zeros(sum(2 * e.const.size for _, e in prog.equalities))
            if sol["y"] is not None and len(keep):
                y[keep] = np.array(sol["y"]).reshape(-1)
            pos = 0
            for _, e in prog.equalities:
                size = e.const.size
                re, im = y[pos:pos + size], y[pos + size:pos + 2 * size]
                Ws.append((re + 1j * im).reshape(e.shape))
                pos += 2 * size
        return RawResult(status, x, Zs, Ws, int(sol.get("iterations", 0)))


register_backend(CvxoptBackend())


def _independent_rows(A: np.ndarray, b: np.ndarray, tol: float = 1e-10):
    if A.shape[0] == 0:
        return A, b, np.arange(0), True
    _, R, piv = scipy.linalg.qr(A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > tol * max(1.0, diag.max(initial=0.0))))
    keep = np.sort(piv[:rank])
    A_k, b_k = A[keep], b[keep]
    consistent = True
    if rank < A.shape[0]:
        sol, *_ = np.linalg.lstsq(A_k, b_k, rcond=None)
        consistent = np.abs(A @ sol - b).max(initial=0.0) <= 1e-8 * (1 + np.abs(b).max())
    return A_k, b_k, keep, consistent


def _range_basis(M: np.ndarray, n: int, tol: float = 1e-10) -> np.ndarray | None:
    """Orthonormal basis of the row space of M, or None when M has full column rank."""
    if M.shape[0] >= n:
        R = scipy.linalg.qr(M, mode="r")[0]
        d = np.abs(np.diag(R))
        if d.size == n and d.min(initial=np.inf) > tol * max(1.0, d.max(initial=0.0)):
            return None
    _, s, vt = np.linalg.svd(M, full_matrices=True)
    rank = int(np.sum(s > tol * max(1.0, s.max(initial=0.0))))
    if rank == n:
        return None
    return vt[:rank].T


def _equality_conflict(prog: ConicProgram) -> RawResult:
    # least-squares violation direction as a Farkas multiplier
    n = prog.n_real
    rows = [prog.coefficient_columns(e).reshape(n, -1).T for _, e in prog.equalities]
    consts = [e.const.reshape(-1) for _, e in prog.equalities]
    M = np.vstack(rows)
    k = np.concatenate(consts)
    Mr = np.vstack([M.real, M.imag])
    kr = np.concatenate([k.real, k.imag])
    sol, *_ = np.linalg.lstsq(Mr, -kr, rcond=None)
    r = Mr @ sol + kr
    pos = 0
    total = k.size
    Ws = []
    for e in consts:
        size = e.size
        Ws.append((r[pos:pos + size] + 1j * r[total + pos:total + pos + size]))
        pos += size
    Ws = [w.reshape(e.shape) for w, (_, e) in zip(Ws, prog.equalities)]
    return RawResult("infeasible", None, [np.zeros(e.shape, dtype=complex) for _, e in prog.psd], Ws)


def _solve_constant(prog: ConicProgram, settings: Settings) -> ConicSolution:
    """Program without variables: every constraint is a fixed matrix."""
    x = np.zeros(0)
    worst, worst_i, worst_vec = 0.0, None, None
    for i, (_, e) in enumerate(prog.psd):
        w, v = np.linalg.eigh(0.5 * (e.const + e.const.conj().T))
        scaled = w[0] / (1.0 + np.abs(e.const).max(initial=0.0))
        if scaled < worst:
            worst, worst_i, worst_vec = scaled, i, v[:, 0]
    eq_bad = [i for i, (_, e) in enumerate(prog.equalities)
              if np.abs(e.const).max(initial=0.0) > settings.feas_tol]
    if worst < -settings.feas_tol or eq_bad:
        Zs = [np.zeros(e.shape, dtype=complex) for _, e in prog.psd]
        Ws = [np.zeros(e.shape, dtype=complex) for _, e in prog.equalities]
        if worst < -settings.feas_tol:
            Zs[worst_i] = np.outer(worst_vec, worst_vec.conj())
        else:
            e = prog.equalities[eq_bad[0]][1]
            Ws[eq_bad[0]] = e.const / np.linalg.norm(e.const)
        cert = check_infeasibility(prog, Zs, Ws, settings.feas_tol)
        return ConicSolution(Status.INFEASIBLE, None, {}, Zs, Ws, np.nan, np.nan, 0.0,
                             {"psd_duals": Zs, "eq_duals": Ws, "margin": cert.margin,
                              "residual": cert.residual}, 0, "constant")
    obj = float(prog.objective.const.real[0, 0])
    return ConicSolution(Status.OPTIMAL, x, {}, [np.zeros(e.shape) for _, e in prog.psd],
                         [np.zeros(e.shape) for _, e in prog.equalities], obj, 0.0,
                         max(0.0, -worst), backend="constant")


def validate(prog: ConicProgram) -> None:
    if not isinstance(prog, ConicProgram):
        raise MalformedProgram("expected a ConicProgram")
    for lab, e in prog.psd:
        if e.shape[0] != e.shape[1]:
            raise MalformedProgram(f"PSD constraint {lab!r} is not square")
    for lab, e in list(prog.psd) + list(prog.equalities):
        for k in e.coef:
            if k >= len(prog.blocks):
                raise MalformedProgram(f"constraint {lab!r} references unknown variable block {k}")
        if not np.all(np.isfinite(e.const)):
            raise MalformedProgram(f"constraint {lab!r} has non-finite data")


def solve(prog: ConicProgram, settings: Settings | None = None) -> ConicSolution:
    """Minimize the program's objective; status and residuals are re-verified independently."""
    settings = settings or Settings()
    validate(prog)
    if prog.n_real == 0:
        return _solve_constant(prog, settings)
    backend = get_backend(settings.backend)
    raw = backend.run(prog, settings)

    if raw.status == "infeasible":
        cert = check_infeasibility(prog, raw.psd_duals, raw.eq_duals, settings.feas_tol)
        status = Status.INFEASIBLE if cert.valid else Status.NUMERICAL_LIMIT
        return ConicSolution(status, None, {}, raw.psd_duals, raw.eq_duals, np.nan, np.nan,
                             cert.residual,
                             {"psd_duals": raw.psd_duals, "eq_duals": raw.eq_duals,
                              "margin": cert.margin, "residual": cert.residual},
                             raw.iterations, backend.name)
    if raw.status == "unbounded":
        cert = check_unboundedness(prog, raw.x, settings.feas_tol)
        status = Status.UNBOUNDED if cert.valid else Status.NUMERICAL_LIMIT
        return ConicSolution(status, None, {}, [], [], -np.inf, np.nan, cert.residual,
                             {"direction": raw.x, "margin": cert.margin,
                              "residual": cert.residual},
                             raw.iterations, backend.name)
    if raw.x is None or not raw.psd_duals and prog.psd:
        return ConicSolution(Status.NUMERICAL_LIMIT, None, {}, [], [], np.nan, np.nan, np.inf,
                             iterations=raw.iterations, backend=backend.name)

    res: Residuals = kkt_residuals(prog, raw.x, raw.psd_duals, raw.eq_duals)
    ok = res.gap <= settings.gap_tol and res.max_residual <= settings.feas_tol
    status = Status.OPTIMAL if ok else Status.NUMERICAL_LIMIT
    if not ok:
        logger.debug("solver iterate rejected: gap=%.2e residual=%.2e", res.gap, res.max_residual)
    return ConicSolution(status, raw.x, prog.unpack(raw.x), raw.psd_duals, raw.eq_duals,
                         res.primal_objective, res.gap, res.max_residual,
                         {"dual_objective": res.dual_objective},
                         raw.iterations, backend.name)


def feasibility(prog: ConicProgram, settings: Settings | None = None) -> ConicSolution:
    """Find any point satisfying the constraints (objective is ignored)."""
    settings = settings or Settings()
    stripped = ConicProgram(prog.blocks, equalities=prog.equalities, psd=prog.psd)
    sol = solve(stripped, settings)
    sol.feasibility = True
    return sol
