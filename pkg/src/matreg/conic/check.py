"""Post-hoc verification of solver output.

Works on the complex Hermitian data of a :class:`ConicProgram` only; it never
touches the realified arrays the backend iterates on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from matreg.conic.model import ConicProgram


@dataclass(frozen=True)
class Residuals:
    primal_psd: float
    primal_eq: float
    dual_stationarity: float
    dual_psd: float
    primal_objective: float
    dual_objective: float
    gap: float

    @property
    def max_residual(self) -> float:
        return max(self.primal_psd, self.primal_eq, self.dual_stationarity, self.dual_psd)


def _min_eig(m: np.ndarray) -> float:
    h = 0.5 * (m + m.conj().T)
    return float(np.linalg.eigvalsh(h)[0]) if h.size else 0.0


def _scale(a: np.ndarray) -> float:
    return 1.0 + float(np.abs(a).max(initial=0.0))


def _linear_parts(prog: ConicProgram):
    c = prog.coefficient_columns(prog.objective).real.reshape(-1)
    psd_cols = [prog.coefficient_columns(e) for _, e in prog.psd]
    eq_cols = [prog.coefficient_columns(e) for _, e in prog.equalities]
    return c, psd_cols, eq_cols


def dual_map(prog: ConicProgram, Zs, Ws, psd_cols=None, eq_cols=None) -> np.ndarray:
    """``sum_i Re<A_ij, Z_i> - sum_e Re<E_ej, W_e>`` for every coordinate j."""
    if psd_cols is None:
        _, psd_cols, eq_cols = _linear_parts(prog)
    out = np.zeros(prog.n_real)
    for cols, Z in zip(psd_cols, Zs):
        out += np.einsum("jab,ba->j", cols, Z).real
    for cols, W in zip(eq_cols, Ws):
        out -= np.einsum("jab,ab->j", cols, W.conj()).real
    return out


def kkt_residuals(prog: ConicProgram, x: np.ndarray, Zs, Ws) -> Residuals:
    c, psd_cols, eq_cols = _linear_parts(prog)
    offset = float(prog.objective.const.real[0, 0])

    p_psd = 0.0
    for _, e in prog.psd:
        v = prog.evaluate(e, x)
        p_psd = max(p_psd, max(0.0, -_min_eig(v)) / _scale(e.const),
                    np.abs(v - v.conj().T).max(initial=0.0) / _scale(e.const))
    p_eq = 0.0
    for _, e in prog.equalities:
        v = prog.evaluate(e, x)
        p_eq = max(p_eq, np.abs(v).max(initial=0.0) / _scale(e.const))

    stat = c - dual_map(prog, Zs, Ws, psd_cols, eq_cols)
    d_stat = float(np.abs(stat).max(initial=0.0)) / _scale(c)
    d_psd = 0.0
    for Z in Zs:
        d_psd = max(d_psd, max(0.0, -_min_eig(Z)) / _scale(Z))

    pobj = float(c @ x) + offset
    dobj = offset
    for (_, e), Z in zip(prog.psd, Zs):
        dobj -= float(np.real(np.trace(e.const @ Z)))
    for (_, e), W in zip(prog.equalities, Ws):
        dobj += float(np.real(np.vdot(W, e.const)))
    gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
    return Residuals(p_psd, p_eq, d_stat, d_psd, pobj, dobj, gap)


@dataclass(frozen=True)
class CertificateCheck:
    valid: bool
    margin: float
    residual: float


def check_infeasibility(prog: ConicProgram, Zs, Ws, tol: float) -> CertificateCheck:
    """Farkas ray: Z_i >= 0 annihilating every variable direction, negative on constants."""
    scale = sum(np.linalg.norm(Z) for Z in Zs) + sum(np.linalg.norm(W) for W in Ws)
    if scale == 0.0:
        return CertificateCheck(False, 0.0, np.inf)
    ray = dual_map(prog, Zs, Ws)
    value = 0.0
    for (_, e), Z in zip(prog.psd, Zs):
        value += float(np.real(np.trace(e.const @ Z)))
    for (_, e), W in zip(prog.equalities, Ws):
        value -= float(np.real(np.vdot(W, e.const)))
    psd_violation = max([max(0.0, -_min_eig(Z)) for Z in Zs], default=0.0)
    residual = max(float(np.abs(ray).max(initial=0.0)), psd_violation) / scale
    margin = -value / scale
    return CertificateCheck(margin > tol and residual <= tol, margin, residual)


def check_unboundedness(prog: ConicProgram, x: np.ndarray, tol: float) -> CertificateCheck:
    """Improving direction: stays feasible for the homogeneous constraints, lowers the objective."""
    nx = float(np.linalg.norm(x))
    if nx == 0.0:
        return CertificateCheck(False, 0.0, np.inf)
    d = x / nx
    residual = 0.0
    for _, e in prog.psd:
        residual = max(residual, max(0.0, -_min_eig(prog.evaluate(e.homogeneous(), d))))
    for _, e in prog.equalities:
        residual = max(residual, float(np.abs(prog.evaluate(e.homogeneous(), d)).max(initial=0.0)))
    c = prog.coefficient_columns(prog.objective).real.reshape(-1)
    margin = -float(c @ d)
    return CertificateCheck(margin > tol and residual <= tol, margin, residual)
