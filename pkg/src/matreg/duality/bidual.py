"""Finite-dimensional bidual identification: V -> V** is isometric and an order isomorphism."""

from __future__ import annotations

import time

import numpy as np

from matreg.conic import Settings
from matreg.duality.cb import cp_membership, dual_cb_norm
from matreg.duality.functional import MatrixFunctional, apply
from matreg.matspace import (
    DEFAULT_TOL,
    LevelElement,
    MatrixSpace,
    check_limits,
    cone_member,
    level_norm,
)
from matreg.sampling import (
    random_cone_element,
    random_cp_functional,
    random_element,
    random_hermitian,
)


def _blocks(vec: np.ndarray, n: int, k: int) -> np.ndarray:
    return vec.reshape(n, k)


def attaining_functional(v: LevelElement) -> MatrixFunctional:
    """``F_ij(w) = <w eta_j, xi_i>`` from the top singular pair; <F, v> = ||v|| and ||F|| <= 1."""
    n, k = v.level, v.space.k
    U, _, Vh = np.linalg.svd(v.concrete)
    xi = _blocks(U[:, 0], n, k)
    eta = _blocks(Vh[0].conj(), n, k)
    return MatrixFunctional(v.space, np.einsum("ia,jb->ijab", xi, eta.conj()))


def separating_functional(v: LevelElement) -> MatrixFunctional:
    """Compression ``F_ij(u) = w_i* u w_j`` by the bottom eigenvector w of v (a CP map)."""
    n, k = v.level, v.space.k
    _, vecs = np.linalg.eigh(0.5 * (v.concrete + v.concrete.conj().T))
    w = _blocks(vecs[:, 0], n, k)
    return MatrixFunctional(v.space, np.einsum("ia,jb->ijab", w, w.conj()))


def bidual_check(space: MatrixSpace, levels=(1, 2), samples: int = 3, seed: int = 0,
                 tol: float = DEFAULT_TOL, settings: Settings | None = None) -> dict:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    iso_res, cb_excess, undecided = 0.0, 0.0, 0
    sep_tried, sep_ok, pos_min, cone_tested = 0, 0, np.inf, 0
    rows = []
    for n in levels:
        check_limits(space, n)
        for _ in range(samples):
            # isometry
            v = random_element(space, n, rng)
            F = attaining_functional(v)
            pair = F.pairing(v)
            nrm = dual_cb_norm(F, samples=2, settings=settings)
            if not nrm.decided:
                undecided += 1
            else:
                cb_excess = max(cb_excess, nrm.value - 1.0)
            res = abs(pair - level_norm(v))
            iso_res = max(iso_res, res)

            # order: positive elements stay positive under CP functionals
            c = random_cone_element(space, n, rng, settings)
            if c is not None:
                cone_tested += 1
                G = random_cp_functional(space, n, rng)
                pos_min = min(pos_min, float(np.linalg.eigvalsh(apply(G, c))[0]))

            # order: non-cone Hermitian elements are separated by a CP functional
            h = random_hermitian(space, n, rng)
            sep = None
            if cone_member(h, tol).member == "no":
                sep_tried += 1
                S = separating_functional(h)
                value = float(S.pairing(h).real)
                cp = cp_membership(S, tol, samples=2, settings=settings)
                sep = cp.verdict == "certified_yes" and value < -tol
                sep_ok += bool(sep)
                if not cp.decided:
                    undecided += 1
            rows.append({"level": n, "norm": level_norm(v), "pairing": abs(pair),
                         "isometry_residual": res,
                         "cb_norm": nrm.value if nrm.decided else None,
                         "separated": sep})
    iso = max(iso_res, max(cb_excess, 0.0))
    return {
        "op": "bidual-check",
        "space": space.name,
        "levels": list(levels),
        "isometry_residual": iso,
        "isometry_ok": iso <= 1e-5,
        "order_cone_tested": cone_tested,
        "order_min_output_eigenvalue": None if cone_tested == 0 else pos_min,
        "order_positive_ok": cone_tested == 0 or pos_min >= -tol,
        "separation_tried": sep_tried,
        "separation_succeeded": sep_ok,
        "separation_ok": sep_ok == sep_tried,
        "undecided": undecided,
        "samples": rows,
        "seed": seed,
        "runtime_ms": 1e3 * (time.perf_counter() - t0),
    }
