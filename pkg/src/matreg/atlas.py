"""Example spaces: full matrix algebras, diagonals, corners, and user files."""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from matreg.matspace import LIMITS, MatrixSpace, SpaceError, build_space, matrix_unit


@dataclass(frozen=True)
class ExampleSpec:
    family: str  # full | diagonal | corner | user
    size: int = 0
    path: str | None = None

    def __post_init__(self):
        if self.family not in ("full", "diagonal", "corner", "user"):
            raise SpaceError(f"unknown example family {self.family!r}")
        if self.family == "user":
            if not self.path:
                raise SpaceError("user spaces need a file path")
            return
        if self.size < 1:
            raise SpaceError("example size must be positive")
        ambient = 2 * self.size if self.family == "corner" else self.size
        if ambient > LIMITS.max_dim:
            raise SpaceError(f"ambient dimension {ambient} exceeds the cap {LIMITS.max_dim}")

    @classmethod
    def parse(cls, selector: str) -> "ExampleSpec":
        """``full:k``, ``diag:m``, ``corner:m`` or ``user:path``."""
        family, _, arg = selector.partition(":")
        if not arg:
            raise SpaceError(f"space selector {selector!r} needs the form family:arg")
        family = {"diag": "diagonal"}.get(family, family)
        if family == "user":
            return cls("user", path=arg)
        try:
            size = int(arg)
        except ValueError:
            raise SpaceError(f"bad size in space selector {selector!r}") from None
        return cls(family, size)


def full(k: int) -> MatrixSpace:
    return build_space([matrix_unit(k, a, b) for a in range(k) for b in range(k)],
                       name=f"full:{k}")


def diagonal(m: int) -> MatrixSpace:
    return build_space([matrix_unit(m, a, a) for a in range(m)], name=f"diag:{m}")


def corner(m: int) -> MatrixSpace:
    """``{[[0, alpha], [beta, 0]] : alpha, beta in M_m}`` inside M_2m; its cone is {0}."""
    gens = []
    for a in range(m):
        for b in range(m):
            gens.append(matrix_unit(2 * m, a, m + b))
            gens.append(matrix_unit(2 * m, m + a, b))
    return build_space(gens, name=f"corner:{m}")


def make_example(spec: ExampleSpec | str) -> MatrixSpace:
    if isinstance(spec, str):
        spec = ExampleSpec.parse(spec)
    if spec.family == "full":
        return full(spec.size)
    if spec.family == "diagonal":
        return diagonal(spec.size)
    if spec.family == "corner":
        return corner(spec.size)
    from matreg.serialization import load_space

    space = load_space(Path(spec.path))
    if space.k > LIMITS.max_dim:
        raise SpaceError(f"ambient dimension {space.k} exceeds the cap {LIMITS.max_dim}")
    return space


def l1_two_probe(samples: int = 20, seed: int = 0, grid: int = 64,
                 levels: tuple[int, ...] = (1, 2)) -> dict:
    """Probe l^1_2, realized as the dual of diag(2), for its operator-system constant.

    Reports the sampled sup of ||F|| / nu_upper(F) and the sampled gap between
    the norm and nu.  Exploratory: the only contract is consistency of bounds.
    """
    from matreg import duality
    from matreg.sampling import random_functional

    t0 = time.perf_counter()
    space = diagonal(2)
    rng = np.random.default_rng(seed)
    unit = duality.MatrixFunctional(space, np.eye(2)[None, None])
    unit_norm = duality.dual_cb_norm(unit)

    best, best_point, worst_gap, consistent, undecided = 0.0, 0.0, 0.0, True, 0
    rows = []
    for n in levels:
        for _ in range(samples):
            F = random_functional(space, n, rng, hermitian=bool(rng.integers(2)))
            norm = duality.dual_cb_norm(F)
            nu = duality.nu_dual(F, grid)
            if not (norm.decided and nu.decided):
                undecided += 1
                continue
            if nu.upper <= 0:
                continue
            ratio = norm.value / nu.upper
            best = max(best, ratio)
            best_point = max(best_point, norm.value / max(nu.lower, 1e-300))
            worst_gap = max(worst_gap, norm.value - nu.lower)
            consistent &= nu.lower <= nu.upper + 1e-9 and nu.upper <= norm.value + 1e-6
            rows.append({"level": n, "norm": norm.value, "nu_lower": nu.lower,
                         "nu_upper": nu.upper})
    return {
        "op": "l1-probe",
        "space": "dual of diag:2",
        "unit_functional_norm": unit_norm.value,
        "estimate": best,
        "estimate_pointwise": best_point,
        "max_norm_minus_nu": worst_gap,
        "bounds_consistent": bool(consistent),
        "undecided": undecided,
        "samples": rows,
        "seed": seed,
        "grid": grid,
        "runtime_ms": 1e3 * (time.perf_counter() - t0),
    }
