"""Command-line driver: one command per module operation, JSON or CSV reports.

Exit status: 0 for a definitive result, 2 when the result is undecided,
1 for usage or input errors (and for a failing selftest).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from matreg import atlas
from matreg.conic import Settings
from matreg.matspace import LIMITS, DEFAULT_TOL, LevelElement, MatrixSpace, SpaceError, level_norm
from matreg.serialization import FormatError, Report, element_from_json, functional_from_json

COMMANDS = ("norm", "regnorm", "nu", "dualnorm", "cp-check", "extend", "regularity",
            "os-constant", "bidual-check", "l1-probe", "selftest")
SAMPLING = {"dualnorm", "cp-check", "regularity", "os-constant", "bidual-check", "l1-probe"}
NEEDS_SPACE = set(COMMANDS) - {"l1-probe", "selftest"}
NEEDS_INPUT = {"norm", "regnorm", "nu", "dualnorm", "cp-check", "extend"}
FUNCTIONAL_INPUT = {"dualnorm", "cp-check", "extend"}

MIN_GRID = 8
MAX_GRID = 1024
MAX_SAMPLES = 1000
MAX_ITER = 10_000


class UsageError(ValueError):
    """Raised for bad flags or inputs; carries the offending flag when known."""

    def __init__(self, message: str, flag: str | None = None):
        super().__init__(f"{flag}: {message}" if flag else message)
        self.flag = flag


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class CommandSpec:
    command: str
    space: MatrixSpace | None = None
    space_label: str | None = None
    element: LevelElement | None = None
    functional: object = None
    level: int | None = None
    tol: float = DEFAULT_TOL
    grid: int = 64
    samples: int = 8
    seed: int | None = None
    max_iter: int = 200
    mode: str = "cp"
    quick: bool = False
    fmt: str = "json"
    out: Path | None = None
    extras: dict = field(default_factory=dict)

    @property
    def settings(self) -> Settings:
        return Settings(feas_tol=self.tol, gap_tol=self.tol, max_iter=self.max_iter)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="matreg", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--space", help="full:k, diag:m, corner:m or user:path.json")
    p.add_argument("--input", help="JSON file (or inline JSON) with an element or functional")
    p.add_argument("--level", type=int)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-iter", type=int, default=200, dest="max_iter")
    p.add_argument("--mode", choices=("cp", "ucp", "pipeline", "collapsed", "full"),
                   help="extend: cp|ucp|pipeline; nu: collapsed|full")
    p.add_argument("--quick", action="store_true", help="selftest with reduced sample counts")
    p.add_argument("--format", choices=("json", "csv"), default="json", dest="fmt")
    p.add_argument("--out", type=Path)
    return p


def _load_json(text: str, flag: str = "--input"):
    src = text.strip()
    try:
        if src.startswith(("{", "[")):
            return json.loads(src)
        return json.loads(Path(text).read_text())
    except FileNotFoundError:
        raise UsageError(f"no such file {text!r}", flag) from None
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise UsageError(f"not valid JSON ({exc})", flag) from None


def parse_command(argv: list[str]) -> CommandSpec:
    """Validate everything up front; nothing is computed here beyond loading inputs."""
    a = build_parser().parse_args(argv)
    cmd = a.command

    if not MIN_GRID <= a.grid <= MAX_GRID:
        raise UsageError(f"grid must lie in [{MIN_GRID}, {MAX_GRID}], got {a.grid}", "--grid")
    if not (0 < a.tol <= 1e-2) or not math.isfinite(a.tol):
        raise UsageError(f"tolerance must lie in (0, 1e-2], got {a.tol}", "--tol")
    if not 1 <= a.max_iter <= MAX_ITER:
        raise UsageError(f"must lie in [1, {MAX_ITER}]", "--max-iter")
    if a.samples is not None and not 1 <= a.samples <= MAX_SAMPLES:
        raise UsageError(f"must lie in [1, {MAX_SAMPLES}]", "--samples")
    if a.level is not None and not 1 <= a.level <= LIMITS.max_level:
        raise UsageError(f"must lie in [1, {LIMITS.max_level}]", "--level")
    if a.seed is not None and a.seed < 0:
        raise UsageError("must be non-negative", "--seed")
    if cmd in SAMPLING and a.seed is None:
        raise UsageError(f"{cmd} samples randomly and needs an explicit seed", "--seed")
    if cmd == "selftest" and a.seed is None:
        a.seed = 0

    mode = a.mode
    if mode is not None:
        allowed = {"extend": ("cp", "ucp", "pipeline"), "nu": ("collapsed", "full")}.get(cmd, ())
        if mode not in allowed:
            raise UsageError(f"{mode!r} is not a mode of {cmd}", "--mode")
    else:
        mode = "collapsed" if cmd == "nu" else "cp"

    spec = CommandSpec(cmd, level=a.level, tol=a.tol, grid=a.grid, seed=a.seed,
                       samples=a.samples if a.samples is not None else _default_samples(cmd),
                       max_iter=a.max_iter, mode=mode, quick=a.quick, fmt=a.fmt, out=a.out)

    if cmd in NEEDS_SPACE:
        if not a.space:
            raise UsageError(f"{cmd} needs a space", "--space")
        try:
            spec.space = atlas.make_example(a.space)
        except (SpaceError, FormatError, ValueError, OSError) as exc:
            raise UsageError(str(exc), "--space") from None
        spec.space_label = a.space
    elif a.space:
        raise UsageError(f"{cmd} takes no space", "--space")

    if cmd in NEEDS_INPUT:
        if not a.input:
            raise UsageError(f"{cmd} needs an input", "--input")
        obj = _load_json(a.input)
        is_functional = isinstance(obj, dict) and "representatives" in obj
        if cmd in FUNCTIONAL_INPUT and not is_functional:
            raise UsageError(f"{cmd} expects a functional with 'representatives'", "--input")
        try:
            if is_functional:
                spec.functional = functional_from_json(spec.space, obj)
                if a.level is not None and a.level != spec.functional.n:
                    raise UsageError(f"functional has level {spec.functional.n}", "--level")
                spec.level = spec.functional.n
            else:
                spec.element = element_from_json(spec.space, obj, a.level)
                if a.level is not None and a.level != spec.element.level:
                    raise UsageError(f"element has level {spec.element.level}", "--level")
                spec.level = spec.element.level
        except (FormatError, SpaceError) as exc:
            raise UsageError(str(exc), "--input") from None
        if spec.level > LIMITS.max_level:
            raise UsageError(f"level {spec.level} exceeds the cap {LIMITS.max_level}", "--input")
    elif a.input:
        raise UsageError(f"{cmd} takes no input", "--input")
    return spec


def _default_samples(cmd: str) -> int:
    return {"dualnorm": 16, "cp-check": 8, "regularity": 20, "os-constant": 10,
            "bidual-check": 3, "l1-probe": 20}.get(cmd, 8)


def _levels(spec: CommandSpec) -> tuple[int, ...]:
    return tuple(range(1, (spec.level or 2) + 1))


def execute(spec: CommandSpec) -> Report:
    t0 = time.perf_counter()
    report = _dispatch(spec)
    report.runtime_ms = 1e3 * (time.perf_counter() - t0)
    report.tolerances = {"tol": spec.tol, "max_iter": spec.max_iter, **report.tolerances}
    return report


def _report(spec: CommandSpec, value, status: str, residuals=None, extra=None, **tols) -> Report:
    return Report(spec.command, spec.space_label, spec.level, value, status,
                  residuals or {}, spec.seed, tols, 0.0, extra or {})


def _decided(flag: bool) -> str:
    return "optimal" if flag else "undecided"


def _dispatch(spec: CommandSpec) -> Report:
    from matreg import duality, norms

    cmd, settings = spec.command, spec.settings
    if cmd == "norm":
        if spec.element is None:
            r = duality.dual_cb_norm(spec.functional, samples=1, seed=0, settings=settings)
            return _report(spec, r.value, _decided(r.decided), {"gap": r.gap})
        return _report(spec, level_norm(spec.element), "optimal")

    if cmd == "regnorm":
        if spec.element is None:
            raise UsageError("regnorm takes an element of M_n(V)", "--input")
        r = norms.reg_norm(spec.element, spec.tol, settings)
        extra = {"witness_a": r.witness_a, "witness_d": r.witness_d,
                 "solver_status": r.solver_status, "norm": level_norm(spec.element)}
        return _report(spec, r.value, r.status, r.residuals, extra)

    if cmd == "nu":
        if spec.functional is not None:
            r = duality.nu_dual(spec.functional, spec.grid, spec.tol, settings)
            extra = {"lower_certified": r.lower_certified}
        else:
            r = duality.nu(spec.element, spec.grid, spec.mode, settings)
            extra = {"norm": level_norm(spec.element), "T1": r.T1, "T2": r.T2, "theta": r.theta}
        extra.update(mode=r.mode, dual_bound=r.dual_bound)
        value = {"lower": r.lower, "upper": r.upper}
        return _report(spec, value, "optimal" if r.decided else "undecided", r.residuals,
                       extra, grid=spec.grid)

    if cmd == "dualnorm":
        r = duality.dual_cb_norm(spec.functional, spec.samples, spec.seed, settings)
        extra = {"lower": r.lower, "upper": r.upper, "samples": r.samples,
                 "extension_choi": r.extension_choi}
        return _report(spec, r.value, _decided(r.decided), {"gap": r.gap, "solver": r.max_residual},
                       extra)

    if cmd == "cp-check":
        r = duality.cp_membership(spec.functional, spec.tol, spec.samples, spec.seed,
                                  settings=settings)
        extra = {"witness_kind": r.witness_kind, "witness": r.witness, "witness_level": r.level,
                 "searched": r.searched}
        res = {"min_output_eigenvalue": r.min_output_eigenvalue,
               "completion_margin": r.completion_margin,
               "agreement_residual": r.agreement_residual}
        return _report(spec, r.verdict, r.verdict, res, extra)

    if cmd == "extend":
        if spec.mode == "pipeline":
            p = duality.extension_pipeline(spec.functional, settings=settings)
            res = {"corner": p.corner_residual, "restriction": p.extension.restriction_residual}
            extra = {"scale": p.scale, "phi1_norm": p.phi1_norm, "phi2_norm": p.phi2_norm,
                     "choi": p.extension.choi}
            return _report(spec, p.ok, "pass" if p.ok else "fail", res, extra)
        try:
            e = duality.arveson_extend(spec.functional, spec.mode, spec.tol, settings)
        except ValueError as exc:
            raise UsageError(str(exc), "--input") from None
        res = {"restriction": e.restriction_residual, "unital": e.unital_residual,
               "min_eigenvalue": e.min_eigenvalue}
        return _report(spec, e.margin, e.status, res, {"choi": e.choi, "mode": e.mode})

    if cmd == "regularity":
        r = norms.regularity_profile(spec.space, _levels(spec), spec.samples, spec.seed,
                                     spec.tol, settings)
        status = "undecided" if r.undecided else "optimal"
        extra = {"levels": r.levels, "samples": r.samples, "worst_direction": r.worst_direction,
                 "condition1_violations": r.condition1_violations,
                 "condition1_checked": r.condition1_checked, "infinite_count": r.infinite_count,
                 "undecided": r.undecided}
        return _report(spec, r.empirical_K, status, {}, extra)

    if cmd == "os-constant":
        r = norms.os_constant_estimate(spec.space, _levels(spec), spec.samples, spec.grid,
                                       spec.seed, settings)
        extra = {"samples": r.samples, "undecided": r.undecided,
                 "worst_direction": r.worst_direction}
        return _report(spec, r.estimate, "undecided" if r.undecided else "optimal", {}, extra,
                       grid=spec.grid)

    if cmd == "bidual-check":
        r = duality.bidual_check(spec.space, _levels(spec), spec.samples, spec.seed, spec.tol,
                                 settings)
        ok = r["isometry_ok"] and r["order_positive_ok"] and r["separation_ok"]
        status = "undecided" if r["undecided"] else ("pass" if ok else "fail")
        res = {"isometry": r["isometry_residual"],
               "order_min_output_eigenvalue": r["order_min_output_eigenvalue"]}
        extra = {k: v for k, v in r.items() if k not in ("samples", "runtime_ms", "seed")}
        return _report(spec, bool(ok), status, res, extra)

    if cmd == "l1-probe":
        r = atlas.l1_two_probe(spec.samples, spec.seed, spec.grid, _levels(spec))
        status = "undecided" if r["undecided"] else "optimal"
        extra = {k: v for k, v in r.items() if k not in ("op", "space", "seed", "runtime_ms",
                                                            "samples", "estimate")}
        spec.space_label = r["space"]
        return _report(spec, r["estimate"], status, {}, extra, grid=spec.grid)

    if cmd == "selftest":
        from matreg import acceptance

        results = acceptance.run_all(quick=spec.quick,
                                     echo=lambda line: print(line, file=sys.stderr))
        ok = all(c.passed for c in results)
        extra = {f"criterion_{c.number}": {"passed": c.passed, "title": c.title,
                                           "runtime_s": c.runtime_s, **c.details}
                 for c in results}
        return _report(spec, sum(c.passed for c in results), "pass" if ok else "fail", {}, extra,
                       quick=spec.quick)
    raise UsageError(f"unknown command {cmd!r}")


def exit_code(report: Report) -> int:
    if report.status == "undecided":
        return 2
    if report.status in ("error", "fail"):
        return 1
    return 0


def emit(report: Report, fmt: str, out: Path | None) -> None:
    text = report.to_json() + "\n" if fmt == "json" else report.to_csv()
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        spec = parse_command(argv)
    except UsageError as exc:
        print(f"matreg: error: {exc}", file=sys.stderr)
        return 1
    try:
        report = execute(spec)
    except UsageError as exc:
        print(f"matreg: error: {exc}", file=sys.stderr)
        return 1
    except (SpaceError, FormatError, ValueError, np.linalg.LinAlgError) as exc:
        report = Report(spec.command, spec.space_label, spec.level, None, "error",
                        {}, spec.seed, {"tol": spec.tol}, 0.0,
                        {"error": type(exc).__name__, "message": str(exc)})
        emit(report, spec.fmt, spec.out)
        print(f"matreg: error: {exc}", file=sys.stderr)
        return 1
    emit(report, spec.fmt, spec.out)
    return exit_code(report)


if __name__ == "__main__":
    sys.exit(main())
