"""End-to-end runs: validate -> solve -> geometry -> verify -> penrose."""

from __future__ import annotations

import concurrent.futures
import csv
import json
import math
import os
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, geometry, kernel, solver, verifier
from .data import (
    DataError,
    HorizonError,
    check_dec,
    check_falloff,
    check_interior_horizons,
    classify_horizon,
    from_descriptor,
)

EXIT_PASS, EXIT_CHECK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
OUT_ENV = "JANG_PENROSE_OUT"
DEFAULT_OUT = "jang-penrose-out"
STAGES = ("validate", "solve", "geometry", "verify", "penrose")
CHECKS = ("validate", "solve", "verify", "penrose", "all")


class ConfigError(ValueError):
    pass


class _Halt(Exception):
    """Stop downstream stages without an error."""


def default_out_dir():
    return Path(os.environ.get(OUT_ENV, DEFAULT_OUT))


# ---------------------------------------------------------------------------
# configuration

@dataclass
class RunConfig:
    data: dict
    solver: solver.SolverConfig
    boundary: object = None
    levels: list | None = None
    checks: tuple = ("all",)
    out: Path | None = None
    name: str = "run"
    exact_mass: float | None = None
    rigidity_tol: float | None = None
    raw: dict = field(default_factory=dict)

    @property
    def last_stage(self):
        if "all" in self.checks or "penrose" in self.checks:
            return "penrose"
        if "verify" in self.checks:
            return "verify"
        if "solve" in self.checks:
            return "geometry"
        return "validate"


_SOLVER_KEYS = {"rmax": "r_max", "rtol": "rtol", "atol": "atol", "eps_s": "eps_s",
                "dv_min": "dv_min", "branch": "branch", "nodes": "n_nodes",
                "max_steps": "max_steps", "backend": "backend"}


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None


def parse_config(raw: dict, base: Path | None = None, name: str | None = None) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("run config must be a JSON object")
    base = base or Path.cwd()
    data = raw.get("data")
    if isinstance(data, str):
        data = _load_json(base / data)
    if not isinstance(data, dict):
        raise ConfigError("config needs a 'data' descriptor (object or file path)")
    sblock = dict(raw.get("solver") or {})
    boundary = sblock.pop("boundary", raw.get("boundary"))
    unknown = set(sblock) - set(_SOLVER_KEYS)
    if unknown:
        raise ConfigError(f"unknown solver keys: {sorted(unknown)}")
    try:
        scfg = solver.SolverConfig(**{_SOLVER_KEYS[k]: v for k, v in sblock.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"solver block: {exc}") from None
    checks = raw.get("checks", ["all"])
    if isinstance(checks, str):
        checks = [checks]
    if not checks or any(c not in CHECKS for c in checks):
        raise ConfigError(f"checks must be a non-empty subset of {list(CHECKS)}")
    levels = raw.get("levels")
    if levels is not None:
        if (not isinstance(levels, list) or len(levels) < 3
                or any(not isinstance(n, int) for n in levels)):
            raise ConfigError("levels must list at least 3 integer node counts")
    if boundary not in (None, "past-horizon", "future-horizon") and not isinstance(
            boundary, (dict, int, float)):
        raise ConfigError(f"bad boundary {boundary!r}")
    out = raw.get("out")
    return RunConfig(
        data=data, solver=scfg, boundary=boundary, levels=levels, checks=tuple(checks),
        out=Path(out) if out else None, name=str(raw.get("name", name or "run")),
        exact_mass=raw.get("exact_mass"), rigidity_tol=raw.get("rigidity_tol"), raw=raw,
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config(_load_json(path), path.parent, path.stem)


# ---------------------------------------------------------------------------
# JSON hygiene

def clean(obj):
    """Plain JSON types; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps(obj):
    return json.dumps(clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# profiles

def _write_csv(path, header, cols):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*cols):
            w.writerow(["" if not math.isfinite(x) else repr(float(x)) for x in row])


def write_solution_csv(sol, path):
    _write_csv(path, ["r", "v", "v_r", "s", "phi"], (sol.r, sol.v, sol.v_r, sol.s, sol.phi))


def write_residual_csv(data, sol, path):
    t1 = verifier.theorem1_residual(data, sol, "grid")["profile"]
    B = verifier.boundary_integrand(data, sol)
    _write_csv(path, ["r", "theorem1_residual", "boundary_integrand"], (sol.r, t1, B))


def emit_profiles(state: dict, directory) -> list:
    """Write the CSV profiles of a run; returns the manifest (relative names)."""
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        files = []
        data, sol = state.get("data"), state.get("solution")
        if sol is None:
            return files
        write_solution_csv(sol, directory / "solution.csv")
        files.append("solution.csv")
        if state.get("profile") is not None:
            state["profile"].write_csv(directory / "geometry.csv")
            files.append("geometry.csv")
        if state.get("verified"):
            write_residual_csv(data, sol, directory / "residual.csv")
            files.append("residual.csv")
        for lv in state.get("levels") or []:
            name = f"residual_n{lv.n}.csv"
            write_residual_csv(data, lv.solution, directory / name)
            files.append(name)
        if state.get("study") is not None:
            (directory / "orders.json").write_text(dumps(state["study"]))
            files.append("orders.json")
        return files
    except OSError as exc:
        raise ConfigError(f"cannot write profiles to {directory}: {exc.strerror}") from None


# ---------------------------------------------------------------------------
# run

def _stage(report, name, status, **extra):
    report["stages"][name] = {"status": status, **extra}


def _verify_stage(cfg, data, sol, state):
    rep = verifier.verify(data, sol)
    out = rep.as_dict()
    study_ok = True
    if cfg.levels:
        study_cfg = solver.SolverConfig(**{**cfg.solver.__dict__,
                                          **verifier.STUDY_TOLERANCES})
        study, levels = verifier.refinement_study(
            data, cfg.boundary, study_cfg, tuple(cfg.levels), exact_mass=cfg.exact_mass)
        state["study"], state["levels"] = study, levels
        out["refinement"] = study
        for key, entry in study["metrics"].items():
            if entry["discrete"] and not verifier.converged(entry):
                study_ok = False
        for c in out["checks"]:
            entry = study["metrics"].get(c["name"])
            if entry is not None:
                c["order"] = entry["min_order"]
    out["pass"] = rep.passed and study_ok
    state["verified"] = True
    return out


def run(cfg: RunConfig, out_dir=None, emit=True):
    """Execute one run; returns (exit_code, report)."""
    t_start = time.perf_counter()
    report = {
        "name": cfg.name,
        "config": cfg.raw or {"data": cfg.data},
        "stages": {},
        "warnings": [],
        "results": {},
        "manifest": [],
        "meta": {"version": __version__, "python": platform.python_version(),
                 "numpy": np.__version__, "kernel": kernel.backend_name(
                     kernel.get_backend(cfg.solver.backend))},
    }
    timings = {}
    state = {}
    code = EXIT_PASS
    last = STAGES.index(cfg.last_stage)
    results = report["results"]

    def done(stage, t0):
        timings[stage] = round(time.perf_counter() - t0, 6)

    try:
        # validate
        t0 = time.perf_counter()
        data = from_descriptor(cfg.data)
        state["data"] = data
        hc = classify_horizon(data)
        dec = check_dec(data)
        fall = check_falloff(data)
        try:
            check_interior_horizons(data)
            interior = {"pass": True}
        except HorizonError as exc:
            interior = {"pass": False, "location": exc.location, "message": str(exc)}
        results["validate"] = {
            "horizon": {"kind": hc.kind.value, "theta_plus": hc.theta_plus,
                        "theta_minus": hc.theta_minus, "slope": hc.slope},
            "dec": dec.as_dict(), "falloff": fall.as_dict(), "interior_horizons": interior,
        }
        if not fall.passed:
            bad = [k for k, c in fall.details.items() if not c["pass"]]
            report["warnings"].append(f"fall-off clauses violated: {', '.join(bad)}")
        done("validate", t0)
        if not dec.passed:
            _stage(report, "validate", "fail", reason="dominant energy condition violated")
            code = EXIT_CHECK
            raise _Halt
        _stage(report, "validate", "pass")
        if last == 0:
            raise _Halt

        # solve
        t0 = time.perf_counter()
        sol = solver.solve(data, cfg.boundary, cfg.solver)
        state["solution"] = sol
        diag = {k: v for k, v in sol.diagnostics.items() if k != "cross_residual"}
        diag["cross_residual"] = {k: sol.diagnostics["cross_residual"][k]
                                  for k in ("sup", "l2")}
        results["solve"] = {
            "boundary": sol.boundary, "nodes": sol.grid.n, "r_max": float(sol.r[-1]),
            "max_abs_v_interior": float(np.max(np.abs(sol.v[1:]))),
            "diagnostics": diag,
        }
        try:
            results["solve"]["asymptotics"] = solver.asymptotic_report(sol)
        except solver.SolverError as exc:
            report["warnings"].append(str(exc))
        done("solve", t0)
        _stage(report, "solve", "pass")

        # geometry
        t0 = time.perf_counter()
        prof = geometry.profile(data, sol, "pointwise")
        state["profile"] = prof
        m_adm, unc = geometry.adm_mass(sol.r, prof.mass, scale=sol.grid.scale)
        results["geometry"] = {
            "m_adm": m_adm, "m_adm_uncertainty": unc, "m_inner": float(prof.mass[0]),
            "area_inner": float(prof.area[0]), "hbar_inner": float(prof.mean_curvature[0]),
            "mass_range": [float(np.min(prof.mass)), float(np.max(prof.mass))],
        }
        done("geometry", t0)
        _stage(report, "geometry", "pass")
        if last < 3:
            raise _Halt

        # verify
        t0 = time.perf_counter()
        ver = _verify_stage(cfg, data, sol, state)
        results["verify"] = ver
        done("verify", t0)
        _stage(report, "verify", "pass" if ver["pass"] else "fail")
        if not ver["pass"]:
            code = EXIT_CHECK
            raise _Halt
        if last < 4:
            raise _Halt

        # penrose
        t0 = time.perf_counter()
        pr = verifier.penrose_report(data, sol, prof)
        pen = pr.as_dict()
        try:
            pen["rigidity"] = verifier.rigidity_check(data, sol, pr, tol=cfg.rigidity_tol)
        except verifier.NotApplicable as exc:
            pen["rigidity"] = {"applicable": False, "reason": str(exc)}
        results["penrose"] = pen
        done("penrose", t0)
        ok = pr.verdict != "FAIL" and pr.routes_agree
        ok = ok and pen["rigidity"].get("pass", True)
        _stage(report, "penrose", "pass" if ok else "fail", verdict=pr.verdict)
        if not ok:
            code = EXIT_CHECK
    except _Halt:
        pass
    except (DataError, ConfigError) as exc:
        code = EXIT_CONFIG
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
    except solver.SolverError as exc:
        code = EXIT_SOLVER
        report["error"] = {"type": type(exc).__name__, "message": str(exc),
                           "location": getattr(exc, "location", None)}
    for stage in STAGES:
        report["stages"].setdefault(stage, {"status": "skipped"})
    if "error" in report:
        failed = next(s for s in STAGES if report["stages"][s]["status"] == "skipped")
        report["stages"][failed] = {"status": "error"}

    report["exit_code"] = code
    report["meta"]["timings"] = timings
    report["meta"]["total_seconds"] = round(time.perf_counter() - t_start, 6)
    if emit:
        out = Path(out_dir or cfg.out or default_out_dir())
        try:
            report["manifest"] = emit_profiles(state, out) + ["report.json"]
            (out / "report.json").write_text(dumps(report))
        except (ConfigError, OSError) as exc:
            report["error"] = {"type": "ConfigError", "message": str(exc)}
            report["exit_code"] = code = EXIT_CONFIG
    return code, report


def comparable(report: dict) -> dict:
    """Report without timing and environment metadata."""
    return {k: v for k, v in report.items() if k != "meta"}


# ---------------------------------------------------------------------------
# batch

def _run_entry(args):
    index, raw, base, out_dir = args
    name = raw.get("name", f"run{index:03d}") if isinstance(raw, dict) else f"run{index:03d}"
    try:
        if isinstance(raw, str):
            cfg = load_config(base / raw)
        else:
            cfg = parse_config(raw, base, name)
    except ConfigError as exc:
        return index, EXIT_CONFIG, {"name": name, "exit_code": EXIT_CONFIG,
                                    "error": {"type": "ConfigError", "message": str(exc)}}
    sub = Path(out_dir) / f"{index:03d}-{cfg.name}"
    code, report = run(cfg, sub)
    return index, code, clean(report)


def aggregate_exit(codes):
    if any(c >= 2 for c in codes):
        return EXIT_CONFIG
    if any(c == 1 for c in codes):
        return EXIT_CHECK
    return EXIT_PASS


def batch(configs: list, workers=1, out_dir=None, base=None):
    """Run independent configs concurrently; results ordered by config index."""
    out_dir = Path(out_dir or default_out_dir())
    base = base or Path.cwd()
    jobs = [(i, raw, base, out_dir) for i, raw in enumerate(configs)]
    if workers > 1 and len(jobs) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_entry, jobs))
    else:
        results = [_run_entry(j) for j in jobs]
    results.sort(key=lambda t: t[0])
    codes = [c for _, c, _ in results]
    agg_code = aggregate_exit(codes)
    runs = []
    for index, code, rep in results:
        pen = rep.get("results", {}).get("penrose", {})
        runs.append({"index": index, "name": rep.get("name"), "exit_code": code,
                     "verdict": "PASS" if code == 0 else "FAIL",
                     "penrose_verdict": pen.get("verdict"),
                     "report": comparable(rep)})
    agg = {"verdict": "PASS" if agg_code == 0 else "FAIL", "exit_code": agg_code,
           "count": len(runs), "runs": runs}
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "batch.json").write_text(dumps(agg))
    except OSError as exc:
        agg["error"] = f"cannot write {out_dir}: {exc.strerror}"
        agg["exit_code"] = agg_code = EXIT_CONFIG
    return agg_code, agg


# ---------------------------------------------------------------------------
# validate only

def validate(descriptor: dict):
    try:
        data = from_descriptor(descriptor)
        hc = classify_horizon(data)
        dec = check_dec(data)
        fall = check_falloff(data)
    except DataError as exc:
        return EXIT_CONFIG, {"error": {"type": type(exc).__name__, "message": str(exc)}}
    try:
        check_interior_horizons(data)
        interior = {"pass": True}
    except HorizonError as exc:
        interior = {"pass": False, "location": exc.location, "message": str(exc)}
    report = {
        "horizon": {"kind": hc.kind.value, "theta_plus": hc.theta_plus,
                    "theta_minus": hc.theta_minus, "slope": hc.slope},
        "dec": dec.as_dict(), "falloff": fall.as_dict(), "interior_horizons": interior,
        "warnings": [] if fall.passed else ["fall-off clauses violated"],
    }
    code = EXIT_PASS if dec.passed and interior["pass"] else EXIT_CHECK
    report["exit_code"] = code
    return code, report
