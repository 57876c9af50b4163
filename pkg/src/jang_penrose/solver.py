"""Generalized Jang equation in spherical symmetry with warping phi = rho_s.

The unknown is v = phi sqrt(g^11) f_r / sqrt(1 + phi^2 g^11 f_r^2), and with
a = sqrt(g^11) rho_r / rho the equation reads

    sqrt(g^11) (1 - v^2) v_r + (1 - v^2) F(r, v) +/- theta = 0,

    F_minus = -2a/(1 + v) - ka + sqrt(g^11) v rho_rr/rho_r + v (sqrt(g^11))_r
    F_plus  = +2a/(1 - v) - ka + sqrt(g^11) v rho_rr/rho_r + v (sqrt(g^11))_r

paired with +theta_minus and -theta_plus respectively.  Both forms are the
same equation; they differ only in which factor of 1 - v^2 is divided out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson

from . import kernel
from .data import (
    DataError,
    Horizon,
    HorizonClassification,
    HorizonError,
    InitialData,
    check_interior_horizons,
    classify_horizon,
    decay_exponent,
)
from .grid import RadialGrid

GATE = 1e-6


class SolverError(RuntimeError):
    """The Jang solve did not produce an admissible solution."""


class BoundViolation(SolverError):
    """|v| reached 1 at an interior radius."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class StepUnderflow(SolverError):
    pass


class InteriorHorizon(SolverError):
    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class SingularStartError(SolverError):
    pass


class GateFailure(SolverError):
    """Solution rejected by the cross-residual against the undivided form."""


@dataclass
class SolverConfig:
    r_max: float | None = None
    rtol: float = 1e-10
    atol: float = 1e-12
    eps_s: float | None = None
    dv_min: float = 1e-12
    branch: str = "auto"
    n_nodes: int = 2000
    max_steps: int = 2_000_000
    check_horizons: bool = True
    gate: float = GATE
    backend: str | None = None

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")
        if self.branch not in ("auto", "minus", "plus"):
            raise ValueError(f"unknown branch {self.branch!r}")
        if self.eps_s is not None and not self.eps_s > 0:
            raise ValueError("eps_s must be positive")

    def resolved_rmax(self, data: InitialData) -> float:
        r_max = self.r_max if self.r_max is not None else 1e4 * data.mass_scale
        r_max = min(r_max, data.r_max)
        if self.eps_s is not None and self.eps_s >= r_max:
            raise ValueError("eps_s must be below r_max")
        return r_max

    def to_dict(self):
        return {"rmax": self.r_max, "rtol": self.rtol, "atol": self.atol,
                "eps_s": self.eps_s, "dv_min": self.dv_min, "branch": self.branch,
                "nodes": self.n_nodes}


_BRANCH = {"auto": 0, "minus": -1, "plus": 1}


@dataclass
class JangSolution:
    grid: RadialGrid
    v: np.ndarray
    v_r: np.ndarray
    one_minus_v2: np.ndarray
    s: np.ndarray
    s_xi: np.ndarray
    phi: np.ndarray
    boundary: float
    mode: int
    config: SolverConfig
    classification: HorizonClassification
    diagnostics: dict = field(default_factory=dict)

    @property
    def r(self):
        return self.grid.r

    @property
    def horizon_start(self):
        return abs(self.boundary) == 1.0

    def f_r(self, data):
        """Slope of the Jang graph, nan where |v| >= 1 - 1e-6."""
        fl = data.fields(self.r)
        ok = np.abs(self.v) < 1 - 1e-6
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.v * fl.sqrt_g11 / (self.phi * np.sqrt(self.one_minus_v2))
        return np.where(ok, out, np.nan)


# ---------------------------------------------------------------------------
# equation

def _f_common(fl, v):
    with np.errstate(divide="ignore", invalid="ignore"):
        extra = np.where(v != 0, fl.lapse * v * fl.rho_rr / fl.rho_r + v * fl.lapse_r, 0.0)
    return -fl.ka + extra


def jang_f(data, r, v, branch="minus"):
    """F_minus or F_plus at (r, v)."""
    fl = data.fields(r)
    v = np.asarray(v, dtype=float)
    a = fl.lapse * fl.rho_r / fl.rho
    if branch == "minus":
        return -2 * a / (1 + v) + _f_common(fl, v)
    return 2 * a / (1 - v) + _f_common(fl, v)


def ode_rhs(data: InitialData, r, v, branch="auto", dv_min=1e-12,
            one_minus_v=None, one_plus_v=None):
    """v_r from the divided form of the equation."""
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(r <= 0):
        raise DataError("ode_rhs needs r > 0")
    omv = 1 - v if one_minus_v is None else np.asarray(one_minus_v, dtype=float)
    opv = 1 + v if one_plus_v is None else np.asarray(one_plus_v, dtype=float)
    if np.any(omv <= dv_min) or np.any(opv <= dv_min):
        raise BoundViolation("|v| >= 1 - dv_min in ode_rhs")
    fl = data.fields(r)
    a = fl.lapse * fl.rho_r / fl.rho
    common = _f_common(fl, v)
    minus = -(common - 2 * a / opv + 2 * (a - fl.kb) / (omv * opv)) / fl.lapse
    plus = -(common + 2 * a / omv - 2 * (a + fl.kb) / (omv * opv)) / fl.lapse
    if branch == "minus":
        return minus
    if branch == "plus":
        return plus
    return np.where(v >= 0, minus, plus)


def theta_slope(data, r=None):
    """Analytic r-derivatives of (theta_plus, theta_minus)."""
    r = data.r_min if r is None else r
    fl = data.fields(r)
    d_mean = (fl.lapse_r * fl.rho_r / fl.rho + fl.lapse * fl.rho_rr / fl.rho
              - fl.lapse * fl.rho_r**2 / fl.rho**2)
    return 2 * (d_mean + fl.kb_r), 2 * (d_mean - fl.kb_r)


def slope_root(lapse0, f0, dtheta0, kind):
    """Root of lapse0 x^2 + f0 x - dtheta0/2 = 0 of the sign fixed by kind."""
    if not dtheta0 > 0:
        raise SingularStartError(
            f"expansion slope at the horizon is {dtheta0:g} <= 0; "
            "perturb the data slightly so that it is positive")
    disc = math.sqrt(f0 * f0 + 2 * lapse0 * dtheta0)
    # the root product is -dtheta0 / (2 lapse0); pick the cancellation-free form
    if kind == Horizon.PAST:
        return -dtheta0 / (disc - f0) if f0 < 0 else (-f0 - disc) / (2 * lapse0)
    return dtheta0 / (disc + f0) if f0 > 0 else (disc - f0) / (2 * lapse0)


def initial_slope(data: InitialData, classification: HorizonClassification | None = None):
    """v_r(0) for a horizon start (v(0) = +1 past, -1 future)."""
    c = classification or classify_horizon(data)
    if c.kind not in (Horizon.PAST, Horizon.FUTURE):
        raise SingularStartError(
            f"horizon start needs a past or future horizon, found {c.kind.value}")
    r0 = data.r_min
    fl = data.fields(r0)
    dtp, dtm = theta_slope(data, r0)
    if c.kind == Horizon.PAST:
        f0 = float(jang_f(data, r0, 1.0, "minus"))
        return slope_root(float(fl.lapse), f0, float(dtm), Horizon.PAST)
    f0 = float(jang_f(data, r0, -1.0, "plus"))
    return slope_root(float(fl.lapse), f0, float(dtp), Horizon.FUTURE)


# ---------------------------------------------------------------------------
# solve

def resolve_boundary(boundary, classification: HorizonClassification) -> float:
    if boundary is None:
        bv = classification.boundary_value
        return 0.0 if bv is None else bv
    if boundary == "past-horizon":
        return 1.0
    if boundary == "future-horizon":
        return -1.0
    if isinstance(boundary, dict):
        boundary = boundary.get("alpha")
    alpha = float(boundary)
    if not -1 < alpha < 1:
        raise ValueError(f"alpha must lie in (-1, 1), got {alpha}")
    return alpha


def _series_cutoff(slope_at, r_scale, c, atol, eps_s=None):
    """Series cutoff and its remainder estimate.

    Halves from 1e-3 r_scale until the second-order remainder drops below
    atol.  If rounding in the slope (or in the horizon location) stalls the
    estimate first, the cutoff with the smallest remainder is kept.
    """
    if eps_s is not None:
        s1 = slope_at(eps_s)
        return eps_s, 0.5 * abs(s1 - c) * eps_s
    eps = 1e-3 * r_scale
    best = (math.inf, None)
    for _ in range(60):
        s1 = slope_at(eps)
        rem = 0.5 * abs(s1 - c) * eps if math.isfinite(s1) else math.inf
        if rem < atol:
            return eps, rem
        if rem < best[0]:
            best = (rem, eps)
        elif best[1] is not None and rem > 2 * best[0]:
            break
        eps *= 0.5
    if best[1] is None:
        raise SingularStartError("could not find a series cutoff for the start")
    return best[1], best[0]


def solve(data: InitialData, boundary=None, config: SolverConfig | None = None) -> JangSolution:
    config = config or SolverConfig()
    backend = kernel.get_backend(config.backend)
    c = classify_horizon(data)
    v0 = resolve_boundary(boundary, c)
    r_max = config.resolved_rmax(data)
    scale = min(data.mass_scale, r_max / 10)
    grid = RadialGrid(config.n_nodes, r_max, scale)
    r = grid.r
    if config.check_horizons:
        try:
            check_interior_horizons(data, grid)
        except HorizonError as exc:
            raise InteriorHorizon(str(exc), exc.location) from None

    spec = data.kernel_spec()
    kargs = (spec.code, spec.params, spec.knots, spec.coeffs)
    branch = _BRANCH[config.branch]

    if abs(v0) == 1.0:
        kind = Horizon.PAST if v0 > 0 else Horizon.FUTURE
        if c.kind != kind:
            raise SingularStartError(
                f"v(0)={v0:+g} needs a {kind.value} horizon, data has {c.kind.value}")
        mode = 1 if v0 > 0 else 2
        cslope = initial_slope(data, c)

        def slope_at(x):
            yy = abs(cslope) * x
            vv, omv, opv = (1 - yy, yy, 2 - yy) if mode == 1 else (yy - 1, 2 - yy, yy)
            return backend.slope(*kargs, x, vv, omv, opv, branch)

        eps, remainder = _series_cutoff(slope_at, scale, cslope, config.atol, config.eps_s)
        y_eps = abs(cslope) * eps
    else:
        mode = 0
        if c.kind == Horizon.BOTH and v0 != 0:
            raise SingularStartError(
                f"regular start v(0)={v0:g} at a minimal sphere (both expansions vanish) "
                "is singular; use v(0)=0")
        with np.errstate(all="ignore"):
            start = backend.rhs(*kargs, 0.0, v0, branch)
        if math.isfinite(start):
            cslope, eps, y_eps, remainder = start, 0.0, v0, 0.0
        else:
            # data singular at r = 0 (g11 or rho_r/rho_rr degenerate): probe off it
            def slope_at(x):
                return backend.rhs(*kargs, x, v0, branch)

            cslope = slope_at(1e-12 * scale)
            eps, remainder = _series_cutoff(slope_at, scale, cslope, config.atol,
                                            config.eps_s)
            y_eps = v0 + eps * slope_at(eps)

    h0 = max(eps, 1e-6 * scale) * 0.1
    y_out, nsteps, nrej, status, r_stop = backend.integrate(
        *kargs, mode, branch, y_eps, eps, r_max, r[r > eps],
        config.rtol, config.atol, config.dv_min, h0, config.max_steps)
    if status == kernel.BOUND:
        raise BoundViolation(
            f"|v| reached 1 at interior r={r_stop:.6g}; the outermost apparent "
            "horizon condition is violated", r_stop)
    if status != kernel.OK:
        name = {kernel.UNDERFLOW: "step-size underflow", kernel.MAXSTEPS: "step limit",
                kernel.NONFINITE: "non-finite right-hand side"}[status]
        raise StepUnderflow(f"integration stopped at r={r_stop:.6g}: {name}")

    y = np.empty_like(r)
    inner = r <= eps
    if mode == 0:
        y[inner] = v0 + cslope * r[inner]
    else:
        y[inner] = abs(cslope) * r[inner]
    y[~inner] = y_out
    if mode == 1:
        v, omv, opv = 1 - y, y, 2 - y
    elif mode == 2:
        v, omv, opv = y - 1, 2 - y, y
    else:
        v, omv, opv = y, 1 - y, 1 + y
    one_minus_v2 = omv * opv
    if np.any(one_minus_v2[1:] <= 0):
        raise BoundViolation("solution left -1 < v < 1")
    v_r = np.empty_like(r)
    v_r[0] = cslope
    v_r[1:] = ode_rhs(data, r[1:], v[1:], config.branch, 0.0, omv[1:], opv[1:])

    sol = JangSolution(
        grid=grid, v=v, v_r=v_r, one_minus_v2=one_minus_v2, s=None, s_xi=None,
        phi=None, boundary=v0, mode=mode, config=config, classification=c,
        diagnostics={"steps": nsteps, "rejected": nrej, "eps_s": eps, "series_remainder": remainder,
                     "initial_slope": cslope, "backend": kernel.backend_name(backend)},
    )
    sol.s, sol.s_xi, sol.phi = arclength_and_phi(data, sol)
    res = cross_residual_32(data, sol)
    sol.diagnostics["cross_residual"] = res
    if not res["sup"] <= config.gate:
        raise GateFailure(
            f"cross-residual {res['sup']:.3g} exceeds gate {config.gate:g}; "
            "the profile is under-resolved, raise the node count")
    return sol


# ---------------------------------------------------------------------------
# reconstruction

def _even_extrapolate(f):
    # f(0) of an even smooth function from f(h), f(2h)
    return (4 * f[1] - f[2]) / 3


def arclength_and_phi(data: InitialData, sol: JangSolution):
    """Arclength s(r) in the Jang metric and the warping factor phi = rho_s."""
    grid = sol.grid
    fl = data.fields(grid.r)
    omv2 = sol.one_minus_v2
    with np.errstate(divide="ignore", invalid="ignore"):
        s_xi = fl.sqrt_g11 / np.sqrt(omv2) * grid.dr_dxi
    if not np.isfinite(s_xi[0]):
        if sol.horizon_start and not abs(sol.v_r[0]) > 0:
            raise SingularStartError("non-integrable arclength: v leaves +-1 too slowly")
        s_xi[0] = _even_extrapolate(s_xi)
    if not np.all(np.isfinite(s_xi)):
        raise SolverError("non-finite arclength integrand")
    s = np.concatenate([[0.0], cumulative_simpson(s_xi, dx=grid.h)])
    phi = np.sqrt(omv2) * fl.lapse * fl.rho_r
    return s, s_xi, phi


def phi_r_analytic(data, sol):
    fl = data.fields(sol.r)
    w = np.sqrt(sol.one_minus_v2)
    with np.errstate(divide="ignore", invalid="ignore"):
        dw = -sol.v * sol.v_r / w
    return dw * fl.lapse * fl.rho_r + w * (fl.lapse_r * fl.rho_r + fl.lapse * fl.rho_rr)


def cross_residual_32(data: InitialData, sol: JangSolution, layer: int = 10):
    """Residual of the undivided equation with phi_r/phi rebuilt from samples."""
    grid = sol.grid
    fl = data.fields(grid.r)
    mask = grid.interior(layer)
    if np.any(sol.phi[mask] <= 0):
        raise SolverError("phi <= 0 at an interior node")
    with np.errstate(divide="ignore", invalid="ignore"):
        log_phi_r = grid.d_dr(sol.phi, order=4) / sol.phi
    v = sol.v
    res = (fl.lapse * sol.v_r
           + 2 * (fl.lapse * fl.rho_r / fl.rho * v - fl.kb)
           - sol.one_minus_v2 * fl.ka
           + fl.lapse * v * log_phi_r * sol.one_minus_v2)
    prof = np.where(mask, res, np.nan)
    window = np.abs(res[mask])
    return {"sup": float(np.max(window)),
            "l2": float(np.sqrt(grid.h * np.sum(window**2))),
            "profile": prof}


def k44_profile(data, sol):
    """k44 = phi phi_r sqrt(g^11) v, the extension of k along the warped fibre."""
    fl = data.fields(sol.r)
    with np.errstate(invalid="ignore"):
        out = sol.phi * phi_r_analytic(data, sol) * fl.lapse * sol.v
    # v = 0 gives k44 = 0 even where phi_r is singular (a minimal sphere)
    return np.where(sol.v == 0, 0.0, out)


def k44_from_graph(data, sol):
    """k44 evaluated from the graph slope f_r (valid where |v| < 1 - 1e-6)."""
    fl = data.fields(sol.r)
    fr = sol.f_r(data)
    phi = sol.phi
    with np.errstate(divide="ignore", invalid="ignore"):
        return (fl.ginv * phi * phi_r_analytic(data, sol) * fr
                / np.sqrt(phi**-2 + fl.ginv * fr * fr))


def asymptotic_report(sol: JangSolution):
    r = sol.r
    tail = r >= r[-1] / 10
    if r[-1] < 1e3 * sol.grid.scale:
        raise SolverError("solution tail too short for an asymptotic fit")
    rt = r[tail]
    vt, vrt = sol.v[tail], sol.v_r[tail]
    if np.all(np.abs(vt) == 0):
        return {"zero_tail": True, "exponent_v": None, "exponent_v_r": None,
                "sup_r2_v": 0.0}
    return {
        "zero_tail": False,
        "exponent_v": decay_exponent(rt, vt),
        "exponent_v_r": decay_exponent(rt, vrt),
        "sup_r2_v": float(np.max(rt**2 * np.abs(vt))),
    }
