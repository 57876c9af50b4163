"""Numerical checks of the scalar-curvature identity, boundary terms,
the mass/area inequality and its rigidity on a solved Jang graph.

Conventions on the Jang metric gbar = g + phi^2 df^2 with w = grad f/sqrt(phi^-2 + |grad f|^2):

    gbar_11 = g11 / (1 - v^2),   w^1 = sqrt(g^11) v,   |w|_g = |v|

and the mixed eigenvalues of h - K restricted to the graph are

    angular = sqrt(g^11) v rho_r / rho - kb
    radial  = sqrt(g^11) v_r + sqrt(g^11) v (phi_r / phi)(1 - v^2) - (1 - v^2) ka

whose trace radial + 2 angular is the undivided Jang operator.
"""

from __future__ import annotations

import concurrent.futures
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import simpson

from . import geometry
from .data import Horizon, InitialData, check_dec, decay_exponent, energy_momentum
from .solver import (
    GATE,
    JangSolution,
    SolverConfig,
    SolverError,
    cross_residual_32,
    phi_r_analytic,
    solve,
)

LAYER = 10
MODES = ("grid", "pointwise")


class VerificationError(SolverError):
    pass


class NotApplicable(Exception):
    """Rigidity requested on data that is not an equality case."""


# ---------------------------------------------------------------------------
# pointwise building blocks

def _log_phi_r(data, sol, mode):
    if mode == "grid":
        with np.errstate(divide="ignore", invalid="ignore"):
            return sol.grid.d_dr(sol.phi) / sol.phi
    if mode == "pointwise":
        with np.errstate(divide="ignore", invalid="ignore"):
            return phi_r_analytic(data, sol) / sol.phi
    raise ValueError(f"unknown mode {mode!r}")


def q_component(data: InitialData, sol: JangSolution):
    """Radial component q_1 in closed form; zero where v = 0."""
    fl = data.fields(sol.r)
    ang = fl.lapse * sol.v * fl.rho_r / fl.rho - fl.kb
    with np.errstate(divide="ignore", invalid="ignore"):
        q1 = -2 * fl.sqrt_g11 * sol.v / sol.one_minus_v2 * ang
    return np.where(sol.v == 0, 0.0, q1)


def q_norm2(data, sol, q1):
    fl = data.fields(sol.r)
    with np.errstate(invalid="ignore"):
        return sol.one_minus_v2 / fl.g11 * q1**2


@dataclass
class Deficit:
    angular: np.ndarray
    radial: np.ndarray

    @property
    def trace(self):
        return self.radial + 2 * self.angular

    @property
    def norm2(self):
        return self.radial**2 + 2 * self.angular**2


def deficit_components(data: InitialData, sol: JangSolution, mode="pointwise") -> Deficit:
    fl = data.fields(sol.r)
    v, omv2 = sol.v, sol.one_minus_v2
    ang = fl.lapse * v * fl.rho_r / fl.rho - fl.kb
    with np.errstate(invalid="ignore"):
        curv = np.where(v == 0, 0.0, fl.lapse * v * _log_phi_r(data, sol, mode) * omv2)
    rad = fl.lapse * sol.v_r + curv - omv2 * fl.ka
    return Deficit(ang, rad)


def q_definitional(data, sol, deficit: Deficit):
    """q_1 contracted from the radial deficit eigenvalue and w."""
    fl = data.fields(sol.r)
    with np.errstate(divide="ignore", invalid="ignore"):
        q1 = fl.sqrt_g11 * sol.v * deficit.radial / sol.one_minus_v2
    return np.where(sol.v == 0, 0.0, q1)


@dataclass
class CurrentPairing:
    w1: np.ndarray
    j_w: np.ndarray
    w_norm: np.ndarray


def current_pairing(data, sol) -> CurrentPairing:
    fl = data.fields(sol.r)
    with np.errstate(invalid="ignore"):
        em = energy_momentum(data, sol.r)
    w1 = fl.lapse * sol.v
    return CurrentPairing(w1, em.j1 * w1, np.abs(sol.v))


def boundary_integrand(data: InitialData, sol: JangSolution):
    """B(r) per unit round area; the mass flux through S_r is -B."""
    fl = data.fields(sol.r)
    return (2 * fl.rho_r * sol.v * fl.lapse
            * (fl.lapse * fl.rho_r / fl.rho * sol.v - fl.kb) * fl.rho**2)


def _divergence_term(data, sol, q1, mode):
    """2 phi^-1 div_gbar(phi q) = 2 X_r / (rho^2 rho_r).

    X = rho^2 sqrt(gbar_11) gbar^11 phi q_1 = rho^2 (1 - v^2) rho_r q_1 / g11.
    """
    fl = data.fields(sol.r)
    flux = fl.rho**2 * sol.one_minus_v2 * fl.rho_r * q1 / fl.g11
    order = 2 if mode == "grid" else 4
    with np.errstate(divide="ignore", invalid="ignore"):
        return 2 * sol.grid.d_dr(flux, order=order) / (fl.rho**2 * fl.rho_r)


@dataclass
class IdentityTerms:
    rbar: np.ndarray
    energy: np.ndarray
    deficit: np.ndarray
    q: np.ndarray
    divergence: np.ndarray
    residual: np.ndarray
    mask: np.ndarray


def identity_terms(data, sol, mode="grid", layer=LAYER) -> IdentityTerms:
    fl = data.fields(sol.r)
    mask = sol.grid.interior(layer)
    if np.any(sol.phi[mask] < 1e-14):
        raise VerificationError("phi below 1e-14 inside the evaluation window")
    with np.errstate(invalid="ignore", divide="ignore"):
        em = energy_momentum(data, sol.r)
        prof = geometry.profile(data, sol, mode)
        d = deficit_components(data, sol, mode)
        q1 = q_component(data, sol)
        energy = 16 * np.pi * (em.mu - em.j1 * fl.lapse * sol.v)
        qq = 2 * q_norm2(data, sol, q1)
        div = _divergence_term(data, sol, q1, mode)
        res = prof.rbar - (energy + d.norm2 + qq - div)
    return IdentityTerms(prof.rbar, energy, d.norm2, qq, div, res, mask)


def _norms(values, mask, h):
    w = np.abs(np.asarray(values)[mask])
    return float(np.max(w)), float(math.sqrt(h * np.sum(w * w)))


def theorem1_residual(data: InitialData, sol: JangSolution, mode="grid", layer=LAYER):
    """Residual of the scalar-curvature identity on the interior window."""
    t = identity_terms(data, sol, mode, layer)
    sup, l2 = _norms(t.residual, t.mask, sol.grid.h)
    return {"sup": sup, "l2": l2, "profile": np.where(t.mask, t.residual, np.nan)}


# ---------------------------------------------------------------------------
# reports

@dataclass
class Check:
    name: str
    norm_sup: float | None
    norm_l2: float | None
    passed: bool
    order: float | None = None
    tol: float | None = None
    details: dict = field(default_factory=dict)

    def as_dict(self):
        return {"name": self.name, "norm_sup": self.norm_sup, "norm_l2": self.norm_l2,
                "order": self.order, "tol": self.tol, "pass": bool(self.passed),
                **({"details": self.details} if self.details else {})}


@dataclass
class VerificationReport:
    checks: list
    boundary: dict
    rigidity: dict | None = None

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def check(self, name):
        return next(c for c in self.checks if c.name == name)

    def as_dict(self):
        return {"pass": self.passed, "checks": [c.as_dict() for c in self.checks],
                "boundary": self.boundary, "rigidity": self.rigidity}


@dataclass
class PenroseReport:
    m_adm: float
    m_adm_uncertainty: float
    area: float
    margin: float
    uncertainty: float
    verdict: str
    m_inner: float
    decomposition: dict
    route_direct: float
    route_bulk: float
    routes_agree: bool
    boundary: dict
    metadata: dict

    def as_dict(self):
        return asdict(self)


def _floor(sol):
    cfg = sol.config
    return 1e3 * max(cfg.rtol, cfg.atol / sol.grid.scale) * sol.grid.scale


def boundary_report(data, sol):
    B = boundary_integrand(data, sol)
    r = sol.r
    tail = r >= r[-1] / 10
    return {
        "inner": float(B[0]),
        "first_interior": float(B[1]),
        "outer": float(B[-1]),
        "decay_exponent": decay_exponent(r[tail], B[tail]),
        "sign": {"inner": "+", "infinity": "-"},
    }


def verify(data: InitialData, sol: JangSolution, layer=LAYER) -> VerificationReport:
    """Pointwise checks on one solution; orders come from :func:`refinement_study`."""
    h = sol.grid.h
    mask = sol.grid.interior(layer)
    checks = []

    cr = sol.diagnostics.get("cross_residual") or cross_residual_32(data, sol)
    checks.append(Check("cross_residual", cr["sup"], cr["l2"], cr["sup"] <= GATE, tol=GATE))

    t1 = theorem1_residual(data, sol, "grid", layer)
    checks.append(Check("theorem1", t1["sup"], t1["l2"], bool(np.isfinite(t1["sup"]))))
    t1p = theorem1_residual(data, sol, "pointwise", layer)
    checks.append(Check("theorem1_pointwise", t1p["sup"], t1p["l2"],
                        bool(np.isfinite(t1p["sup"]))))

    prof = geometry.profile(data, sol, "grid")
    md, md_prof = geometry.mass_derivative_check(prof, sol, layer)
    checks.append(Check("mass_derivative", md, _norms(md_prof, mask, h)[1],
                        bool(np.isfinite(md))))

    d = deficit_components(data, sol, "pointwise")
    tr_sup, tr_l2 = _norms(d.trace, mask, h)
    checks.append(Check("deficit_trace", tr_sup, tr_l2, tr_sup <= 10 * GATE, tol=10 * GATE))

    q_closed = q_component(data, sol)
    q_def = q_definitional(data, sol, d)
    qd_sup, qd_l2 = _norms(q_closed - q_def, mask, h)
    checks.append(Check("q_forms", qd_sup, qd_l2, qd_sup <= 10 * GATE, tol=10 * GATE))

    cp = current_pairing(data, sol)
    wn = float(np.max(np.abs(cp.w_norm - np.abs(sol.v))))
    checks.append(Check("w_norm", wn, None, wn == 0.0 and bool(np.all(cp.w_norm <= 1))))

    t = identity_terms(data, sol, "pointwise", layer)
    bulk = sol.phi * (t.energy / (8 * np.pi) + t.deficit + t.q)
    tau = 1e-8 * sol.grid.scale
    worst = float(np.min(bulk[mask]))
    dec_ok = check_dec(data, sol.grid).passed
    checks.append(Check("bulk_nonnegative", worst, None, worst >= -tau or not dec_ok,
                        tol=tau, details={} if dec_ok else {"applicable": False}))

    return VerificationReport(checks, boundary_report(data, sol))


def _quad(integrand_xi, h):
    full = simpson(integrand_xi, dx=h)
    n = len(integrand_xi) - 1
    if n % 4 == 0:
        half = simpson(integrand_xi[::2], dx=2 * h)
        return float(full), float(abs(full - half))
    return float(full), 0.0


def penrose_report(data: InitialData, sol: JangSolution, profile=None) -> PenroseReport:
    """Mass/area margin and the bulk decomposition of m(infinity) - m(0)."""
    prof = profile or geometry.profile(data, sol, "pointwise")
    fl = data.fields(sol.r)
    m_adm, unc_adm = geometry.adm_mass(sol.r, prof.mass, scale=sol.grid.scale)
    rho0 = float(fl.rho[0])
    area = 4 * np.pi * rho0**2
    margin = m_adm - math.sqrt(area / (16 * np.pi))
    m0 = float(prof.mass[0])

    t = identity_terms(data, sol, "pointwise", layer=0)
    weight = 0.25 * sol.phi * fl.rho**2 * sol.s_xi
    h = sol.grid.h
    parts = {}
    errs = []
    for key, dens in (("energy", t.energy), ("deficit", t.deficit), ("q", t.q)):
        val, err = _quad(np.nan_to_num(weight * dens), h)
        parts[key] = val
        errs.append(err)
    B = boundary_integrand(data, sol)
    parts["divergence"] = 0.5 * float(B[-1] - B[0])
    tail = m_adm - float(prof.mass[-1])
    route_bulk = sum(parts.values()) + tail
    route_direct = m_adm - m0
    floor = _floor(sol)
    tol = unc_adm + sum(errs) + floor
    agree = abs(route_bulk - route_direct) <= tol
    unc = unc_adm + floor
    applicable = sol.classification.kind != Horizon.NONE
    if not applicable:
        verdict = "NOT-APPLICABLE"
    else:
        verdict = "PASS" if margin >= -unc and agree else "FAIL"
    return PenroseReport(
        m_adm=m_adm, m_adm_uncertainty=unc_adm, area=area, margin=margin,
        uncertainty=unc, verdict=verdict, m_inner=m0, decomposition=parts,
        route_direct=route_direct, route_bulk=route_bulk, routes_agree=bool(agree),
        boundary={"inner": float(B[0]), "outer": float(B[-1])},
        metadata={"quadrature_error": sum(errs), "tail_correction": tail,
                  "horizon": sol.classification.kind.value, "nodes": sol.grid.n},
    )


def rigidity_residuals(data, sol, m_adm, layer=LAYER):
    fl = data.fields(sol.r)
    mask = sol.grid.interior(layer)
    with np.errstate(invalid="ignore"):
        em = energy_momentum(data, sol.r)
    jw = em.j1 * fl.lapse * sol.v
    d = deficit_components(data, sol, "grid")
    q1 = q_component(data, sol)
    target = 1 - 2 * m_adm / fl.rho
    out = {
        "mu_minus_jw": em.mu - jw,
        "h_minus_k": np.sqrt(d.norm2),
        "q": np.sqrt(q_norm2(data, sol, q1)),
        "phi": sol.phi - np.sqrt(np.maximum(target, 0.0)),
        "gbar": sol.phi**2 - target,
    }
    return {k: float(np.max(np.abs(v[mask]))) for k, v in out.items()}


def rigidity_check(data: InitialData, sol: JangSolution, report: PenroseReport,
                   tol=None, layer=LAYER):
    """Equality-case residuals; raises NotApplicable when the margin is positive."""
    slack = max(3 * report.uncertainty, 1e-6 * sol.grid.scale)
    if abs(report.margin) > slack:
        raise NotApplicable(
            f"margin {report.margin:.6g} exceeds {slack:.3g}: strict inequality, "
            "no rigidity expected")
    res = rigidity_residuals(data, sol, report.m_adm, layer)
    out = {"applicable": True, "residuals": res}
    if tol is not None:
        out["tol"] = tol
        out["pass"] = all(v <= tol for v in res.values())
    return out


# ---------------------------------------------------------------------------
# refinement

def convergence_orders(errors):
    e = [float(x) for x in errors]
    return [math.log2(a / b) if a > 0 and b > 0 else None for a, b in zip(e, e[1:])]


@dataclass
class Level:
    n: int
    solution: JangSolution
    metrics: dict


def _level_metrics(data, sol, exact_mass=None, m_adm=None):
    fl = data.fields(sol.r)
    mask = sol.grid.interior(LAYER)
    t1 = theorem1_residual(data, sol, "grid")
    md, _ = geometry.mass_derivative_check(geometry.profile(data, sol, "grid"), sol)
    out = {"theorem1": t1["sup"], "mass_derivative": md}
    if exact_mass is not None:
        sg = geometry.profile(data, sol, "s-grid")
        out["mass_grid"] = float(np.max(np.abs(sg.mass[mask] - exact_mass)))
        out["mass_pointwise"] = float(np.max(np.abs(
            geometry.hawking_mass(fl.rho, sol.phi)[mask] - exact_mass)))
        out["phi_grid"] = float(np.max(np.abs(
            sg.rho_s[mask] - np.sqrt(1 - 2 * exact_mass / fl.rho[mask]))))
    if m_adm is not None:
        out.update({"rigidity_" + k: v
                    for k, v in rigidity_residuals(data, sol, m_adm).items()})
    return out


# metrics set by the finite-difference reconstruction (must converge in h)
DISCRETE = ("theorem1", "mass_derivative", "mass_grid", "phi_grid", "rigidity_h_minus_k")
STUDY_TOLERANCES = {"rtol": 1e-12, "atol": 1e-14}


def refinement_study(data: InitialData, boundary=None, config: SolverConfig | None = None,
                     levels=(2000, 4000, 8000), exact_mass=None, workers=None):
    """Solve on successive halvings of h and report per-metric orders.

    Metrics outside DISCRETE do not involve differences on the grid; their
    error is set by the ODE tolerances.  Any metric whose values all sit
    below the solver floor is reported as converged instead of given an order.
    """
    if len(levels) < 3:
        raise ValueError("a refinement study needs at least 3 levels")
    if any(b != 2 * a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must double")
    config = config or SolverConfig(**STUDY_TOLERANCES)

    def run(n):
        cfg = SolverConfig(**{**config.__dict__, "n_nodes": n})
        sol = solve(data, boundary, cfg)
        return Level(n, sol, _level_metrics(data, sol, exact_mass, exact_mass))

    with concurrent.futures.ThreadPoolExecutor(max_workers=workers or len(levels)) as ex:
        results = list(ex.map(run, levels))
    floor = _floor(results[0].solution)
    summary = {}
    for key in results[0].metrics:
        vals = [lv.metrics[key] for lv in results]
        orders = convergence_orders(vals)
        at_floor = all(v <= floor for v in vals)
        summary[key] = {
            "values": vals, "orders": orders,
            "min_order": None if at_floor or None in orders else min(orders),
            "at_floor": at_floor, "discrete": key in DISCRETE,
        }
    return {"levels": list(levels), "floor": floor, "metrics": summary}, results


def converged(entry, min_order=1.9):
    """A study metric passes if it sits at the solver floor or refines at min_order."""
    return entry["at_floor"] or (entry["min_order"] is not None
                                 and entry["min_order"] >= min_order)
