import dataclasses
import json

import numpy as np
import oracles as O
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from jang_penrose import pipeline, solver, verifier
from jang_penrose.data import FlatData, energy_momentum
from jang_penrose.grid import RadialGrid
from jang_penrose.solver import GATE, JangSolution, SolverConfig


def _with_v(data, grid, v, v_r):
    """A JangSolution carrying an arbitrary profile, phi from its definition."""
    fl = data.fields(grid.r)
    omv2 = 1 - v * v
    return JangSolution(grid, v, v_r, omv2, None, None, np.sqrt(omv2) * fl.lapse * fl.rho_r,
                        0.0, 0, SolverConfig(), None)


@pytest.fixture(scope="module")
def flat_sol():
    data = FlatData(1.0, 0.3)
    return data, solver.solve(data, 0.5)


# ---------------------------------------------------------------------------
# q, deficit, pairing

def test_q_trivial(schw, schw_sol):
    assert np.all(verifier.q_component(schw, schw_sol) == 0)
    grid = RadialGrid(64, 50.0)
    fake = _with_v(FlatData(1.0, 0.3), grid, np.zeros(len(grid.r)), np.zeros(len(grid.r)))
    assert np.all(verifier.q_component(FlatData(1.0, 0.3), fake) == 0)


def test_q_vanishes_on_pg(pg, pg_sol):
    # 1/(1 - v^2) amplifies the solve error next to the horizon
    q1 = verifier.q_component(pg, pg_sol)
    assert np.max(np.abs(q1[pg_sol.grid.interior(10)])) < 1e-9
    assert np.max(np.abs(q1[1:])) < 1e-7


@pytest.mark.parametrize("i", [12, 20, 30])
def test_deficit_matches_second_fundamental_form(pg, i):
    # arbitrary v on PG data; the embedding oracle knows nothing of the reduction
    grid = RadialGrid(64, 50.0)
    r = grid.r

    def vf(x):
        return 0.6 * np.tanh(x) / (1 + 0.1 * x)

    def vr(x):
        return 0.6 * (1 / np.cosh(x) ** 2 / (1 + 0.1 * x) - 0.1 * np.tanh(x) / (1 + 0.1 * x) ** 2)

    sol = _with_v(pg, grid, vf(r), vr(r))
    d = verifier.deficit_components(pg, sol, "pointwise")
    k44 = solver.k44_profile(pg, sol)

    def fl(x):
        return pg.fields(np.array([x]))

    def phi(x):
        q = fl(x)
        return float(np.sqrt(1 - vf(x) ** 2) * q.lapse[0] * q.rho_r[0])

    def fr(x):
        return float(vf(x) * fl(x).sqrt_g11[0] / (phi(x) * np.sqrt(1 - vf(x) ** 2)))

    def frr(x):
        return (fr(x + 1e-4) - fr(x - 1e-4)) / 2e-4

    def f(x):
        return quad(fr, 0.5, x, epsabs=1e-13, epsrel=1e-13)[0]

    def metric4(y):
        q = fl(y[0])
        return np.diag([q.g11[0], q.rho[0] ** 2, (q.rho[0] * np.sin(y[1])) ** 2, phi(y[0]) ** 2])

    h, ind, _ = O.graph_second_fundamental_form(metric4, f, fr, frr, [r[i], 1.0, 0.3])
    q = fl(r[i])
    k_rr = q.ka[0] * q.g11[0] + fr(r[i]) ** 2 * k44[i]
    assert h[1, 1] / ind[1, 1] - q.kb[0] == pytest.approx(d.angular[i], abs=1e-10)
    assert (h[0, 0] - k_rr) / ind[0, 0] == pytest.approx(d.radial[i], abs=1e-7)


def test_deficit_vacuum_time_symmetric(schw, schw_sol):
    d = verifier.deficit_components(schw, schw_sol)
    assert np.all(d.angular == 0) and np.all(d.radial == 0)


def test_deficit_vanishes_on_pg(pg):
    study, _ = verifier.refinement_study(pg, levels=(2000, 4000, 8000), exact_mass=1.0)
    e = study["metrics"]["rigidity_h_minus_k"]
    assert e["values"][-1] < 1e-7
    assert e["min_order"] >= 1.9


@settings(max_examples=10)
@given(st.floats(-0.6, 0.6), st.floats(0.0, 0.5))
def test_deficit_trace_identity(alpha, kappa):
    data = FlatData(1.0, kappa)
    sol = solver.solve(data, alpha)
    d = verifier.deficit_components(data, sol)
    mask = sol.grid.interior(10)
    assert np.max(np.abs(d.trace[mask])) <= 10 * GATE


def test_current_pairing(pg, pg_sol, flat_sol):
    grid = RadialGrid(64, 50.0)
    z = np.zeros(len(grid.r))
    cp0 = verifier.current_pairing(FlatData(1.0, 0.3), _with_v(FlatData(1.0, 0.3), grid, z, z))
    assert np.all(cp0.j_w == 0) and np.all(cp0.w_norm == 0)
    for data, sol in ((pg, pg_sol), flat_sol):
        cp = verifier.current_pairing(data, sol)
        assert np.array_equal(cp.w_norm, np.abs(sol.v))
        assert np.all(cp.w_norm <= 1)
    # PG is vacuum
    assert np.max(np.abs(verifier.current_pairing(pg, pg_sol).j_w[1:])) < 1e-9


@pytest.mark.parametrize("name", ["schw", "pg", "bumped", "shell"])
def test_q_forms_agree(name, request):
    data = request.getfixturevalue(name)
    sol = request.getfixturevalue(name + "_sol")
    d = verifier.deficit_components(data, sol)
    diff = verifier.q_component(data, sol) - verifier.q_definitional(data, sol, d)
    assert np.max(np.abs(diff[sol.grid.interior(10)])) <= 10 * GATE


# ---------------------------------------------------------------------------
# scalar-curvature identity

def test_theorem1_schwarzschild(schw, schw_sol):
    assert verifier.theorem1_residual(schw, schw_sol, "pointwise")["sup"] <= 1e-9
    assert verifier.theorem1_residual(schw, schw_sol, "grid")["sup"] <= 1e-6


def _t1_sups(data, boundary=None, levels=(2000, 4000, 8000)):
    study, _ = verifier.refinement_study(data, boundary, levels=levels)
    return study["metrics"]["theorem1"]["values"]


def test_theorem1_bumped_second_order(bumped):
    sups = _t1_sups(bumped)
    assert np.all(np.log2(np.array(sups[:-1]) / np.array(sups[1:])) >= 1.9)


def test_theorem1_pg_ratio(pg):
    sups = _t1_sups(pg)
    ratios = np.array(sups[:-1]) / np.array(sups[1:])
    assert np.all((ratios >= 3.4) & (ratios <= 4.6))


def test_theorem1_regular_start_second_order():
    sups = _t1_sups(FlatData(1.0, 0.3), 0.5)
    assert np.all(np.log2(np.array(sups[:-1]) / np.array(sups[1:])) >= 1.9)


def test_theorem1_rejects_vanishing_phi(flat_sol):
    data, sol = flat_sol
    phi = sol.phi.copy()
    phi[len(phi) // 2] = 0.0
    bad = dataclasses.replace(sol, phi=phi)
    with pytest.raises(verifier.VerificationError, match="phi"):
        verifier.theorem1_residual(data, bad)


@pytest.mark.parametrize("name", ["schw", "pg", "bumped"])
def test_bulk_nonnegative_on_dec_data(name, request):
    data = request.getfixturevalue(name)
    sol = request.getfixturevalue(name + "_sol")
    t = verifier.identity_terms(data, sol, "pointwise")
    bulk = sol.phi * (t.energy / (8 * np.pi) + t.deficit + t.q)
    assert np.min(bulk[t.mask]) >= -1e-8 * sol.grid.scale


def test_signed_pairing_dominated(flat_sol):
    data, sol = flat_sol
    em = energy_momentum(data, sol.r)
    cp = verifier.current_pairing(data, sol)
    jnorm = np.abs(em.j1) * data.fields(sol.r).lapse
    assert np.all(cp.j_w <= jnorm * cp.w_norm + 1e-15)


# ---------------------------------------------------------------------------
# boundary term

def test_boundary_trivial(schw, schw_sol):
    assert np.all(verifier.boundary_integrand(schw, schw_sol) == 0)


@pytest.mark.parametrize("name", ["pg", "shell"])
def test_boundary_inner_cancellation(name, request):
    data = request.getfixturevalue(name)
    sol = request.getfixturevalue(name + "_sol")
    rep = verifier.boundary_report(data, sol)
    assert abs(rep["inner"]) <= 1e-9 * data.mass_scale
    assert abs(rep["first_interior"]) <= 1e-3 * data.mass_scale


def test_boundary_decay(shell, shell_sol, flat_sol):
    assert verifier.boundary_report(shell, shell_sol)["decay_exponent"] >= 0.9
    assert verifier.boundary_report(*flat_sol)["decay_exponent"] >= 0.9


# ---------------------------------------------------------------------------
# Penrose report and rigidity

def test_penrose_schwarzschild(schw, schw_sol):
    pr = verifier.penrose_report(schw, schw_sol)
    assert abs(pr.margin) <= 1e-6
    assert pr.verdict == "PASS" and pr.routes_agree
    assert pr.area == pytest.approx(16 * np.pi)
    rig = verifier.rigidity_check(schw, schw_sol, pr)
    assert max(rig["residuals"].values()) <= 1e-8


def test_penrose_pg(pg, pg_sol):
    pr = verifier.penrose_report(pg, pg_sol)
    assert abs(pr.margin) <= 1e-3
    assert pr.verdict == "PASS" and pr.routes_agree
    rig = verifier.rigidity_check(pg, pg_sol, pr, tol=1e-6)
    assert rig["pass"]


def test_penrose_bumped(bumped, bumped_sol):
    pr = verifier.penrose_report(bumped, bumped_sol)
    assert pr.m_adm == pytest.approx(1.02, abs=max(pr.m_adm_uncertainty, 1e-9))
    assert pr.margin > 3 * pr.uncertainty
    assert pr.verdict == "PASS"
    # margin equals the area deficit at the minimal sphere
    rho0 = bumped.fields(np.array([0.0])).rho[0]
    assert pr.margin == pytest.approx(1.02 - rho0 / 2, abs=1e-6)
    with pytest.raises(verifier.NotApplicable, match="strict inequality"):
        verifier.rigidity_check(bumped, bumped_sol, pr)


@pytest.mark.parametrize("name", ["schw", "pg", "bumped", "shell"])
def test_penrose_routes_agree(name, request):
    data = request.getfixturevalue(name)
    sol = request.getfixturevalue(name + "_sol")
    pr = verifier.penrose_report(data, sol)
    assert pr.routes_agree
    assert pr.margin == pytest.approx(pr.route_direct + pr.m_inner
                                      - np.sqrt(pr.area / (16 * np.pi)), abs=1e-12)


def test_penrose_regular_start_not_applicable(flat_sol):
    pr = verifier.penrose_report(*flat_sol)
    assert pr.verdict == "NOT-APPLICABLE"
    assert pr.routes_agree


def test_rigidity_converges_on_pg(pg):
    study, _ = verifier.refinement_study(pg, levels=(2000, 4000, 8000), exact_mass=1.0)
    for key in ("rigidity_mu_minus_jw", "rigidity_h_minus_k", "rigidity_q",
                "rigidity_phi", "rigidity_gbar"):
        assert verifier.converged(study["metrics"][key]), key


# ---------------------------------------------------------------------------
# reports and refinement plumbing

@pytest.mark.parametrize("name", ["schw", "pg", "bumped"])
def test_verify_passes(name, request):
    data = request.getfixturevalue(name)
    sol = request.getfixturevalue(name + "_sol")
    rep = verifier.verify(data, sol)
    assert rep.passed
    d = rep.as_dict()
    json.loads(pipeline.dumps(d))
    for c in d["checks"]:
        assert set(c) >= {"name", "norm_sup", "norm_l2", "order", "pass"}


def test_penrose_report_json(bumped, bumped_sol):
    d = verifier.penrose_report(bumped, bumped_sol).as_dict()
    assert set(d["decomposition"]) == {"energy", "deficit", "q", "divergence"}
    json.loads(pipeline.dumps(d))


def test_convergence_orders():
    assert verifier.convergence_orders([4.0, 1.0, 0.25]) == [2.0, 2.0]
    assert verifier.convergence_orders([1.0, 0.0]) == [None]


def test_refinement_levels_validated(schw):
    with pytest.raises(ValueError, match="3 levels"):
        verifier.refinement_study(schw, levels=(100, 200))
    with pytest.raises(ValueError, match="double"):
        verifier.refinement_study(schw, levels=(100, 200, 300))


def test_refinement_floor_rule(schw):
    study, levels = verifier.refinement_study(schw, levels=(500, 1000, 2000), exact_mass=1.0)
    assert [lv.n for lv in levels] == [500, 1000, 2000]
    assert study["metrics"]["mass_pointwise"]["at_floor"]
    assert verifier.converged(study["metrics"]["mass_pointwise"])
    assert verifier.converged(study["metrics"]["theorem1"])
