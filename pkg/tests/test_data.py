import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from jang_penrose.data import (
    BumpedConformal,
    DataError,
    FlatData,
    Horizon,
    HorizonError,
    PainleveGullstrand,
    SampledData,
    TrappedShell,
    build_builtin,
    check_dec,
    check_falloff,
    check_interior_horizons,
    classify_horizon,
    energy_momentum,
    find_outermost_horizon,
    from_descriptor,
    load_sampled,
    null_expansions,
    sample,
    scalar_curvature_g,
)
from jang_penrose.grid import RadialGrid


def _metric_of(data):
    def one(r, name):
        return float(getattr(data.fields(np.array([r])), name)[0])
    return oracles.spherical_metric(lambda r: one(r, "g11"), lambda r: one(r, "rho"))


def _kernel_of(data):
    def one(r, name):
        return float(getattr(data.fields(np.array([r])), name)[0])
    return oracles.spherical_k(lambda r: one(r, "ka"), lambda r: one(r, "kb"),
                               lambda r: one(r, "g11"), lambda r: one(r, "rho"))


# ---------------------------------------------------------------------------
# grid

def test_grid_basic():
    g = RadialGrid(64, 100.0, 1.0)
    assert g.r[0] == 0.0 and g.r[-1] == pytest.approx(100.0, rel=1e-14)
    assert np.all(np.diff(g.r) > 0)
    with pytest.raises(ValueError):
        RadialGrid(8, 100.0, 1.0)


def test_grid_refine_halves_spacing():
    g = RadialGrid(100, 50.0, 1.0)
    f = g.refine()
    assert f.h == pytest.approx(g.h / 2)
    np.testing.assert_allclose(f.r[::2], g.r, rtol=1e-13, atol=1e-15)


def test_grid_derivative_orders():
    errs = []
    for n in (200, 400, 800):
        g = RadialGrid(n, 20.0, 1.0)
        errs.append(np.max(np.abs(g.d_dr(np.sin(g.r))[1:] - np.cos(g.r[1:]))))
    assert math.log2(errs[0] / errs[1]) > 1.8 and math.log2(errs[1] / errs[2]) > 1.8


# ---------------------------------------------------------------------------
# builtin families

def test_schwarzschild_fields(schw):
    r = np.array([0.0, 1.0, 8.0])
    f = schw.fields(r)
    np.testing.assert_allclose(f.rho, 2 + r)
    np.testing.assert_allclose(f.ginv, 1 - 2 / (2 + r), atol=1e-15)
    assert np.all(f.ka == 0) and np.all(f.kb == 0)


def test_pg_fields(pg):
    r = np.array([0.0, 0.5, 3.0])
    f = pg.fields(r)
    rho = 2 + r
    np.testing.assert_allclose(f.rho, rho, rtol=1e-12)
    np.testing.assert_allclose(f.g11, 1.0)
    np.testing.assert_allclose(f.ka, -0.5 * np.sqrt(2 / rho**3), rtol=1e-12)
    np.testing.assert_allclose(f.kb, np.sqrt(2 / rho**3), rtol=1e-12)


def test_pg_extrinsic_curvature_matches_shift_oracle():
    # t = const slice of the PG form, unit lapse, shift beta^r = sqrt(2M/r)
    M = 1.0
    flat = oracles.spherical_metric(lambda r: 1.0, lambda r: r)
    data = PainleveGullstrand(M, offset=0.0)
    for rho in (2.0, 3.0, 7.5):
        K = oracles.shift_extrinsic_curvature(
            flat, lambda y: np.array([math.sqrt(2 * M / y[0]), 0.0, 0.0]), [rho, 1.1, 0.2])
        f = data.fields(np.array([rho]))
        assert K[0, 0] == pytest.approx(f.ka[0], rel=1e-8)
        assert K[1, 1] / rho**2 == pytest.approx(f.kb[0], rel=1e-8)


def test_bumped_truncated_at_minimal_sphere(bumped):
    f = bumped.fields(np.array([0.0]))
    assert abs(f.rho_r[0]) < 1e-10


def test_build_builtin_errors():
    with pytest.raises(DataError):
        build_builtin("kerr")
    with pytest.raises(DataError):
        build_builtin("schwarzschild-static", {"M": 0})
    with pytest.raises(DataError):
        build_builtin("bumped-conformal", {"eps": -0.1})
    with pytest.raises(DataError):
        from_descriptor({"nothing": 1})


def test_descriptor_round_trip(pg, bumped):
    for d in (pg, bumped, FlatData(2.0, 0.3)):
        again = from_descriptor(d.descriptor())
        r = np.linspace(0, 30, 17)
        np.testing.assert_allclose(again.fields(r).rho, d.fields(r).rho, rtol=1e-13)


def test_domain_violation(schw, pg):
    with pytest.raises(DataError):
        schw.fields(np.array([-1.0]))
    s = sample(pg, np.linspace(0.0, 10.0, 32))
    with pytest.raises(DataError):
        s.fields(np.array([11.0]))


# ---------------------------------------------------------------------------
# sampled data

def test_sampled_schwarzschild_fourth_order(schw):
    errs = []
    for n in (256, 512, 1024):
        r = np.linspace(0.5, 10.5, n)
        f = schw.fields(r)
        s = load_sampled(r, f.g11, f.rho, f.ka, f.kb)
        x = np.linspace(1.0, 9.0, 3001)
        errs.append(np.max(np.abs(s.fields(x).g11 - schw.fields(x + 0.5).g11)))
    assert errs[0] < 1e-7
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(orders) > 3.8


def test_sampled_exact_on_linear_profiles():
    r = np.linspace(0, 5, 20)
    s = load_sampled(r, np.ones_like(r), r + 1, np.zeros_like(r), np.zeros_like(r))
    f = s.fields(r)
    np.testing.assert_allclose(f.rho, r + 1, rtol=0, atol=1e-14)
    np.testing.assert_allclose(f.g11, 1.0, atol=1e-14)
    np.testing.assert_allclose(f.rho_r, 1.0, atol=1e-13)


@pytest.mark.parametrize("bad", ["zero_rho", "nonmonotone", "mismatch", "short", "g11"])
def test_sampled_rejects(bad):
    r = np.linspace(0, 5, 20)
    cols = [r, np.ones(20), r + 1, np.zeros(20), np.zeros(20)]
    if bad == "zero_rho":
        cols[2] = r - 1
    elif bad == "nonmonotone":
        cols[0] = r[::-1].copy()
    elif bad == "mismatch":
        cols[3] = np.zeros(19)
    elif bad == "short":
        cols = [c[:10] for c in cols]
    else:
        cols[1] = -np.ones(20)
    with pytest.raises(DataError):
        load_sampled(*cols)


# ---------------------------------------------------------------------------
# null expansions and horizons

def test_null_expansions_examples(schw, pg):
    tp, tm = null_expansions(FlatData(1.0, 0.0), np.array([1.0]))
    assert tp[0] == pytest.approx(1.0) and tm[0] == pytest.approx(1.0)  # rho = 2
    tp, tm = null_expansions(schw, np.array([0.0]))
    assert tp[0] == 0 and tm[0] == 0
    assert abs(null_expansions(pg, np.array([0.0]))[1][0]) < 1e-12


@given(st.floats(0.0, 1e3), st.sampled_from(["schw", "pg", "bumped", "shell"]))
def test_expansion_algebra(r, which):
    data = {"schw": build_builtin("schwarzschild-static"),
            "pg": build_builtin("painleve-gullstrand"),
            "bumped": BumpedConformal(1.0, 0.02, 0.7),
            "shell": TrappedShell(0.5, 3.0, 0.5)}[which]
    tp, tm = null_expansions(data, np.array([r]))
    f = data.fields(np.array([r]))
    mean = np.sqrt(f.ginv) * f.rho_r / f.rho
    assert tp[0] + tm[0] == pytest.approx(4 * mean[0], rel=1e-12, abs=1e-14)
    assert tp[0] - tm[0] == pytest.approx(4 * f.kb[0], rel=1e-12, abs=1e-14)


def test_mean_curvature_positive_outside(pg, bumped, shell):
    for d in (pg, bumped, shell):
        r = np.geomspace(1e-6, 1e3, 500)
        tp, tm = null_expansions(d, r)
        assert np.all(tp + tm > 0)


def test_classify(schw, pg):
    assert classify_horizon(schw).kind == Horizon.BOTH
    c = classify_horizon(pg)
    assert c.kind == Horizon.PAST and c.slope > 0
    # closed form: theta_- = 2(1/rho - sqrt(2/rho^3)), derivative at rho=2 is 1/4
    assert c.slope == pytest.approx(0.25, rel=1e-6)
    assert classify_horizon(FlatData()).kind == Horizon.NONE
    fut = build_builtin("painleve-gullstrand", {"future": True})
    assert classify_horizon(fut).kind == Horizon.FUTURE


def test_find_outermost_isotropic_schwarzschild():
    base = BumpedConformal(1.0, 0.0, offset=0.05)
    r_h = find_outermost_horizon(base)
    assert base.offset + r_h == pytest.approx(0.5, rel=1e-11)


def test_find_outermost_none_and_idempotent(pg, bumped, shell):
    assert find_outermost_horizon(FlatData()) is None
    for d in (pg, bumped, shell):
        assert find_outermost_horizon(d) == pytest.approx(0.0, abs=1e-9 * d.mass_scale)


def test_find_outermost_rejects_outer_sign_change():
    # kb crosses the mean curvature twice: a trapped band outside the inner root
    d = TrappedShell(2.0, 3.0, 0.5, offset=1.0)
    base = build_builtin("trapped-shell")
    assert isinstance(base, TrappedShell)
    r = np.geomspace(1e-6, 20, 2000)
    tm = null_expansions(d, r)[1]
    assert np.sum(np.diff(np.sign(tm)) != 0) >= 2
    with pytest.raises(HorizonError):
        check_interior_horizons(d)


def test_truncated_shell_is_past_horizon(shell):
    c = classify_horizon(shell)
    assert c.kind == Horizon.PAST and c.slope > 0
    check_interior_horizons(shell)


# ---------------------------------------------------------------------------
# curvature and constraints

@pytest.mark.parametrize("r", [0.3, 1.0, 4.0])
def test_scalar_curvature_matches_fd_oracle(bumped, r):
    R_fd = oracles.scalar_curvature(_metric_of(bumped), [r, 1.0, 0.3])
    # the nested finite differences in the oracle carry an absolute floor near 1e-9
    assert float(scalar_curvature_g(bumped, np.array([r]))[0]) == pytest.approx(
        R_fd, rel=1e-6, abs=1e-9)


def test_bumped_curvature_closed_form(bumped):
    r = np.linspace(0, 50, 101)
    x = bumped.offset + r
    u = bumped.conformal_factor(x)[0]
    R = 24 * 0.01 * u**-5 * (1 + x * x) ** -2.5
    np.testing.assert_allclose(scalar_curvature_g(bumped, r), R, rtol=1e-9, atol=1e-14)
    em = energy_momentum(bumped, r)
    np.testing.assert_allclose(em.mu, 3 * 0.01 / (2 * np.pi) * u**-5 * (1 + x * x) ** -2.5,
                               rtol=1e-9, atol=1e-15)
    assert np.all(em.j1 == 0)


def test_vacuum_constraints(schw, pg):
    r = np.geomspace(1e-3, 1e4, 400)
    for d in (schw, pg):
        em = energy_momentum(d, r)
        assert np.max(np.abs(em.mu)) < 1e-9
        assert np.max(np.abs(em.j1)) < 1e-9
    assert np.max(np.abs(scalar_curvature_g(FlatData(), r))) == 0


@pytest.mark.parametrize("r", [0.2, 1.5, 6.0])
def test_momentum_matches_divergence_oracle(r):
    # non-vacuum data with generic ka, kb on a curved metric
    data = SampledData(*_smooth_profile(400), mass_scale=1.0)
    J_fd = oracles.momentum_density(_metric_of(data), _kernel_of(data), [r, 1.0, 0.3])
    j1 = float(energy_momentum(data, np.array([r])).j1[0])
    assert 8 * np.pi * j1 == pytest.approx(J_fd[0], rel=1e-5, abs=1e-8)
    assert abs(J_fd[1]) < 1e-8 and abs(J_fd[2]) < 1e-8


def _smooth_profile(n, a=0.3, b=0.2, c=0.15):
    r = np.linspace(0, 12, n)
    g11 = 1 + a * np.exp(-((r - 2) ** 2))
    rho = 1 + r + b * np.sin(r) / (1 + r)
    ka = c * np.exp(-r) * np.cos(r)
    kb = c / (1 + r * r)
    return r, g11, rho, ka, kb


@settings(max_examples=10)
@given(st.floats(-0.4, 0.4), st.floats(-0.3, 0.3), st.floats(0.5, 4.0))
def test_scalar_curvature_random_profiles(a, b, c):
    """Sup-norm error against the oracle on coarse nodes refines at O(h^2)."""
    def g11(s):
        return 1 + a * np.exp(-((s - c) ** 2))

    def rho(s):
        return 1 + s + b * np.sin(s) / (1 + s)

    x = np.linspace(0, 12, 51)[2:35]
    ref = np.array([oracles.scalar_curvature(oracles.spherical_metric(g11, rho), [t, 1.0, 0.3])
                    for t in x])
    errs = []
    for n in (201, 401, 801):
        s = np.linspace(0, 12, n)
        d = load_sampled(s, g11(s), rho(s), np.zeros(n), np.zeros(n))
        errs.append(float(np.max(np.abs(scalar_curvature_g(d, x) - ref))))
    floor = 5e-8  # oracle accuracy
    assert errs[0] < 2e-3
    for e0, e1 in zip(errs, errs[1:]):
        assert e1 <= max(e0 / 2**1.8, floor)


def test_scalar_curvature_sampled_sup_order():
    def g11(s):
        return 1 + 0.3 * np.exp(-((s - 2) ** 2))

    def rho(s):
        return 1 + s + 0.25 * np.sin(s) / (1 + s)

    x = np.linspace(0, 12, 101)
    x = x[(x >= 0.5) & (x <= 8)]
    ref = np.array([oracles.scalar_curvature(oracles.spherical_metric(g11, rho), [t, 1.0, 0.3])
                    for t in x])
    errs = []
    for n in (201, 401, 801):
        s = np.linspace(0, 12, n)
        d = load_sampled(s, g11(s), rho(s), np.zeros(n), np.zeros(n))
        errs.append(np.max(np.abs(scalar_curvature_g(d, x) - ref)))
    orders = [math.log2(e0 / e1) for e0, e1 in zip(errs, errs[1:])]
    assert min(orders) > 1.8


def test_sampled_vacuum_converges(pg):
    errs = []
    for n in (500, 1000, 2000):
        r = np.linspace(0, 40, n)
        d = sample(pg, r)
        q = np.linspace(1, 30, 500)
        em = energy_momentum(d, q)
        errs.append(np.max(np.abs(em.mu)) + np.max(np.abs(em.j1)))
    assert errs[0] > errs[1] > errs[2]


# ---------------------------------------------------------------------------
# checks

def test_dec(schw, pg, bumped):
    for d in (schw, pg, bumped):
        assert check_dec(d).passed
    res = check_dec(schw)
    assert res.value == pytest.approx(0.0, abs=1e-12)
    neg = BumpedConformal(1.0, -0.01, 0.05)
    neg = neg.shifted(find_outermost_horizon(neg))
    res = check_dec(neg)
    assert not res.passed and res.value < 0 and res.location is not None


def test_falloff(schw, pg):
    assert check_falloff(schw).passed
    assert check_falloff(FlatData()).passed
    res = check_falloff(pg)
    assert not res.passed
    assert not res.details["|tr k|"]["pass"]
    assert res.details["|tr k|"]["exponent"] == pytest.approx(1.5, abs=0.01)


def test_falloff_short_tail():
    r = np.linspace(0, 50, 64)
    s = load_sampled(r, np.ones(64), r + 1, np.zeros(64), np.zeros(64))
    with pytest.raises(DataError):
        check_falloff(s)


@given(st.floats(0.5, 60.0), st.floats(0.5, 11.5), st.integers(16, 80))
def test_interpolant_monotone_on_monotone_samples(steep, center, n):
    from jang_penrose.data import monotone_hermite
    x = np.linspace(0, 12, n)
    y = 1 + x + 5 * np.tanh(steep * (x - center))
    p = monotone_hermite(x, y)
    dense = np.linspace(0, 12, 20 * n)
    assert np.all(p(dense, 1) >= -1e-12)
    np.testing.assert_allclose(p(x), y, rtol=0, atol=1e-12)
