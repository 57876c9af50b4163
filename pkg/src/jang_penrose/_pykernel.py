"""Pure-Python integrator kernel (fallback for the compiled ``_ckernel``).

Both kernels implement the same Dormand-Prince 5(4) march on the state y
representing v.  Steps are clipped to land on every output radius, so each
returned value is an error-controlled step endpoint; interpolated values
would carry step-scale wiggles that finite differences of phi amplify.

    mode 0: y = v        mode 1: y = 1 - v        mode 2: y = 1 + v

Modes 1 and 2 keep 1 - v^2 = y (2 - y) exact near a horizon start.
"""

import math
from bisect import bisect_right

import numpy as np

OK, BOUND, UNDERFLOW, MAXSTEPS, NONFINITE = 0, 1, 2, 3, 4

A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176,
                           -5103 / 18656)
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
E1, E3, E4, E5, E6, E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                          22 / 525, -1 / 40)


def coefficients(code, params, knots, coeffs, r):
    """(N, N_r, rho, rho_r, rho_rr, ka, kb) at r, with N = sqrt(g^11)."""
    p0, p1, p2, p3 = params[0], params[1], params[2], params[3]
    if code == 1:
        rho = 2 * p0 + r
        n = math.sqrt(r / rho)
        n_r = (p0 / (rho * rho)) / n if n > 0 else math.inf
        return n, n_r, rho, 1.0, 0.0, 0.0, 0.0
    if code == 2:
        rho = p1 + r
        kb = p2 * math.sqrt(2 * p0 / (rho * rho * rho))
        return 1.0, 0.0, rho, 1.0, 0.0, -0.5 * kb, kb
    if code == 3:
        x = p2 + r
        w = 1 + x * x
        sw = math.sqrt(w)
        u = 1 + p0 / (2 * x) + p1 / sw
        u_x = -p0 / (2 * x * x) - p1 * x / (w * sw)
        u_xx = p0 / (x * x * x) + p1 * (2 * x * x - 1) / (w * w * sw)
        return (1 / (u * u), -2 * u_x / (u * u * u), x * u * u,
                u * u + 2 * x * u * u_x,
                4 * u * u_x + 2 * x * u_x * u_x + 2 * x * u * u_xx, 0.0, 0.0)
    if code == 4:
        rho = p0 + r
        k = p1 * p0 * p0 * p0 / (rho * rho * rho * rho)
        return 1.0, 0.0, rho, 1.0, 0.0, k, k
    if code == 5:
        rho = p3 + r
        z = (rho - p1) / p2
        return 1.0, 0.0, rho, 1.0, 0.0, 0.0, p0 * math.exp(-z * z)
    if code == 10:
        n = len(knots)
        i = min(max(bisect_right(knots, r) - 1, 0), n - 2)
        t = r - knots[i]
        vals = []
        for f in range(4):
            c0, c1, c2, c3 = coeffs[f, 0, i], coeffs[f, 1, i], coeffs[f, 2, i], coeffs[f, 3, i]
            vals.append((((c0 * t + c1) * t + c2) * t + c3,
                         (3 * c0 * t + 2 * c1) * t + c2,
                         6 * c0 * t + 2 * c1))
        g11, g11_r, _ = vals[0]
        n = 1 / math.sqrt(g11)
        return (n, -0.5 * g11_r * n / g11, vals[1][0], vals[1][1], vals[1][2],
                vals[2][0], vals[3][0])
    raise ValueError(f"unknown data code {code}")


def _v_and_gaps(mode, y):
    if mode == 1:
        return 1.0 - y, y, 2.0 - y
    if mode == 2:
        return y - 1.0, 2.0 - y, y
    return y, 1.0 - y, 1.0 + y


def slope(code, params, knots, coeffs, r, v, omv, opv, branch):
    """v_r from the theta-minus (branch -1) or theta-plus (branch +1) form."""
    n, n_r, rho, rho_r, rho_rr, ka, kb = coefficients(code, params, knots, coeffs, r)
    a = n * rho_r / rho
    f = -ka
    if v != 0.0:
        f += n * v * rho_rr / rho_r + v * n_r
    if branch == 0:
        branch = -1 if v >= 0.0 else 1
    if branch < 0:
        f -= 2 * a / opv
        return -(f + 2 * (a - kb) / (omv * opv)) / n
    f += 2 * a / omv
    return -(f - 2 * (a + kb) / (omv * opv)) / n


def rhs(code, params, knots, coeffs, r, v, branch=0):
    return slope(code, params, knots, coeffs, r, v, 1.0 - v, 1.0 + v, branch)


def _dydr(code, params, knots, coeffs, mode, branch, dv_min, r, y):
    v, omv, opv = _v_and_gaps(mode, y)
    if not (omv > dv_min and opv > dv_min):
        return None
    dv = slope(code, params, knots, coeffs, r, v, omv, opv, branch)
    if not math.isfinite(dv):
        return math.nan
    return -dv if mode == 1 else dv


def integrate(code, params, knots, coeffs, mode, branch, y0, r0, r_end, r_out,
              rtol, atol, dv_min, h0, max_steps):
    """March y from r0 to r_end, returning y at the sorted radii r_out.

    Returns (y_out, nsteps, nreject, status, r_stop).
    """
    r_out = np.asarray(r_out, dtype=float)
    y_out = np.full(r_out.shape, np.nan)
    args = (code, params, knots, coeffs, mode, branch, dv_min)
    j = 0
    while j < len(r_out) and r_out[j] <= r0:
        y_out[j] = y0
        j += 1
    r, y = r0, y0
    k1 = _dydr(*args, r, y)
    if k1 is None or not math.isfinite(k1):
        return y_out, 0, 0, NONFINITE, r
    h = h0
    nsteps = nreject = 0
    status = OK
    while r < r_end:
        if nsteps + nreject >= max_steps:
            status = MAXSTEPS
            break
        hmin = 16 * 2.220446049250313e-16 * max(abs(r), 1e-300)
        if h < hmin:
            break
        target = r_out[j] if j < len(r_out) else r_end
        ht = h
        landing = r + ht >= target
        if landing:
            ht = target - r
        k2 = _dydr(*args, r + C2 * ht, y + ht * A21 * k1)
        k3 = k4 = k5 = k6 = k7 = None
        if k2 is not None:
            k3 = _dydr(*args, r + C3 * ht, y + ht * (A31 * k1 + A32 * k2))
        if k3 is not None:
            k4 = _dydr(*args, r + C4 * ht, y + ht * (A41 * k1 + A42 * k2 + A43 * k3))
        if k4 is not None:
            k5 = _dydr(*args, r + C5 * ht,
                       y + ht * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
        if k5 is not None:
            k6 = _dydr(*args, r + ht,
                       y + ht * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
        y_new = math.nan
        if k6 is not None:
            y_new = y + ht * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
            k7 = _dydr(*args, r + ht, y_new)
        if k7 is None:
            # a stage left |v| < 1: shrink hard, give up at underflow
            nreject += 1
            h = ht * 0.25
            if h < hmin:
                status = BOUND
                break
            continue
        err_raw = ht * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        sc = atol + rtol * max(abs(y), abs(y_new))
        err = abs(err_raw) / sc
        if not math.isfinite(err):
            nreject += 1
            h = ht * 0.25
            if h < hmin:
                status = NONFINITE
                break
            continue
        if err <= 1.0:
            r_next = target if landing else r + ht
            while j < len(r_out) and r_out[j] <= r_next:
                y_out[j] = y_new
                j += 1
            r, y, k1 = r_next, y_new, k7
            nsteps += 1
            fac = 10.0 if err == 0.0 else min(10.0, 0.9 * err ** -0.2)
            # a step shortened to land on a node says nothing against the longer one
            h = max(h, ht * fac) if landing else ht * fac
        else:
            nreject += 1
            h = ht * max(0.2, 0.9 * err ** -0.2)
            if h < hmin:
                status = UNDERFLOW
                break
    if status == OK and r < r_end:
        status = UNDERFLOW
    return y_out, nsteps, nreject, status, r
