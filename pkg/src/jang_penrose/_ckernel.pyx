# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled integrator kernel.  Same interface and arithmetic as ``_pykernel``."""

import numpy as np

from libc.math cimport sqrt, exp, fabs, INFINITY, NAN, isfinite

OK, BOUND, UNDERFLOW, MAXSTEPS, NONFINITE = 0, 1, 2, 3, 4

cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561
cdef double A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247
cdef double A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192
cdef double B5 = -2187.0 / 6784, B6 = 11.0 / 84
cdef double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920
cdef double E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40

# sentinel for "stage left the admissible band"
cdef double OUT = 1e308 * 10


cdef struct Coef:
    double n, n_r, rho, rho_r, rho_rr, ka, kb


cdef class _Data:
    cdef int code
    cdef double p0, p1, p2, p3
    cdef double[::1] knots
    cdef double[:, :, ::1] coeffs
    cdef Py_ssize_t nk

    def __init__(self, int code, params, knots, coeffs):
        self.code = code
        self.p0, self.p1, self.p2, self.p3 = [float(x) for x in params]
        self.knots = np.ascontiguousarray(knots, dtype=np.float64)
        self.coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
        self.nk = self.knots.shape[0]

    cdef int coef(self, double r, Coef* c) except -1 nogil:
        cdef double rho, x, w, sw, u, u_x, u_xx, k, z, t, g11, g11_r
        cdef double v[4]
        cdef double d[4]
        cdef double dd[4]
        cdef Py_ssize_t lo, hi, mid, i, f
        if self.code == 1:
            rho = 2 * self.p0 + r
            c.n = sqrt(r / rho)
            c.n_r = (self.p0 / (rho * rho)) / c.n if c.n > 0 else INFINITY
            c.rho, c.rho_r, c.rho_rr, c.ka, c.kb = rho, 1.0, 0.0, 0.0, 0.0
        elif self.code == 2:
            rho = self.p1 + r
            c.kb = self.p2 * sqrt(2 * self.p0 / (rho * rho * rho))
            c.n, c.n_r, c.rho, c.rho_r, c.rho_rr, c.ka = 1.0, 0.0, rho, 1.0, 0.0, -0.5 * c.kb
        elif self.code == 3:
            x = self.p2 + r
            w = 1 + x * x
            sw = sqrt(w)
            u = 1 + self.p0 / (2 * x) + self.p1 / sw
            u_x = -self.p0 / (2 * x * x) - self.p1 * x / (w * sw)
            u_xx = self.p0 / (x * x * x) + self.p1 * (2 * x * x - 1) / (w * w * sw)
            c.n = 1 / (u * u)
            c.n_r = -2 * u_x / (u * u * u)
            c.rho = x * u * u
            c.rho_r = u * u + 2 * x * u * u_x
            c.rho_rr = 4 * u * u_x + 2 * x * u_x * u_x + 2 * x * u * u_xx
            c.ka = 0.0
            c.kb = 0.0
        elif self.code == 4:
            rho = self.p0 + r
            k = self.p1 * self.p0 * self.p0 * self.p0 / (rho * rho * rho * rho)
            c.n, c.n_r, c.rho, c.rho_r, c.rho_rr, c.ka, c.kb = 1.0, 0.0, rho, 1.0, 0.0, k, k
        elif self.code == 5:
            rho = self.p3 + r
            z = (rho - self.p1) / self.p2
            c.n, c.n_r, c.rho, c.rho_r, c.rho_rr, c.ka = 1.0, 0.0, rho, 1.0, 0.0, 0.0
            c.kb = self.p0 * exp(-z * z)
        elif self.code == 10:
            # bisect_right(knots, r) - 1, clipped to [0, nk - 2]
            lo, hi = 0, self.nk
            while lo < hi:
                mid = (lo + hi) // 2
                if r < self.knots[mid]:
                    hi = mid
                else:
                    lo = mid + 1
            i = lo - 1
            if i < 0:
                i = 0
            if i > self.nk - 2:
                i = self.nk - 2
            t = r - self.knots[i]
            for f in range(4):
                v[f] = ((self.coeffs[f, 0, i] * t + self.coeffs[f, 1, i]) * t
                        + self.coeffs[f, 2, i]) * t + self.coeffs[f, 3, i]
                d[f] = (3 * self.coeffs[f, 0, i] * t + 2 * self.coeffs[f, 1, i]) * t \
                    + self.coeffs[f, 2, i]
                dd[f] = 6 * self.coeffs[f, 0, i] * t + 2 * self.coeffs[f, 1, i]
            g11, g11_r = v[0], d[0]
            c.n = 1 / sqrt(g11)
            c.n_r = -0.5 * g11_r * c.n / g11
            c.rho, c.rho_r, c.rho_rr = v[1], d[1], dd[1]
            c.ka, c.kb = v[2], v[3]
        else:
            with gil:
                raise ValueError(f"unknown data code {self.code}")
        return 0

    cdef double slope(self, double r, double v, double omv, double opv,
                      int branch) except? -1e300 nogil:
        cdef Coef c
        cdef double a, f
        self.coef(r, &c)
        a = c.n * c.rho_r / c.rho
        f = -c.ka
        if v != 0.0:
            f = f + c.n * v * c.rho_rr / c.rho_r + v * c.n_r
        if branch == 0:
            branch = -1 if v >= 0.0 else 1
        if branch < 0:
            f = f - 2 * a / opv
            return -(f + 2 * (a - c.kb) / (omv * opv)) / c.n
        f = f + 2 * a / omv
        return -(f - 2 * (a + c.kb) / (omv * opv)) / c.n

    cdef double dydr(self, int mode, int branch, double dv_min, double r,
                     double y) except? -1e300 nogil:
        cdef double v, omv, opv, dv
        if mode == 1:
            v, omv, opv = 1.0 - y, y, 2.0 - y
        elif mode == 2:
            v, omv, opv = y - 1.0, 2.0 - y, y
        else:
            v, omv, opv = y, 1.0 - y, 1.0 + y
        if not (omv > dv_min and opv > dv_min):
            return OUT
        dv = self.slope(r, v, omv, opv, branch)
        if not isfinite(dv):
            return NAN
        return -dv if mode == 1 else dv


def coefficients(code, params, knots, coeffs, double r):
    cdef _Data d = _Data(code, params, knots, coeffs)
    cdef Coef c
    d.coef(r, &c)
    return c.n, c.n_r, c.rho, c.rho_r, c.rho_rr, c.ka, c.kb


def slope(code, params, knots, coeffs, double r, double v, double omv, double opv,
          int branch):
    cdef _Data d = _Data(code, params, knots, coeffs)
    return d.slope(r, v, omv, opv, branch)


def rhs(code, params, knots, coeffs, double r, double v, int branch=0):
    cdef _Data d = _Data(code, params, knots, coeffs)
    return d.slope(r, v, 1.0 - v, 1.0 + v, branch)


def integrate(code, params, knots, coeffs, int mode, int branch, double y0,
              double r0, double r_end, r_out, double rtol, double atol,
              double dv_min, double h0, long max_steps):
    """March y from r0 to r_end landing on each r_out; returns (y_out, nsteps, nreject, status, r_stop)."""
    cdef _Data d = _Data(code, params, knots, coeffs)
    cdef double[::1] ro = np.ascontiguousarray(r_out, dtype=np.float64)
    y_arr = np.full(ro.shape[0], np.nan)
    cdef double[::1] yo = y_arr
    cdef Py_ssize_t j = 0, nout = ro.shape[0]
    cdef double r = r0, y = y0, h = h0, hmin, r_next, target, ht
    cdef double k1, k2, k3, k4, k5, k6, k7, y_new, err_raw, sc, err, fac
    cdef long nsteps = 0, nreject = 0
    cdef int status = 0
    cdef bint landing
    with nogil:
        while j < nout and ro[j] <= r0:
            yo[j] = y0
            j += 1
        k1 = d.dydr(mode, branch, dv_min, r, y)
        if k1 == OUT or not isfinite(k1):
            status = 4
        while status == 0 and r < r_end:
            if nsteps + nreject >= max_steps:
                status = 3
                break
            hmin = 16 * 2.220446049250313e-16 * (fabs(r) if fabs(r) > 1e-300 else 1e-300)
            if h < hmin:
                break
            target = ro[j] if j < nout else r_end
            ht = h
            landing = r + ht >= target
            if landing:
                ht = target - r
            k2 = k3 = k4 = k5 = k6 = k7 = OUT
            k2 = d.dydr(mode, branch, dv_min, r + C2 * ht, y + ht * A21 * k1)
            if k2 != OUT:
                k3 = d.dydr(mode, branch, dv_min, r + C3 * ht, y + ht * (A31 * k1 + A32 * k2))
            if k3 != OUT:
                k4 = d.dydr(mode, branch, dv_min, r + C4 * ht,
                            y + ht * (A41 * k1 + A42 * k2 + A43 * k3))
            if k4 != OUT:
                k5 = d.dydr(mode, branch, dv_min, r + C5 * ht,
                            y + ht * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
            if k5 != OUT:
                k6 = d.dydr(mode, branch, dv_min, r + ht,
                            y + ht * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
            y_new = NAN
            if k6 != OUT:
                y_new = y + ht * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
                k7 = d.dydr(mode, branch, dv_min, r + ht, y_new)
            if k7 == OUT:
                nreject += 1
                h = ht * 0.25
                if h < hmin:
                    status = 1
                    break
                continue
            err_raw = ht * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
            sc = atol + rtol * (fabs(y) if fabs(y) > fabs(y_new) else fabs(y_new))
            err = fabs(err_raw) / sc
            if not isfinite(err):
                nreject += 1
                h = ht * 0.25
                if h < hmin:
                    status = 4
                    break
                continue
            if err <= 1.0:
                r_next = target if landing else r + ht
                while j < nout and ro[j] <= r_next:
                    yo[j] = y_new
                    j += 1
                r, y, k1 = r_next, y_new, k7
                nsteps += 1
                if err == 0.0:
                    fac = 10.0
                else:
                    fac = 0.9 * err ** -0.2
                    if fac > 10.0:
                        fac = 10.0
                if landing:
                    if ht * fac > h:
                        h = ht * fac
                else:
                    h = ht * fac
            else:
                nreject += 1
                fac = 0.9 * err ** -0.2
                h = ht * (fac if fac > 0.2 else 0.2)
                if h < hmin:
                    status = 2
                    break
    if status == 0 and r < r_end:
        status = 2
    return y_arr, nsteps, nreject, status, r
