"""Geometry of the Jang metric gbar = ds^2 + rho(s)^2 dOmega^2."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .data import InitialData
from .solver import JangSolution, SolverError, phi_r_analytic

METHODS = ("grid", "pointwise", "s-grid")


class ExtrapolationError(SolverError):
    """ADM mass extrapolation did not settle."""


@dataclass
class GeometryProfile:
    r: np.ndarray
    s: np.ndarray
    rho: np.ndarray
    rho_s: np.ndarray
    rho_ss: np.ndarray
    mass: np.ndarray
    rbar: np.ndarray
    method: str

    @property
    def area(self):
        return 4 * np.pi * self.rho**2

    @property
    def mean_curvature(self):
        return 2 * self.rho_s / self.rho

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "s", "rho", "rho_s", "m", "Rbar", "area", "Hbar"])
            cols = (self.r, self.s, self.rho, self.rho_s, self.mass, self.rbar,
                    self.area, self.mean_curvature)
            for row in zip(*cols):
                w.writerow([repr(float(x)) for x in row])


def hawking_mass(rho, rho_s):
    rho = np.asarray(rho, dtype=float)
    rho_s = np.asarray(rho_s, dtype=float)
    return 0.5 * rho * (1 - rho_s**2)


def rbar_direct(rho, rho_s, rho_ss):
    """Scalar curvature of ds^2 + rho^2 dOmega^2."""
    rho = np.asarray(rho, dtype=float)
    return 2 / rho**2 * (1 - 2 * rho * np.asarray(rho_ss) - np.asarray(rho_s) ** 2)


def rho_ss_profile(data: InitialData, sol: JangSolution, method="grid"):
    """Second arclength derivative of rho.

    grid       centred differences of phi in the grid coordinate
    pointwise  chain rule with the solver's v_r
    s-grid     differences of phi against the integrated arclength samples
    """
    grid = sol.grid
    if method == "grid":
        with np.errstate(divide="ignore", invalid="ignore"):
            return grid.d_dxi(sol.phi) / sol.s_xi
    if method == "pointwise":
        fl = data.fields(sol.r)
        with np.errstate(divide="ignore", invalid="ignore"):
            s_r = fl.sqrt_g11 / np.sqrt(sol.one_minus_v2)
            out = phi_r_analytic(data, sol) / s_r
        if not np.isfinite(out[0]):
            out[0] = (4 * out[1] - out[2]) / 3
        return out
    if method == "s-grid":
        with np.errstate(divide="ignore", invalid="ignore"):
            return grid.d_dxi(sol.phi) / grid.d_dxi(sol.s)
    raise ValueError(f"unknown method {method!r}")


def profile(data: InitialData, sol: JangSolution, method="grid") -> GeometryProfile:
    fl = data.fields(sol.r)
    if method == "s-grid":
        with np.errstate(divide="ignore", invalid="ignore"):
            rho_s = sol.grid.d_dxi(fl.rho) / sol.grid.d_dxi(sol.s)
    else:
        rho_s = sol.phi
    rho_ss = rho_ss_profile(data, sol, method)
    with np.errstate(invalid="ignore"):
        rbar = rbar_direct(fl.rho, rho_s, rho_ss)
    return GeometryProfile(
        r=sol.r, s=sol.s, rho=fl.rho, rho_s=rho_s, rho_ss=rho_ss,
        mass=hawking_mass(fl.rho, rho_s), rbar=rbar,
        method=method,
    )


def mass_derivative_check(prof: GeometryProfile, sol: JangSolution, layer=10):
    """2 dm/ds - rho_s rho^2 Rbar / 2 on the interior window."""
    with np.errstate(divide="ignore", invalid="ignore"):
        dm_ds = sol.grid.d_dxi(prof.mass) / sol.s_xi
        res = 2 * dm_ds - 0.5 * prof.rho_s * prof.rho**2 * prof.rbar
    mask = sol.grid.interior(layer)
    return float(np.max(np.abs(res[mask]))), np.where(mask, res, np.nan)


def adm_mass(r, mass, fraction=0.1, orders=(1, 2, 3), scale=1.0):
    """Limit of m(r) as r -> infinity from fits in powers of 1/r over the outer decade.

    Returns (value, uncertainty): the highest-order intercept and the spread
    of intercepts across orders.
    """
    r = np.asarray(r, dtype=float)
    mass = np.asarray(mass, dtype=float)
    sel = (r >= fraction * r[-1]) & np.isfinite(mass)
    if sel.sum() < max(orders) + 3:
        raise ExtrapolationError("too few samples in the outer decade")
    x = r[-1] / r[sel]
    y = mass[sel]
    intercepts = [np.polynomial.polynomial.polyfit(x, y, k)[0] for k in orders]
    value = float(intercepts[-1])
    spread = float(np.ptp(intercepts))
    unc = max(spread, 1e-13 * max(abs(value), float(np.max(np.abs(y))), 1e-300))
    if unc > max(0.01 * abs(value), 1e-6 * scale):
        raise ExtrapolationError(
            f"ADM extrapolation unsettled: {value:.6g} +- {unc:.3g}")
    return value, unc
