"""Spherically symmetric initial data sets.

The metric is g = g11(r) dr^2 + rho(r)^2 dOmega^2 and the extrinsic
curvature k = ka n n + kb (g - n n), with n = sqrt(g^11) d/dr.  Internally
every data set exposes the inverse radial coefficient g^11 instead of g11,
so data whose g11 diverges at a horizon (the static Schwarzschild slice in
area-radius coordinates) stay finite.

After construction by :func:`build_builtin` the inner boundary sphere sits at
r = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .grid import RadialGrid

# kernel family codes, shared with the integrator kernels
SCHWARZSCHILD = 1
PAINLEVE_GULLSTRAND = 2
BUMPED_CONFORMAL = 3
FLAT = 4
TRAPPED_SHELL = 5
SAMPLED = 10

HORIZON_TOL = 1e-8
ROOT_RTOL = 1e-12
DEC_TOL = 1e-10


class DataError(ValueError):
    """Invalid initial data or data descriptor."""


class HorizonError(DataError):
    """The outermost-apparent-horizon hypothesis fails."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


@dataclass(frozen=True)
class Fields:
    """Metric and extrinsic-curvature coefficients with their derivatives."""

    ginv: np.ndarray
    ginv_r: np.ndarray
    rho: np.ndarray
    rho_r: np.ndarray
    rho_rr: np.ndarray
    ka: np.ndarray
    ka_r: np.ndarray
    kb: np.ndarray
    kb_r: np.ndarray

    @property
    def lapse(self):
        # sqrt(g^11): the unit-normal component n^1
        return np.sqrt(self.ginv)

    @property
    def g11(self):
        with np.errstate(divide="ignore"):
            return 1.0 / self.ginv

    @property
    def sqrt_g11(self):
        with np.errstate(divide="ignore"):
            return 1.0 / np.sqrt(self.ginv)

    @property
    def lapse_r(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return 0.5 * self.ginv_r / np.sqrt(self.ginv)


@dataclass(frozen=True)
class KernelSpec:
    """Flat description of a data set consumed by the ODE kernels."""

    code: int
    params: np.ndarray
    knots: np.ndarray = field(default_factory=lambda: np.zeros(2))
    coeffs: np.ndarray = field(default_factory=lambda: np.zeros((4, 4, 1)))


class InitialData:
    """Base class.  Subclasses implement ``fields`` and ``kernel_spec``."""

    r_min = 0.0
    r_max = math.inf
    mass_scale = 1.0

    def fields(self, r) -> Fields:
        raise NotImplementedError

    def kernel_spec(self) -> KernelSpec:
        raise NotImplementedError

    def descriptor(self) -> dict:
        raise NotImplementedError

    def shifted(self, dr: float) -> "InitialData":
        raise NotImplementedError

    def _check_domain(self, r):
        r = np.asarray(r, dtype=float)
        lo = self.r_min - 1e-12 * max(1.0, abs(self.r_min))
        hi = self.r_max * (1 + 1e-12)
        if np.any(r < lo) or np.any(r > hi) or np.any(~np.isfinite(r)):
            raise DataError(
                f"evaluation outside domain [{self.r_min}, {self.r_max}]"
            )
        return r


class SchwarzschildStatic(InitialData):
    """Time-symmetric Schwarzschild slice, rho = 2M + r."""

    def __init__(self, mass: float):
        self.mass = float(mass)
        self.mass_scale = self.mass

    def fields(self, r):
        r = self._check_domain(r)
        m = self.mass
        rho = 2 * m + r
        z = np.zeros_like(rho)
        return Fields(r / rho, 2 * m / rho**2, rho, 1.0 + z, z, z, z, z, z)

    def kernel_spec(self):
        return KernelSpec(SCHWARZSCHILD, np.array([self.mass, 0.0, 0.0, 0.0]))

    def descriptor(self):
        return {"family": "schwarzschild-static", "params": {"M": self.mass}}


class PainleveGullstrand(InitialData):
    """Flat t = const slice of Schwarzschild in Painleve-Gullstrand form.

    ``rho = offset + r``.  With ``future=False`` the slice carries a past
    horizon (theta_minus = 0) at rho = 2M; ``future=True`` flips the sign of k.
    """

    def __init__(self, mass: float, offset: float | None = None, future=False):
        self.mass = float(mass)
        self.offset = 2 * self.mass if offset is None else float(offset)
        self.future = bool(future)
        self.mass_scale = self.mass

    @property
    def sign(self):
        return -1.0 if self.future else 1.0

    def fields(self, r):
        r = self._check_domain(r)
        rho = self.offset + r
        beta = np.sqrt(2 * self.mass / rho**3)
        kb = self.sign * beta
        kb_r = -1.5 * kb / rho
        one = np.ones_like(rho)
        zero = np.zeros_like(rho)
        return Fields(one, zero, rho, one, zero, -0.5 * kb, -0.5 * kb_r, kb, kb_r)

    def kernel_spec(self):
        return KernelSpec(
            PAINLEVE_GULLSTRAND, np.array([self.mass, self.offset, self.sign, 0.0])
        )

    def shifted(self, dr):
        return PainleveGullstrand(self.mass, self.offset + dr, self.future)

    def descriptor(self):
        return {
            "family": "painleve-gullstrand",
            "params": {"M": self.mass, "future": self.future},
        }


class BumpedConformal(InitialData):
    """Conformally flat time-symmetric data, g = u^4 (dx^2 + x^2 dOmega^2).

    u(x) = 1 + M/(2x) + eps (1 + x^2)^(-1/2), x = offset + r.
    """

    def __init__(self, mass: float, eps: float, offset: float = 0.05):
        self.mass = float(mass)
        self.eps = float(eps)
        self.offset = float(offset)
        self.mass_scale = self.mass

    def conformal_factor(self, x):
        x = np.asarray(x, dtype=float)
        m, e = self.mass, self.eps
        w = 1.0 + x * x
        u = 1 + m / (2 * x) + e / np.sqrt(w)
        u_x = -m / (2 * x * x) - e * x * w**-1.5
        u_xx = m / x**3 + e * (2 * x * x - 1) * w**-2.5
        return u, u_x, u_xx

    def fields(self, r):
        r = self._check_domain(r)
        x = self.offset + r
        u, u_x, u_xx = self.conformal_factor(x)
        z = np.zeros_like(x)
        return Fields(
            ginv=u**-4,
            ginv_r=-4 * u_x * u**-5,
            rho=x * u * u,
            rho_r=u * u + 2 * x * u * u_x,
            rho_rr=4 * u * u_x + 2 * x * u_x**2 + 2 * x * u * u_xx,
            ka=z, ka_r=z, kb=z, kb_r=z,
        )

    def kernel_spec(self):
        return KernelSpec(
            BUMPED_CONFORMAL, np.array([self.mass, self.eps, self.offset, 0.0])
        )

    def shifted(self, dr):
        return BumpedConformal(self.mass, self.eps, self.offset + dr)

    def descriptor(self):
        return {
            "family": "bumped-conformal",
            "params": {"M": self.mass, "eps": self.eps},
        }


class FlatData(InitialData):
    """Flat metric, rho = rho0 + r, ka = kb = kappa rho0^3 / rho^4."""

    def __init__(self, rho0: float = 1.0, kappa: float = 0.0):
        self.rho0 = float(rho0)
        self.kappa = float(kappa)
        self.mass_scale = self.rho0

    def fields(self, r):
        r = self._check_domain(r)
        rho = self.rho0 + r
        k = self.kappa * self.rho0**3 / rho**4
        k_r = -4 * k / rho
        one = np.ones_like(rho)
        zero = np.zeros_like(rho)
        return Fields(one, zero, rho, one, zero, k, k_r, k, k_r)

    def kernel_spec(self):
        return KernelSpec(FLAT, np.array([self.rho0, self.kappa, 0.0, 0.0]))

    def shifted(self, dr):
        return FlatData(self.rho0 + dr, self.kappa * (self.rho0 / (self.rho0 + dr)) ** 3)

    def descriptor(self):
        return {"family": "flat", "params": {"rho0": self.rho0, "kappa": self.kappa}}


class TrappedShell(InitialData):
    """Flat metric with a Gaussian shell of kb; strong shells trap spheres.

    rho = offset + r, ka = 0, kb = amp exp(-((rho - center)/width)^2).
    """

    def __init__(self, amp, center, width, offset=1.0):
        self.amp = float(amp)
        self.center = float(center)
        self.width = float(width)
        self.offset = float(offset)
        self.mass_scale = self.center

    def fields(self, r):
        r = self._check_domain(r)
        rho = self.offset + r
        z = (rho - self.center) / self.width
        kb = self.amp * np.exp(-z * z)
        kb_r = -2 * z / self.width * kb
        one = np.ones_like(rho)
        zero = np.zeros_like(rho)
        return Fields(one, zero, rho, one, zero, zero, zero, kb, kb_r)

    def kernel_spec(self):
        return KernelSpec(
            TRAPPED_SHELL,
            np.array([self.amp, self.center, self.width, self.offset]),
        )

    def shifted(self, dr):
        return TrappedShell(self.amp, self.center, self.width, self.offset + dr)

    def descriptor(self):
        return {
            "family": "trapped-shell",
            "params": {
                "amp": self.amp, "center": self.center,
                "width": self.width, "rho0": self.offset,
            },
        }


def _slopes5(x, y):
    """Node slopes from the quartic through the five nearest samples."""
    n = len(x)
    start = np.clip(np.arange(n) - 2, 0, n - 5)
    X = [x[start + k] for k in range(5)]
    d = np.zeros(n)
    for j in range(5):
        w = np.zeros(n)
        for m in range(5):
            if m == j:
                continue
            term = 1.0 / (X[j] - X[m])
            for l in range(5):
                if l not in (j, m):
                    term = term * (x - X[l]) / (X[j] - X[l])
            w += term
        d += w * y[start + j]
    return d


def monotone_hermite(x, y):
    """Cubic Hermite interpolant with fourth-order node slopes.

    Strictly monotone columns (rho on admissible data) pass their slopes
    through Hyman's filter, which makes the interpolant monotone there; the
    filter costs accuracy only next to extrema, so other columns skip it.
    Either way values are O(h^4) and second derivatives O(h^2) on smooth
    data, against O(h) second derivatives for PCHIP slopes.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = _slopes5(x, y)
    delta = np.diff(y) / np.diff(x)
    if np.all(delta > 0) or np.all(delta < 0):
        lo, hi = delta[:-1], delta[1:]
        sign = np.sign(hi)
        cap = 3 * np.minimum(np.abs(lo), np.abs(hi))
        d[1:-1] = sign * np.minimum(np.maximum(sign * d[1:-1], 0.0), cap)
        for k, dl in ((0, delta[0]), (-1, delta[-1])):
            if d[k] * dl < 0:
                d[k] = 0.0
            elif abs(d[k]) > 3 * abs(dl):
                d[k] = 3 * dl
    return CubicHermiteSpline(x, y, d)


class SampledData(InitialData):
    """Tabulated data with shape-preserving cubic Hermite interpolation."""

    def __init__(self, r, g11, rho, ka, kb, mass_scale=None):
        arrays = [np.asarray(a, dtype=float) for a in (r, g11, rho, ka, kb)]
        n = len(arrays[0])
        if any(a.ndim != 1 or len(a) != n for a in arrays):
            raise DataError("sample arrays must be one-dimensional and equal length")
        if n < 16:
            raise DataError(f"need at least 16 samples, got {n}")
        r, g11, rho, ka, kb = arrays
        if not np.all(np.isfinite(np.stack(arrays))):
            raise DataError("samples must be finite")
        if np.any(np.diff(r) <= 0):
            raise DataError("sample radii must be strictly increasing")
        if np.any(g11 <= 0):
            raise DataError("g11 must be positive")
        if np.any(rho <= 0):
            raise DataError("rho must be positive")
        self.samples = {"r": r - r[0], "g11": g11, "rho": rho, "ka": ka, "kb": kb}
        self.r_max = float(r[-1] - r[0])
        self.mass_scale = float(mass_scale) if mass_scale else 0.5 * float(rho[0])
        x = self.samples["r"]
        self._interp = {k: monotone_hermite(x, self.samples[k]) for k in
                        ("g11", "rho", "ka", "kb")}

    def fields(self, r):
        r = self._check_domain(r)
        ip = self._interp
        g11 = ip["g11"](r)
        g11_r = ip["g11"](r, 1)
        return Fields(
            ginv=1.0 / g11,
            ginv_r=-g11_r / g11**2,
            rho=ip["rho"](r),
            rho_r=ip["rho"](r, 1),
            rho_rr=ip["rho"](r, 2),
            ka=ip["ka"](r),
            ka_r=ip["ka"](r, 1),
            kb=ip["kb"](r),
            kb_r=ip["kb"](r, 1),
        )

    def kernel_spec(self):
        ip = self._interp
        coeffs = np.stack([ip[k].c for k in ("g11", "rho", "ka", "kb")])
        return KernelSpec(
            SAMPLED,
            np.array([self.r_max, 0.0, 0.0, 0.0]),
            knots=np.ascontiguousarray(self.samples["r"]),
            coeffs=np.ascontiguousarray(coeffs),
        )

    def descriptor(self):
        return {"samples": {k: v.tolist() for k, v in self.samples.items()}}


# ---------------------------------------------------------------------------
# pointwise geometry of the data

def null_expansions(data: InitialData, r):
    f = data.fields(r)
    mean = f.lapse * f.rho_r / f.rho
    return 2 * (mean + f.kb), 2 * (mean - f.kb)


def scalar_curvature_g(data: InitialData, r):
    """Scalar curvature of g11 dr^2 + rho^2 dOmega^2."""
    f = data.fields(r)
    rho_ss = f.ginv * f.rho_rr + 0.5 * f.ginv_r * f.rho_r
    return 2 / f.rho**2 * (1 - f.ginv * f.rho_r**2) - 4 / f.rho * rho_ss


@dataclass(frozen=True)
class EnergyMomentum:
    mu: np.ndarray
    j1: np.ndarray
    j_norm: np.ndarray


def energy_momentum(data: InitialData, r) -> EnergyMomentum:
    f = data.fields(r)
    ka, kb = f.ka, f.kb
    curv = scalar_curvature_g(data, r)
    mu = (curv - (ka * ka + 2 * kb * kb) + (ka + 2 * kb) ** 2) / (16 * np.pi)
    # radial component of div(k - tr(k) g): mixed eigenvalues -2kb and -(ka+kb)
    j1 = (-2 * f.kb_r + 2 * f.rho_r / f.rho * (ka - kb)) / (8 * np.pi)
    return EnergyMomentum(mu, j1, f.lapse * np.abs(j1))


# ---------------------------------------------------------------------------
# horizons

class Horizon(str, Enum):
    PAST = "past"
    FUTURE = "future"
    BOTH = "both"
    NONE = "none"


@dataclass(frozen=True)
class HorizonClassification:
    kind: Horizon
    theta_plus: float
    theta_minus: float
    slope: float  # d(theta)/dr at r=0 of the vanishing expansion (nan if none)

    @property
    def boundary_value(self):
        return {Horizon.PAST: 1.0, Horizon.FUTURE: -1.0}.get(self.kind)


def _theta_scale(data):
    return 1.0 / data.mass_scale


def classify_horizon(data: InitialData, tol: float = HORIZON_TOL):
    r0 = data.r_min
    tp, tm = (float(t) for t in null_expansions(data, r0))
    scale = _theta_scale(data)
    zp = abs(tp) <= tol * scale
    zm = abs(tm) <= tol * scale
    if zp and zm:
        kind = Horizon.BOTH
    elif zm:
        kind = Horizon.PAST
    elif zp:
        kind = Horizon.FUTURE
    else:
        kind = Horizon.NONE
    slope = math.nan
    if kind in (Horizon.PAST, Horizon.FUTURE, Horizon.BOTH):
        idx = 0 if kind == Horizon.FUTURE else 1
        slope = one_sided_slope(
            lambda r: null_expansions(data, r)[idx], r0, 1e-4 * data.mass_scale
        )
    return HorizonClassification(kind, tp, tm, slope)


def one_sided_slope(fn, r0, h):
    """Second-order forward difference of fn at r0."""
    f0, f1, f2 = (float(fn(r0 + k * h)) for k in range(3))
    return (-3 * f0 + 4 * f1 - f2) / (2 * h)


def _scan_radii(data, r_lo, r_hi, n=4000):
    scale = data.mass_scale
    r_hi = min(r_hi, data.r_max)
    span = max(r_hi - r_lo, 0.0)
    # geometric spacing above r_lo, resolving ~1e-6 * scale near the bottom
    t = np.geomspace(1e-6 * scale, span + 1e-6 * scale, n) - 1e-6 * scale
    return r_lo + t


def find_outermost_horizon(data: InitialData, r_hi: float | None = None,
                           tol: float = HORIZON_TOL):
    """Largest root of theta_plus * theta_minus, or None.

    Roots of each expansion are bracketed by a sign scan and refined with
    Brent's method.  Raises :class:`HorizonError` if either expansion is
    non-positive somewhere outside the root.
    """
    r_lo = data.r_min
    r_hi = 1e3 * data.mass_scale if r_hi is None else r_hi
    r = _scan_radii(data, r_lo, r_hi)
    tp, tm = null_expansions(data, r)
    scale = _theta_scale(data)
    roots = []
    for idx, th in enumerate((tp, tm)):
        if abs(th[0]) <= tol * scale:
            roots.append(r[0])
        sign = np.sign(th)
        flips = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
        for i in flips:
            fn = lambda x, idx=idx: float(null_expansions(data, x)[idx])
            roots.append(brentq(fn, r[i], r[i + 1], xtol=ROOT_RTOL * max(r[i + 1], scale),
                                rtol=4 * np.finfo(float).eps))
    if not roots:
        return None
    r_h = max(roots)
    outside = r > r_h * (1 + 1e-9) + 1e-9 * scale
    bad = outside & ((tp <= 0) | (tm <= 0))
    if np.any(bad):
        loc = float(r[np.argmax(bad)])
        raise HorizonError(f"null expansion non-positive outside the horizon at r={loc:.6g}", loc)
    return float(r_h)


def check_interior_horizons(data: InitialData, grid: RadialGrid | None = None):
    """Raise HorizonError unless theta_plus, theta_minus > 0 for r > 0."""
    if grid is None:
        grid = validation_grid(data)
    r = grid.r[1:]
    tp, tm = null_expansions(data, r)
    bad = (tp <= 0) | (tm <= 0)
    if np.any(bad):
        loc = float(r[np.argmax(bad)])
        raise HorizonError(
            f"apparent horizon inside the domain near r={loc:.6g}", loc)


def validation_grid(data: InitialData, n: int = 2000) -> RadialGrid:
    r_max = min(1e4 * data.mass_scale, data.r_max)
    return RadialGrid(n, r_max, min(data.mass_scale, r_max / 10))


# ---------------------------------------------------------------------------
# construction

BUILTIN = ("schwarzschild-static", "painleve-gullstrand", "bumped-conformal",
           "flat", "trapped-shell")


def build_builtin(family: str, params: dict | None = None) -> InitialData:
    p = dict(params or {})
    if family == "flat":
        rho0 = float(p.get("rho0", 1.0))
        kappa = float(p.get("kappa", 0.0))
        if rho0 <= 0:
            raise DataError("rho0 must be positive")
        return FlatData(rho0, kappa)
    if family == "trapped-shell":
        base = TrappedShell(float(p.get("amp", 2.0)), float(p.get("center", 3.0)),
                            float(p.get("width", 0.5)), float(p.get("rho0", 1.0)))
        if not p.get("truncate", False):
            return base
        r_h = find_outermost_horizon(base)
        if r_h is None:
            raise DataError("trapped-shell: shell too weak to trap a sphere")
        return base.shifted(r_h)
    if family not in BUILTIN:
        raise DataError(f"unknown family {family!r}")
    mass = float(p.get("M", 1.0))
    if not mass > 0:
        raise DataError(f"mass must be positive, got {mass}")
    if family == "schwarzschild-static":
        return SchwarzschildStatic(mass)
    if family == "painleve-gullstrand":
        base = PainleveGullstrand(mass, offset=0.1 * mass, future=bool(p.get("future", False)))
    else:
        eps = float(p.get("eps", 0.0))
        if eps < 0:
            raise DataError(f"bump amplitude must be non-negative, got {eps}")
        base = BumpedConformal(mass, eps, offset=0.05 * mass)
    if not p.get("truncate", True):
        return base
    r_h = find_outermost_horizon(base)
    if r_h is None:
        raise DataError(f"{family}: no apparent horizon found")
    return base.shifted(r_h)


def load_sampled(r, g11, rho, ka, kb, mass_scale=None) -> SampledData:
    return SampledData(r, g11, rho, ka, kb, mass_scale=mass_scale)


def sample(data: InitialData, r) -> SampledData:
    """Tabulate any data set at the radii r."""
    f = data.fields(r)
    return SampledData(r, f.g11, f.rho, f.ka, f.kb, mass_scale=data.mass_scale)


def from_descriptor(desc: dict) -> InitialData:
    if not isinstance(desc, dict):
        raise DataError("data descriptor must be a JSON object")
    if "family" in desc:
        return build_builtin(desc["family"], desc.get("params"))
    if "samples" in desc:
        s = desc["samples"]
        try:
            return load_sampled(s["r"], s["g11"], s["rho"], s["ka"], s["kb"],
                                mass_scale=desc.get("mass_scale"))
        except KeyError as exc:
            raise DataError(f"samples missing column {exc}") from None
    raise DataError("descriptor needs 'family' or 'samples'")


# ---------------------------------------------------------------------------
# checks

@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    location: float | None = None
    details: dict = field(default_factory=dict)

    def as_dict(self):
        return {"name": self.name, "pass": bool(self.passed), "value": self.value,
                "location": self.location, "details": self.details}


def check_dec(data: InitialData, grid: RadialGrid | None = None, tol: float = DEC_TOL):
    if grid is None:
        grid = validation_grid(data)
    r = grid.r
    em = energy_momentum(data, r)
    margin = em.mu - em.j_norm
    ok = np.isfinite(margin)
    i = int(np.argmin(np.where(ok, margin, np.inf)))
    worst = float(margin[i])
    return CheckResult("dec", worst >= -tol, worst, float(r[i]), {"tol": tol})


FALLOFF_CLAUSES = {
    "|k|": 2.0,
    "|tr k|": 3.0,
    "|g11-1|+r|g11_r|": 1.0,
    "|rho-r|+r|rho_r-1|+r^2|rho_rr|": 0.0,
}


def falloff_quantities(data: InitialData, r):
    f = data.fields(r)
    g11 = f.g11
    g11_r = -f.ginv_r * g11**2
    return {
        "|k|": np.sqrt(f.ka**2 + 2 * f.kb**2),
        "|tr k|": np.abs(f.ka + 2 * f.kb),
        "|g11-1|+r|g11_r|": np.abs(g11 - 1) + r * np.abs(g11_r),
        "|rho-r|+r|rho_r-1|+r^2|rho_rr|": (
            np.abs(f.rho - r) + r * np.abs(f.rho_r - 1) + r * r * np.abs(f.rho_rr)),
    }


def decay_exponent(r, q, floor=1e-300):
    """Least-squares p in |q| ~ C r^(-p); None if q vanishes identically."""
    q = np.abs(np.asarray(q, dtype=float))
    if np.all(q <= floor):
        return None
    q = np.maximum(q, floor)
    slope = np.polyfit(np.log(r), np.log(q), 1)[0]
    return float(-slope)


def check_falloff(data: InitialData, slack: float = 0.05):
    """Tail power-law fits over the outer decade for each fall-off clause.

    A clause whose quantity vanishes identically passes without a fit.
    """
    scale = data.mass_scale
    r_end = min(data.r_max, 1e4 * scale)
    if r_end < 1e3 * scale:
        raise DataError(f"tail too short for fall-off fit: r_max={r_end:g}")
    r = np.geomspace(r_end / 10, r_end, 200)
    clauses = {}
    for name, q in falloff_quantities(data, r).items():
        need = FALLOFF_CLAUSES[name]
        p = decay_exponent(r, q)
        ok = p is None or p >= need - slack
        clauses[name] = {"exponent": p, "required": need, "pass": bool(ok)}
    margins = [c["exponent"] - c["required"] for c in clauses.values()
               if c["exponent"] is not None]
    passed = all(c["pass"] for c in clauses.values())
    return CheckResult("falloff", passed, min(margins) if margins else 0.0,
                       details=clauses)
