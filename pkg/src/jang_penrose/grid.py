"""Radial grids clustered at the inner sphere.

Nodes are r(xi) = a * sinh(b * xi)**2 on a uniform computational grid
xi in [0, 1].  Near xi = 0 this is quadratic (square-root clustering in r),
far out it is exponential (logarithmic spacing).  Because r is an even
analytic function of xi, profiles that behave like sqrt(r) at a horizon are
smooth in xi, so centred differences in xi keep their design order right up
to the inner boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RadialGrid:
    n: int
    r_max: float
    scale: float = 1.0

    def __post_init__(self):
        if self.n < 16:
            raise ValueError(f"grid needs at least 16 intervals, got {self.n}")
        if not (self.r_max > 0 and self.scale > 0):
            raise ValueError("r_max and scale must be positive")

    @property
    def stretch(self) -> float:
        return float(np.arcsinh(np.sqrt(self.r_max / self.scale)))

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def xi(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n + 1)

    @property
    def r(self) -> np.ndarray:
        r = self.scale * np.sinh(self.stretch * self.xi) ** 2
        r[-1] = self.r_max
        return r

    @property
    def dr_dxi(self) -> np.ndarray:
        b = self.stretch
        return self.scale * b * np.sinh(2.0 * b * self.xi)

    def refine(self, factor: int = 2) -> "RadialGrid":
        return RadialGrid(self.n * factor, self.r_max, self.scale)

    def d_dxi(self, f, order: int = 2) -> np.ndarray:
        """Derivative with respect to xi by centred differences."""
        f = np.asarray(f, dtype=float)
        if order == 2:
            return np.gradient(f, self.h, edge_order=2)
        if order == 4:
            return _fd4(f, self.h)
        raise ValueError(f"unsupported order {order}")

    def d_dr(self, f, order: int = 2) -> np.ndarray:
        """Derivative with respect to r; undefined (nan) at xi = 0."""
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.d_dxi(f, order) / self.dr_dxi
        out[0] = np.nan
        return out

    def integrate_xi(self, integrand_xi) -> np.ndarray:
        """Cumulative trapezoid integral in xi, starting from zero."""
        g = np.asarray(integrand_xi, dtype=float)
        out = np.zeros_like(g)
        out[1:] = np.cumsum(0.5 * self.h * (g[1:] + g[:-1]))
        return out

    def interior(self, layer: int = 10) -> np.ndarray:
        """Mask excluding `layer` cells at the inner boundary and the last node."""
        mask = np.ones(self.n + 1, dtype=bool)
        mask[: layer + 1] = False
        mask[-1] = False
        return mask


def _fd4(f, h):
    out = np.empty_like(f)
    out[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)
    # one-sided fourth-order stencils at the two nodes on each end
    c0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12.0 * h)
    c1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / (12.0 * h)
    out[0] = c0 @ f[:5]
    out[1] = c1 @ f[:5]
    out[-1] = -(c0 @ f[-1:-6:-1])
    out[-2] = -(c1 @ f[-1:-6:-1])
    return out
