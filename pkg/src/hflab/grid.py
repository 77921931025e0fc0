"""Radial grids and the rho-scaled plotting transform.

All solvers work on a grid that is uniform in a mapped coordinate ``t``:

* ``log-uniform``:        t = ln r
* ``hybrid-log-linear``:  t = ln r + r / s   (logarithmic near the nucleus,
  linear with spacing ~ s*h far out, which continuum states need)

Quadrature weights are trapezoidal in ``t`` with sixth-order Gregory end
corrections, so ``sum(w * f)`` approximates the integral of f over
[r_min, r_max].
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import lambertw

from .errors import ConfigurationError, DomainError

MAPPINGS = ("log-uniform", "hybrid-log-linear")

# Gregory endpoint weights (6 corrections, exact for polynomials of degree < 6).
_GREGORY = tuple(
    float(Fraction(n, d))
    for n, d in [(19087, 60480), (84199, 60480), (18869, 30240),
                 (37621, 30240), (55031, 60480), (61343, 60480)]
)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    r_min: float
    r_max: float
    point_count: int
    mapping: str
    linear_scale: float
    t: np.ndarray = field(repr=False)
    points: np.ndarray = field(repr=False)
    dr_dt: np.ndarray = field(repr=False)
    d2r_dt2: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def r(self) -> np.ndarray:
        return self.points

    @property
    def step(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def gregory(self) -> np.ndarray:
        """Dimensionless end-correction factors (1 in the interior)."""
        return self.weights / (self.step * self.dr_dt)

    @property
    def liouville_term(self) -> np.ndarray:
        """½(q² - dq/dt) with q = r_tt / (2 r_t); equals 1/8 on a log grid."""
        if self.mapping == "log-uniform":
            return np.full(self.points.shape, 0.125)
        s, r = self.linear_scale, self.points
        q = 0.5 * s * s / (r + s) ** 2
        dq = -s * s / (r + s) ** 3 * self.dr_dt
        return 0.5 * (q * q - dq)

    def integrate(self, f, include_origin: bool = False) -> float:
        """Integrate samples ``f`` over the grid.

        With ``include_origin`` the segment [0, r_min] is added assuming a
        local power law f ~ r^p fitted to the first two samples.
        """
        f = np.asarray(f, dtype=float)
        total = float(np.dot(self.weights, f))
        if include_origin:
            f0, f1 = f[0], f[1]
            r0, r1 = self.points[0], self.points[1]
            p = 0.0
            if f0 != 0.0 and f1 != 0.0 and np.sign(f0) == np.sign(f1):
                p = np.log(f1 / f0) / np.log(r1 / r0)
            total += r0 * f0 / (p + 1.0) if p > -1.0 else 0.0
        return total

    def index_of(self, r: float) -> int:
        """Index of the first grid point at or beyond ``r``."""
        return int(np.searchsorted(self.points, r))

    def describe(self) -> dict:
        return {
            "r_min": self.r_min,
            "r_max": self.r_max,
            "point_count": self.point_count,
            "mapping": self.mapping,
            "linear_scale": self.linear_scale,
        }


def _t_of_r(r, mapping: str, s: float):
    return np.log(r) + (r / s if mapping == "hybrid-log-linear" else 0.0)


def build_grid(
    r_min: float = 1e-6,
    r_max: float = 60.0,
    point_count: int = 2000,
    mapping: str = "log-uniform",
    linear_scale: float = 1.0,
) -> RadialGrid:
    """Construct a radial grid.

    Raises
    ------
    ConfigurationError
        If the bounds are not ordered and positive, fewer than 100 points are
        requested or the mapping tag is unknown.
    """
    if mapping not in MAPPINGS:
        raise ConfigurationError(f"unknown grid mapping {mapping!r}; expected one of {MAPPINGS}")
    if not (r_min > 0.0) or not (r_max > r_min):
        raise ConfigurationError(f"invalid grid bounds r_min={r_min}, r_max={r_max}")
    if int(point_count) != point_count or point_count < 100:
        raise ConfigurationError(f"point_count must be an integer >= 100, got {point_count}")
    if linear_scale <= 0.0:
        raise ConfigurationError("linear_scale must be positive")
    n = int(point_count)
    t = np.linspace(_t_of_r(r_min, mapping, linear_scale), _t_of_r(r_max, mapping, linear_scale), n)
    h = t[1] - t[0]
    if mapping == "log-uniform":
        r = np.exp(t)
        r[0], r[-1] = r_min, r_max
        r_t = r.copy()
        r_tt = r.copy()
    else:
        s = linear_scale
        r = s * np.real(lambertw(np.exp(t) / s))
        r[0], r[-1] = r_min, r_max
        r_t = r * s / (r + s)
        r_tt = r_t * s * s / (r + s) ** 2
    g = np.ones(n)
    m = len(_GREGORY)
    g[:m] = _GREGORY
    g[-m:] = _GREGORY[::-1]
    weights = h * g * r_t
    return RadialGrid(
        r_min=float(r_min),
        r_max=float(r_max),
        point_count=n,
        mapping=mapping,
        linear_scale=float(linear_scale),
        t=t,
        points=r,
        dr_dt=r_t,
        d2r_dt2=r_tt,
        weights=weights,
    )


# ---------------------------------------------------------------------------
# Plotting transform: rho = a*r + ln r, f = sqrt(r(a*r + 1)) * phi(r)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlotTransform:
    a: float = 2.79


def rho_of_r(r, transform: PlotTransform = PlotTransform()):
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0.0):
        raise DomainError("rho(r) is defined for r > 0 only")
    out = transform.a * r_arr + np.log(r_arr)
    return float(out) if out.ndim == 0 else out


def r_of_rho(rho, transform: PlotTransform = PlotTransform()):
    """Inverse of :func:`rho_of_r`."""
    rho = np.asarray(rho, dtype=float)
    a = transform.a
    if a == 0.0:
        out = np.exp(rho)
    else:
        out = np.real(lambertw(a * np.exp(rho))) / a
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class PlotTable:
    rho: np.ndarray
    f: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["rho", "f"])
        for a, b in zip(self.rho, self.f):
            writer.writerow([repr(float(a)), repr(float(b))])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [[float(a), float(b)] for a, b in zip(self.rho, self.f)]
        return json.dumps({"columns": ["rho", "f"], "rows": rows})

    def sign_changes(self) -> int:
        s = np.sign(self.f[self.f != 0.0])
        return int(np.count_nonzero(s[1:] != s[:-1]))


def plot_scale(orbital, grid: RadialGrid, transform: PlotTransform = PlotTransform(),
               r_cut: float | None = None) -> PlotTable:
    """Return the (rho, f) plotting table for an orbital sampled on ``grid``.

    ``orbital`` may be an array of radial samples or any object with a
    ``radial`` attribute.  ``r_cut`` truncates the table (useful to drop the
    numerically noisy far tail of an eigenvector).
    """
    phi = np.asarray(getattr(orbital, "radial", orbital), dtype=float)
    if phi.shape != grid.points.shape:
        raise DomainError("orbital is not sampled on this grid")
    r = grid.points
    keep = slice(None) if r_cut is None else r <= r_cut
    r, phi = r[keep], phi[keep]
    rho = rho_of_r(r, transform)
    f = np.sqrt(r * (transform.a * r + 1.0)) * phi
    return PlotTable(rho=np.asarray(rho), f=f)
