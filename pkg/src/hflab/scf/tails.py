"""High-precision orbital tails beyond the reach of the eigenvector.

Eigenvector samples are only meaningful down to ~1e-16 of the orbital peak.
Here the radial equation

    −½ P'' + (V_a(r) − ε_a) P = S_a(r)

is re-solved on a uniform tail mesh as a Numerov boundary-value problem,
with the exchange source S_a assembled from the converged orbitals and
refined jointly (Gauss–Seidel over the occupied set).  Arithmetic is done
in arbitrary-exponent floats so tails far below the double-precision
underflow limit are represented exactly; results are stored as log10|P|
and sign.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline

from ..errors import DomainError
from .angular import exchange_multipoles
from .solver import SCFResult, _operators, _same_spin_weights

_LN10 = np.log(10.0)


@dataclass(eq=False)
class TailSamples:
    label: str
    scheme: str
    energy: float
    r: np.ndarray = field(repr=False)
    log10_abs: np.ndarray = field(repr=False)
    sign: np.ndarray = field(repr=False)
    decay_constant: float = float("nan")
    power: float = float("nan")
    fit_window: tuple = (float("nan"), float("nan"))

    @property
    def slope(self) -> float:
        """Fitted asymptotic log-slope, −κ in log|P| ≈ c + ν ln r − κ r."""
        return -self.decay_constant

    def log10_at(self, r: float) -> float:
        if not self.r[0] <= r <= self.r[-1]:
            raise DomainError(f"r={r} outside refined tail [{self.r[0]}, {self.r[-1]}]")
        return float(np.interp(r, self.r, self.log10_abs))

    def sign_at(self, r: float) -> int:
        i = min(int(np.searchsorted(self.r, r)), self.r.size - 1)
        return int(self.sign[i])

    def local_slope(self) -> np.ndarray:
        """d ln|P| / dr on the tail mesh."""
        return np.gradient(self.log10_abs * _LN10, self.r)

    def sign_changes(self) -> list:
        idx = np.where(self.sign[:-1] * self.sign[1:] < 0)[0]
        return [float(0.5 * (self.r[i] + self.r[i + 1])) for i in idx]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "log10_abs_P", "sign"])
        for a, b, c in zip(self.r, self.log10_abs, self.sign):
            w.writerow([repr(float(a)), repr(float(b)), int(c)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "label": self.label, "scheme": self.scheme, "energy": self.energy,
            "decay_constant": self.decay_constant, "power": self.power,
            "fit_window": list(self.fit_window),
            "r": self.r.tolist(), "log10_abs_P": self.log10_abs.tolist(),
            "sign": self.sign.astype(int).tolist(),
        }


def _auto_start(P, r, V, eps, threshold=1e-6):
    """First radius beyond the peak where |P| < threshold·max and V > ε after."""
    a = np.abs(P)
    ip = int(np.argmax(a))
    small = np.where((a < threshold * a[ip]) & (np.arange(a.size) > ip))[0]
    i = small[0] if small.size else a.size - 1
    allowed = np.where(V[i:] <= eps)[0]
    if allowed.size:
        i += int(allowed[-1]) + 1
    return float(r[min(i, a.size - 1)])


def _log_fit(r, lg):
    """Least-squares fit ln|P| = c + ν ln r − κ r; returns (κ, ν)."""
    A = np.column_stack([np.ones_like(r), np.log(r), -r])
    coef, *_ = np.linalg.lstsq(A, lg * _LN10, rcond=None)
    return float(coef[2]), float(coef[1])


class _TailProblem:
    def __init__(self, result: SCFResult, r_lo: float, r_end: float, step: float):
        self.res = result
        grid = result.grid
        self.grid = grid
        self.ops = _operators(grid)
        rg = grid.points
        self.h = step
        n = int(np.floor((r_end - r_lo) / step)) + 1
        self.rm = r_lo + step * np.arange(n)
        self.rm_mp = [mp.mpf(float(x)) for x in self.rm]
        self.orbs = result.orbitals
        ru = CubicSpline(rg, rg * result.direct_potential)(self.rm)
        self.V = {}
        self.Vgrid = {}
        for o in self.orbs:
            cent = o.l * (o.l + 1) / (2.0 * self.rm ** 2)
            vloc = (ru - result.atom.Z) / self.rm + cent
            vg = result.hartree_potential + o.l * (o.l + 1) / (2.0 * rg ** 2)
            if result.scheme == "hartree-no-self-action":
                J = self.ops.screening(0, o.radial ** 2)
                vloc = vloc - CubicSpline(rg, rg * J)(self.rm) / self.rm
                vg = vg - J
            self.V[o.label] = vloc
            self.Vgrid[o.label] = vg
        # starting values come from the grid spline
        self.vals = {}
        for o in self.orbs:
            spl = CubicSpline(rg, o.radial)(self.rm)
            self.vals[o.label] = [mp.mpf(float(x)) for x in spl]
        self.start = {}

    def set_start(self, label, r_start):
        i = int(np.searchsorted(self.rm, r_start))
        self.start[label] = min(max(i, 0), self.rm.size - 3)

    # -- exchange source --------------------------------------------------------
    def source(self, a):
        """S_a on the mesh (list of mpf) and the local −c/r self term coefficient."""
        res = self.res
        rm = self.rm_mp
        n = len(rm)
        h = mp.mpf(self.h)
        weights = dict(zip([o.label for o in self.orbs], _same_spin_weights(self.orbs)))
        single = sum(o.occupancy for o in self.orbs) == 1
        S = [mp.mpf(0)] * n
        self_coef = 0.0
        w = self.grid.weights
        rg = self.grid.points
        Pa = self.vals[a.label]
        for b in self.orbs:
            terms = [(0, 1.0)] if single else exchange_multipoles(a.l, b.l)
            Pb = self.vals[b.label]
            f = [x * y for x, y in zip(Pa, Pb)]
            for k, c in terms:
                coef = weights[b.label] * c
                if coef == 0.0:
                    continue
                if b is a and k == 0:
                    Mk = 1.0
                elif b.l == a.l and k == 0:
                    Mk = 0.0
                else:
                    Mk = float(np.dot(w, rg ** k * a.radial * b.radial))
                # reverse cumulative ∫_r^end r'^k f and ∫_r^end r'^{-k-1} f
                T = [mp.mpf(0)] * n
                B = [mp.mpf(0)] * n
                gk = [fi * ri ** k for fi, ri in zip(f, rm)]
                hk = [fi / ri ** (k + 1) for fi, ri in zip(f, rm)]
                for i in range(n - 2, -1, -1):
                    T[i] = T[i + 1] + h * (gk[i] + gk[i + 1]) / 2
                    B[i] = B[i + 1] + h * (hk[i] + hk[i + 1]) / 2
                if b is a and k == 0:
                    # the r^-1 part of the self term is kept as a local potential
                    self_coef += coef
                    for i in range(n):
                        S[i] += coef * Pb[i] * (-T[i] / rm[i] + B[i])
                else:
                    for i in range(n):
                        S[i] += coef * Pb[i] * ((Mk - T[i]) / rm[i] ** (k + 1) + rm[i] ** k * B[i])
        return S, self_coef

    # -- Numerov boundary-value solve -------------------------------------------
    def solve(self, a, S, self_coef, kappa_out):
        i0 = self.start[a.label]
        n = len(self.rm)
        h2 = mp.mpf(self.h) ** 2
        fv = 2.0 * (self.V[a.label] - self_coef / self.rm - a.energy)
        f = [mp.mpf(float(x)) for x in fv]
        g = [-2 * s for s in S] if S is not None else [mp.mpf(0)] * n
        u = [1 - h2 * fi / 12 for fi in f]
        rho = mp.exp(-mp.mpf(kappa_out) * self.h)
        P = self.vals[a.label]
        # unknowns i0+1 .. n-1
        m = n - 1 - i0
        lo = [mp.mpf(0)] * m
        di = [mp.mpf(0)] * m
        up = [mp.mpf(0)] * m
        rhs = [mp.mpf(0)] * m
        for j in range(m):
            i = i0 + 1 + j
            lo[j] = u[i - 1]
            di[j] = -2 * (1 + 5 * h2 * f[i] / 12)
            if i + 1 < n:
                up[j] = u[i + 1]
                rhs[j] = h2 / 12 * (g[i - 1] + 10 * g[i] + g[i + 1])
            else:
                di[j] += u[i] * rho
                rhs[j] = h2 / 12 * (g[i - 1] + 10 * g[i] + rho * g[i])
        rhs[0] -= lo[0] * P[i0]
        # Thomas algorithm
        for j in range(1, m):
            ratio = lo[j] / di[j - 1]
            di[j] -= ratio * up[j - 1]
            rhs[j] -= ratio * rhs[j - 1]
        x = [mp.mpf(0)] * m
        x[-1] = rhs[-1] / di[-1]
        for j in range(m - 2, -1, -1):
            x[j] = (rhs[j] - up[j] * x[j + 1]) / di[j]
        new = P[: i0 + 1] + x
        change = max((abs(p - q) / (abs(p) + abs(q) + mp.mpf("1e-3000"))
                      for p, q in zip(new[i0 + 1:], P[i0 + 1:])), default=mp.mpf(0))
        self.vals[a.label] = new
        return float(change)


def refine_tail(result: SCFResult, shell, r_from: float | None = None, r_to: float | None = None,
                step: float = 0.05, sweeps: int = 8, tol: float = 1e-8,
                fit_window: tuple | None = None) -> TailSamples:
    """Re-integrate the tail of one occupied orbital.

    Parameters
    ----------
    result : SCFResult
        Converged SCF solution.
    shell : str or (n, l)
        Orbital to refine, e.g. ``"1s"``.
    r_from : float, optional
        Start of the returned tail.  Defaults to the first radius beyond the
        orbital peak where the eigenvector falls below 1e-6 of its maximum
        and the region is classically forbidden.
    r_to : float, optional
        End of the tail mesh (default: grid r_max).
    step : float
        Uniform mesh spacing of the tail integration.
    fit_window : (float, float), optional
        Radii used for the decay-constant fit; defaults to the second half of
        the tail with the last five decay lengths dropped.

    Raises
    ------
    DomainError
        If ``r_from`` lies outside the grid.
    """
    grid = result.grid
    label = shell if isinstance(shell, str) else f"{shell[0]}{'spdfghik'[shell[1]]}"
    target = result.orbital(label)
    if r_from is not None and not grid.r_min < r_from < grid.r_max:
        raise DomainError(f"r_from={r_from} outside grid ({grid.r_min}, {grid.r_max})")
    r_end = grid.r_max if r_to is None else float(r_to)
    if r_end > grid.r_max or (r_from is not None and r_end <= r_from):
        raise DomainError(f"invalid tail end r_to={r_end}")

    prev = mp.mp.prec
    mp.mp.prec = 64
    try:
        orbs = result.orbitals if result.scheme == "hf" else [target]
        starts = {}
        ops = _operators(grid)
        for o in orbs:
            vg = result.hartree_potential + o.l * (o.l + 1) / (2.0 * grid.points ** 2)
            if result.scheme == "hartree-no-self-action":
                vg = vg - ops.screening(0, o.radial ** 2)
            starts[o.label] = _auto_start(o.radial, grid.points, vg, o.energy)
        if r_from is None:
            r_from = starts[target.label]
        starts[target.label] = min(starts[target.label], r_from)
        r_lo = min(starts.values())
        prob = _TailProblem(result, r_lo, r_end, step)
        for o in orbs:
            prob.set_start(o.label, starts[o.label])
        kappa = {o.label: np.sqrt(-2.0 * o.energy) for o in orbs}
        if result.scheme == "hf":
            k_min = min(kappa.values())
            order = sorted(orbs, key=lambda o: -o.energy)
            for _ in range(max(1, sweeps)):
                worst = 0.0
                for o in order:
                    S, sc = prob.source(o)
                    worst = max(worst, prob.solve(o, S, sc, min(kappa[o.label], k_min)))
                if worst < tol:
                    break
        else:
            prob.solve(target, None, 0.0, kappa[target.label])
        vals = prob.vals[target.label]
    finally:
        mp.mp.prec = prev

    rm = prob.rm
    keep = rm >= r_from - 1e-12
    lg = np.array([float(mp.log10(abs(v))) if v != 0 else -np.inf for v in vals])
    sg = np.array([int(mp.sign(v)) for v in vals])
    rr, lg, sg = rm[keep], lg[keep], sg[keep]
    k_out = kappa[target.label] if result.scheme != "hf" else min(kappa.values())
    if fit_window is None:
        hi = rr[-1] - 5.0 / k_out
        lo = 0.5 * (rr[0] + hi)
        fit_window = (lo, hi)
    sel = (rr >= fit_window[0]) & (rr <= fit_window[1]) & np.isfinite(lg)
    kap, nu = _log_fit(rr[sel], lg[sel]) if sel.sum() >= 3 else (float("nan"), float("nan"))
    return TailSamples(target.label, result.scheme, target.energy, rr, lg, sg, kap, nu,
                       (float(fit_window[0]), float(fit_window[1])))
