"""Static-exchange continuum orbitals, phase shifts and the Levinson check.

The continuum electron obeys

    −½P'' + [l(l+1)/2r² + V(r) − E] P = (K_l P)(r) + Σ_b λ_b P_b(r)

with V the frozen-core direct potential, K_l the exchange kernel of the
core and λ_b multipliers keeping P orthogonal to core orbitals of the same
l.  The exchange integral ∫_r^∞ is split as β_bk − ∫_0^r with unknown
constants β_bk = ∫_0^∞ r^{−k−1} P_b P dr, which makes outward integration
causal; the constants and multipliers follow from a small linear system
over superposed particular solutions.  All energies of a mesh are
integrated simultaneously.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.interpolate import CubicSpline
from scipy.special import lambertw, spherical_jn, spherical_yn

from .errors import ConfigurationError, DomainError, ExtendGridError, MeshRefinementError
from .grid import RadialGrid, build_grid
from .scf.angular import exchange_multipoles
from .scf.operators import RadialOperators
from .scf.solver import SCFResult, _operators, _same_spin_weights, build_exchange_kernel


# ---------------------------------------------------------------------------
# Channel description
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class ScatteringChannel:
    """A partial wave in a local potential plus optional frozen-core exchange.

    ``potential`` is a callable V(r).  ``core`` lists (P_b callable, l_b,
    same-spin weight) for exchange; ``orthogonal_to`` lists callables of
    same-l orbitals the solution must be orthogonal to.
    """

    l: int
    potential: object
    Z: float = 0.0
    core: list = field(default_factory=list)
    orthogonal_to: list = field(default_factory=list)
    label: str = "local"
    source: object = None  # SCFResult when built from a core
    discontinuity: float | None = None

    @property
    def exchange_terms(self) -> list:
        out = []
        for P, lb, s in self.core:
            for k, c in exchange_multipoles(self.l, lb):
                out.append((P, k, s * c))
        return out


def free_channel(l: int) -> ScatteringChannel:
    return ScatteringChannel(l, lambda r: np.zeros_like(r), label="free")


def square_well_channel(l: int, depth: float, radius: float) -> ScatteringChannel:
    """V = −depth for r < radius, 0 outside (value at r = radius is the mean)."""
    def V(r):
        r = np.asarray(r, dtype=float)
        out = np.where(r < radius, -depth, 0.0)
        return np.where(np.isclose(r, radius, rtol=0, atol=1e-12), -0.5 * depth, out)
    return ScatteringChannel(l, V, label="square-well", discontinuity=radius)


def _log_spline(grid: RadialGrid, f):
    s = CubicSpline(np.log(grid.points), f)
    lo, hi = grid.points[0], grid.points[-1]

    def ev(r):
        r = np.asarray(r, dtype=float)
        out = s(np.log(np.clip(r, lo, hi)))
        return np.where(r > hi, 0.0, out)
    return ev


def core_channel(core: SCFResult, l: int, exchange: bool | None = None) -> ScatteringChannel:
    """Frozen-core channel from a converged SCF result.

    Exchange (and orthogonality to same-l core orbitals) is included for
    ``hf`` results unless ``exchange`` says otherwise.
    """
    if core.atom.electron_count != core.atom.Z:
        raise ConfigurationError("scattering requires a neutral core")
    exchange = (core.scheme == "hf") if exchange is None else exchange
    grid = core.grid
    ops = _operators(grid)
    rho = sum(o.occupancy * o.radial ** 2 for o in core.orbitals)
    Z = core.atom.Z
    ru = _log_spline(grid, grid.points * ops.screening(0, rho))
    rmax = grid.points[-1]

    def V(r):
        r = np.asarray(r, dtype=float)
        return np.where(r > rmax, 0.0, (ru(r) - Z) / r)

    terms, ortho = [], []
    if exchange:
        weights = _same_spin_weights(core.orbitals)
        for o, s in zip(core.orbitals, weights):
            P = _log_spline(grid, o.radial)
            terms.append((P, o.l, s))
            if o.l == l:
                ortho.append(P)
    label = f"{core.atom.name or core.atom.Z}:{core.scheme}{'' if exchange else ':direct'}"
    return ScatteringChannel(l, V, Z=Z, core=terms, orthogonal_to=ortho, label=label, source=core)


# ---------------------------------------------------------------------------
# Integration grid and outward Numerov
# ---------------------------------------------------------------------------


def scattering_grid(r_match: float, step: float = 0.01, r_min: float = 1e-6,
                    anchor: float | None = None) -> RadialGrid:
    """Hybrid log-linear integration grid ending at ``r_match``.

    With ``anchor`` the step is adjusted so that this radius is a grid node
    (used for potentials with a jump).
    """
    t0 = np.log(r_min) + r_min
    t1 = np.log(r_match) + r_match
    n = int(np.ceil((t1 - t0) / step)) + 1
    if anchor is not None:
        if not r_min < anchor < r_match:
            raise DomainError("anchor must lie inside the grid")
        ta = np.log(anchor) + anchor
        m = max(1, int(round((ta - t0) / step)))
        h = (ta - t0) / m
        n = int(round((t1 - t0) / h)) + 1
        t1 = t0 + (n - 1) * h
        r_match = float(np.real(lambertw(np.exp(t1))))
    return build_grid(r_min, r_match, max(n, 100), mapping="hybrid-log-linear", linear_scale=1.0)


@dataclass(eq=False)
class _Solutions:
    grid: RadialGrid
    energies: np.ndarray
    P: np.ndarray  # (nE, N) combined solutions
    coefficients: np.ndarray


def _integrate(channel: ScatteringChannel, grid: RadialGrid, energies) -> _Solutions:
    """Outward Numerov for all energies at once, then fix the exchange constants."""
    l = channel.l
    r = grid.points
    rt = grid.dr_dt
    h = grid.step
    N = r.size
    E = np.atleast_1d(np.asarray(energies, dtype=float))
    nE = E.size
    V = np.asarray(channel.potential(r), dtype=float)
    F = (2.0 * (grid.liouville_term + rt ** 2 * (l * (l + 1) / (2.0 * r ** 2) + V)))[None, :] \
        - 2.0 * rt[None, :] ** 2 * E[:, None]
    # Numerov with the local coefficient fitted to the exact dispersion of a
    # constant F (removes the cumulative phase error of the far linear region)
    f = h * h * F
    c = np.where(f < 0.0, np.cos(np.sqrt(np.abs(f))), np.cosh(np.sqrt(np.abs(f))))
    f = 12.0 * (c - 1.0) / (5.0 + c)
    hh = h * h / 12.0
    u = 1.0 - f / 12.0
    w = 1.0 + 5.0 * f / 12.0

    terms = channel.exchange_terms
    ortho = channel.orthogonal_to
    npair, nlam = len(terms), len(ortho)
    J = 1 + npair + nlam
    Pb = np.array([P(r) for P, _, _ in terms]).reshape(npair, N)
    ks = np.array([k for _, k, _ in terms], dtype=float).reshape(npair, 1)
    cs = np.array([c for _, _, c in terms], dtype=float).reshape(npair, 1)
    Po = np.array([P(r) for P in ortho]).reshape(nlam, N)
    rk = r[None, :] ** ks
    rk1 = r[None, :] ** (-ks - 1.0)
    a_fac = cs * Pb * rk1          # multiplies ∫_0^r r'^k P_b P
    b_fac = cs * Pb * rk           # multiplies ∫_0^r r'^{-k-1} P_b P and the constants
    wA = rk * Pb * rt ** 1.5       # t-integrands per unit y
    wB = rk1 * Pb * rt ** 1.5
    s32 = rt ** 1.5

    fixed = np.zeros((J, N))
    fixed[1:1 + npair] = b_fac
    fixed[1 + npair:] = Po

    y = np.zeros((nE, J, N))
    y[:, 0, 0] = r[0] ** (l + 0.5)
    y[:, 0, 1] = r[1] ** (l + 0.5)

    def g_at(i, A, B):
        S = fixed[None, :, i]
        if npair:
            S = S + A @ a_fac[:, i] - B @ b_fac[:, i]
        return -2.0 * s32[i] * S

    # running integrals exclude the current point (its contributions cancel)
    A = np.zeros((nE, J, npair))
    B = np.zeros((nE, J, npair))
    g_prev = g_at(0, A, B)
    A += 0.5 * h * y[:, :, 0, None] * wA[:, 0]
    B += 0.5 * h * y[:, :, 0, None] * wB[:, 0]
    g_cur = g_at(1, A, B)
    for i in range(1, N - 1):
        A += h * y[:, :, i, None] * wA[:, i]
        B += h * y[:, :, i, None] * wB[:, i]
        g_next = g_at(i + 1, A, B)
        y[:, :, i + 1] = (2.0 * w[:, None, i] * y[:, :, i] - u[:, None, i - 1] * y[:, :, i - 1]
                          + hh * (g_next + 10.0 * g_cur + g_prev)) / u[:, None, i + 1]
        g_prev, g_cur = g_cur, g_next
    A += 0.5 * h * y[:, :, N - 1, None] * wA[:, N - 1]
    B += 0.5 * h * y[:, :, N - 1, None] * wB[:, N - 1]

    P = y * np.sqrt(rt)
    x = np.zeros((nE, J))
    x[:, 0] = 1.0
    if J > 1:
        M = np.zeros((nE, J - 1, J - 1))
        rhs = np.zeros((nE, J - 1))
        for p in range(npair):
            M[:, p, :] = -B[:, 1:, p]
            M[:, p, p] += 1.0
            rhs[:, p] = B[:, 0, p]
        for o in range(nlam):
            ov = np.einsum("ejn,n->ej", P, grid.weights * Po[o])
            M[:, npair + o, :] = ov[:, 1:]
            rhs[:, npair + o] = -ov[:, 0]
        x[:, 1:] = np.linalg.solve(M, rhs[..., None])[..., 0]
    Ptot = np.einsum("ej,ejn->en", x, P)
    return _Solutions(grid, E, Ptot, x)


# ---------------------------------------------------------------------------
# Matching
# ---------------------------------------------------------------------------


def riccati(l: int, x):
    """Riccati–Bessel ĵ_l(x) = x j_l(x) and n̂_l(x) = x y_l(x)."""
    x = np.asarray(x, dtype=float)
    return x * spherical_jn(l, x), x * spherical_yn(l, x)


def _count_sign_changes(f):
    s = np.sign(f[f != 0.0])
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _prufer(P, dP, k):
    return np.mod(np.arctan2(P, dP / k), np.pi)


@dataclass
class _Match:
    delta_mod: float
    delta_abs: float
    amplitude: float
    drift: float
    residual: float


def _match(l: int, k: float, grid: RadialGrid, P: np.ndarray, window: float) -> _Match:
    r = grid.points
    R = r[-1]
    sel = r >= R - window
    jh, nh = riccati(l, k * r[sel])
    # P ≈ a ĵ + b n̂ ; sin(kr − lπ/2 + δ) = ĵ cos δ − n̂ sin δ
    X = np.column_stack([jh, nh])
    (a, b), *_ = np.linalg.lstsq(X, P[sel], rcond=None)
    fit = X @ np.array([a, b])
    resid = float(np.linalg.norm(P[sel] - fit) / np.linalg.norm(P[sel]))
    half = np.where(sel)[0]
    mid = half[half.size // 2]
    drifts = []
    for part in (slice(half[0], mid), slice(mid, half[-1] + 1)):
        jh2, nh2 = riccati(l, k * r[part])
        (a2, b2), *_ = np.linalg.lstsq(np.column_stack([jh2, nh2]), P[part], rcond=None)
        drifts.append(np.hypot(a2 - a, b2 - b) / np.hypot(a, b))
    delta_mod = float(np.arctan2(-b, a))
    delta_mod = (delta_mod + np.pi / 2) % np.pi - np.pi / 2
    # absolute branch from node counting (Prüfer phase) against the free wave
    jf, nf = riccati(l, k * r)
    dP = np.gradient(P, grid.t) / grid.dr_dt
    djf = np.gradient(jf, grid.t) / grid.dr_dt
    theta = _count_sign_changes(P[r > 2 * r[0]]) * np.pi + _prufer(P[-1], dP[-1], k)
    theta0 = _count_sign_changes(jf[r > 2 * r[0]]) * np.pi + _prufer(jf[-1], djf[-1], k)
    rough = theta - theta0
    delta_abs = delta_mod + np.pi * round((rough - delta_mod) / np.pi)
    return _Match(delta_mod, float(delta_abs), float(np.hypot(a, b)), float(max(drifts)), resid)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class ContinuumOrbital:
    l: int
    energy: float
    delta: float
    r: np.ndarray = field(repr=False)
    radial: np.ndarray = field(repr=False)
    wronskian_drift: float = 0.0
    match_residual: float = 0.0
    orthogonality: float = 0.0


def _check_energy(E, grid, l, min_kr):
    if not np.all(np.asarray(E) > 0.0):
        raise DomainError("continuum energies must be positive")
    kmin = np.sqrt(2.0 * np.min(E))
    if kmin * grid.points[-1] < min_kr:
        raise ExtendGridError(
            f"k·r_match = {kmin * grid.points[-1]:.3g} < {min_kr}: energy {np.min(E):.3g} too small "
            "for matching on this grid; extend r_match")


def _grid_for(channel: ScatteringChannel, r_match: float, step: float) -> RadialGrid:
    return scattering_grid(r_match, step, anchor=channel.discontinuity)


def continuum_orbital(channel, E: float, l: int | None = None, r_match: float = 30.0,
                      step: float = 0.01, min_kr: float = 0.1, window: float | None = None) -> ContinuumOrbital:
    """Regular continuum solution normalized to sin(kr − lπ/2 + δ) at large r.

    ``channel`` is a :class:`ScatteringChannel` or a converged
    :class:`SCFResult` (then ``l`` is required and the frozen-core static
    exchange channel is built).
    """
    ch = _as_channel(channel, l)
    grid = _grid_for(ch, r_match, step)
    _check_energy([E], grid, ch.l, min_kr)
    sol = _integrate(ch, grid, [E])
    k = np.sqrt(2.0 * E)
    win = window if window is not None else 0.2 * grid.points[-1]
    m = _match(ch.l, k, grid, sol.P[0], win)
    P = sol.P[0] / m.amplitude
    jh, nh = riccati(ch.l, k * grid.points[-1:])
    if np.dot([np.cos(m.delta_mod), -np.sin(m.delta_mod)], [jh[0], nh[0]]) * P[-1] < 0:
        P = -P
    ov = max((abs(np.dot(grid.weights, P * Po(grid.points))) for Po in ch.orthogonal_to), default=0.0)
    return ContinuumOrbital(ch.l, float(E), m.delta_abs, grid.points, P, m.drift, m.residual, float(ov))


def _as_channel(channel, l):
    if isinstance(channel, ScatteringChannel):
        return channel
    if isinstance(channel, SCFResult):
        if l is None:
            raise ConfigurationError("partial wave l required")
        return core_channel(channel, l)
    raise ConfigurationError("expected a ScatteringChannel or SCFResult")


def default_energy_mesh(e_min: float = 1e-4, e_max: float = 50.0, per_decade: int = 16) -> np.ndarray:
    n = int(round(np.log10(e_max / e_min) * per_decade)) + 1
    return np.geomspace(e_min, e_max, n)


@dataclass(eq=False)
class PhaseShiftCurve:
    l: int
    energies: np.ndarray
    deltas: np.ndarray
    label: str = ""
    normalization: str = "delta(E->inf)=0 via node counting at E_max"
    drift: np.ndarray = field(default=None, repr=False)

    def max_jump(self) -> float:
        return float(np.max(np.abs(np.diff(self.deltas)))) if self.deltas.size > 1 else 0.0

    def extrapolate_zero(self, e_lo: float = 1e-4, e_hi: float = 1e-2, degree: int = 3) -> float:
        """δ(0) from a polynomial fit in k over E in [e_lo, e_hi]."""
        sel = (self.energies >= e_lo * (1 - 1e-9)) & (self.energies <= e_hi * (1 + 1e-9))
        if sel.sum() < degree + 2:
            raise MeshRefinementError("too few mesh points in the zero-energy fit window")
        k = np.sqrt(2.0 * self.energies[sel])
        coef = np.polynomial.polynomial.polyfit(k, self.deltas[sel], degree)
        return float(coef[0])

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["E", "delta"])
        for e, d in zip(self.energies, self.deltas):
            wr.writerow([repr(float(e)), repr(float(d))])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"l": self.l, "label": self.label, "normalization": self.normalization,
                "E": self.energies.tolist(), "delta": self.deltas.tolist()}


def phase_curve(channel, l: int | None = None, energy_mesh=None, r_match: float = 30.0,
                step: float = 0.01, min_kr: float = 0.1, max_jump: float = 1.0,
                chunk: int = 64) -> PhaseShiftCurve:
    """Continuous phase shifts over an ascending energy mesh.

    The absolute branch is fixed at the highest energy by node counting
    against the free wave and carried down the mesh by continuity.

    Raises
    ------
    MeshRefinementError
        If two neighbouring mesh points differ by more than ``max_jump``.
    ExtendGridError
        If the lowest energy cannot be matched on the grid.
    """
    ch = _as_channel(channel, l)
    E = default_energy_mesh() if energy_mesh is None else np.asarray(energy_mesh, dtype=float)
    if E.ndim != 1 or E.size < 2 or np.any(np.diff(E) <= 0):
        raise ConfigurationError("energy mesh must be strictly ascending with at least two points")
    grid = _grid_for(ch, r_match, step)
    _check_energy(E, grid, ch.l, min_kr)
    win = 0.2 * grid.points[-1]
    mods, absd, drift = [], [], []
    for s in range(0, E.size, chunk):
        sol = _integrate(ch, grid, E[s:s + chunk])
        for e, P in zip(sol.energies, sol.P):
            m = _match(ch.l, np.sqrt(2.0 * e), grid, P, win)
            mods.append(m.delta_mod)
            absd.append(m.delta_abs)
            drift.append(m.drift)
    mods = np.array(mods)
    deltas = np.empty_like(mods)
    deltas[-1] = absd[-1]
    for i in range(E.size - 2, -1, -1):
        deltas[i] = mods[i] + np.pi * round((deltas[i + 1] - mods[i]) / np.pi)
        if abs(deltas[i] - deltas[i + 1]) > max_jump:
            raise MeshRefinementError(
                f"phase jump {deltas[i] - deltas[i + 1]:.3f} rad between E={E[i]:.4g} and "
                f"E={E[i + 1]:.4g}; refine the energy mesh")
    return PhaseShiftCurve(ch.l, E, deltas, ch.label, drift=np.array(drift))


def born_phase(channel: ScatteringChannel, E: float, r_match: float = 30.0, step: float = 0.01) -> float:
    """First-order Born phase of the local potential, −2/k ∫ V ĵ_l² dr."""
    grid = _grid_for(channel, r_match, step)
    k = np.sqrt(2.0 * E)
    jh, _ = riccati(channel.l, k * grid.points)
    return float(-2.0 / k * np.dot(grid.weights, channel.potential(grid.points) * jh ** 2))


# ---------------------------------------------------------------------------
# Levinson
# ---------------------------------------------------------------------------


@dataclass
class LevinsonReport:
    l: int
    delta_zero: float
    n_l: int
    n_l_occupied: int
    nearest_integer: int
    deviation: float
    expected: int
    conclusive: bool
    negative_eigenvalues: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def _inertia_negative(A: np.ndarray) -> int:
    _, D, _ = sla.ldl(A)
    return int(np.count_nonzero(np.linalg.eigvalsh(D) < 0.0))


def count_bound_states(channel: ScatteringChannel, grid: RadialGrid | None = None) -> int:
    """Negative eigenvalues of the same channel operator (Sylvester inertia)."""
    src = channel.source
    if src is not None:
        grid = src.grid
        ops = _operators(grid)
        V = channel.potential(grid.points)
        K = None
        if channel.core:
            K = build_exchange_kernel(src.orbitals, grid, [channel.l])[channel.l]
        op = ops.channel(channel.l, V, K)
    else:
        grid = grid or build_grid(1e-6, 80.0, 3000)
        op = RadialOperators(grid).channel(channel.l, channel.potential(grid.points))
    return _inertia_negative(op.dense())


def levinson_check(curve: PhaseShiftCurve, channel, tolerance: float = 0.05,
                   e_window=(1e-4, 1e-2)) -> LevinsonReport:
    """Compare δ_l(0)/π with n_l plus the number of occupied same-l core shells."""
    ch = _as_channel(channel, curve.l)
    d0 = curve.extrapolate_zero(*e_window) / np.pi
    neg = count_bound_states(ch)
    occ = len(ch.orthogonal_to) if ch.core else 0
    n_l = neg - occ
    nearest = int(round(d0))
    dev = abs(d0 - nearest)
    expected = n_l + occ
    return LevinsonReport(curve.l, float(d0), n_l, occ, nearest, float(dev), expected,
                          bool(dev < tolerance and nearest == expected), neg)
