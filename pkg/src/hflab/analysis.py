"""Node counting, exchange admixture coefficients and asymptotic tail models."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError, PrecisionError
from .grid import PlotTransform, RadialGrid, r_of_rho
from .scf.angular import threej_zero
from .scf.solver import Orbital, SCFResult
from .scf.tails import TailSamples, refine_tail

_LN10 = np.log(10.0)


# ---------------------------------------------------------------------------
# Nodes
# ---------------------------------------------------------------------------


@dataclass
class NodeReport:
    shell: str
    node_positions: list
    count: int
    amplitude_floor: float
    expected_local: int = 0

    @property
    def extra(self) -> int:
        """Nodes beyond the n − l − 1 of a local potential."""
        return self.count - self.expected_local

    def to_json(self) -> str:
        d = asdict(self)
        d["extra"] = self.extra
        return json.dumps(d)


def _crossings(r, s):
    idx = np.where(s[:-1] * s[1:] < 0)[0]
    return idx, [float(0.5 * (r[i] + r[i + 1])) for i in idx]


def count_nodes(orbital: Orbital, grid: RadialGrid, tail: TailSamples | None = None,
                amplitude_floor: float = 1e-30, noise_floor: float = 1e-12,
                r_cut: float | None = None) -> NodeReport:
    """Count sign changes of P(r).

    Grid samples are used up to the start of ``tail`` (or ``r_cut`` / the
    grid end); the refined log-sign representation is used beyond.  A sign
    change found in grid samples smaller than ``noise_floor`` times the
    peak is indistinguishable from round-off and raises
    :class:`PrecisionError`; pass a refined tail (or a smaller ``r_cut``).
    Crossings within 1e-3 of either end are ignored.
    """
    P = orbital.radial
    r = grid.points
    peak = float(np.max(np.abs(P)))
    r_stop = tail.r[0] if tail is not None else (r_cut if r_cut is not None else r[-1])
    stop = int(np.searchsorted(r, r_stop))
    if tail is not None:
        # accurate grid samples overlapping the first tail interval resolve a node at the junction
        end = int(np.searchsorted(r, tail.r[min(1, tail.r.size - 1)])) + 1
        while stop < min(end, r.size) and abs(P[stop]) >= noise_floor * peak:
            stop += 1
    rr, pp = r[:stop], P[:stop]
    s = np.sign(pp)
    nz = s != 0
    rr, pp, s = rr[nz], pp[nz], s[nz]
    idx, _ = _crossings(rr, s)
    nodes = []
    for i in idx:
        x = float(rr[i] - pp[i] * (rr[i + 1] - rr[i]) / (pp[i + 1] - pp[i]))
        if x - r[0] < 1e-3 or (tail is None and r_stop - x < 1e-3):
            continue
        local = max(abs(pp[max(i - 2, 0)]), abs(pp[min(i + 3, pp.size - 1)]))
        if local < noise_floor * peak:
            raise PrecisionError(
                f"sign change of {orbital.label} at r={x:.4g} lies in round-off noise; "
                "refine the tail with refine_tail() before counting nodes")
        nodes.append(x)
    if tail is not None:
        floor = np.log10(amplitude_floor * peak)
        # a crossing can still straddle the junction when the grid runs into noise
        if s.size and tail.sign[0] != 0 and s[-1] != tail.sign_at(rr[-1]) and rr[-1] < tail.r[0]:
            a, b = abs(pp[-1]), 10.0 ** tail.log10_abs[0]
            x = float(rr[-1] + (tail.r[0] - rr[-1]) * a / (a + b))
            if x - r[0] >= 1e-3:
                nodes.append(x)
        tidx, tpos = _crossings(tail.r, tail.sign)
        for i, x in zip(tidx, tpos):
            if tail.r[-1] - x < 1e-3 or (rr.size and tail.r[i + 1] <= rr[-1]):
                continue
            if max(tail.log10_abs[max(i - 1, 0)], tail.log10_abs[min(i + 2, tail.r.size - 1)]) >= floor:
                nodes.append(x)
    nodes.sort()
    return NodeReport(orbital.label, nodes, len(nodes), amplitude_floor, orbital.n - orbital.l - 1)


# ---------------------------------------------------------------------------
# Admixture coefficients and the tail model
# ---------------------------------------------------------------------------


@dataclass
class MixingCoefficient:
    value: float
    allowed: bool
    radial_integral: float = 0.0
    angular_factor: float = 0.0


def mixing_coefficient(inner: Orbital, outer: Orbital, grid: RadialGrid) -> MixingCoefficient:
    """Dipole admixture coefficient C = A · ∫ P_o r P_i dr.

    A = (2 l_o + 1)(l_i 1 l_o; 0 0 0)² is the k=1 exchange weight summed
    over the magnetic sub-states of one spin of the outer shell (1 for an
    s inner and p outer orbital).  With both orbitals positive near the
    origin, C is returned with its sign; pairs violating |l_i − l_o| = 1 or
    identical shells give ``allowed=False`` and C = 0.
    """
    if (inner.n, inner.l) == (outer.n, outer.l) or abs(inner.l - outer.l) != 1:
        return MixingCoefficient(0.0, False)
    R = float(np.dot(grid.weights, outer.radial * grid.points * inner.radial))
    A = (2 * outer.l + 1) * threej_zero(inner.l, 1, outer.l) ** 2
    return MixingCoefficient(A * R, True, R, A)


@dataclass
class TailModel:
    """φ_i(r) ≈ α^{3/2} e^{−αr} − N_o Σ β_n^{3/2} C_n (αr)^{−2} (β_n r)^{n−1} e^{−β_n r}."""

    alpha: float
    terms: list = field(default_factory=list)  # (beta, C, n)
    N_o: int = 1

    def __post_init__(self):
        for beta, _, _ in self.terms:
            if beta >= self.alpha:
                raise DomainError("outer decay constants must be smaller than the inner one")

    def _pieces(self, r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        logs = [1.5 * np.log(self.alpha) - self.alpha * r]
        signs = [np.ones_like(r)]
        for beta, C, n in self.terms:
            if C == 0.0:
                continue
            logs.append(np.log(self.N_o * abs(C)) + 1.5 * np.log(beta) - 2 * np.log(self.alpha * r)
                        + (n - 1) * np.log(beta * r) - beta * r)
            signs.append(-np.sign(C) * np.ones_like(r))
        return np.array(logs), np.array(signs)

    def log10_abs(self, r):
        """log10|φ_i(r)| evaluated without overflow or underflow."""
        L, S = self._pieces(r)
        m = L.max(axis=0)
        tot = np.sum(S * np.exp(L - m), axis=0)
        with np.errstate(divide="ignore"):
            out = (m + np.log(np.abs(tot))) / _LN10
        return out if np.ndim(r) else float(out[0])

    def sign(self, r):
        L, S = self._pieces(r)
        m = L.max(axis=0)
        out = np.sign(np.sum(S * np.exp(L - m), axis=0))
        return out if np.ndim(r) else float(out[0])

    def dominant_term_log10(self, r):
        """The exchange-only (single dominant term) limit in log10."""
        L, _ = self._pieces(r)
        out = (np.log(np.sum(np.exp(L[1:] - L[1:].max(axis=0)), axis=0)) + L[1:].max(axis=0)) / _LN10
        return out if np.ndim(r) else float(out[0])

    def slope(self, r, dr: float = 1e-4):
        """d ln|φ| / dr."""
        return (self.log10_abs(r + dr) - self.log10_abs(r - dr)) * _LN10 / (2 * dr)


def predict_tail(inner: Orbital, outers, grid: RadialGrid | None = None, N_o: int = 1,
                 coefficients=None) -> TailModel:
    """Build the asymptotic tail model of an inner orbital.

    Coefficients are computed with :func:`mixing_coefficient` unless given
    explicitly; forbidden pairs contribute nothing.
    """
    alpha = np.sqrt(2.0 * abs(inner.energy))
    terms = []
    for j, o in enumerate(outers):
        if o.energy <= inner.energy:
            continue
        if coefficients is not None:
            C = float(coefficients[j])
        else:
            if grid is None:
                raise ConfigurationError("grid required to compute mixing coefficients")
            C = mixing_coefficient(inner, o, grid).value
        terms.append((float(np.sqrt(2.0 * abs(o.energy))), C, o.n))
    return TailModel(float(alpha), terms, N_o)


# ---------------------------------------------------------------------------
# Enhancement of the exchange tail
# ---------------------------------------------------------------------------


@dataclass
class EnhancementReport:
    shell: str
    rho_eval: float
    r_from_rho: float
    log10_at_r_of_rho: float
    log10_at_r_equals_rho: float
    profile_r: np.ndarray = field(repr=False)
    profile_log10: np.ndarray = field(repr=False)
    last_node: float = float("nan")

    def readings(self) -> dict:
        return {"r(rho)": self.log10_at_r_of_rho, "r=rho": self.log10_at_r_equals_rho}

    def monotone_beyond_last_node(self, tol: float = 1e-9) -> bool:
        sel = self.profile_r > (self.last_node if np.isfinite(self.last_node) else -np.inf)
        d = np.diff(self.profile_log10[sel])
        return bool(np.all(d >= -tol))

    def to_dict(self) -> dict:
        return {
            "shell": self.shell, "rho_eval": self.rho_eval, "r_of_rho": self.r_from_rho,
            "log10_enhancement_r_of_rho": self.log10_at_r_of_rho,
            "log10_enhancement_r_equals_rho": self.log10_at_r_equals_rho,
            "last_node": self.last_node,
        }


def tail_enhancement(reference: SCFResult, exchange: SCFResult, shell: str, rho_eval: float = 4.0,
                     transform: PlotTransform = PlotTransform(), tails=None) -> EnhancementReport:
    """log10 |φ_exchange / φ_reference| for one shell.

    Both readings of the evaluation point are reported: r = r(ρ) from the
    plotting transform and r = ρ taken literally as a radius.  ``tails`` may
    pass precomputed (reference, exchange) :class:`TailSamples`.
    """
    if reference.atom.Z != exchange.atom.Z:
        raise ConfigurationError("both results must describe the same atom")
    r_rho = float(r_of_rho(rho_eval, transform))
    r_lit = float(rho_eval)
    r0 = max(min(r_rho, r_lit) - 0.1, reference.grid.r_min * 2)
    if reference is exchange:
        zero = np.zeros(2)
        return EnhancementReport(shell, rho_eval, r_rho, 0.0, 0.0, np.array([r_rho, r_lit]), zero)
    if tails is None:
        ta = refine_tail(reference, shell, r_from=r0)
        tb = refine_tail(exchange, shell, r_from=r0)
    else:
        ta, tb = tails
    lo = max(ta.r[0], tb.r[0])
    hi = min(ta.r[-1], tb.r[-1]) - 5.0
    prof_r = np.linspace(lo, hi, 400)
    prof = np.interp(prof_r, tb.r, tb.log10_abs) - np.interp(prof_r, ta.r, ta.log10_abs)
    nodes = count_nodes(exchange.orbital(shell), exchange.grid, tb)
    last = nodes.node_positions[-1] if nodes.node_positions else float("nan")
    return EnhancementReport(
        shell, rho_eval, r_rho,
        tb.log10_at(r_rho) - ta.log10_at(r_rho),
        tb.log10_at(r_lit) - ta.log10_at(r_lit),
        prof_r, prof, last,
    )
