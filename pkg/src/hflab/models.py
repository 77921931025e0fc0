"""Analytically solvable Hartree models with non-unique mean-field solutions.

Coulomb-like model
    A filled nl subshell (N = 4l+2 electrons) interacting through
    V(r1, r2) = α / (r1 r2) in a nucleus of charge Z.  Each half of the
    subshell moves in a pure Coulomb field of effective charge Z_p with
    ⟨1/r⟩ = Z_p / n², giving the linear system

        Z_p = Z − (α/n²) [2l Z_p + (2l+1) Z_q],   p ≠ q.

    Its determinant is (1 − α/n²)(1 + (4l+1)α/n²), so the symmetric
    (normal) solution is unique except at α = n², where the system
    collapses to (2l+1)(Z_1 + Z_2) = Z and a one-parameter (singular)
    family appears.

Oscillator model
    Effective frequencies obey ω_p² = ω² − β̃ ω_q²; at β̃ = 1 every pair
    with ω_1² + ω_2² = ω² is a solution.

RPA instability
    1 + αχ = 0 with χ summed over vacant hydrogenic states of the same l.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath as mp
import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, InstabilityError

INTERPRETATIONS = ("inverse-denominator", "as-printed")


# ---------------------------------------------------------------------------
# Coulomb-like model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoulombModelSolution:
    Z: float
    n: int
    l: int
    alpha: float
    Z_eff_1: float
    Z_eff_2: float
    kind: str

    @property
    def N(self) -> int:
        return 4 * self.l + 2

    @property
    def group_size(self) -> int:
        return 2 * self.l + 1

    @property
    def one_particle_energies(self) -> tuple:
        return (-self.Z_eff_1 ** 2 / (2.0 * self.n ** 2), -self.Z_eff_2 ** 2 / (2.0 * self.n ** 2))

    @property
    def mean_radii(self) -> tuple:
        """Hydrogenic ⟨r⟩ = [3n² − l(l+1)] / (2 Z_p) of each group."""
        c = 3.0 * self.n ** 2 - self.l * (self.l + 1)
        return (c / (2.0 * self.Z_eff_1), c / (2.0 * self.Z_eff_2))

    @property
    def E_total(self) -> float:
        return coulomb_total_energy(self)

    def to_dict(self) -> dict:
        return {"Z": self.Z, "n": self.n, "l": self.l, "alpha": self.alpha, "N": self.N,
                "Z_eff_1": self.Z_eff_1, "Z_eff_2": self.Z_eff_2, "kind": self.kind,
                "E_total": self.E_total}


def _check_coulomb(Z, n, l, alpha):
    if not Z > 0.0:
        raise DomainError("Z must be positive")
    if not (int(n) == n and int(l) == l and n > l >= 0):
        raise DomainError(f"need integers n > l >= 0, got n={n}, l={l}")
    if alpha < 0.0:
        raise DomainError("alpha must be non-negative")


def coulomb_determinant(n: int, l: int, alpha: float) -> float:
    """Determinant (1 − a)(1 + (4l+1)a), a = α/n², of the two-group system."""
    a = alpha / n ** 2
    return (1.0 - a) * (1.0 + (4 * l + 1) * a)


def coulomb_normal(Z: float, n: int, l: int, alpha: float) -> CoulombModelSolution:
    """Symmetric solution Z_eff = Z [1 + (α/n²)(4l+1)]⁻¹."""
    _check_coulomb(Z, n, l, alpha)
    z = Z / (1.0 + alpha / n ** 2 * (4 * l + 1))
    return CoulombModelSolution(float(Z), int(n), int(l), float(alpha), z, z, "normal")


def coulomb_singular_family(Z: float, n: int, l: int, Z_eff_1: float) -> CoulombModelSolution:
    """Member of the α = n² family with Z_eff_2 = Z/(2l+1) − Z_eff_1.

    Raises
    ------
    DomainError
        Unless 0 < Z_eff_1 < Z/(2l+1).
    """
    _check_coulomb(Z, n, l, n * n)
    total = Z / (2 * l + 1)
    if not 0.0 < Z_eff_1 < total:
        raise DomainError(f"Z_eff_1 must lie in (0, {total}), got {Z_eff_1}")
    z2 = total - Z_eff_1
    return CoulombModelSolution(float(Z), int(n), int(l), float(n * n), float(Z_eff_1), float(z2), "singular")


def coulomb_family(Z: float, n: int, l: int, count: int = 100) -> list:
    """``count`` evenly spaced interior members of the singular family."""
    total = Z / (2 * l + 1)
    return [coulomb_singular_family(Z, n, l, total * k / (count + 1)) for k in range(1, count + 1)]


def coulomb_total_energy(sol: CoulombModelSolution) -> float:
    """E = Σ_k E_k − ½ Σ_{i≠k} α ⟨1/r⟩_i ⟨1/r⟩_k with ⟨1/r⟩_p = Z_p / n²."""
    m = sol.group_size
    n2 = sol.n ** 2
    e1, e2 = sol.one_particle_energies
    u1, u2 = sol.Z_eff_1 / n2, sol.Z_eff_2 / n2
    # ordered pairs: within group (m² − m each) and across groups (2m²)
    pairs = (m * m - m) * (u1 * u1 + u2 * u2) + 2 * m * m * u1 * u2
    return m * (e1 + e2) - 0.5 * sol.alpha * pairs


def coulomb_closed_form_energy(Z: float, n: int, l: int, alpha: float) -> float:
    """−Z² N / (2n²) · [1 + (α/n²)(N − 1)]⁻¹ for the normal solution."""
    N = 4 * l + 2
    return -Z * Z * N / (2.0 * n * n) / (1.0 + alpha / n ** 2 * (N - 1))


def coulomb_residual(sol: CoulombModelSolution) -> float:
    """Largest relative residual of the two self-consistency equations."""
    a = sol.alpha / sol.n ** 2
    r1 = sol.Z_eff_1 - (sol.Z - a * (2 * sol.l * sol.Z_eff_1 + (2 * sol.l + 1) * sol.Z_eff_2))
    r2 = sol.Z_eff_2 - (sol.Z - a * (2 * sol.l * sol.Z_eff_2 + (2 * sol.l + 1) * sol.Z_eff_1))
    return max(abs(r1), abs(r2)) / sol.Z


def singular_couplings(n: int, l: int, alpha_max: float, samples: int = 2001) -> list:
    """Couplings in [0, alpha_max] where the two-group system is singular."""
    grid = np.linspace(0.0, alpha_max, samples)
    d = np.array([coulomb_determinant(n, l, a) for a in grid])
    out = []
    for i in range(samples - 1):
        if d[i] == 0.0:
            out.append(float(grid[i]))
        elif d[i] * d[i + 1] < 0.0:
            out.append(float(brentq(lambda a: coulomb_determinant(n, l, a), grid[i], grid[i + 1], xtol=1e-14)))
    return out


def coulomb_family_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["param", "Z1", "Z2", "E_total"])
    for sol in rows:
        w.writerow([repr(sol.Z_eff_1), repr(sol.Z_eff_1), repr(sol.Z_eff_2), repr(sol.E_total)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Oscillator model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OscillatorModelSolution:
    omega: float
    beta_tilde: float
    omega_eff_1: float
    omega_eff_2: float
    kind: str
    N_1: int = 1
    N_2: int = 1

    @property
    def N(self) -> int:
        return self.N_1 + self.N_2

    def constraint_residual(self) -> float:
        """|ω_1² + ω_2² − ω²| / ω² (zero on the β̃ = 1 family)."""
        return abs(self.omega_eff_1 ** 2 + self.omega_eff_2 ** 2 - self.omega ** 2) / self.omega ** 2

    def system_residual(self) -> float:
        b, w2 = self.beta_tilde, self.omega ** 2
        r1 = self.omega_eff_1 ** 2 - (w2 - b * self.omega_eff_2 ** 2)
        r2 = self.omega_eff_2 ** 2 - (w2 - b * self.omega_eff_1 ** 2)
        return max(abs(r1), abs(r2)) / w2

    def mean_square_radii(self, nu: float = 1.5) -> tuple:
        """⟨r²⟩ = ν / ω_p of an oscillator level with energy ν ω_p."""
        return (nu / self.omega_eff_1, nu / self.omega_eff_2)

    def one_particle_energies(self, nu: float = 1.5) -> tuple:
        return (nu * self.omega_eff_1, nu * self.omega_eff_2)

    def total_energy(self, nu: float = 1.5) -> float:
        """Σ_p N_p ν ω_p minus the double-counted mean-field energy.

        The mean field of group p is ½(ω_p² − ω²) r², so by the virial
        theorem half of N_p ⟨½(ω_p² − ω²) r²⟩ is subtracted per group.
        """
        out = 0.0
        for Np, wp in ((self.N_1, self.omega_eff_1), (self.N_2, self.omega_eff_2)):
            out += Np * (nu * wp - 0.25 * (wp * wp - self.omega ** 2) * nu / wp)
        return out


def oscillator_normal(omega: float, beta_tilde: float, N_1: int = 1, N_2: int = 1) -> OscillatorModelSolution:
    """ω_eff² = ω² (1 + β̃)⁻¹ for both groups.

    Raises
    ------
    DomainError
        ω ≤ 0.
    InstabilityError
        If 1 + β̃ ≤ 0 (no real positive effective frequency).
    """
    if not omega > 0.0:
        raise DomainError("omega must be positive")
    if 1.0 + beta_tilde <= 0.0:
        raise InstabilityError(f"beta_tilde={beta_tilde} gives a non-positive effective frequency squared")
    w = omega / math.sqrt(1.0 + beta_tilde)
    return OscillatorModelSolution(float(omega), float(beta_tilde), w, w, "normal", N_1, N_2)


def oscillator_family_member(omega: float, omega_eff_1: float, N_1: int = 1, N_2: int = 1) -> OscillatorModelSolution:
    """β̃ = 1 solution with ω_2 = sqrt(ω² − ω_1²), 0 < ω_1 < ω."""
    if not omega > 0.0:
        raise DomainError("omega must be positive")
    if not 0.0 < omega_eff_1 < omega:
        raise DomainError(f"omega_eff_1 must lie in (0, {omega}), got {omega_eff_1}")
    w2 = math.sqrt((omega - omega_eff_1) * (omega + omega_eff_1))
    return OscillatorModelSolution(float(omega), 1.0, float(omega_eff_1), w2, "singular", N_1, N_2)


def oscillator_solutions(omega: float, beta_tilde: float, count: int = 100, N_1: int = 1, N_2: int = 1) -> list:
    """Normal solution, plus ``count`` family members when β̃ = 1."""
    sols = [oscillator_normal(omega, beta_tilde, N_1, N_2)]
    if beta_tilde == 1.0:
        sols += [oscillator_family_member(omega, omega * k / (count + 1), N_1, N_2) for k in range(1, count + 1)]
    return sols


def oscillator_family_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["param", "w1", "w2"])
    for sol in rows:
        w.writerow([repr(sol.omega_eff_1), repr(sol.omega_eff_1), repr(sol.omega_eff_2)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Hydrogenic r^-1 matrix elements and the RPA instability criterion
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _hydrogenic_poly(n: int, l: int):
    """(N, a, coeffs): P_nl(r) = N Σ_k c_k r^k e^{−a r} for Z = 1, exact coefficients."""
    with mp.workdps(60):
        a = mp.mpf(1) / n
        m = n - l - 1
        alpha = 2 * l + 1
        # L_m^(α)(x) = Σ_j (−1)^j C(m+α, m−j) x^j / j!, x = 2r/n
        coeffs = {}
        for j in range(m + 1):
            c = (-1) ** j * mp.binomial(m + alpha, m - j) / mp.factorial(j) * (2 * a) ** (j + l + 1)
            coeffs[j + l + 1] = c
        # R = norm ρ^l e^{−ρ/2} L with ρ = 2r/n; P = r R = (norm / 2a) ρ^(l+1) e^{−ρ/2} L
        norm = mp.sqrt((2 * a) ** 3 * mp.factorial(m) / (2 * n * mp.factorial(n + l))) / (2 * a)
        return norm, a, coeffs


def inverse_r_element(n1: int, l1: int, n2: int, l2: int, Z: float = 1.0) -> float:
    """Radial integral ∫ P_{n1 l1} P_{n2 l2} r⁻¹ dr for hydrogenic charge Z (exact arithmetic)."""
    for n, l in ((n1, l1), (n2, l2)):
        if not (n > l >= 0):
            raise DomainError(f"invalid hydrogenic state n={n}, l={l}")
    with mp.workdps(60):
        N1, a1, c1 = _hydrogenic_poly(n1, l1)
        N2, a2, c2 = _hydrogenic_poly(n2, l2)
        a = a1 + a2
        s = mp.mpf(0)
        for k1, v1 in c1.items():
            for k2, v2 in c2.items():
                k = k1 + k2 - 1
                s += v1 * v2 * mp.factorial(k) / a ** (k + 1)
        return float(N1 * N2 * s * Z)


@dataclass
class InstabilityResult:
    alpha_critical: float | None
    chi_value: float
    basis_size: int
    interpretation: str
    n: int
    l: int
    Z: float
    drift: float | None = None
    alpha_complete: float | None = None
    history: list = field(default_factory=list)  # (basis_size, alpha_critical)

    @property
    def unstable(self) -> bool:
        return self.alpha_critical is not None

    @property
    def ratio_to_n2(self) -> float | None:
        return None if self.alpha_critical is None else self.alpha_critical / self.n ** 2

    def to_dict(self) -> dict:
        return {"alpha_critical": self.alpha_critical, "chi": self.chi_value, "basis_size": self.basis_size,
                "interpretation": self.interpretation, "n": self.n, "l": self.l, "Z": self.Z,
                "drift": self.drift, "alpha_complete": self.alpha_complete, "ratio_to_n2": self.ratio_to_n2,
                "history": [list(h) for h in self.history]}


def rpa_chi(Z_eff: float, n: int, l: int, basis_size: int, interpretation: str = "inverse-denominator") -> float:
    """χ summed over the vacant states n' = n+1 … n+basis_size of channel l.

    ``inverse-denominator``: Σ |⟨j|r⁻¹|i⟩|² / (E_i − E_j);
    ``as-printed``: Σ |⟨j|r⁻¹|i⟩|² (E_j − E_i).
    """
    if interpretation not in INTERPRETATIONS:
        raise DomainError(f"unknown interpretation {interpretation!r}; expected one of {INTERPRETATIONS}")
    Ei = -Z_eff ** 2 / (2.0 * n * n)
    chi = 0.0
    for nj in range(n + 1, n + basis_size + 1):
        m = inverse_r_element(nj, l, n, l, Z_eff)
        Ej = -Z_eff ** 2 / (2.0 * nj * nj)
        chi += m * m / (Ei - Ej) if interpretation == "inverse-denominator" else m * m * (Ej - Ei)
    return chi


def _critical_alpha(Z, n, l, basis_size, interpretation, alpha_max):
    def f(a):
        return 1.0 + a * rpa_chi(coulomb_normal(Z, n, l, a).Z_eff_1, n, l, basis_size, interpretation)

    grid = np.linspace(0.0, alpha_max, 65)
    vals = [f(a) for a in grid]
    for i in range(len(grid) - 1):
        if vals[i] * vals[i + 1] <= 0.0:
            return float(brentq(f, grid[i], grid[i + 1], xtol=1e-13, rtol=1e-13))
    return None


def rpa_instability(Z: float, n: int, l: int, basis_size: int = 29, interpretation: str = "inverse-denominator",
                    alpha_max: float | None = None) -> InstabilityResult:
    """Solve 1 + αχ(Z_eff(α)) = 0 with Z_eff from the normal solution.

    The vacant basis is the hydrogenic discrete states n' = n+1 … n+basis_size.
    ``drift`` is the relative change of α_critical between basis_size//2
    and basis_size.  ``alpha_complete`` is the value for the complete
    spectrum (continuum included), which follows from second-order
    perturbation theory in a 1/r perturbation: Σ_{j≠i} |⟨j|r⁻¹|i⟩|² /
    (E_i − E_j) = −1/(2n²), independent of Z.
    """
    _check_coulomb(Z, n, l, 0.0)
    if basis_size < 0:
        raise DomainError("basis_size must be non-negative")
    alpha_max = 10.0 * n * n if alpha_max is None else alpha_max
    z = coulomb_normal(Z, n, l, 0.0).Z_eff_1
    if basis_size == 0:
        return InstabilityResult(None, 0.0, 0, interpretation, n, l, Z)
    history = []
    sizes = sorted({max(1, basis_size // 4), max(1, basis_size // 2), basis_size})
    for b in sizes:
        history.append((b, _critical_alpha(Z, n, l, b, interpretation, alpha_max)))
    a_c = history[-1][1]
    drift = None
    prev = dict(history).get(max(1, basis_size // 2))
    if a_c is not None and prev is not None:
        drift = abs(a_c - prev) / a_c
    complete = 2.0 * n * n if interpretation == "inverse-denominator" else None
    chi = rpa_chi(z if a_c is None else coulomb_normal(Z, n, l, a_c).Z_eff_1, n, l, basis_size, interpretation)
    return InstabilityResult(a_c, chi, basis_size, interpretation, n, l, float(Z), drift, complete, history)
