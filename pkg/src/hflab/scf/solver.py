"""Self-consistent field iteration for closed-shell atoms.

Three schemes are supported:

``hartree``
    every electron moves in the full Hartree potential of all electrons,
    including its own charge cloud;
``hartree-no-self-action``
    each shell sees the Hartree potential minus one electron of its own
    density (a different local operator per shell);
``hf``
    one Fock operator per l-channel, with the non-local exchange kernel
    assembled from Slater screening functions of the occupied orbitals.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, ConvergenceError, DomainError, SpectrumError
from ..grid import RadialGrid
from ..hydrogenic import radial_P, slater_effective_charges
from .angular import exchange_multipoles
from .atoms import L_LETTERS, AtomSpec
from .operators import RadialOperators

log = logging.getLogger(__name__)

SCHEMES = ("hartree", "hartree-no-self-action", "hf")


@dataclass(eq=False)
class Orbital:
    n: int
    l: int
    occupancy: int
    energy: float
    radial: np.ndarray = field(repr=False)

    @property
    def label(self) -> str:
        return f"{self.n}{L_LETTERS[self.l]}"


@dataclass
class SCFOptions:
    mixing: float = 0.3
    energy_tol: float = 1e-8
    eigen_tol: float = 1e-7
    max_iterations: int = 300

    def __post_init__(self):
        if not 0.0 < self.mixing <= 1.0:
            raise ConfigurationError("mixing must lie in (0, 1]")
        if self.max_iterations < 1:
            raise ConfigurationError("max_iterations must be positive")


@dataclass(eq=False)
class SCFResult:
    scheme: str
    atom: AtomSpec
    grid: RadialGrid
    orbitals: list
    hartree_potential: np.ndarray = field(repr=False)
    total_energy: float
    iterations: int
    converged: bool
    energy_trace: list = field(repr=False)
    kinetic_energy: float = 0.0
    direct_potential: np.ndarray = field(default=None, repr=False)

    @property
    def potential_energy(self) -> float:
        return self.total_energy - self.kinetic_energy

    @property
    def virial_ratio(self) -> float:
        """|2T + V| / |V|."""
        V = self.potential_energy
        return abs(2.0 * self.kinetic_energy + V) / abs(V)

    def orbital(self, label: str) -> Orbital:
        for o in self.orbitals:
            if o.label == label:
                return o
        raise DomainError(f"no occupied orbital {label}")

    def operators(self) -> RadialOperators:
        return _operators(self.grid)


_OPS_CACHE: dict = {}


def _operators(grid: RadialGrid) -> RadialOperators:
    # multipole matrices are expensive; reuse them for the same grid object
    key = id(grid)
    entry = _OPS_CACHE.get(key)
    if entry is None or entry.grid is not grid:
        _OPS_CACHE.clear()
        entry = RadialOperators(grid)
        _OPS_CACHE[key] = entry
    return entry


# ---------------------------------------------------------------------------
# Potentials and exchange
# ---------------------------------------------------------------------------


def _shell_key(exclude):
    if exclude is None:
        return None
    if isinstance(exclude, str):
        lbl = exclude.strip().lower()
        return int(lbl[:-1]), L_LETTERS.index(lbl[-1])
    if isinstance(exclude, Orbital):
        return exclude.n, exclude.l
    return tuple(exclude)


def hartree_potential(orbitals, grid: RadialGrid, exclude=None, Z: float | None = None) -> np.ndarray:
    """Nuclear plus Hartree potential U_H(r) = −Z/r + ∫ρ(r')/r_> dr'.

    ``Z`` defaults to the electron count (neutral atom).  With ``exclude``
    (a shell label such as ``"1s"``, an (n, l) pair or an :class:`Orbital`)
    one electron of that shell is removed from the density.
    """
    ops = _operators(grid)
    rho = sum(o.occupancy * o.radial ** 2 for o in orbitals)
    key = _shell_key(exclude)
    if key is not None:
        own = [o for o in orbitals if (o.n, o.l) == key]
        if not own:
            raise DomainError(f"excluded shell {exclude} is not in the orbital set")
        rho = rho - own[0].radial ** 2
    if Z is None:
        Z = sum(o.occupancy for o in orbitals)
    return -Z / grid.points + ops.screening(0, rho)


@dataclass(eq=False)
class ExchangeKernel:
    """Per-channel exchange kernels K_l(r, r'), dense and symmetric."""

    grid: RadialGrid
    channels: dict = field(repr=False)

    def __getitem__(self, l: int) -> np.ndarray:
        if l not in self.channels:
            raise DomainError(f"exchange kernel has no l={l} channel")
        return self.channels[l]

    def scaled(self, lam: float) -> "ExchangeKernel":
        return ExchangeKernel(self.grid, {l: lam * K for l, K in self.channels.items()})


def _same_spin_weights(orbitals):
    single = sum(o.occupancy for o in orbitals) == 1
    return [1.0 if single else o.occupancy / 2.0 for o in orbitals]


def build_exchange_kernel(orbitals, grid: RadialGrid, channels=None) -> ExchangeKernel:
    """Assemble K_l = Σ_b s_b Σ_k (l k l_b; 000)² P_b(r) P_b(r') r_<^k / r_>^(k+1)."""
    ops = _operators(grid)
    channels = sorted({o.l for o in orbitals}) if channels is None else list(channels)
    weights = _same_spin_weights(orbitals)
    single = sum(o.occupancy for o in orbitals) == 1
    out = {}
    for l in channels:
        by_k: dict = {}
        for o, s in zip(orbitals, weights):
            terms = [(0, 1.0)] if single else exchange_multipoles(l, o.l)
            for k, c in terms:
                by_k.setdefault(k, []).append((s * c, o.radial))
        K = np.zeros((grid.point_count, grid.point_count))
        for k, items in by_k.items():
            coef = np.array([c for c, _ in items])
            P = np.array([p for _, p in items])
            K += ((P.T * coef) @ P) * ops.multipole(k)
        out[l] = K
    return ExchangeKernel(grid, out)


def apply_exchange(kernel: ExchangeKernel, target, l: int | None = None) -> np.ndarray:
    """∫ K_l(r, r') P(r') dr' for an :class:`Orbital` or raw samples with ``l``."""
    if isinstance(target, Orbital):
        l, P = target.l, target.radial
    else:
        if l is None:
            raise DomainError("angular momentum required for raw samples")
        P = np.asarray(target, dtype=float)
    return kernel[l] @ (kernel.grid.weights * P)


# ---------------------------------------------------------------------------
# Energy functional
# ---------------------------------------------------------------------------


def _energy_terms(orbitals, grid, Z, scheme):
    """Return (total energy, kinetic energy, orbital energies) for a set."""
    ops = _operators(grid)
    r = grid.points
    w = grid.weights
    q = np.array([o.occupancy for o in orbitals], dtype=float)
    kin = np.array([ops.channel(o.l, 0.0 * r).expectation(o.radial) for o in orbitals])
    nuc = np.array([-Z * np.dot(w, o.radial ** 2 / r) for o in orbitals])
    dens = np.array([o.radial ** 2 for o in orbitals])
    Y0 = ops.multipole(0) @ (w * dens).T  # columns: potentials of each shell
    F0 = dens @ (w[:, None] * Y0)
    one = kin + nuc
    E = float(q @ one + 0.5 * q @ F0 @ q)
    eps = one + F0 @ q
    if scheme == "hartree-no-self-action":
        E -= 0.5 * float(q @ np.diag(F0))
        eps = eps - np.diag(F0)
    elif scheme == "hf":
        s = np.array(_same_spin_weights(orbitals))
        single = q.sum() == 1
        G = np.zeros_like(F0)
        for a, oa in enumerate(orbitals):
            for b, ob in enumerate(orbitals):
                pair = oa.radial * ob.radial
                terms = [(0, 1.0)] if single else exchange_multipoles(oa.l, ob.l)
                G[a, b] = sum(c * np.dot(w * pair, ops.screening(k, pair)) for k, c in terms)
        E -= 0.5 * float(q @ G @ s)
        eps = eps - G @ s
    return E, float(q @ kin), eps


def total_energy(result: SCFResult) -> float:
    """Recompute the scheme's energy functional from the stored orbitals."""
    E, _, _ = _energy_terms(result.orbitals, result.grid, result.atom.Z, result.scheme)
    return E


# ---------------------------------------------------------------------------
# Iteration
# ---------------------------------------------------------------------------


def initial_orbitals(atom: AtomSpec, grid: RadialGrid) -> list:
    zeff = slater_effective_charges(atom.Z, atom.shells)
    out = []
    for s in atom.shells:
        P = radial_P(s.n, s.l, zeff[(s.n, s.l)], grid.points)
        P = P / np.sqrt(np.dot(grid.weights, P * P))
        out.append(Orbital(s.n, s.l, s.occupancy, float("nan"), P))
    return out


def _fields(orbitals, grid, atom, scheme):
    """Potential pieces generated by an orbital set (before mixing)."""
    ops = _operators(grid)
    rho = sum(o.occupancy * o.radial ** 2 for o in orbitals)
    f = {"direct": ops.screening(0, rho)}
    if scheme == "hartree-no-self-action":
        for o in orbitals:
            f[("self", o.n, o.l)] = ops.screening(0, o.radial ** 2)
    elif scheme == "hf":
        kern = build_exchange_kernel(orbitals, grid, atom.channels)
        for l, K in kern.channels.items():
            f[("x", l)] = K
    return f


def _solve_channels(atom, grid, scheme, fields):
    ops = _operators(grid)
    r = grid.points
    base = -atom.Z / r + fields["direct"]
    out = []
    for l in atom.channels:
        shells = sorted((s for s in atom.shells if s.l == l), key=lambda s: s.n)
        if scheme == "hartree-no-self-action":
            for s in shells:
                ch = ops.channel(l, base - fields[("self", s.n, s.l)])
                k = s.n - l
                E, P = ch.lowest(k, atom.Z)
                _check_bound(E, k, l)
                out.append(Orbital(s.n, l, s.occupancy, float(E[k - 1]), P[:, k - 1]))
        else:
            kern = fields.get(("x", l)) if scheme == "hf" else None
            ch = ops.channel(l, base, kern)
            E, P = ch.lowest(len(shells), atom.Z)
            _check_bound(E, len(shells), l)
            for i, s in enumerate(shells):
                out.append(Orbital(s.n, l, s.occupancy, float(E[i]), P[:, i]))
    return out


def _check_bound(E, k, l):
    if len(E) < k or E[k - 1] >= 0.0:
        raise SpectrumError(f"channel l={l} has fewer than {k} bound states")


def solve(atom: AtomSpec, grid: RadialGrid, scheme: str = "hf", options: SCFOptions | None = None,
          raise_on_failure: bool = True) -> SCFResult:
    """Iterate the chosen scheme to self-consistency.

    Raises
    ------
    ConfigurationError
        Unknown scheme.
    SpectrumError
        A channel holds fewer bound states than it has occupied shells.
    ConvergenceError
        No convergence within ``options.max_iterations`` (carries the
        energy trace); suppressed when ``raise_on_failure`` is false.
    """
    if scheme not in SCHEMES:
        raise ConfigurationError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    opts = options or SCFOptions()
    orbitals = initial_orbitals(atom, grid)
    mixed = _fields(orbitals, grid, atom, scheme)
    trace = []
    prev_E = None
    prev_eps = None
    converged = False
    it = 0
    for it in range(1, opts.max_iterations + 1):
        orbitals = _solve_channels(atom, grid, scheme, mixed)
        E, T, _ = _energy_terms(orbitals, grid, atom.Z, scheme)
        eps = np.array([o.energy for o in orbitals])
        trace.append(E)
        if prev_E is not None:
            dE = abs(E - prev_E)
            deps = float(np.max(np.abs(eps - prev_eps)))
            log.debug("iter %d  E=%.12f  dE=%.2e  deps=%.2e", it, E, dE, deps)
            if dE < opts.energy_tol and deps < opts.eigen_tol:
                converged = True
                break
        prev_E, prev_eps = E, eps
        new = _fields(orbitals, grid, atom, scheme)
        a = opts.mixing
        mixed = {key: (1.0 - a) * mixed[key] + a * new[key] for key in new}
    if not converged and raise_on_failure:
        raise ConvergenceError(
            f"{scheme} SCF for Z={atom.Z} did not converge in {opts.max_iterations} iterations", trace)
    orbitals.sort(key=lambda o: (o.l, o.energy))
    U = -atom.Z / grid.points + mixed["direct"]
    return SCFResult(
        scheme=scheme, atom=atom, grid=grid, orbitals=orbitals, hartree_potential=U,
        total_energy=E, iterations=it, converged=converged, energy_trace=trace,
        kinetic_energy=T, direct_potential=mixed["direct"].copy(),
    )


def channel_operator(result: SCFResult, l: int, exclude=None, exchange_scale: float = 1.0):
    """Frozen-core channel operator of partial wave ``l`` built from ``result``.

    The potential is regenerated from the stored orbitals.  For the
    ``hf`` scheme the exchange kernel (scaled by ``exchange_scale``) is
    included; for ``hartree-no-self-action`` one electron of the shell
    ``exclude`` is removed from the density, which reproduces the operator
    that shell was solved with.  A one-electron atom gets the bare
    nuclear potential in every channel (exchange cancels the direct term
    exactly).
    """
    ops = _operators(result.grid)
    Z = result.atom.Z
    if result.atom.electron_count == 1 and result.scheme != "hartree":
        # a lone electron feels no field of its own in any channel
        return ops.channel(l, -Z / result.grid.points)
    if result.scheme == "hartree-no-self-action" and exclude is not None:
        V = hartree_potential(result.orbitals, result.grid, exclude=exclude, Z=Z)
    else:
        V = hartree_potential(result.orbitals, result.grid, Z=Z)
    K = None
    if result.scheme == "hf":
        K = build_exchange_kernel(result.orbitals, result.grid, [l])[l] * exchange_scale
    return ops.channel(l, V, K)
