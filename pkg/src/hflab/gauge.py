"""Length and velocity forms of dipole matrix elements and oscillator sums.

For eigenstates of one local Hamiltonian the commutator [H, r] = −∇ makes
the two forms identical.  The velocity form here is the bare gradient
divided by ω, so with a non-local (exchange) operator the two differ and
the oscillator sum rule no longer holds in both forms at once.

Conventions: reduced elements carry the angular factor sqrt(l_>/(2l_i+1)),
so the absorption oscillator strength of one electron is (2/3) ω d².
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError
from .grid import RadialGrid
from .scf.atoms import L_LETTERS
from .scf.solver import SCFResult, channel_operator

FORMS = ("length", "velocity")


@dataclass(frozen=True)
class DipoleElement:
    """Reduced matrix element; ``allowed`` is False for |Δl| ≠ 1 (value 0)."""

    value: float
    allowed: bool = True

    def __float__(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class DipolePair:
    transition: str
    d_length: float
    d_velocity: float
    omega: float

    @property
    def relative_discrepancy(self) -> float:
        scale = max(abs(self.d_length), abs(self.d_velocity))
        return 0.0 if scale == 0.0 else abs(self.d_length - self.d_velocity) / scale

    def to_dict(self) -> dict:
        return {"transition": self.transition, "d_length": self.d_length, "d_velocity": self.d_velocity,
                "omega": self.omega, "relative_discrepancy": self.relative_discrepancy}


def angular_factor(l_i: int, l_f: int) -> float:
    return float(np.sqrt(max(l_i, l_f) / (2.0 * l_i + 1.0)))


def _radial(state):
    return np.asarray(getattr(state, "radial", state), dtype=float)


def radial_derivative(P, grid: RadialGrid) -> np.ndarray:
    """dP/dr by fourth-order differences in the uniform coordinate t."""
    P = np.asarray(P, dtype=float)
    h = grid.step
    d = np.empty_like(P)
    d[2:-2] = (P[:-4] - 8.0 * P[1:-3] + 8.0 * P[3:-1] - P[4:]) / (12.0 * h)
    d[:2] = (-3.0 * P[:2] + 4.0 * P[1:3] - P[2:4]) / (2.0 * h)
    d[-2:] = (3.0 * P[-2:] - 4.0 * P[-3:-1] + P[-4:-2]) / (2.0 * h)
    return d / grid.dr_dt


def dipole_length(initial, final, grid: RadialGrid, l_i: int | None = None, l_f: int | None = None) -> DipoleElement:
    """Reduced length-form element sqrt(l_>/(2l_i+1)) ∫ P_f r P_i dr."""
    l_i = initial.l if l_i is None else l_i
    l_f = final.l if l_f is None else l_f
    if abs(l_i - l_f) != 1:
        return DipoleElement(0.0, False)
    R = grid.integrate(_radial(final) * grid.points * _radial(initial))
    return DipoleElement(angular_factor(l_i, l_f) * R)


def _commutator_gradient(initial, final, grid: RadialGrid, l_i: int, l_f: int) -> float:
    """⟨f| T_f r − r T_i |i⟩ with T the grid kinetic-plus-centrifugal operator."""
    from .scf.solver import _operators

    ops = _operators(grid)
    yi = ops.to_y(_radial(initial))
    yf = ops.to_y(_radial(final))
    r = grid.points

    def apply(bands, y):
        out = bands[1] * y
        out[:-1] += bands[0, 1:] * y[1:]
        out[1:] += bands[0, 1:] * y[:-1]
        return out

    return float(apply(ops.kinetic_bands(l_f), yf) @ (r * yi) - (r * yf) @ apply(ops.kinetic_bands(l_i), yi))


def dipole_velocity(initial, final, omega: float, grid: RadialGrid, l_i: int | None = None,
                    l_f: int | None = None, method: str = "commutator") -> DipoleElement:
    """Reduced velocity-form element built from the bare gradient, divided by ω.

    ``method="commutator"`` uses ⟨f|[T, r]|i⟩ with the grid kinetic
    operator T (including the centrifugal term), which is the exact grid
    counterpart of −∇ and leaves out any potential, so a non-local
    exchange term shows up as a length/velocity discrepancy.
    ``method="finite-difference"`` evaluates −∫ P_f (P_i' ∓ c P_i / r) dr / ω
    with fourth-order differences (c = l_i+1 for l_f = l_i+1, −l_i
    otherwise); it suits smooth functions not tied to the grid operator.

    Raises
    ------
    DomainError
        If ω ≤ 0.
    """
    if not omega > 0.0:
        raise DomainError(f"transition energy must be positive, got {omega}")
    l_i = initial.l if l_i is None else l_i
    l_f = final.l if l_f is None else l_f
    if abs(l_i - l_f) != 1:
        return DipoleElement(0.0, False)
    if method == "commutator":
        return DipoleElement(angular_factor(l_i, l_f) * _commutator_gradient(initial, final, grid, l_i, l_f) / omega)
    if method != "finite-difference":
        raise ConfigurationError(f"unknown velocity method {method!r}")
    P = _radial(initial)
    c = -(l_i + 1) if l_f == l_i + 1 else l_i
    grad = grid.integrate(_radial(final) * (radial_derivative(P, grid) + c * P / grid.points))
    return DipoleElement(-angular_factor(l_i, l_f) * grad / omega)


def dipole_pair(initial, final, omega: float, grid: RadialGrid, label: str = "") -> DipolePair:
    return DipolePair(label, float(dipole_length(initial, final, grid)),
                      float(dipole_velocity(initial, final, omega, grid)), float(omega))


# ---------------------------------------------------------------------------
# Oscillator sums over the grid spectrum of the frozen-core channels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class State:
    n: int
    l: int
    energy: float
    radial: np.ndarray = field(repr=False)

    @property
    def label(self) -> str:
        return f"{self.n}{L_LETTERS[self.l]}" if self.energy < 0 else f"E{L_LETTERS[self.l]}({self.energy:.4g})"


@dataclass
class SumRuleReport:
    scheme: str
    form: str
    omega_max: float
    N: int
    partial_sum: float
    lines: list = field(repr=False, default_factory=list)  # (omega, f, transition)
    channels: list = field(default_factory=list)
    failed_channels: list = field(default_factory=list)

    def partial(self, omega_max: float) -> float:
        return float(sum(f for w, f, _ in self.lines if w <= omega_max))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["omega", "f", "transition"])
        for om, f, t in self.lines:
            w.writerow([repr(float(om)), repr(float(f)), t])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"scheme": self.scheme, "form": self.form, "omega_max": self.omega_max, "N": self.N,
                "partial_sum": self.partial_sum, "channels": self.channels,
                "failed_channels": self.failed_channels}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def channel_states(core: SCFResult, l: int, exclude=None, sigma: float | None = None) -> list:
    """All grid eigenstates of the frozen-core channel l, lowest first."""
    op = channel_operator(core, l, exclude=exclude)
    E, P = op.spectrum(op.default_shift(core.atom.Z) if sigma is None else sigma)
    return [State(n + l + 1, l, float(e), P[:, n]) for n, e in enumerate(E)]


def _initial_states(core: SCFResult):
    """Occupied orbitals re-extracted from the regenerated channel operators."""
    out = []
    for o in core.orbitals:
        states = channel_states(core, o.l, exclude=o if core.scheme == "hartree-no-self-action" else None)
        out.append((o, states))
    return out


def oscillator_sum(core: SCFResult, form: str = "length", omega_max: float = 50.0) -> SumRuleReport:
    """Partial oscillator-strength sum S(ω_max) over the frozen-core spectrum.

    Final states are the eigenstates of the core's channel operators
    (static exchange for ``hf``), excluding occupied shells.  The grid
    eigenstates above threshold act as a quadrature of the continuum.
    """
    if form not in FORMS:
        raise ConfigurationError(f"unknown form {form!r}; expected one of {FORMS}")
    grid = core.grid
    occupied = {(o.n, o.l) for o in core.orbitals}
    lines = []
    channels = set()
    failed = []
    for o, states_i in _initial_states(core):
        init = states_i[o.n - o.l - 1]
        for l_f in (o.l - 1, o.l + 1):
            if l_f < 0:
                continue
            channels.add(l_f)
            try:
                finals = channel_states(core, l_f, exclude=o if core.scheme == "hartree-no-self-action" else None)
            except Exception as exc:  # keep the partial report
                failed.append({"l": l_f, "error": str(exc)})
                continue
            for fs in finals:
                omega = fs.energy - init.energy
                if (fs.n, l_f) in occupied or not 0.0 < omega <= omega_max:
                    continue
                if form == "length":
                    d = float(dipole_length(init, fs, grid))
                else:
                    d = float(dipole_velocity(init, fs, omega, grid))
                f = o.occupancy * 2.0 / 3.0 * omega * d * d
                lines.append((float(omega), float(f), f"{o.label}->{fs.label}"))
    lines.sort(key=lambda x: x[0])
    total = float(sum(f for _, f, _ in lines))
    return SumRuleReport(core.scheme, form, float(omega_max), core.atom.electron_count, total, lines,
                         sorted(channels), failed)


def transition_pairs(core: SCFResult, shell: str, l_f: int, count: int = 5, above_threshold: bool = True) -> list:
    """Length/velocity pairs from occupied ``shell`` to the lowest final states of channel l_f."""
    o = core.orbital(shell)
    ex = o if core.scheme == "hartree-no-self-action" else None
    init = channel_states(core, o.l, exclude=ex)[o.n - o.l - 1]
    occupied = {(x.n, x.l) for x in core.orbitals}
    out = []
    for fs in channel_states(core, l_f, exclude=ex):
        if (fs.n, l_f) in occupied or (above_threshold and fs.energy <= 0.0):
            continue
        omega = fs.energy - init.energy
        out.append(dipole_pair(init, fs, omega, core.grid, f"{shell}->{fs.label}"))
        if len(out) == count:
            break
    return out
