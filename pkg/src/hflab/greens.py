"""Channel Green's functions: direct resolvent versus regular×irregular product.

With the pencil A y = E M y of :mod:`hflab.scf.operators` and D =
diag(sqrt(r_t)), the grid kernel solving (H − E) G W = I (W = quadrature
weights, i.e. the delta function represented as δ_ij / w_j) is

    G = D (A − E M)^{-1} D.

For a local potential A − E M is tridiagonal and its inverse is exactly
u_{min(i,j)} v_{max(i,j)} / θ with u the regular (origin) and v the
irregular (outer boundary) recurrence solutions, which is the discrete
form of the product formula.  With exchange the product built from the
local part alone no longer inverts the operator.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .errors import ConditioningError, ConfigurationError, DegenerateSolutionError
from .grid import RadialGrid
from .scf.operators import ChannelOperator, RadialOperators
from .scf.solver import SCFResult, _operators, channel_operator


@dataclass(eq=False)
class ResolventMatrix:
    l: int
    E: float
    G: np.ndarray = field(repr=False)
    scheme: str
    grid: RadialGrid = field(repr=False)

    def symmetry_error(self) -> float:
        return float(np.max(np.abs(self.G - self.G.T)) / np.max(np.abs(self.G)))

    def residual(self, op: ChannelOperator) -> float:
        """Relative residual of the discretized system for the operator ``op``."""
        return resolvent_residual(op, self.G, self.E)


def resolvent_residual(op: ChannelOperator, G: np.ndarray, E: float) -> float:
    """‖(A − E M) D^{-1} G D^{-1} − I‖_F / ‖I‖_F.

    This is (H − E) G W − I written in the symmetric y-representation, the
    similarity transform of the P-form by D M^{-1}; it avoids the large
    factors 1/M near the origin.
    """
    ops = op.ops
    B = op.dense()
    B[np.diag_indices_from(B)] -= E * ops.mass
    Gt = G / ops.sqrt_rt[:, None] / ops.sqrt_rt[None, :]
    X = B @ Gt
    X[np.diag_indices_from(X)] -= 1.0
    return float(np.linalg.norm(X) / np.sqrt(X.shape[0]))


def nearest_eigenvalue(op: ChannelOperator, E: float) -> float:
    n = op.ops.size
    M = op.ops.mass
    A = spla.LinearOperator((n, n), matvec=op.matvec, dtype=float)
    Mop = spla.LinearOperator((n, n), matvec=lambda v: M * v, dtype=float)
    B = op.dense()
    B[np.diag_indices_from(B)] -= E * M
    lu = sla.lu_factor(B, check_finite=False)
    OPinv = spla.LinearOperator((n, n), matvec=lambda v: sla.lu_solve(lu, v, check_finite=False),
                                dtype=float)
    vals = spla.eigsh(A, k=1, M=Mop, sigma=E, which="LM", OPinv=OPinv, v0=np.ones(n),
                      return_eigenvectors=False)
    return float(vals[0])


def green_direct(op: ChannelOperator, E: float, guard: float = 1e-6, scheme: str | None = None) -> ResolventMatrix:
    """Resolvent by direct inversion of the discretized channel operator.

    Raises
    ------
    ConditioningError
        If E lies within ``guard`` of a discrete eigenvalue.
    """
    near = nearest_eigenvalue(op, E)
    if abs(near - E) < guard:
        raise ConditioningError(f"E={E} is within {guard} of eigenvalue {near}", near)
    ops = op.ops
    B = op.dense()
    B[np.diag_indices_from(B)] -= E * ops.mass
    G = sla.solve(B, np.diag(ops.sqrt_rt), assume_a="sym", check_finite=False)
    G = ops.sqrt_rt[:, None] * G
    G = 0.5 * (G + G.T)
    tag = scheme or ("local" if op.exchange is None else "hf")
    return ResolventMatrix(op.l, float(E), G, tag, ops.grid)


def spectral_green(op: ChannelOperator, E: float, count: int | None = None, spectrum=None) -> np.ndarray:
    """Σ_k P_k(r) P_k(r') / (E_k − E) over the lowest ``count`` eigenpairs."""
    if spectrum is None:
        spectrum = op.spectrum(sigma=op.default_shift(max(1.0, abs(E))) + min(E, 0.0) * 2)
    Ek, P = spectrum
    m = Ek.size if count is None else count
    return (P[:, :m] / (Ek[:m] - E)) @ P[:, :m].T


def completeness_error(op: ChannelOperator, spectrum=None) -> float:
    """max |Σ_k P_k(r_i) P_k(r_j) sqrt(w_i w_j) − δ_ij| over the full spectrum."""
    Ek, P = spectrum if spectrum is not None else op.spectrum(op.default_shift(1.0))
    Q = P * np.sqrt(op.ops.w)[:, None]
    C = Q @ Q.T
    return float(np.max(np.abs(C - np.eye(C.shape[0]))))


# ---------------------------------------------------------------------------
# Product form
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class ProductGreen:
    """Regular×irregular kernel of a tridiagonal channel operator in log form."""

    log_u: np.ndarray
    sign_u: np.ndarray
    log_v: np.ndarray
    sign_v: np.ndarray
    log_theta: float
    sign_theta: float
    sqrt_rt: np.ndarray
    l: int
    E: float
    grid: RadialGrid

    def entry(self, i, j):
        i, j = np.minimum(i, j), np.maximum(i, j)
        mag = np.exp(self.log_u[i] + self.log_v[j] - self.log_theta)
        return self.sign_u[i] * self.sign_v[j] * self.sign_theta * mag * self.sqrt_rt[i] * self.sqrt_rt[j]

    def matrix(self) -> ResolventMatrix:
        n = self.log_u.size
        I, J = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        return ResolventMatrix(self.l, self.E, self.entry(I, J), "local", self.grid)


def _log_recurrence(d, e, forward: bool):
    """ln|x|, sign(x) for the homogeneous three-term recurrence via ratios."""
    n = d.size
    lx = np.zeros(n)
    sx = np.ones(n)
    if forward:
        # x_{i+1} = −(e_{i−1} x_{i−1} + d_i x_i) / e_i, with x_{−1} = 0
        rho = -d[0] / e[0]
        for i in range(n - 1):
            if i > 0:
                rho = -(e[i - 1] / rho + d[i]) / e[i]
            lx[i + 1] = lx[i] + np.log(abs(rho))
            sx[i + 1] = sx[i] * np.sign(rho)
    else:
        rho = -d[n - 1] / e[n - 2]
        for i in range(n - 1, 0, -1):
            if i < n - 1:
                rho = -(e[i] / rho + d[i]) / e[i - 1]
            lx[i - 1] = lx[i] + np.log(abs(rho))
            sx[i - 1] = sx[i] * np.sign(rho)
    return lx, sx


def green_product(potential, l: int, E: float, grid: RadialGrid, ops: RadialOperators | None = None,
                  tol: float = 1e-12) -> ProductGreen:
    """Product-form Green's function of a local radial potential.

    ``potential`` is an array sampled on ``grid`` or a callable V(r).

    Raises
    ------
    DegenerateSolutionError
        If the normalized Casoratian of the two solutions is below ``tol``.
    """
    ops = ops or (_operators(grid) if grid.point_count <= 6000 else RadialOperators(grid))
    V = potential(grid.points) if callable(potential) else np.asarray(potential, dtype=float)
    bands = ops.kinetic_bands(l)
    d = bands[1] + ops.mass * (V - E)
    e = bands[0, 1:]
    lu, su = _log_recurrence(d, e, True)
    lv, sv = _log_recurrence(d, e, False)
    # θ = e_i (u_i v_{i+1} − u_{i+1} v_i), evaluated where cancellation is weakest
    a = su[:-1] * sv[1:] * np.exp(lu[:-1] + lv[1:] - (lu[:-1] + lv[:-1]))
    b = su[1:] * sv[:-1] * np.exp(lu[1:] + lv[:-1] - (lu[:-1] + lv[:-1]))
    rel = np.abs(a - b) / (np.abs(a) + np.abs(b))
    k = int(np.argmax(rel))
    if rel[k] < tol:
        raise DegenerateSolutionError("regular and irregular solutions are linearly dependent")
    theta = e[k] * (a[k] - b[k])
    log_theta = np.log(abs(theta)) + lu[k] + lv[k]
    # T^{-1}_{ij} = u_i v_j / θ for i ≤ j
    return ProductGreen(lu, su, lv, sv, float(log_theta), float(np.sign(theta)), ops.sqrt_rt,
                        l, float(E), grid)


# ---------------------------------------------------------------------------
# Non-local failure of the product form
# ---------------------------------------------------------------------------


def hf_channel(core: SCFResult, l: int, scale: float = 1.0) -> ChannelOperator:
    """Frozen-core Fock operator of channel l with exchange scaled by ``scale``."""
    if core.scheme != "hf":
        raise ConfigurationError("product-form residual needs an hf core")
    return channel_operator(core, l, exchange_scale=scale)


def probe_energies(op: ChannelOperator, count: int = 3, spectrum=None) -> np.ndarray:
    """Midpoints between adjacent low-lying eigenvalues (off-spectrum probes)."""
    if spectrum is None:
        Ek, _ = op.lowest(count + 1, Z=1.0, sigma=op.default_shift(50.0))
    else:
        Ek = spectrum[0][: count + 1]
    return 0.5 * (Ek[:-1] + Ek[1:])


def product_form_residual(core: SCFResult, l: int, E: float | None = None, scale: float = 1.0,
                          guard: float = 1e-6) -> float:
    """‖(H_HF − E) G_prod W − I‖_F / ‖I‖_F with G_prod from the local part only."""
    op = hf_channel(core, l, scale)
    if E is None:
        E = float(probe_energies(hf_channel(core, l, 1.0), 1)[0])
    near = nearest_eigenvalue(op, E)
    if abs(near - E) < guard:
        raise ConditioningError(f"E={E} is within {guard} of eigenvalue {near}", near)
    Gp = _product_from_bands(op, E)
    return resolvent_residual(op, Gp, E)


def _product_from_bands(op: ChannelOperator, E: float) -> np.ndarray:
    ops = op.ops
    d = op.bands[1] - E * ops.mass
    e = op.bands[0, 1:]
    lu, su = _log_recurrence(d, e, True)
    lv, sv = _log_recurrence(d, e, False)
    a = su[:-1] * sv[1:] * np.exp(lv[1:] - lv[:-1])
    b = su[1:] * sv[:-1] * np.exp(lu[1:] - lu[:-1])
    rel = np.abs(a - b) / (np.abs(a) + np.abs(b))
    k = int(np.argmax(rel))
    if rel[k] < 1e-12:
        raise DegenerateSolutionError("regular and irregular solutions are linearly dependent")
    theta = e[k] * (a[k] - b[k])
    log_theta = np.log(abs(theta)) + lu[k] + lv[k]
    n = d.size
    I, J = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    lo, hi = np.minimum(I, J), np.maximum(I, J)
    G = np.sign(theta) * su[lo] * sv[hi] * np.exp(lu[lo] + lv[hi] - log_theta)
    return ops.sqrt_rt[:, None] * G * ops.sqrt_rt[None, :]


def residual_sweep(core: SCFResult, l: int, lambdas=(0.0, 0.25, 0.5, 0.75, 1.0), E: float | None = None) -> list:
    """(lambda, residual) rows for exchange scaled by each lambda."""
    if E is None:
        E = float(probe_energies(hf_channel(core, l, 1.0), 1)[0])
    return [(float(lam), product_form_residual(core, l, E, lam)) for lam in lambdas]


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda", "residual"])
    for lam, res in rows:
        w.writerow([repr(lam), repr(res)])
    return buf.getvalue()
