"""Discrete radial operators.

The radial function is written as P(r) = sqrt(r_t) y(t) on the uniform
mapped coordinate t.  The one-electron energy functional then becomes

    ∫ ½ y_t² + [½(q² − q_t) + r_t² (l(l+1)/(2r²) + V)] y² dt,   q = r_tt/(2 r_t)

and the eigenproblem is the symmetric pencil A y = E M y with a diagonal
mass M = h g r_t².  The kinetic part is a three-point stencil; below r_min
the solution is continued geometrically, y(t − m h) = ρ^m y(t), ρ =
exp(−(l+½)h), which removes the hard-wall error of a Dirichlet cut.

Non-local operators K(r, r') enter as dense matrices
sqrt(r_t,i) w_i K_ij w_j sqrt(r_t,j).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from ..errors import ConditioningError, SpectrumError
from ..grid import RadialGrid


class RadialOperators:
    """Grid-dependent building blocks shared by all channel operators."""

    def __init__(self, grid: RadialGrid):
        self.grid = grid
        self.r = grid.points
        self.w = grid.weights
        self.h = grid.step
        self.g = grid.gregory
        self.rt = grid.dr_dt
        self.sqrt_rt = np.sqrt(self.rt)
        self.mass = self.h * self.g * self.rt ** 2
        self._liouville = grid.liouville_term
        self._multipoles = {}

    @property
    def size(self) -> int:
        return self.r.size

    # -- conversions ---------------------------------------------------------
    def to_P(self, y):
        return self.sqrt_rt[:, None] * y if np.ndim(y) == 2 else self.sqrt_rt * y

    def to_y(self, P):
        return P / (self.sqrt_rt[:, None] if np.ndim(P) == 2 else self.sqrt_rt)

    # -- kinetic -------------------------------------------------------------
    def kinetic_bands(self, l: int) -> np.ndarray:
        """Upper-banded form (2, N) of the kinetic + centrifugal matrix."""
        h, g = self.h, self.g
        c = self._liouville + self.rt ** 2 * l * (l + 1) / (2.0 * self.r ** 2)
        diag = 1.0 / h + h * g * c
        rho = np.exp(-(l + 0.5) * h)
        c0 = (l + 0.5) ** 2 / 2.0
        diag[0] = (0.5 / h + h * g[0] * c[0]
                   + 0.5 * (1.0 - rho) ** 2 / (h * (1.0 - rho * rho))
                   + h * c0 * rho * rho / (1.0 - rho * rho))
        bands = np.zeros((2, self.size))
        bands[0, 1:] = -0.5 / h
        bands[1] = diag
        return bands

    def multipole(self, k: int) -> np.ndarray:
        """Dense r_<^k / r_>^(k+1) matrix (cached).

        The kernel has a slope jump of −(2k+1) r_t / r² at r' = r.  The
        Euler–Maclaurin term of that kink is folded into the diagonal, so
        ``multipole(k) @ (w * f)`` stays fourth-order accurate in h.
        """
        if k not in self._multipoles:
            r = self.r
            lo = np.minimum.outer(r, r)
            hi = np.maximum.outer(r, r)
            M = (lo / hi) ** k / hi
            interior = self.g == 1.0
            M[np.diag_indices_from(M)] -= np.where(
                interior, self.h * (2 * k + 1) * self.rt / (12.0 * r * r), 0.0)
            self._multipoles[k] = M
        return self._multipoles[k]

    def screening(self, k: int, f) -> np.ndarray:
        """Y_k(r)/r = ∫ r_<^k / r_>^(k+1) f(r') dr' sampled on the grid."""
        return self.multipole(k) @ (self.w * f)

    def nonlocal_matrix(self, K: np.ndarray) -> np.ndarray:
        sw = self.sqrt_rt * self.w
        return sw[:, None] * K * sw[None, :]

    def channel(self, l: int, V, kernel=None) -> "ChannelOperator":
        """Operator −½d²/dr² + l(l+1)/2r² + V − K for one partial wave."""
        bands = self.kinetic_bands(l)
        bands[1] = bands[1] + self.mass * np.asarray(V, dtype=float)
        X = None if kernel is None else self.nonlocal_matrix(kernel)
        return ChannelOperator(self, l, bands, X)


@dataclass
class ChannelOperator:
    ops: RadialOperators
    l: int
    bands: np.ndarray
    exchange: np.ndarray | None = None

    def dense(self) -> np.ndarray:
        b = self.bands
        A = np.diag(b[1]) + np.diag(b[0, 1:], 1) + np.diag(b[0, 1:], -1)
        if self.exchange is not None:
            A = A - self.exchange
        return A

    def matvec(self, y):
        b = self.bands
        out = b[1] * y
        out[:-1] += b[0, 1:] * y[1:]
        out[1:] += b[0, 1:] * y[:-1]
        if self.exchange is not None:
            out = out - self.exchange @ y
        return out

    def default_shift(self, Z: float) -> float:
        return -1.1 * Z * Z / (2.0 * (self.l + 1) ** 2) - 1.0

    def _factor(self, sigma: float):
        """Cholesky-factor A − σM, lowering σ until it is positive definite."""
        M = self.ops.mass
        for _ in range(40):
            try:
                if self.exchange is None:
                    b = self.bands.copy()
                    b[1] -= sigma * M
                    cb = sla.cholesky_banded(b)
                    return sigma, lambda v, cb=cb: sla.cho_solve_banded((cb, False), v)
                B = self.dense()
                B[np.diag_indices_from(B)] -= sigma * M
                cf = sla.cho_factor(B, lower=False, check_finite=False)
                return sigma, lambda v, cf=cf: sla.cho_solve(cf, v, check_finite=False)
            except np.linalg.LinAlgError:
                sigma = 2.0 * sigma - 1.0
        raise ConditioningError(f"cannot find a shift below the spectrum of channel l={self.l}")

    def lowest(self, count: int, Z: float, sigma: float | None = None):
        """Lowest ``count`` eigenpairs; returns (E, P) with P normalized."""
        n = self.ops.size
        if count < 1:
            raise SpectrumError("at least one state must be requested")
        sigma = self.default_shift(Z) if sigma is None else sigma
        sigma, solve = self._factor(sigma)
        M = self.ops.mass
        A = spla.LinearOperator((n, n), matvec=self.matvec, dtype=float)
        Mop = spla.LinearOperator((n, n), matvec=lambda v: M * v, dtype=float)
        OPinv = spla.LinearOperator((n, n), matvec=solve, dtype=float)
        k = min(count, n - 2)
        vals, vecs = spla.eigsh(A, k=k, M=Mop, sigma=sigma, which="LM",
                                OPinv=OPinv, v0=np.ones(n), tol=0.0)
        order = np.argsort(vals)
        return vals[order], self.normalize(vecs[:, order])

    def spectrum(self, sigma: float):
        """Full spectrum through the symmetric resolvent M^½ (A − σM)^{-1} M^½.

        Its eigenvalues μ = 1/(E − σ) are bounded, so the low-lying states
        are resolved to full precision while the eigenvectors stay
        orthonormal in the weighted inner product.
        """
        m = np.sqrt(self.ops.mass)
        B = self.dense()
        B[np.diag_indices_from(B)] -= sigma * self.ops.mass
        C = sla.solve(B, np.diag(m), assume_a="sym", check_finite=False) * m[:, None]
        mu, z = sla.eigh(0.5 * (C + C.T), check_finite=False)
        # |μ| at round-off level belongs to the top of the grid spectrum
        floor = 64.0 * np.finfo(float).eps * np.max(np.abs(mu)) * mu.size
        with np.errstate(divide="ignore"):
            E = np.where(np.abs(mu) > floor, sigma + 1.0 / mu, np.inf)
        order = np.argsort(E)
        return E[order], self.normalize(z[:, order] / m[:, None])

    def normalize(self, y: np.ndarray) -> np.ndarray:
        """Convert eigenvectors to P, unit norm, positive near the origin."""
        P = self.ops.to_P(y)
        norms = np.sqrt(np.einsum("i,ij,ij->j", self.ops.w, P, P))
        P = P / norms
        for j in range(P.shape[1]):
            a = np.abs(P[:, j])
            i = int(np.argmax(a > 1e-3 * a.max()))
            if P[i, j] < 0:
                P[:, j] = -P[:, j]
        return P

    def expectation(self, P: np.ndarray) -> float:
        y = self.ops.to_y(P)
        return float(y @ self.matvec(y))

    def residual(self, P: np.ndarray, E: float) -> float:
        """Relative residual ‖(A − E M) y‖ / ‖M y‖."""
        y = self.ops.to_y(P)
        My = self.ops.mass * y
        return float(np.linalg.norm(self.matvec(y) - E * My) / np.linalg.norm(My))
