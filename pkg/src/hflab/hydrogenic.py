"""Analytic hydrogen-like radial functions and Slater screening."""

from __future__ import annotations

import numpy as np
from scipy.special import eval_genlaguerre, gammaln


def radial_P(n: int, l: int, Z: float, r) -> np.ndarray:
    """Normalized P_nl(r) = r R_nl(r) for charge Z, positive near the origin."""
    if not n > l >= 0:
        raise ValueError(f"need n > l >= 0, got n={n}, l={l}")
    r = np.asarray(r, dtype=float)
    x = 2.0 * Z * r / n
    log_norm = 0.5 * (3 * np.log(2.0 * Z / n) + gammaln(n - l) - np.log(2.0 * n) - gammaln(n + l + 1))
    with np.errstate(divide="ignore"):
        logx = np.log(x)
    poly = eval_genlaguerre(n - l - 1, 2 * l + 1, x)
    return np.exp(log_norm + l * logx - x / 2.0) * r * poly


def energy(n: int, Z: float) -> float:
    return -Z * Z / (2.0 * n * n)


def slater_effective_charges(Z: int, shells) -> dict:
    """Effective nuclear charge per shell (n, l) from Slater's rules.

    Groups are (1s)(2s2p)(3s3p)(3d)(4s4p)(4d)(4f)...; the principal quantum
    number itself is used in place of Slater's effective n.
    """
    def group(n, l):
        return (n, 0 if l <= 1 else l)

    occ = {}
    for s in shells:
        occ[group(s.n, s.l)] = occ.get(group(s.n, s.l), 0) + s.occupancy
    out = {}
    for s in shells:
        gs = group(s.n, s.l)
        shield = 0.0
        for gk, q in occ.items():
            same = q - 1 if gk == gs else q
            if gk == gs:
                shield += same * (0.30 if s.n == 1 else 0.35)
            elif s.l <= 1:
                if gk[0] == s.n - 1:
                    shield += 0.85 * q
                elif gk[0] < s.n - 1:
                    shield += 1.00 * q
            else:
                if gk[0] < s.n or (gk[0] == s.n and gk[1] < gs[1]):
                    shield += 1.00 * q
        out[(s.n, s.l)] = max(Z - shield, 1.0)
    return out
