"""Angular coefficients for closed-shell direct/exchange couplings."""

from __future__ import annotations

from functools import lru_cache
from math import factorial


@lru_cache(maxsize=None)
def threej_zero(l1: int, l2: int, l3: int) -> float:
    """Wigner 3j symbol (l1 l2 l3; 0 0 0)."""
    J = l1 + l2 + l3
    if J % 2 or l3 < abs(l1 - l2) or l3 > l1 + l2:
        return 0.0
    g = J // 2
    tri = factorial(J - 2 * l1) * factorial(J - 2 * l2) * factorial(J - 2 * l3) / factorial(J + 1)
    val = tri ** 0.5 * factorial(g) / (factorial(g - l1) * factorial(g - l2) * factorial(g - l3))
    return (-1) ** g * val


def exchange_multipoles(la: int, lb: int):
    """(k, (la k lb; 000)^2) pairs with non-zero coefficient."""
    return [(k, threej_zero(la, k, lb) ** 2)
            for k in range(abs(la - lb), la + lb + 1)
            if (la + k + lb) % 2 == 0]
