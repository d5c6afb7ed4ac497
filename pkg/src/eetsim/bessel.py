"""Integer-order Bessel functions of the first kind, built from scratch.

These serve as the analytic reference for transport on an infinite
homogeneous chain without dephasing, so they are deliberately independent of
every ODE-integration code path in this package.  Small arguments use the
ascending power series; large arguments use Miller's downward recurrence
normalized through the even-order sum rule J_0 + 2*sum_k J_{2k} = 1.
"""

from __future__ import annotations

import math

_SERIES_LIMIT = 12.0
_RESCALE = 1e250


def _bessel_j_series(order: int, x: float) -> float:
    # J_n(x) = sum_k (-1)^k (x/2)^(n+2k) / (k! (n+k)!)
    half = 0.5 * x
    try:
        term = half**order / math.factorial(order)
    except OverflowError:
        return 0.0
    total = term
    k = 0
    while k < 300:
        k += 1
        term *= -(half * half) / (k * (order + k))
        total += term
        if abs(term) <= 1e-18 * (abs(total) + 1e-300):
            break
    return total


def _bessel_j_miller(order: int, x: float) -> float:
    # Downward recurrence J_{m-1} = (2m/x) J_m - J_{m+1}, started deep enough
    # in the exponentially decaying tail that the seed error is negligible,
    # then normalized with 1 = J_0 + 2 * sum_{k>=1} J_{2k}.
    start = max(order, int(x)) + 30 + int(3.0 * x ** (1.0 / 3.0))
    if start % 2:
        start += 1
    jp = 0.0  # J_{m+1}
    jc = 1e-30  # J_m, unnormalized
    result = jc if order == start else 0.0
    even_acc = jc  # start is even and >= 2
    for m in range(start, 0, -1):
        jp, jc = jc, (2.0 * m / x) * jc - jp  # jc becomes J_{m-1}
        if m - 1 == order:
            result = jc
        if (m - 1) >= 2 and (m - 1) % 2 == 0:
            even_acc += jc
        if abs(jc) > _RESCALE:
            jp /= _RESCALE
            jc /= _RESCALE
            result /= _RESCALE
            even_acc /= _RESCALE
    norm = jc + 2.0 * even_acc  # jc now holds J_0
    return result / norm


def bessel_j(order: int, x: float) -> float:
    """J_n(x) for integer n (negative orders via the reflection rule)."""
    n = int(order)
    x = float(x)
    if n < 0:
        sign = -1.0 if n % 2 else 1.0
        return sign * bessel_j(-n, x)
    if x < 0.0:
        sign = -1.0 if n % 2 else 1.0
        return sign * bessel_j(n, -x)
    if x == 0.0:
        return 1.0 if n == 0 else 0.0
    if x <= _SERIES_LIMIT:
        return _bessel_j_series(n, x)
    return _bessel_j_miller(n, x)


def chain_bessel_populations(v: float, site_offset: int, t: float) -> float:
    """Excitation probability on an infinite homogeneous chain without noise.

    For nearest-neighbour coupling ``v`` and an excitation starting at a
    single site, the site at distance ``site_offset`` carries probability
    J_offset(2 v t)^2 (hbar = 1).  Valid until the finite-chain boundary is
    reached.
    """
    if t < 0.0:
        raise ValueError("time must be non-negative")
    value = bessel_j(abs(int(site_offset)), 2.0 * v * t)
    return value * value
