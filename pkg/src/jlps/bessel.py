"""Scaled modified Bessel functions e^{-t} I_n(t) and the Chebyshev heat kernel.

For (alpha, beta) = (-1/2, -1/2) the orthonormal polynomials are
p_0 = 1/sqrt(pi) and p_n = sqrt(2/pi) cos(n theta), and the heat kernel
reduces to scaled Bessel values v_n = e^{-t} I_n(t).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, sqrt

import numpy as np

__all__ = [
    "BesselScaledTable",
    "bessel_i_scaled",
    "chebyshev_heat_kernel",
    "chebyshev_heat_kernel_dt",
    "heat_deriv_recurrence",
]

_BIG = 1e250


@dataclass(frozen=True)
class BesselScaledTable:
    t: float
    values: np.ndarray

    @property
    def N(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, n: int) -> float:
        return float(self.values[abs(n)])


def _start_index(N: int, t: float) -> int:
    # Beyond max(N, t) the tail of v_n behaves like exp(-n^2 / 2t); the extra
    # 12 sqrt(t) makes the normalising sum complete to double precision.
    top = max(N, t)
    return int(ceil(top + 20 + 2 * sqrt(top * t) + 12 * sqrt(t)))


def bessel_i_scaled(t: float, N: int) -> BesselScaledTable:
    """e^{-t} I_n(t) for 0 <= n <= N by Miller's backward recurrence.

    The unnormalised solution is scaled so that v_0 + 2 sum_{n>=1} v_n = 1,
    which is the generating function exp(t cos theta) at theta = 0.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if N < 0:
        raise ValueError("N must be nonnegative")
    v = np.zeros(N + 1)
    if t == 0:
        v[0] = 1.0
        v.setflags(write=False)
        return BesselScaledTable(0.0, v)

    start = _start_index(N, t)
    two_over_t = 2.0 / t
    hi, cur = 0.0, 1e-300
    total = 0.0
    for n in range(start, 0, -1):
        # cur = I_n, hi = I_{n+1} up to a common factor
        lower = n * two_over_t * cur + hi
        if n <= N:
            v[n] = cur
        total += 2.0 * cur
        hi, cur = cur, lower
        if cur > _BIG:
            hi /= _BIG
            cur /= _BIG
            total /= _BIG
            v /= _BIG
    v[0] = cur
    total += cur
    v = v / total
    v.setflags(write=False)
    return BesselScaledTable(float(t), v)


def chebyshev_heat_kernel(t: float, m: int, n: int, table: BesselScaledTable | None = None) -> float:
    """Closed-form heat kernel for (alpha, beta) = (-1/2, -1/2).

    Both indices nonzero: v_{m+n} + v_{|n-m|}.  Exactly one index zero:
    sqrt(2) v_{m+n}, the sqrt(2) being p_n / p_0 at theta = 0.  Both zero: v_0.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    tab = table if table is not None else bessel_i_scaled(t, m + n)
    if m == 0 and n == 0:
        return tab[0]
    if m == 0 or n == 0:
        return sqrt(2.0) * tab[m + n]
    return tab[m + n] + tab[n - m]


def heat_deriv_recurrence(tab: BesselScaledTable, n: int) -> float:
    """d/dt of v_n(t) from neighbouring orders (needs v_{n+1} in the table)."""
    n = abs(n)
    if n + 1 > tab.N:
        raise IndexError(f"order {n + 1} outside table of size {tab.N}")
    if n == 0:
        return tab[1] - tab[0]
    return 0.5 * (tab[n + 1] - 2.0 * tab[n] + tab[n - 1])


def chebyshev_heat_kernel_dt(t: float, m: int, n: int, table: BesselScaledTable | None = None) -> float:
    """First t-derivative of :func:`chebyshev_heat_kernel`."""
    tab = table if table is not None else bessel_i_scaled(t, m + n + 1)
    if m == 0 and n == 0:
        return heat_deriv_recurrence(tab, 0)
    if m == 0 or n == 0:
        return sqrt(2.0) * heat_deriv_recurrence(tab, m + n)
    return heat_deriv_recurrence(tab, m + n) + heat_deriv_recurrence(tab, n - m)
