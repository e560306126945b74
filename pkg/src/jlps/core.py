"""Jacobi recurrence coefficients, orthonormal polynomials and the operator J.

The orthonormal Jacobi polynomials p_n for the measure
(1 - x)^alpha (1 + x)^beta dx on [-1, 1] satisfy

    x p_n(x) = a_{n-1} p_{n-1}(x) + b_n p_n(x) + a_n p_{n+1}(x),

and the same coefficients define the tridiagonal operator J acting on
sequences indexed by n >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import lgamma, log, exp, sqrt
from typing import Union

import numpy as np

__all__ = [
    "JacobiParams",
    "CoeffTable",
    "FiniteSequence",
    "as_sequence",
    "build_coeff_table",
    "eval_poly",
    "eval_basis",
    "apply_jacobi",
    "synthesize",
    "jacobi_mass",
    "CHEBYSHEV",
]


@dataclass(frozen=True)
class JacobiParams:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > -1 and self.beta > -1):
            raise ValueError(
                f"alpha and beta must exceed -1, got ({self.alpha}, {self.beta})"
            )

    @property
    def theorem_scope(self) -> bool:
        """True when both parameters are >= -1/2."""
        return self.alpha >= -0.5 and self.beta >= -0.5

    def as_tuple(self) -> tuple[float, float]:
        return (float(self.alpha), float(self.beta))


CHEBYSHEV = JacobiParams(-0.5, -0.5)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class CoeffTable:
    """Tabulated a_n, b_n and normalisations w_n for 0 <= n <= N."""

    params: JacobiParams
    a: np.ndarray
    b: np.ndarray
    w: np.ndarray

    @property
    def N(self) -> int:
        return len(self.a) - 1


@dataclass(frozen=True)
class FiniteSequence:
    """A finitely supported sequence f(0), ..., f(L-1).

    Entries past the stored length are zero.
    """

    entries: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        arr = np.asarray(self.entries)
        if arr.ndim != 1:
            raise ValueError("sequence entries must be one-dimensional")
        if not np.iscomplexobj(arr):
            arr = arr.astype(float)
        object.__setattr__(self, "entries", _frozen(arr.copy()))

    def __len__(self) -> int:
        return len(self.entries)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __getitem__(self, n):
        return self.entries[n]

    @property
    def support(self) -> int:
        """Largest index carrying a nonzero entry, -1 for the zero sequence."""
        nz = np.flatnonzero(self.entries)
        return int(nz[-1]) if nz.size else -1

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.entries) ** 2)))

    def padded(self, length: int) -> np.ndarray:
        """Entries as an array of exactly ``length``; raises if that would drop data."""
        if self.support >= length:
            raise ValueError(
                f"support {self.support} does not fit in length {length}"
            )
        out = np.zeros(length, dtype=self.entries.dtype)
        k = min(length, len(self.entries))
        out[:k] = self.entries[:k]
        return out

    @classmethod
    def unit(cls, n: int, length: int | None = None) -> "FiniteSequence":
        e = np.zeros(length if length is not None else n + 1)
        e[n] = 1.0
        return cls(e)


SequenceLike = Union[FiniteSequence, np.ndarray, list]


def as_sequence(f: SequenceLike) -> FiniteSequence:
    return f if isinstance(f, FiniteSequence) else FiniteSequence(np.asarray(f))


def jacobi_mass(params: JacobiParams) -> float:
    """Total mass 2^(a+b+1) B(a+1, b+1) of the Jacobi measure."""
    al, be = params.alpha, params.beta
    return exp(
        (al + be + 1) * log(2.0)
        + lgamma(al + 1) + lgamma(be + 1) - lgamma(al + be + 2)
    )


def build_coeff_table(params: JacobiParams, N: int) -> CoeffTable:
    """Recurrence coefficients and normalisations for indices 0..N."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    al, be = float(params.alpha), float(params.beta)
    s = al + be
    n = np.arange(N + 1, dtype=float)

    a = np.empty(N + 1)
    b = np.empty(N + 1)
    w = np.empty(N + 1)

    # n = 0 has its own closed forms; the generic ones divide by zero when s = -1.
    a[0] = 2.0 / (s + 2) * sqrt((al + 1) * (be + 1) / (s + 3))
    b[0] = (be - al) / (s + 2)
    w[0] = sqrt(1.0 / jacobi_mass(params))

    if N >= 1:
        m = n[1:]
        a[1:] = (2.0 / (2 * m + s + 2)) * np.sqrt(
            (m + 1) * (m + al + 1) * (m + be + 1) * (m + s + 1)
            / ((2 * m + s + 1) * (2 * m + s + 3))
        )
        if al == be:
            b[1:] = 0.0
        else:
            b[1:] = (be * be - al * al) / ((2 * m + s) * (2 * m + s + 2))
        lg = np.array(
            [
                lgamma(k + 1) + lgamma(k + s + 1)
                - lgamma(k + al + 1) - lgamma(k + be + 1)
                for k in m
            ]
        )
        w[1:] = np.sqrt((2 * m + s + 1) * np.exp(lg - (s + 1) * log(2.0)))

    return CoeffTable(params, _frozen(a), _frozen(b), _frozen(w))


def eval_basis(table: CoeffTable, L: int, x) -> np.ndarray:
    """Matrix P[m, i] = p_m(x_i) for 0 <= m < L by forward recurrence."""
    if L - 1 > table.N:
        raise IndexError(f"degree {L - 1} exceeds table size {table.N}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    P = np.empty((L, x.size))
    if L == 0:
        return P
    P[0] = table.w[0]
    if L > 1:
        P[1] = (x - table.b[0]) * P[0] / table.a[0]
    for m in range(1, L - 1):
        P[m + 1] = ((x - table.b[m]) * P[m] - table.a[m - 1] * P[m - 1]) / table.a[m]
    return P


def eval_poly(table: CoeffTable, n: int, x):
    """Orthonormal p_n(x); scalar in, scalar out."""
    if n > table.N:
        raise IndexError(f"n = {n} exceeds table size {table.N}")
    xs = np.asarray(x, dtype=float)
    if np.any(np.abs(xs) > 1):
        raise ValueError("x must lie in [-1, 1]")
    vals = eval_basis(table, n + 1, xs.ravel())[n]
    return float(vals[0]) if xs.ndim == 0 else vals.reshape(xs.shape)


def apply_jacobi(table: CoeffTable, f: SequenceLike, shifted: bool = False) -> FiniteSequence:
    """J f, or (J - I) f when ``shifted``; the support grows by one."""
    f = as_sequence(f)
    L = f.support + 2
    if L - 1 > table.N:
        raise ValueError(
            f"coefficient table of size {table.N} too small for support {f.support}"
        )
    L = max(L, 1)
    v = f.padded(L)
    a = table.a[:L]
    b = table.b[:L]
    out = b * v
    out[1:] += a[:-1] * v[:-1]
    out[:-1] += a[:-1] * v[1:]
    if shifted:
        out = out - v
    return FiniteSequence(out)


def synthesize(table: CoeffTable, f: SequenceLike, x):
    """F(x) = sum_m f(m) p_m(x)."""
    f = as_sequence(f)
    if f.support > table.N:
        raise IndexError("sequence support exceeds coefficient table")
    xs = np.asarray(x, dtype=float)
    L = max(f.support + 1, 1)
    P = eval_basis(table, L, xs.ravel())
    vals = f.padded(L) @ P
    return vals[0] if xs.ndim == 0 else vals.reshape(xs.shape)
