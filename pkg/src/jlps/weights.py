"""Discrete A_p weights, weighted norms and transplantation between Jacobi families."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .core import CHEBYSHEV, FiniteSequence, JacobiParams, as_sequence, build_coeff_table, eval_basis
from .halfline import ConvergenceError
from .quadrature import gauss_jacobi_rule, spectral_model

__all__ = [
    "DiscreteWeight",
    "ApReport",
    "ap_constant",
    "ap_verdict",
    "weighted_norm",
    "load_weight_table",
    "transplantation_kernel",
    "transplantation_matrix",
    "apply_transplantation",
    "CompositionReport",
    "composition_check",
]


@dataclass(frozen=True)
class DiscreteWeight:
    """Strictly positive weight on n >= 0: constant, (n+1)^s, or a table."""

    kind: str = "constant"
    s: float = 0.0
    c: float = 1.0
    table: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("constant", "power", "tabulated"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind == "constant" and not self.c > 0:
            raise ValueError("weight must be strictly positive")
        if self.kind == "tabulated" and (not self.table or min(self.table) <= 0):
            raise ValueError("tabulated weight needs strictly positive values")

    @classmethod
    def power(cls, s: float) -> "DiscreteWeight":
        return cls("power", s=float(s))

    def values(self, N: int) -> np.ndarray:
        """w(0), ..., w(N-1)."""
        n = np.arange(N, dtype=float)
        if self.kind == "constant":
            return np.full(N, self.c)
        if self.kind == "power":
            return (n + 1.0) ** self.s
        if N > len(self.table):
            raise IndexError(f"weight table holds {len(self.table)} values, need {N}")
        return np.asarray(self.table[:N], dtype=float)

    def describe(self) -> str:
        if self.kind == "power":
            return f"power({self.s:g})"
        if self.kind == "constant":
            return f"constant({self.c:g})"
        return f"tabulated[{len(self.table)}]"


def load_weight_table(path) -> DiscreteWeight:
    """Read a CSV with header ``n,w``; indices must be 0..N-1 in order."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    idx = [int(r["n"]) for r in rows]
    if idx != list(range(len(rows))):
        raise ValueError("weight table indices must run 0..N-1")
    return DiscreteWeight("tabulated", table=tuple(float(r["w"]) for r in rows))


@dataclass
class ApReport:
    p: float
    window_max: int
    windows: list[int]
    constant_by_window: list[float]
    verdict: str
    growth: list[float] = field(default_factory=list)


def _ap_running_sup(w: np.ndarray, p: float) -> np.ndarray:
    """C[m] = sup over 0 <= n <= m' <= m of the A_p bracket."""
    W = len(w)
    v = w ** (-1.0 / (p - 1.0))
    S1 = np.concatenate([[0.0], np.cumsum(w)])
    S2 = np.concatenate([[0.0], np.cumsum(v)])
    best = np.zeros(W)
    for n in range(W):
        m = np.arange(n, W)
        val = (S1[m + 1] - S1[n]) * (S2[m + 1] - S2[n]) ** (p - 1.0) / (m - n + 1.0) ** p
        np.maximum(best[n:], val, out=best[n:])
    return np.maximum.accumulate(best)


def ap_verdict(growth: Sequence[float], stable_tol: float = 0.01, grow_tol: float = 0.10) -> str:
    """Classify from relative growth per window doubling (oldest first)."""
    if len(growth) >= 2 and all(g < stable_tol for g in growth[-2:]):
        return "member"
    if len(growth) >= 3 and all(g > grow_tol for g in growth[-3:]):
        return "nonmember"
    return "inconclusive"


def ap_constant(
    w: DiscreteWeight,
    p: float,
    window_max: int,
    doublings: int = 4,
    stable_tol: float = 0.01,
    grow_tol: float = 0.10,
) -> ApReport:
    """A_p bracket sup over windows [n, m], m <= W, for W = window_max / 2^i.

    Prefix sums make every bracket O(1); the sweep is O(window_max^2).
    """
    if not 1 < p < math.inf:
        raise ValueError("p must satisfy 1 < p < inf")
    C = _ap_running_sup(w.values(window_max + 1), p)
    windows = sorted({max(1, window_max >> i) for i in range(doublings + 1)})
    consts = [float(C[W]) for W in windows]
    growth = [b / a - 1.0 for a, b in zip(consts[:-1], consts[1:])]
    return ApReport(p, window_max, windows, consts, ap_verdict(growth, stable_tol, grow_tol), growth)


def weighted_norm(f, w: DiscreteWeight, p: float) -> float:
    """(sum_m |f(m)|^p w(m))^(1/p)."""
    if not 1 <= p < math.inf:
        raise ValueError("p must satisfy 1 <= p < inf")
    v = np.asarray(f)
    return float(np.sum(np.abs(v) ** p * w.values(len(v))) ** (1.0 / p))


def _mixed(src: JacobiParams, dst: JacobiParams) -> JacobiParams:
    return JacobiParams((src.alpha + dst.alpha) / 2, (src.beta + dst.beta) / 2)


@lru_cache(maxsize=64)
def _tmat(src: JacobiParams, dst: JacobiParams, n_max: int, m_max: int, extra: int) -> np.ndarray:
    # integrand is a polynomial of degree n + m against the mixed weight, so a
    # Gauss rule with more than (n_max + m_max) / 2 points is exact
    L = (n_max + m_max) // 2 + 2 + extra
    rule = gauss_jacobi_rule(_mixed(src, dst), L)
    Pd = eval_basis(build_coeff_table(dst, n_max + 1), n_max + 1, rule.nodes)
    Ps = eval_basis(build_coeff_table(src, m_max + 1), m_max + 1, rule.nodes)
    K = (Pd * rule.weights) @ Ps.T
    K.setflags(write=False)
    return K


def transplantation_matrix(src: JacobiParams, dst: JacobiParams, n_max: int, m_max: int, extra: int = 0) -> np.ndarray:
    """K[n, m] = int p_n^dst p_m^src dmu_mixed for n <= n_max, m <= m_max."""
    return _tmat(src, dst, int(n_max), int(m_max), int(extra))


def transplantation_kernel(
    src: JacobiParams, dst: JacobiParams, n: int, m: int, L: int | None = None, tol: float = 1e-10
) -> float:
    """One kernel entry, checked against a rule of twice the size.

    ``L`` forces the base rule size; below (n + m) / 2 + 1 the rule is not
    exact and the doubling check may fail with ConvergenceError.
    """
    base = (n + m) // 2 + 2
    L = base if L is None else int(L)
    if L < 1:
        raise ValueError("rule size must be positive")
    a = float(transplantation_matrix(src, dst, n, m, L - base)[n, m]) if L >= base else _kernel_small(src, dst, n, m, L)
    b = float(transplantation_matrix(src, dst, n, m, 2 * L - base)[n, m]) if 2 * L >= base else _kernel_small(src, dst, n, m, 2 * L)
    if abs(a - b) >= tol:
        raise ConvergenceError(f"kernel ({n}, {m}) moved {abs(a - b):.3e} under rule doubling", b, abs(a - b))
    return b


def _kernel_small(src: JacobiParams, dst: JacobiParams, n: int, m: int, L: int) -> float:
    rule = gauss_jacobi_rule(_mixed(src, dst), L)
    pd = eval_basis(build_coeff_table(dst, n + 1), n + 1, rule.nodes)[n]
    ps = eval_basis(build_coeff_table(src, m + 1), m + 1, rule.nodes)[m]
    return float(np.sum(pd * ps * rule.weights))


def apply_transplantation(src: JacobiParams, dst: JacobiParams, f, L_out: int, tol: float = 1e-8) -> tuple[FiniteSequence, bool]:
    """(T f)(n) for n < L_out, plus a stability flag under rule doubling."""
    f = as_sequence(f)
    m_max = max(f.support, 0)
    internal = 4 * (m_max + 1) + 64
    v = f.padded(m_max + 1)
    out = transplantation_matrix(src, dst, L_out - 1, m_max) @ v
    L = (L_out - 1 + m_max) // 2 + 2
    doubled = transplantation_matrix(src, dst, L_out - 1, m_max, extra=max(L, internal)) @ v
    stable = bool(np.max(np.abs(out - doubled)) < tol)
    return FiniteSequence(out), stable


@dataclass
class CompositionReport:
    params: tuple[float, float]
    k: int
    t_grid: list[float]
    levels: list[int]
    discrepancy: list[float]
    monotone: bool
    final: float


def composition_check(
    params: JacobiParams,
    f,
    k: int,
    t_grid: Sequence[float],
    n_out: int = 16,
    levels: Sequence[int] = (64, 128, 256, 512),
) -> CompositionReport:
    """Compare G_{t,k} f with transplant -> Chebyshev G_{t,k} -> transplant back.

    The intermediate Chebyshev coefficient sums are cut at J for each J in
    ``levels``; the discrepancy is the max over n <= n_out and t in t_grid.
    """
    f = as_sequence(f)
    s = max(f.support, 0)
    v = f.padded(s + 1)
    big = max(256, 2 * (n_out + s) + 16)
    direct_model = spectral_model(params, big)
    disc = []
    for J in levels:
        fwd = transplantation_matrix(params, CHEBYSHEV, J - 1, s) @ v
        back = transplantation_matrix(CHEBYSHEV, params, n_out, J - 1)
        worst = 0.0
        for t in t_grid:
            margin = 64 + int(math.ceil(4 * t + 20 * math.sqrt(t)))
            cheb = spectral_model(CHEBYSHEV, J + margin)
            G = cheb.heat_matrix(t, J, k)
            comp = back @ (G @ fwd)
            direct = direct_model.heat_matrix(t, big, k)[: n_out + 1, : s + 1] @ v
            worst = max(worst, float(np.max(np.abs(comp - direct))))
        disc.append(worst)
    monotone = all(b <= a for a, b in zip(disc[:-1], disc[1:]))
    return CompositionReport(params.as_tuple(), k, list(map(float, t_grid)), list(levels), disc, monotone, disc[-1])
