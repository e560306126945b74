"""Gauss-Jacobi rules and the spectral model of the truncated operator.

The L x L truncation of J is a symmetric tridiagonal matrix whose
eigenvalues are the Gauss nodes for the Jacobi measure.  The normalised
eigenvectors hold sqrt(w_j) p_m(x_j); every semigroup, square function and
multiplier in this package is evaluated on that decomposition.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .core import JacobiParams, build_coeff_table, jacobi_mass

__all__ = [
    "QuadratureRule",
    "SpectralModel",
    "gauss_jacobi_rule",
    "build_spectral_model",
    "spectral_model",
    "integrate",
    "policy_size",
    "dump_rule_csv",
    "NumericalFault",
    "Converged",
    "converge_in_L",
    "spectral_factor",
]


class NumericalFault(RuntimeError):
    """Internal numerical failure (eigensolver, non-convergent quadrature)."""


@dataclass(frozen=True)
class QuadratureRule:
    params: JacobiParams
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def L(self) -> int:
        return len(self.nodes)


@dataclass(frozen=True)
class SpectralModel:
    """Eigendecomposition of the L x L truncation of J.

    ``vectors[m, j] = sqrt(w_j) p_m(x_j)`` is orthogonal; ``basis`` is the
    same matrix with the sqrt(w_j) scaling removed.
    """

    rule: QuadratureRule
    lambdas: np.ndarray
    vectors: np.ndarray

    @property
    def L(self) -> int:
        return self.rule.L

    @property
    def params(self) -> JacobiParams:
        return self.rule.params

    @property
    def basis(self) -> np.ndarray:
        return self.vectors / np.sqrt(self.rule.weights)

    def transform(self, f) -> np.ndarray:
        """sqrt(w_j) F(x_j) for a sequence f, i.e. V^T f."""
        v = np.asarray(f)
        if v.ndim == 1:
            if len(v) > self.L and np.any(v[self.L:] != 0):
                raise ValueError(
                    f"sequence support exceeds model size {self.L}"
                )
            v = v[: self.L]
            return self.vectors[: len(v)].T @ v
        return self.vectors[: v.shape[0]].T @ v

    def heat_matrix(self, t: float, size: int | None = None, k: int = 0) -> np.ndarray:
        """Block [0, size)^2 of the k-th t-derivative of exp(t (J_L - I))."""
        size = self.L if size is None else size
        V = self.vectors[:size]
        return (V * spectral_factor(self.lambdas, t, k)) @ V.T


def spectral_factor(lam: np.ndarray, t: float, k: int = 0) -> np.ndarray:
    """(-lam)^k exp(-t lam)."""
    out = np.exp(-t * lam)
    if k:
        out = out * (-lam) ** k
    return out


def _eig(params: JacobiParams, L: int) -> tuple[np.ndarray, np.ndarray]:
    if L < 1:
        raise ValueError("rule size must be at least 1")
    table = build_coeff_table(params, L)
    try:
        x, V = eigh_tridiagonal(np.array(table.b[:L]), np.array(table.a[: L - 1]))
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalFault(f"tridiagonal eigensolver failed: {exc}") from exc
    V = V * np.where(V[0] < 0, -1.0, 1.0)
    return x, V


def gauss_jacobi_rule(params: JacobiParams, L: int) -> QuadratureRule:
    """L-point Gauss rule for (1 - x)^alpha (1 + x)^beta dx."""
    x, V = _eig(params, L)
    w = jacobi_mass(params) * V[0] ** 2
    x.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(params, x, w)


def build_spectral_model(params: JacobiParams, L: int) -> SpectralModel:
    x, V = _eig(params, L)
    w = jacobi_mass(params) * V[0] ** 2
    lam = 1.0 - x
    for arr in (x, w, lam, V):
        arr.setflags(write=False)
    return SpectralModel(QuadratureRule(params, x, w), lam, V)


@lru_cache(maxsize=32)
def spectral_model(params: JacobiParams, L: int) -> SpectralModel:
    """Cached ``build_spectral_model``; models are immutable."""
    return build_spectral_model(params, L)


def integrate(rule: QuadratureRule, g: Callable[[np.ndarray], np.ndarray]) -> float:
    """sum_j w_j g(x_j); ``g`` is called once on the node array."""
    return np.sum(rule.weights * np.asarray(g(rule.nodes)))


def policy_size(max_index: int) -> int:
    """Starting model size for quantities involving indices <= max_index."""
    return max(2 * max_index + 16, 64)


def dump_rule_csv(rule: QuadratureRule, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["j", "x_j", "w_j"])
        for j, (x, w) in enumerate(zip(rule.nodes, rule.weights), start=1):
            wr.writerow([j, repr(float(x)), repr(float(w))])


@dataclass(frozen=True)
class Converged:
    value: np.ndarray
    L: int
    change: float
    converged: bool


def converge_in_L(
    fn: Callable[[int], np.ndarray],
    L_init: int,
    L_max: int = 4096,
    tol: float = 1e-10,
) -> Converged:
    """Double the model size until ``fn(L)`` moves by < tol relative (max norm)."""
    L = L_init
    prev = np.asarray(fn(L))
    while 2 * L <= L_max:
        L *= 2
        cur = np.asarray(fn(L))
        scale = float(np.max(np.abs(cur))) if cur.size else 0.0
        change = float(np.max(np.abs(cur - prev))) if cur.size else 0.0
        if change <= tol * max(scale, np.finfo(float).tiny):
            return Converged(cur, L, change, True)
        prev = cur
    return Converged(prev, L, float("inf") if L == L_init else change, False)
