"""Heat and Poisson kernels of -(J - I) on the spectral model."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import sqrt, pi

import numpy as np

from .core import FiniteSequence, JacobiParams, as_sequence
from .halfline import halfline_quad
from .quadrature import SpectralModel, spectral_factor

__all__ = [
    "HeatKernelQuery",
    "heat_kernel",
    "poisson_kernel",
    "poisson_kernel_matrix",
    "poisson_factor",
    "apply_semigroup",
    "dump_kernel_grid",
]


@dataclass(frozen=True)
class HeatKernelQuery:
    params: JacobiParams
    t: float
    m: int
    n: int
    k: int = 0

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("t must be nonnegative")
        if self.k < 0:
            raise ValueError("derivative order must be nonnegative")


def _check_index(model: SpectralModel, *idx: int) -> None:
    for i in idx:
        if not 0 <= i < model.L:
            raise IndexError(f"index {i} outside model of size {model.L}")


def heat_kernel(model: SpectralModel, q: HeatKernelQuery) -> float:
    """k-th t-derivative of K_t(m, n) on the model."""
    _check_index(model, q.m, q.n)
    V = model.vectors
    return float(np.dot(V[q.m] * V[q.n], spectral_factor(model.lambdas, q.t, q.k)))


def poisson_factor(lam: np.ndarray, t: float, k: int = 0) -> np.ndarray:
    """d^k/dt^k exp(-t sqrt(lam))."""
    r = np.sqrt(lam)
    out = np.exp(-t * r)
    if k:
        out = out * (-r) ** k
    return out


def _subordinated_factor(lam: np.ndarray, t: float, tol: float) -> tuple[np.ndarray, float]:
    """(1/sqrt(pi)) int_0^inf e^{-u} u^{-1/2} exp(-t^2 lam / 4u) du, per lam."""
    s2 = t * t / 4.0

    def fn(u):
        weight = np.exp(-u) / np.sqrt(pi * u)
        return weight[:, None] * np.exp(-np.outer(s2 / u, lam))

    # e^{-u} is below 1e-26 past u = 60; below u = 1e-24 the integrand,
    # bounded by u^{-1/2}, leaves less than 2e-12 of mass.
    res = halfline_quad(fn, 1e-24, 60.0, breaks=(s2,) if s2 > 0 else (), tol=tol)
    return res.value, res.error


def poisson_kernel_matrix(
    model: SpectralModel, t: float, size: int, via: str = "direct", tol: float = 1e-11
) -> np.ndarray:
    """Block [0, size)^2 of the Poisson kernel at time t."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    _check_index(model, size - 1)
    V = model.vectors[:size]
    if via == "direct":
        fac = poisson_factor(model.lambdas, t)
    elif via == "subordination":
        if t == 0:
            fac = np.ones(model.L)
        else:
            fac, _ = _subordinated_factor(model.lambdas, t, tol)
    else:
        raise ValueError(f"unknown evaluation path {via!r}")
    return (V * fac) @ V.T


def poisson_kernel(model: SpectralModel, t: float, m: int, n: int, via: str = "direct") -> float:
    """Poisson kernel entry, either directly or through Bochner subordination."""
    _check_index(model, m, n)
    if t < 0:
        raise ValueError("t must be nonnegative")
    V = model.vectors
    if via == "direct":
        fac = poisson_factor(model.lambdas, t)
    elif via == "subordination":
        if t == 0:
            return float(np.dot(V[m], V[n]))
        s2 = t * t / 4.0
        q = V[m] * V[n]

        def fn(u):
            return np.exp(-u) / np.sqrt(pi * u) * (np.exp(-np.outer(s2 / u, model.lambdas)) @ q)

        return float(halfline_quad(fn, 1e-24, 60.0, breaks=(s2,), tol=1e-11).value)
    else:
        raise ValueError(f"unknown evaluation path {via!r}")
    return float(np.dot(V[m] * V[n], fac))


def apply_semigroup(
    model: SpectralModel, f, t: float, kind: str = "heat", k: int = 0
) -> FiniteSequence:
    """k-th t-derivative of W_t f (heat) or P_t f (poisson), on the model."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    f = as_sequence(f)
    if f.support >= model.L:
        raise ValueError(f"support {f.support} exceeds model size {model.L}")
    if kind == "heat":
        fac = spectral_factor(model.lambdas, t, k)
    elif kind == "poisson":
        fac = poisson_factor(model.lambdas, t, k)
    else:
        raise ValueError(f"unknown semigroup {kind!r}")
    coef = model.transform(f.padded(model.L))
    return FiniteSequence(model.vectors @ (fac * coef))


def dump_kernel_grid(rows, path) -> None:
    """rows: iterable of (t, m, n, value, path)."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "m", "n", "value", "path"])
        for t, m, n, v, p in rows:
            wr.writerow([repr(float(t)), int(m), int(n), repr(float(v)), p])
