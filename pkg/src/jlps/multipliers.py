"""Spectral multipliers M(-(J - I)) on the model.

A symbol is only ever evaluated at the model's spectral points
lam_j = 1 - x_j, which lie strictly inside (0, 2); M(0) is never needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import gamma as cgamma

from .core import FiniteSequence, JacobiParams, as_sequence
from .halfline import halfline_quad
from .quadrature import SpectralModel, spectral_model
from .squarefn import gk_all

__all__ = [
    "MultiplierSymbol",
    "laplace_type",
    "imaginary_power",
    "tabulated",
    "named_density",
    "laplace_symbol",
    "apply_multiplier",
    "multiplier_with_doubling",
    "laplace_multiplier_heatpath",
    "BoundReport",
    "gk_multiplier_bound_check",
    "MarcinkiewiczReport",
    "marcinkiewicz_check",
    "SymbolError",
]


class SymbolError(ValueError):
    pass


Density = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class MultiplierSymbol:
    kind: str
    M: Callable[[np.ndarray], np.ndarray]
    a: Density | None = None
    a_sup: float | None = None
    gamma: float | None = None
    breaks: tuple[float, ...] = field(default_factory=tuple)

    def __call__(self, x):
        return self.M(np.asarray(x, dtype=float))


def laplace_symbol(a: Density, x, breaks: Sequence[float] = (), tol: float = 1e-12):
    """x int_0^inf exp(-x t) a(t) dt for x > 0 (scalar or array)."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs <= 0):
        raise ValueError("Laplace symbols are evaluated at x > 0 only")

    def fn(t):
        return np.exp(-np.outer(t, xs)) * np.asarray(a(t))[:, None]

    # a is bounded: the piece below 1e-17 / max x contributes < 1e-17 sup|a|.
    lo = 1e-17 / float(xs.max())
    hi = 60.0 / float(xs.min())
    res = halfline_quad(fn, lo, hi, breaks=tuple(breaks) + (1.0,), tol=tol)
    out = xs * res.value
    return out[0] if np.ndim(x) == 0 else out


def laplace_type(a: Density, a_sup: float, M: Callable | None = None, breaks=()) -> MultiplierSymbol:
    """Symbol from a bounded density; without a closed form M is computed numerically."""
    if M is None:
        def M(x, _a=a, _b=tuple(breaks)):
            return laplace_symbol(_a, x, _b)
    return MultiplierSymbol("laplace_type", M, a, float(a_sup), None, tuple(breaks))


def imaginary_power(gamma: float) -> MultiplierSymbol:
    """M(x) = x^(i gamma), with density t^(-i gamma) / Gamma(1 - i gamma)."""
    g = float(gamma)
    norm = cgamma(1 - 1j * g)

    def a(t):
        return np.exp(-1j * g * np.log(t)) / norm

    def M(x):
        return np.exp(1j * g * np.log(x))

    return MultiplierSymbol("imaginary_power", M, a, float(1 / abs(norm)), g)


def tabulated(xs, values) -> MultiplierSymbol:
    xs = np.asarray(xs, dtype=float)
    vals = np.asarray(values)
    if np.iscomplexobj(vals):
        def M(x):
            return np.interp(x, xs, vals.real) + 1j * np.interp(x, xs, vals.imag)
    else:
        def M(x):
            return np.interp(x, xs, vals)
    return MultiplierSymbol("tabulated", M)


def named_density(name: str, **kw) -> MultiplierSymbol:
    """Built-in symbols: one, exp, step (t0), power (gamma)."""
    if name == "one":
        return laplace_type(lambda t: np.ones_like(t), 1.0, lambda x: np.ones_like(x))
    if name == "exp":
        return laplace_type(lambda t: np.exp(-t), 1.0, lambda x: x / (1 + x))
    if name == "step":
        t0 = float(kw.get("t0", 1.0))
        return laplace_type(
            lambda t: (t < t0).astype(float), 1.0, lambda x: 1 - np.exp(-x * t0), breaks=(t0,)
        )
    if name == "power":
        return imaginary_power(float(kw.get("gamma", 1.0)))
    raise SymbolError(f"unknown density {name!r}")


def _symbol_values(model: SpectralModel, sym: MultiplierSymbol) -> np.ndarray:
    try:
        m = np.asarray(sym(model.lambdas))
    except Exception as exc:
        raise SymbolError(f"symbol evaluation failed: {exc}") from exc
    if m.shape != model.lambdas.shape or not np.all(np.isfinite(m)):
        raise SymbolError("symbol is not finite at every spectral point")
    return m


def apply_multiplier(model: SpectralModel, sym: MultiplierSymbol, f) -> FiniteSequence:
    """T_M f on the model; entries n >= L of the true T_M f are dropped."""
    f = as_sequence(f)
    if f.support >= model.L:
        raise ValueError(f"support {f.support} exceeds model size {model.L}")
    m = _symbol_values(model, sym)
    coef = model.transform(f.padded(model.L))
    return FiniteSequence(model.vectors @ (m * coef))


def multiplier_with_doubling(
    params: JacobiParams, sym: MultiplierSymbol, f, L: int, tol: float = 1e-8
) -> tuple[FiniteSequence, bool]:
    """T_M f at size L and whether the kept entries move < tol at size 2L."""
    a = apply_multiplier(spectral_model(params, L), sym, f).entries
    b = apply_multiplier(spectral_model(params, 2 * L), sym, f).entries[:L]
    return FiniteSequence(a), bool(np.max(np.abs(a - b)) < tol)


def laplace_multiplier_heatpath(model: SpectralModel, a: Density, f, breaks=(), tol: float = 1e-12) -> FiniteSequence:
    """T_M f = -int_0^inf a(s) d/ds W_s f ds, integrated in s per spectral point."""
    f = as_sequence(f)
    if f.support >= model.L:
        raise ValueError(f"support {f.support} exceeds model size {model.L}")
    lam = model.lambdas
    coef = model.transform(f.padded(model.L))

    # -d/ds exp(-s lam) = lam exp(-s lam)
    def fn(s):
        return np.asarray(a(s))[:, None] * (lam * np.exp(-np.outer(s, lam)))

    lo = 1e-17 / float(lam.max())
    hi = 60.0 / float(lam.min())
    res = halfline_quad(fn, lo, hi, breaks=tuple(breaks) + (1.0,), tol=tol)
    return FiniteSequence(model.vectors @ (res.value * coef))


@dataclass
class BoundReport:
    R: float
    R_half: float
    per_sequence: list[float]
    skipped: int
    stable: bool
    finite: bool


def gk_multiplier_bound_check(
    model: SpectralModel, sym: MultiplierSymbol, ensemble: Sequence, growth_tol: float = 0.1
) -> BoundReport:
    """max over the ensemble and n of g_1(T_M f)(n) / g_2(f)(n)."""
    if not ensemble:
        raise ValueError("ensemble must be nonempty")
    per, skipped = [], 0
    for f in ensemble:
        g1 = gk_all(model, apply_multiplier(model, sym, f), 1)
        g2 = gk_all(model, f, 2)
        zero2 = g2 <= 1e-300
        if np.any(zero2 & (g1 > 1e-300)):
            raise ArithmeticError("g_2(f)(n) = 0 while g_1(T_M f)(n) > 0")
        skipped += int(np.sum(zero2))
        per.append(float(np.max(g1[~zero2] / g2[~zero2])) if np.any(~zero2) else 0.0)
    half = max(1, len(per) // 2)
    R, R_half = max(per), max(per[:half])
    return BoundReport(
        R=R,
        R_half=R_half,
        per_sequence=per,
        skipped=skipped,
        stable=R <= (1 + growth_tol) * R_half,
        finite=math.isfinite(R),
    )


@dataclass
class MarcinkiewiczReport:
    constants: dict[int, float]
    grid: np.ndarray


def _fd_weights(order: int, offsets: np.ndarray) -> np.ndarray:
    n = len(offsets)
    A = np.vander(offsets, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(A, rhs)


def marcinkiewicz_check(sym: MultiplierSymbol, kmax: int = 4, points: int = 200) -> MarcinkiewiczReport:
    """Estimates sup_x |x^k M^(k)(x)| on a log grid in (0, 2), k = 1..kmax.

    Derivatives use 9-point central stencils with step proportional to x.
    """
    if not 1 <= kmax <= 4:
        raise ValueError("kmax must be between 1 and 4")
    offsets = np.arange(-4, 5, dtype=float)
    rel = 0.02
    xs = np.geomspace(1e-3, 2.0 / (1 + 4 * rel), points)
    h = rel * xs
    samples = np.asarray(sym((xs[:, None] + h[:, None] * offsets).ravel())).reshape(points, -1)
    # stencil weights sum to zero for k >= 1, so centring makes constants exact
    samples = samples - samples[:, 4:5]
    out = {}
    for k in range(1, kmax + 1):
        w = _fd_weights(k, offsets)
        deriv = samples @ w / h ** k
        out[k] = float(np.max(np.abs(xs ** k * deriv)))
    return MarcinkiewiczReport(out, xs)
