"""Littlewood-Paley-Stein square functions on the spectral model.

On the model, d^k/dt^k W_t f(n) is a finite exponential sum
sum_j c_j exp(-t lam_j), so its B_k norm

    int_0^inf t^(2k-1) |sum_j c_j exp(-t lam_j)|^2 dt
        = sum_{j,l} c_j conj(c_l) Gamma(2k) / (lam_j + lam_l)^(2k)

is evaluated exactly.  Writing c_j = lam_j^k a_j, every term carries the
bounded factor (lam_j lam_l)^k / (lam_j + lam_l)^(2k) <= 4^-k, which keeps
the double sum well conditioned even when lam_min is tiny.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import JacobiParams, as_sequence
from .halfline import halfline_quad
from .quadrature import SpectralModel, spectral_model

__all__ = [
    "BkSpace",
    "GkResult",
    "gk_heat",
    "gk_poisson",
    "gk_all",
    "gk_heat_all",
    "gk_poisson_all",
    "gk_inner",
    "gk_numeric_oracle",
    "composed_square_norm",
    "bk_kernel_norm",
    "bk_norms",
    "kernel_amplitudes",
    "difference_amplitudes",
    "bk_norms_extrapolated",
    "schlafli_b1_oracle",
    "schlafli_term",
    "fit_loglog_slope",
    "gk_ratio",
]


@dataclass(frozen=True)
class BkSpace:
    """L^2((0, inf), t^(2k-1) dt)."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")

    def gram(self, rates: np.ndarray) -> np.ndarray:
        """Gamma(2k) (r_j r_l)^k / (r_j + r_l)^(2k)."""
        r = np.asarray(rates, dtype=float)
        k = self.k
        rr = np.sqrt(np.outer(r, r))
        return math.gamma(2 * k) * (rr / (r[:, None] + r[None, :])) ** (2 * k)

    def norm_sq_expsum(self, amp: np.ndarray, rates: np.ndarray, exact: bool = True) -> float:
        """Squared norm of sum_j rates_j^k amp_j exp(-t rates_j)."""
        # Hermitian form; the imaginary parts cancel in pairs
        terms = (self.gram(rates) * np.outer(amp, np.conj(amp))).real
        if exact:
            return math.fsum(terms.ravel())
        return float(terms.sum())


@dataclass(frozen=True)
class GkResult:
    n: int
    k: int
    value: float
    method: str
    model_size: int
    error: float = 0.0


def _amplitudes(model: SpectralModel, f) -> np.ndarray:
    f = as_sequence(f)
    if f.support >= model.L:
        raise ValueError(f"support {f.support} exceeds model size {model.L}")
    return model.transform(f.padded(model.L))


def _rates(model: SpectralModel, kind: str) -> np.ndarray:
    if kind == "heat":
        return model.lambdas
    if kind == "poisson":
        return np.sqrt(model.lambdas)
    raise ValueError(f"unknown semigroup {kind!r}")


def _gk_single(model, f, n, k, kind) -> GkResult:
    if not 0 <= n < model.L:
        raise IndexError(f"index {n} outside model of size {model.L}")
    amp = model.vectors[n] * _amplitudes(model, f)
    val = BkSpace(k).norm_sq_expsum(amp, _rates(model, kind))
    return GkResult(n, k, math.sqrt(max(val, 0.0)), "closed_form", model.L)


def gk_heat(model: SpectralModel, f, n: int, k: int) -> GkResult:
    """g_k(f)(n) for the heat semigroup, exact in t on the model."""
    return _gk_single(model, f, n, k, "heat")


def gk_poisson(model: SpectralModel, f, n: int, k: int) -> GkResult:
    """Poisson-semigroup square function; rates are sqrt(lam_j)."""
    return _gk_single(model, f, n, k, "poisson")


def _all_sq(model, A, B, k, kind):
    H = BkSpace(k).gram(_rates(model, kind))
    return np.sum((A @ H) * np.conj(B), axis=1).real


def gk_all(model: SpectralModel, f, k: int, kind: str = "heat") -> np.ndarray:
    """Square function at every index n < L."""
    A = model.vectors * _amplitudes(model, f)
    return np.sqrt(np.maximum(_all_sq(model, A, A, k, kind), 0.0))


def gk_heat_all(model: SpectralModel, f, k: int) -> np.ndarray:
    return gk_all(model, f, k, "heat")


def gk_poisson_all(model: SpectralModel, f, k: int) -> np.ndarray:
    return gk_all(model, f, k, "poisson")


def gk_inner(model: SpectralModel, f, h, k: int, kind: str = "heat") -> float:
    """Re sum_n int t^(2k-1) (d^k S_t f)(n) conj(d^k S_t h)(n) dt, summed index by index."""
    A = model.vectors * _amplitudes(model, f)
    B = model.vectors * _amplitudes(model, h)
    return math.fsum(_all_sq(model, A, B, k, kind))


def gk_ratio(k: int) -> float:
    """Gamma(2k) / 4^k."""
    return math.gamma(2 * k) / 4.0 ** k


def gk_numeric_oracle(model: SpectralModel, f, n: int, k: int, tol: float = 1e-12) -> GkResult:
    """g_k(f)(n) by numerical t-integration; used only as a cross-check."""
    if not 0 <= n < model.L:
        raise IndexError(f"index {n} outside model of size {model.L}")
    lam = model.lambdas
    c = model.vectors[n] * _amplitudes(model, f) * (-lam) ** k
    lam_min = float(lam.min())
    bound = float(np.abs(c).sum())

    # Tail past T: int_T^inf t^(2k-1) bound^2 e^{-2 t lam_min} dt.
    def tail(T):
        x = 2 * lam_min * T
        # upper incomplete gamma, via the series for integer order
        terms = sum(x ** i / math.factorial(i) for i in range(2 * k))
        return bound ** 2 * math.gamma(2 * k) * math.exp(-x) * terms / (2 * lam_min) ** (2 * k)

    T = 1.0 / lam_min
    while tail(T) > 1e-14 * max(bound ** 2, 1e-300) and T < 1e12:
        T *= 1.5

    def fn(t):
        return t ** (2 * k - 1) * np.abs(np.exp(-np.outer(t, lam)) @ c) ** 2

    res = halfline_quad(fn, 1e-9, T, breaks=(1.0 / float(lam.max()), 1.0, 1.0 / lam_min), tol=tol)
    val = float(res.value)
    return GkResult(n, k, math.sqrt(max(val, 0.0)), "numeric_t_integration", model.L, res.error)


def composed_square_norm(model: SpectralModel, f, n: int, k: int, tol: float = 1e-10) -> float:
    """int int t s^(2k-1) |d^(k+1) W_u f(n)|_{u=s+t}^2 ds dt, numerically.

    This is the squared B_k x B_1 norm of a first-order analysis applied to a
    k-th order one; it equals g_{k+1}(f)(n)^2 / ((2k+1)(2k)).
    """
    lam = model.lambdas
    c = model.vectors[n] * _amplitudes(model, f) * (-lam) ** (k + 1)
    hi = 60.0 / float(lam.min())
    brk = (1.0 / float(lam.max()), 1.0, 1.0 / float(lam.min()))

    def outer(t):
        et = np.exp(-np.outer(t, lam))

        def inner(s):
            es = np.exp(-np.outer(s, lam))
            vals = (es * c) @ et.T
            return s[:, None] ** (2 * k - 1) * np.abs(vals) ** 2

        return t * halfline_quad(inner, 1e-9, hi, breaks=brk, tol=tol).value

    return float(halfline_quad(outer, 1e-9, hi, breaks=brk, tol=tol).value)


def kernel_amplitudes(model: SpectralModel, pairs: Iterable[tuple[int, int]]) -> np.ndarray:
    """Rows V[m] V[n]: kernel entries (m, n) as exponential sums."""
    V = model.vectors
    return np.array([V[m] * V[n] for m, n in pairs])


def difference_amplitudes(model: SpectralModel, pairs: Iterable[tuple[int, int]], axis: int = 0) -> np.ndarray:
    """Rows for G(m+1, n) - G(m, n) (axis 0) or G(m, n+1) - G(m, n) (axis 1)."""
    V = model.vectors
    rows = []
    for m, n in pairs:
        if axis == 0:
            rows.append((V[m + 1] - V[m]) * V[n])
        else:
            rows.append(V[m] * (V[n + 1] - V[n]))
    return np.array(rows)


def bk_norms(model: SpectralModel, amps: np.ndarray, k: int) -> np.ndarray:
    """B_k norms of the k-th t-derivative of each amplitude row."""
    H = BkSpace(k).gram(model.lambdas)
    sq = np.sum((amps @ H) * np.conj(amps), axis=1).real
    return np.sqrt(np.maximum(sq, 0.0))


def bk_kernel_norm(model: SpectralModel, m: int, n: int, k: int) -> float:
    """|| d^k/dt^k K_t(m, n) ||_{B_k} on the model."""
    for i in (m, n):
        if not 0 <= i < model.L:
            raise IndexError(f"index {i} outside model of size {model.L}")
    amp = model.vectors[m] * model.vectors[n]
    return math.sqrt(max(BkSpace(k).norm_sq_expsum(amp, model.lambdas), 0.0))


def bk_norms_extrapolated(
    params: JacobiParams,
    pairs: Sequence[tuple[int, int]],
    k: int = 1,
    L: int = 1024,
    difference: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """B_k norms with Richardson extrapolation in the model size.

    Truncating J at size L changes the kernel only once the diffusion reaches
    the cut (t ~ L^2), so squared norms converge like L^-2 rather than
    spectrally.  Returns (extrapolated, raw at 2L).
    """
    out = []
    for size in (L, 2 * L):
        model = spectral_model(params, size)
        if difference is None:
            amps = kernel_amplitudes(model, pairs)
        else:
            amps = difference_amplitudes(model, pairs, difference)
        out.append(bk_norms(model, amps, k) ** 2)
    extrap = (4.0 * out[1] - out[0]) / 3.0
    return np.sqrt(np.maximum(extrap, 0.0)), np.sqrt(out[1])


def fit_loglog_slope(x, y) -> tuple[float, float]:
    """Least-squares slope and intercept of log y against log x."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    slope, intercept = np.polyfit(lx, ly, 1)
    return float(slope), float(intercept)


# Double integrals over the unit square, written as
#   pref * int int poly(u, v) (uv)^a ((1-u)(1-v))^(n-3/2) / (u+v)^b du dv,
# with log-prefactor, a, b as functions of n.  For I2 the prefactor is 4:
# the t-integral of t |I_{2,t}(n)|^2 gives Gamma(2n) / (pi Gamma(n-1/2)^2)
# times 4 after the change of variables.
_LOG_PI = math.log(math.pi)
_SCHLAFLI = {
    "I1": (2, lambda n: math.lgamma(2 * n - 2), lambda n: n - 1.5, lambda n: 2 * n - 2,
           lambda u, v: (2 * u - 1) * (2 * v - 1)),
    "I2": (2, lambda n: math.log(4) + math.lgamma(2 * n), lambda n: n + 0.5, lambda n: 2 * n,
           None),
    "J1": (4, lambda n: math.log(4) + math.lgamma(2 * n - 4), lambda n: n - 1.5, lambda n: 2 * n - 4,
           lambda u, v: (1 - 2 * u) * (1 - 2 * v)),
    "J2": (4, lambda n: math.log(4) + math.lgamma(2 * n - 2), lambda n: n - 0.5, lambda n: 2 * n - 2,
           lambda u, v: (2 * u - 1) * (2 * v - 1)),
    "J3": (4, lambda n: math.log(16) + math.lgamma(2 * n), lambda n: n + 1.5, lambda n: 2 * n,
           None),
}


def _square_integral(n, logpref, a, b, poly, n_theta, n_s):
    gx, gw = np.polynomial.legendre.leggauss(n_theta)
    # theta in (0, 1/2]; the integrand is symmetric under u <-> v
    th = 0.25 * (gx + 1)
    wth = 0.25 * gw
    sx, sw = np.polynomial.legendre.leggauss(n_s)
    frac = np.concatenate([[0.0], np.geomspace(1e-7, 1.0, 48)])
    c = n - 1.5
    e = 2 * a - b + 1
    total = []
    for T, WT in zip(th, wth):
        smax = 1.0 / (1.0 - T)
        edges = smax * frac
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        s = (mid[:, None] + half[:, None] * sx).ravel()
        ws = (half[:, None] * sw).ravel()
        u, v = s * T, s * (1 - T)
        logmag = (
            logpref + e * np.log(s) + a * math.log(T * (1 - T))
            + c * (np.log1p(-u) + np.log1p(-v))
        )
        vals = np.exp(logmag)
        if poly is not None:
            vals = vals * poly(u, v)
        total.append(WT * math.fsum(ws * vals))
    return 2.0 * math.fsum(total)


def schlafli_b1_oracle(n: int, which: str, n_theta: int = 160, n_s: int = 24) -> float:
    """Squared B_1 norm of a Schlafli-representation term by 2-D quadrature.

    ``which`` is one of I1, I2 (n >= 2) and J1, J2, J3 (n >= 4).
    """
    if which not in _SCHLAFLI:
        raise ValueError(f"unknown term {which!r}")
    nmin, lp, a, b, poly = _SCHLAFLI[which]
    if n < nmin:
        raise ValueError(f"{which} requires n >= {nmin}")
    logpref = lp(n) - _LOG_PI - 2 * math.lgamma(n - 0.5)
    return _square_integral(n, logpref, a(n), b(n), poly, n_theta, n_s)


_TERM_SHAPES = {
    # power of t, polynomial in s multiplying (1 - s^2)^(n - 3/2)
    "I1": (-2, lambda s: s),
    "I2": (-1, lambda s: (1 + s) ** 2),
    "J1": (-3, lambda s: s),
    "J2": (-2, lambda s: s * (1 + s)),
    "J3": (-1, lambda s: (1 + s) ** 3),
}


def schlafli_term(n: int, which: str, t: float, tol: float = 1e-12) -> float:
    """The Schlafli-type integral term itself at time t > 0.

    Integrates over u = 1 + s in log u, with the integrand rescaled by its
    peak value so the panel-doubling tolerance is relative.
    """
    if which not in _TERM_SHAPES:
        raise ValueError(f"unknown term {which!r}")
    if t <= 0:
        raise ValueError("t must be positive")
    shift, poly = _TERM_SHAPES[which]
    c = n - 1.5
    peak = min(c / t, 1.0)
    log_peak = c * math.log(peak * (2 - peak)) - t * peak

    def fn(u):
        return np.exp(c * np.log(u * (2 - u)) - t * u - log_peak) * poly(u - 1)

    # below 1e-8 peak the factor u^c leaves less than 1e-8^(c+1) of the mass
    res = halfline_quad(fn, 1e-8 * peak, 2.0, breaks=(peak,), tol=tol)
    logc = (n + shift) * math.log(t) - 0.5 * _LOG_PI - (n - 1) * math.log(2) - math.lgamma(n - 0.5)
    return float(math.exp(logc + log_peak) * res.value)
