"""Quadrature on (0, inf) after the substitution u = exp(y).

Integrands here decay exponentially at one end of the half line and are
at most algebraically singular at the other, so in the log variable they
are smooth bumps.  The y-range is cut at the caller's break points, each
piece gets a composite Gauss-Legendre rule, and the panel count doubles
until two successive estimates agree.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .quadrature import NumericalFault

__all__ = ["HalflineResult", "ConvergenceError", "halfline_quad"]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


class ConvergenceError(NumericalFault):
    def __init__(self, message: str, estimate, error: float):
        super().__init__(f"{message} (achieved error estimate {error:.3e})")
        self.estimate = estimate
        self.error = error


@dataclass(frozen=True)
class HalflineResult:
    value: np.ndarray
    error: float
    panels: int


def _nodes(edges: np.ndarray, per_piece: int) -> tuple[np.ndarray, np.ndarray]:
    ys, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        cuts = np.linspace(lo, hi, per_piece + 1)
        half = 0.5 * np.diff(cuts)
        mid = 0.5 * (cuts[:-1] + cuts[1:])
        ys.append((mid[:, None] + half[:, None] * _GL_X).ravel())
        ws.append((half[:, None] * _GL_W).ravel())
    return np.concatenate(ys), np.concatenate(ws)


def halfline_quad(
    fn: Callable[[np.ndarray], np.ndarray],
    u_lo: float,
    u_hi: float,
    breaks: Sequence[float] = (),
    tol: float = 1e-10,
    start_panels: int = 4,
    max_panels: int = 4096,
) -> HalflineResult:
    """Integrate ``fn(u) du`` over [u_lo, u_hi] in the variable y = log u.

    ``fn`` receives a 1-D array of u values and returns an array whose first
    axis runs over those values; further axes are integrated independently.
    Convergence means max |I_2N - I_N| <= tol * max(1, max |I_2N|).
    """
    if not (0 < u_lo < u_hi):
        raise ValueError("need 0 < u_lo < u_hi")
    y_lo, y_hi = np.log(u_lo), np.log(u_hi)
    inner = sorted(float(np.log(b)) for b in breaks if u_lo < b < u_hi)
    edges = np.array([y_lo, *inner, y_hi])

    def estimate(per_piece):
        y, w = _nodes(edges, per_piece)
        u = np.exp(y)
        vals = np.asarray(fn(u))
        jac = (w * u).reshape((-1,) + (1,) * (vals.ndim - 1))
        return np.sum(vals * jac, axis=0)

    n = start_panels
    prev = estimate(n)
    while 2 * n <= max_panels:
        n *= 2
        cur = estimate(n)
        err = float(np.max(np.abs(cur - prev)))
        if err <= tol * max(1.0, float(np.max(np.abs(cur)))):
            return HalflineResult(cur, err, n)
        prev = cur
    raise ConvergenceError("half-line quadrature did not converge", prev, err)
