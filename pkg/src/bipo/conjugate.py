"""Legendre-Fenchel conjugation on grids, discrete convexity and subgradients."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import ConvexityError, EmptyDomainError
from .extgrid import INF, Grid1D, SampledFn

__all__ = [
    "SlopeInterval",
    "conjugate",
    "conjugate_with_argmax",
    "biconjugate",
    "default_convex_tol",
    "convexity_defect",
    "is_convex",
    "subdifferential",
    "in_subdifferential",
    "fenchel_gap",
]


def conjugate_with_argmax(f: SampledFn, ygrid: Grid1D, method: str = "brute", backend=None):
    """Grid conjugate ``max_i (y_j x_i - f_i)`` and the smallest maximizing index.

    ``method="fast"`` runs a linear-time sweep that relies on the argmax
    being monotone in ``y``; it requires ``f`` to be discretely convex and
    returns the same bits as the brute-force scan on such inputs.
    """
    if not f.finite.any():
        raise EmptyDomainError("cannot conjugate a function with empty domain")
    k = _backend.get(backend)
    x = np.ascontiguousarray(f.grid.points)
    vals = np.ascontiguousarray(f.values)
    y = np.ascontiguousarray(ygrid.points)
    if method == "brute":
        out, arg = k.conjugate_brute(x, vals, y, _backend.num_threads())
    elif method == "fast":
        if not is_convex(f, tol=0.0):
            raise ConvexityError("fast conjugation needs a discretely convex input")
        out, arg = k.conjugate_fast(x, vals, y)
    else:
        raise ValueError(f"unknown conjugation method {method!r}")
    return SampledFn(ygrid, out), arg


def conjugate(f: SampledFn, ygrid: Grid1D, method: str = "brute", backend=None) -> SampledFn:
    return conjugate_with_argmax(f, ygrid, method, backend)[0]


def biconjugate(f: SampledFn, ygrid: Grid1D, method: str = "brute") -> SampledFn:
    """``f**`` back on ``f``'s own grid, through the dual grid ``ygrid``."""
    return conjugate(conjugate(f, ygrid, method), f.grid, method)


def default_convex_tol(values) -> float:
    v = np.asarray(values, dtype=np.float64)
    fin = v[np.isfinite(v)]
    scale = float(np.abs(fin).max()) if fin.size else 0.0
    return 1e-9 * (1.0 + scale)


def convexity_defect(values) -> tuple[float, bool]:
    """Most negative second difference over consecutive finite triples, and domain contiguity.

    The defect is 0.0 when every second difference is nonnegative.
    """
    v = np.asarray(values, dtype=np.float64)
    fin = np.flatnonzero(np.isfinite(v))
    if fin.size == 0:
        return 0.0, True
    contiguous = bool(fin[-1] - fin[0] + 1 == fin.size)
    if not contiguous or fin.size < 3:
        return 0.0, contiguous
    seg = v[fin[0]:fin[-1] + 1]
    d2 = seg[:-2] - 2.0 * seg[1:-1] + seg[2:]
    return float(min(0.0, d2.min())), True


def is_convex(f, tol: float | None = None) -> bool:
    """Discrete convexity: contiguous finite domain and second differences >= -tol."""
    values = f.values if isinstance(f, SampledFn) else f
    if tol is None:
        tol = default_convex_tol(values)
    worst, contiguous = convexity_defect(values)
    return contiguous and worst >= -tol


@dataclass(frozen=True)
class SlopeInterval:
    """Closed interval of grid subgradients; ``-inf``/``+inf`` mark an open side."""

    lo: float
    hi: float

    @property
    def is_empty(self) -> bool:
        return self.lo > self.hi

    def contains(self, u: float, slack: float = 0.0) -> bool:
        return self.lo - slack <= u <= self.hi + slack

    def __iter__(self):
        yield self.lo
        yield self.hi


def _one_sided_slopes(values: np.ndarray, i: int, h: float) -> tuple[float, float]:
    n = values.shape[0]
    lo = -INF
    hi = INF
    if i > 0 and math.isfinite(values[i - 1]):
        lo = (values[i] - values[i - 1]) / h
    if i < n - 1 and math.isfinite(values[i + 1]):
        hi = (values[i + 1] - values[i]) / h
    return lo, hi


def subdifferential(f: SampledFn, i: int, tol: float | None = None) -> SlopeInterval:
    """Grid subdifferential at index ``i``: [left quotient, right quotient].

    A side facing the grid end or a +inf neighbour is unbounded, since the
    grid only sees slopes up to the truncated domain.
    """
    if not math.isfinite(f.values[i]):
        raise ValueError(f"f is +inf at index {i}; the subdifferential is defined on dom f")
    if not is_convex(f, tol):
        raise ConvexityError("subdifferential intervals need a discretely convex function")
    lo, hi = _one_sided_slopes(f.values, i, f.grid.h)
    return SlopeInterval(lo, hi)


def fenchel_gap(f: SampledFn, f_conj: SampledFn, i: int, j: int) -> float:
    """``f*(y_j) - (y_j x_i - f(x_i))``, the Fenchel gap; +inf off the domain.

    The bracket is the term the grid conjugate maximizes, so the gap of a
    computed conjugate is exactly nonnegative.
    """
    a = f.values[i]
    if not math.isfinite(a):
        return INF
    return f_conj.values[j] - (f_conj.grid.points[j] * f.grid.points[i] - a)


def in_subdifferential(f: SampledFn, f_conj: SampledFn, i: int, j: int, tol: float = 0.0) -> bool:
    """``y_j in df(x_i)`` tested through the Fenchel equality, up to ``tol``.

    The same test stands for ``x_i in df*(y_j)``: the two are equivalent to
    a zero Fenchel gap.
    """
    return fenchel_gap(f, f_conj, i, j) <= tol
