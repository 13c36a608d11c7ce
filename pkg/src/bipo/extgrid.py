"""Uniform grids, extended-real samples and the duality product.

Extended reals are stored as float64 with ``math.inf`` standing for +inf.
-inf and NaN are rejected wherever values enter the package.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping

import numpy as np

from .errors import ConfigError, EmptyDomainError

INF = math.inf

__all__ = [
    "INF",
    "Grid1D",
    "SampledFn",
    "make_grid",
    "pairing",
    "sample",
    "ext_add",
    "check_ext",
    "format_real",
    "parse_real",
    "read_values_csv",
    "write_values_csv",
]


@dataclass(frozen=True)
class Grid1D:
    """Uniform sample ``lo = x_0 < x_1 < ... < x_{n-1} = hi`` of a closed interval."""

    lo: float
    hi: float
    n: int
    points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lo, hi, n = self.lo, self.hi, self.n
        if isinstance(n, bool) or int(n) != n:
            raise ConfigError(f"grid size must be an integer, got {n!r}")
        n = int(n)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ConfigError("grid ends must be finite")
        if n < 2:
            raise ConfigError(f"grid needs n >= 2 points, got {n}")
        if not lo < hi:
            raise ConfigError(f"grid needs lo < hi, got lo={lo}, hi={hi}")
        i = np.arange(n, dtype=np.float64)
        # weighted form keeps integer-valued ends (and points like 1.0) exact
        pts = (lo * (n - 1 - i) + hi * i) / (n - 1)
        pts[0], pts[-1] = lo, hi
        pts.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "lo", float(lo))
        object.__setattr__(self, "hi", float(hi))
        object.__setattr__(self, "points", pts)

    @property
    def h(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    def __len__(self) -> int:
        return self.n

    def index_of(self, value: float, rtol: float = 1e-9) -> int:
        """Index of the grid point equal to ``value`` up to ``rtol * h``."""
        i = self.snap(value)
        if abs(self.points[i] - value) > rtol * self.h * (1 + abs(value)):
            raise ConfigError(f"{value!r} is not a point of {self}")
        return i

    def snap(self, value: float) -> int:
        """Nearest grid index, ties toward the lower index; clamps to the ends."""
        t = (value - self.lo) / self.h
        k = math.ceil(t - 0.5)
        return min(max(k, 0), self.n - 1)

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "n": self.n}


def make_grid(lo: float, hi: float, n: int) -> Grid1D:
    return Grid1D(float(lo), float(hi), n)


def pairing(x, y):
    """Duality product of the one-dimensional model, ``<x, y> = x * y``."""
    return x * y


def check_ext(values) -> np.ndarray:
    """Validate an array of extended reals and return it as float64."""
    arr = np.asarray(values, dtype=np.float64)
    if np.isnan(arr).any():
        raise ValueError("NaN is not an extended real value")
    if np.isneginf(arr).any():
        raise ValueError("-inf is not allowed; the value set is R u {+inf}")
    return arr


def ext_add(a: float, b: float) -> float:
    """Addition on R u {+inf}: +inf absorbs."""
    if a == INF or b == INF:
        return INF
    s = a + b
    if math.isnan(s) or s == -INF:
        raise ValueError(f"{a!r} + {b!r} leaves the extended reals")
    return s


@dataclass(frozen=True)
class SampledFn:
    """Values of ``phi: R -> R u {+inf}`` on a grid; at least one is finite."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        vals = check_ext(self.values).copy()
        if vals.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} values, got shape {vals.shape}")
        if not np.isfinite(vals).any():
            raise EmptyDomainError("function is +inf everywhere (empty effective domain)")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def finite(self) -> np.ndarray:
        return np.isfinite(self.values)

    @property
    def points(self) -> np.ndarray:
        return self.grid.points

    def __len__(self) -> int:
        return self.grid.n

    def __getitem__(self, i):
        return self.values[i]

    def shifted(self, c: float) -> "SampledFn":
        return SampledFn(self.grid, self.values + c)


def format_real(v: float) -> str:
    """Shortest round-trip decimal; ``+inf`` for infinity, and one spelling of zero."""
    v = float(v) + 0.0
    if v == INF:
        return "+inf"
    if math.isnan(v) or v == -INF:
        raise ValueError(f"cannot format {v!r} as an extended real")
    return repr(v)


def parse_real(text: str) -> float:
    t = text.strip().lower()
    if t in ("+inf", "inf", "infinity", "+infinity"):
        return INF
    try:
        v = float(t)
    except ValueError:
        raise ConfigError(f"not a number: {text!r}") from None
    if math.isnan(v) or v == -INF:
        raise ConfigError(f"{text!r} is not an extended real value")
    return v


def read_values_csv(path, grid: Grid1D) -> np.ndarray:
    """Read ``x,value`` rows whose x column reproduces ``grid``."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"table file not found: {path}")
    rows = []
    with path.open(newline="") as fh:
        for row in csv.reader(fh):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 2:
                raise ConfigError(f"{path}: expected 2 columns, got {row!r}")
            rows.append(row)
    if rows and not _is_number(rows[0][0]):
        rows = rows[1:]
    if len(rows) != grid.n:
        raise ConfigError(f"{path}: {len(rows)} rows for a grid of {grid.n} points")
    xs = np.array([parse_real(r[0]) for r in rows])
    tol = 1e-9 * grid.h * (1 + np.abs(grid.points))
    if not np.all(np.abs(xs - grid.points) <= tol):
        raise ConfigError(f"{path}: x column does not match the grid {grid}")
    return np.array([parse_real(r[1]) for r in rows])


def write_values_csv(path, grid: Grid1D, values, header=("x", "value")) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for xv, v in zip(grid.points, values):
            w.writerow([format_real(xv), format_real(v)])


def _is_number(text: str) -> bool:
    try:
        parse_real(text)
    except ConfigError:
        return False
    return True


def _indicator_interval(points, lo, hi, h):
    eps = 1e-9 * h
    return np.where((points >= lo - eps) & (points <= hi + eps), 0.0, INF)


def sample(desc: Mapping[str, Any] | Callable, grid: Grid1D, base_dir=None) -> SampledFn:
    """Sample a closed-form function descriptor on ``grid``.

    Descriptors are tagged records:

    - ``{"kind": "quadratic", "coeff": c}`` for ``c x^2 / 2``
    - ``{"kind": "abs", "scale": s}`` for ``s |x|`` (scale defaults to 1)
    - ``{"kind": "indicator_point", "at": v}``; ``v`` is snapped to the nearest point
    - ``{"kind": "indicator_interval", "lo": a, "hi": b}``
    - ``{"kind": "table", "path": p}``, a CSV of ``x,value`` rows (``+inf`` allowed)

    A plain callable is evaluated pointwise.
    """
    x = grid.points
    if callable(desc):
        vals = np.array([float(desc(float(t))) for t in x])
        return SampledFn(grid, vals)
    if not isinstance(desc, Mapping) or "kind" not in desc:
        raise ConfigError(f"function descriptor needs a 'kind' field: {desc!r}")
    kind = desc["kind"]
    try:
        if kind == "quadratic":
            c = float(desc.get("coeff", 1.0))
            vals = c * x * x / 2
        elif kind == "abs":
            vals = float(desc.get("scale", 1.0)) * np.abs(x)
        elif kind == "indicator_point":
            at = float(desc["at"])
            if not grid.lo - grid.h / 2 <= at <= grid.hi + grid.h / 2:
                raise EmptyDomainError(f"indicator point {at} lies outside the grid")
            vals = np.full(grid.n, INF)
            vals[grid.snap(at)] = 0.0
        elif kind == "indicator_interval":
            vals = _indicator_interval(x, float(desc["lo"]), float(desc["hi"]), grid.h)
        elif kind == "table":
            p = Path(desc["path"])
            if base_dir is not None and not p.is_absolute():
                p = Path(base_dir) / p
            vals = read_values_csv(p, grid)
        else:
            raise ConfigError(f"unknown function kind {kind!r}")
    except KeyError as exc:
        raise ConfigError(f"descriptor {desc!r} is missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad descriptor {desc!r}: {exc}") from None
    return SampledFn(grid, vals)
