"""Convex lagrangian covers ``lambda -> (phi_lambda, phi*_lambda)`` over a finite parameter sample."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .conjugate import conjugate, is_convex
from .errors import ConfigError
from .extgrid import Grid1D, SampledFn, check_ext, format_real, parse_real, sample
from .graphs import OperatorGraph, _tol_array, gap_table

__all__ = [
    "ParamSet",
    "Cover",
    "builtin_cover",
    "load_tabulated_cover",
    "write_tabulated_cover",
    "cover_union_graph",
    "continuity_jumps",
    "STAR_CLOSED",
    "STAR_COMPUTED",
]

STAR_CLOSED = "closed-form"
STAR_COMPUTED = "computed"


@dataclass(frozen=True)
class ParamSet:
    """Strictly increasing sample ``lambda_0 < ... < lambda_{K-1}`` of the compact set Lambda.

    ``sampled=True`` means the values discretize an interval, so a witness
    can legitimately fall between samples; ``sampled=False`` means Lambda is
    exactly this finite set.
    """

    values: np.ndarray
    labels: tuple | None = None
    sampled: bool = True

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64).reshape(-1)
        if v.size == 0:
            raise ConfigError("the parameter set must be nonempty")
        if not np.isfinite(v).all():
            raise ConfigError("parameter values must be finite")
        if np.any(np.diff(v) <= 0):
            raise ConfigError("parameter values must be strictly increasing")
        if self.labels is not None and len(self.labels) != v.size:
            raise ConfigError("one label per parameter value")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size

    def subset(self, idx) -> "ParamSet":
        idx = np.asarray(idx)
        labels = None if self.labels is None else tuple(self.labels[i] for i in idx)
        return ParamSet(self.values[idx], labels, self.sampled)


@dataclass(frozen=True)
class Cover:
    """Finite cover: row ``k`` of ``phi``/``phi_star`` samples ``phi_{lambda_k}`` and its conjugate."""

    params: ParamSet
    xgrid: Grid1D
    ygrid: Grid1D
    phi: np.ndarray = field(repr=False)
    phi_star: np.ndarray = field(repr=False)
    star_mode: str = STAR_COMPUTED
    name: str = "cover"

    def __post_init__(self):
        K = len(self.params)
        phi = np.ascontiguousarray(check_ext(self.phi), dtype=np.float64)
        ps = np.ascontiguousarray(check_ext(self.phi_star), dtype=np.float64)
        if phi.shape != (K, self.xgrid.n) or ps.shape != (K, self.ygrid.n):
            raise ValueError(f"cover arrays must be ({K}, {self.xgrid.n}) and ({K}, {self.ygrid.n})")
        if self.star_mode not in (STAR_CLOSED, STAR_COMPUTED):
            raise ValueError(f"unknown star_mode {self.star_mode!r}")
        for k in range(K):
            if not np.isfinite(phi[k]).any():
                raise ConfigError(f"phi at lambda={self.params.values[k]!r} has empty domain")
        phi.setflags(write=False)
        ps.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "phi_star", ps)

    @classmethod
    def from_potentials(cls, params: ParamSet, phis, ygrid: Grid1D, name="cover") -> "Cover":
        """Build a cover from sampled potentials, conjugating each one on ``ygrid``."""
        phis = list(phis)
        if len(phis) != len(params):
            raise ConfigError("one potential per parameter value")
        xgrid = phis[0].grid
        for k, f in enumerate(phis):
            if f.grid != xgrid:
                raise ConfigError("all potentials must share one grid")
            if not is_convex(f):
                raise ConfigError(f"phi at lambda={params.values[k]!r} is not convex on the grid")
        phi = np.stack([f.values for f in phis])
        ps = np.stack([conjugate(f, ygrid).values for f in phis])
        return cls(params, xgrid, ygrid, phi, ps, STAR_COMPUTED, name)

    def __len__(self) -> int:
        return len(self.params)

    @property
    def lambdas(self) -> np.ndarray:
        return self.params.values

    @property
    def real_valued(self) -> bool:
        """Whether every phi and phi* is finite on the grids."""
        return bool(np.isfinite(self.phi).all() and np.isfinite(self.phi_star).all())

    def phi_fn(self, k: int) -> SampledFn:
        return SampledFn(self.xgrid, self.phi[k])

    def phi_star_fn(self, k: int) -> SampledFn:
        return SampledFn(self.ygrid, self.phi_star[k])

    def f_table(self, k: int) -> np.ndarray:
        """``f(lambda_k, x_i, y_j) = phi(x_i) + phi*(y_j)`` on the product grid."""
        return self.phi[k][:, None] + self.phi_star[k][None, :]

    def subset(self, idx) -> "Cover":
        idx = np.asarray(idx)
        return Cover(self.params.subset(idx), self.xgrid, self.ygrid, self.phi[idx], self.phi_star[idx],
                     self.star_mode, self.name)

    def thinned(self, stride: int) -> "Cover":
        """Every ``stride``-th parameter, always keeping both ends."""
        K = len(self)
        idx = list(range(0, K, max(1, int(stride))))
        if idx[-1] != K - 1:
            idx.append(K - 1)
        return self.subset(idx)


def _param_grid(lo, hi, K, spacing):
    if spacing == "geometric":
        return lo * (hi / lo) ** (np.arange(K) / (K - 1))
    if spacing == "arithmetic":
        return np.linspace(lo, hi, K)
    raise ConfigError(f"spacing must be 'geometric' or 'arithmetic', got {spacing!r}")


def _quadratic_fan(params: Mapping[str, Any], xgrid: Grid1D, ygrid: Grid1D) -> Cover:
    try:
        lo = float(params.get("lambda_min", 0.25))
        hi = float(params.get("lambda_max", 4.0))
        K = params.get("K", 65)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad quadratic_fan parameters: {exc}") from None
    if isinstance(K, bool) or not isinstance(K, int) or K < 2:
        raise ConfigError(f"quadratic_fan needs an integer K >= 2, got {K!r}")
    if not (math.isfinite(lo) and math.isfinite(hi) and 0 < lo < hi):
        raise ConfigError(f"quadratic_fan needs 0 < lambda_min < lambda_max, got {lo}, {hi}")
    lam = _param_grid(lo, hi, K, params.get("spacing", "geometric"))
    lam[0], lam[-1] = lo, hi
    lam_set = params.get("lambda_set", "interval")
    if lam_set not in ("interval", "finite"):
        raise ConfigError(f"lambda_set must be 'interval' or 'finite', got {lam_set!r}")
    pset = ParamSet(lam, sampled=lam_set == "interval")
    x, y = xgrid.points, ygrid.points
    phi = lam[:, None] * (x * x)[None, :] / 2.0
    star = params.get("star", STAR_CLOSED)
    if star in (STAR_CLOSED, "closed_form"):
        ps = (y * y)[None, :] / (2.0 * lam[:, None])
        return Cover(pset, xgrid, ygrid, phi, ps, STAR_CLOSED, "quadratic_fan")
    if star == STAR_COMPUTED:
        ps = np.stack([conjugate(SampledFn(xgrid, row), ygrid).values for row in phi])
        return Cover(pset, xgrid, ygrid, phi, ps, STAR_COMPUTED, "quadratic_fan")
    raise ConfigError(f"star must be 'closed-form' or 'computed', got {star!r}")


def builtin_cover(name: str, params: Mapping[str, Any] | None, xgrid: Grid1D, ygrid: Grid1D | None = None,
                  base_dir=None) -> Cover:
    """Built-in covers.

    ``quadratic_fan``: ``phi_lambda(x) = lambda x^2 / 2`` with
    ``phi*_lambda(y) = y^2 / (2 lambda)``; parameters ``lambda_min``,
    ``lambda_max``, ``K``, ``spacing`` (geometric by default), ``star``
    (``closed-form`` or ``computed``) and ``lambda_set`` (``interval`` or
    ``finite``). Its recipe gives the Cauchy bipotential ``|x||y|`` inside
    the cone ``|y|/|x| in [lambda_min, lambda_max]``.

    ``singleton``: one potential given by ``function`` (a descriptor, see
    :func:`bipo.extgrid.sample`); the recipe gives the separable
    bipotential ``phi(x) + phi*(y)``.
    """
    ygrid = xgrid if ygrid is None else ygrid
    params = dict(params or {})
    if name == "quadratic_fan":
        return _quadratic_fan(params, xgrid, ygrid)
    if name == "singleton":
        if "function" not in params:
            raise ConfigError("singleton cover needs a 'function' descriptor")
        f = sample(params["function"], xgrid, base_dir=base_dir)
        return Cover.from_potentials(ParamSet([params.get("lambda", 0.0)], sampled=False), [f], ygrid, "singleton")
    raise ConfigError(f"unknown builtin cover {name!r}")


def load_tabulated_cover(path, xgrid: Grid1D, ygrid: Grid1D | None = None, lambda_set: str = "interval") -> Cover:
    """Read a cover CSV: header ``lambda,x_0,...,x_{n-1}``, then ``lambda_k,phi(x_0),...`` rows."""
    ygrid = xgrid if ygrid is None else ygrid
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"cover file not found: {path}")
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and "".join(r).strip()]
    if len(rows) < 2:
        raise ConfigError(f"{path}: needs a header and at least one row")
    header, body = rows[0], rows[1:]
    if header[0].strip().lower() != "lambda" or len(header) != xgrid.n + 1:
        raise ConfigError(f"{path}: header must be 'lambda' followed by the {xgrid.n} grid points")
    xs = np.array([parse_real(t) for t in header[1:]])
    if not np.all(np.abs(xs - xgrid.points) <= 1e-9 * xgrid.h * (1 + np.abs(xgrid.points))):
        raise ConfigError(f"{path}: header x values do not match the grid")
    lam, phis = [], []
    for r in body:
        if len(r) != xgrid.n + 1:
            raise ConfigError(f"{path}: row for lambda={r[0]} has {len(r) - 1} values, expected {xgrid.n}")
        lam.append(parse_real(r[0]))
        try:
            phis.append(SampledFn(xgrid, [parse_real(t) for t in r[1:]]))
        except ValueError as exc:
            raise ConfigError(f"{path}: lambda={r[0]}: {exc}") from None
    if lambda_set not in ("interval", "finite"):
        raise ConfigError(f"lambda_set must be 'interval' or 'finite', got {lambda_set!r}")
    pset = ParamSet(lam, sampled=lambda_set == "interval" and len(lam) > 1)
    return Cover.from_potentials(pset, phis, ygrid, name="tabulated")


def write_tabulated_cover(C: Cover, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda", *map(format_real, C.xgrid.points)])
        for lam, row in zip(C.lambdas, C.phi):
            w.writerow([format_real(lam), *map(format_real, row)])


def cover_union_graph(C: Cover, tol=None) -> OperatorGraph:
    """Union over the parameter sample of the graphs ``M(phi_lambda)``."""
    t = _tol_array(tol, C.xgrid, C.ygrid)
    mask = np.zeros((C.xgrid.n, C.ygrid.n), dtype=bool)
    for k in range(len(C)):
        mask |= gap_table(C.phi[k], C.phi_star[k], C.xgrid, C.ygrid) <= t
    return OperatorGraph(C.xgrid, C.ygrid, mask)


def continuity_jumps(C: Cover) -> dict:
    """Finite-difference view of ``lambda -> phi_lambda(x)`` and ``lambda -> phi*_lambda(y)``.

    Reports the largest jump between neighbouring parameters and the jump
    divided by the parameter step. A statistic, not a proof of continuity.
    """
    out = {"phi_max_jump": 0.0, "phi_lipschitz": 0.0, "star_max_jump": 0.0, "star_lipschitz": 0.0}
    if len(C) < 2:
        return out
    dl = np.diff(C.lambdas)[:, None]
    with np.errstate(invalid="ignore"):
        for key, arr in (("phi", C.phi), ("star", C.phi_star)):
            d = np.abs(np.diff(arr, axis=0))
            d = np.where(np.isfinite(d), d, np.nan)
            if np.isnan(d).all():
                continue
            out[f"{key}_max_jump"] = float(np.nanmax(d))
            out[f"{key}_lipschitz"] = float(np.nanmax(d / dl))
    return out
