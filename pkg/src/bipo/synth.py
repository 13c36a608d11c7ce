"""The infimal recipe ``b(x, y) = min_lambda phi_lambda(x) + phi*_lambda(y)`` and its checks."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _backend
from .conjugate import convexity_defect
from .covers import Cover, cover_union_graph
from .extgrid import INF, Grid1D, format_real
from .graphs import OperatorGraph, _tol_array, default_graph_tol, graphs_equal

__all__ = [
    "TIE_TOL",
    "BipotentialTable",
    "CheckResult",
    "AxiomReport",
    "synth_value",
    "synth_table",
    "extract_graph",
    "verify_axioms",
    "check_cover_graph_identity",
]

TIE_TOL = 1e-12
FENCHEL_TOL = 1e-12


@dataclass(frozen=True)
class BipotentialTable:
    xgrid: Grid1D
    ygrid: Grid1D
    b: np.ndarray = field(repr=False)
    argmin: np.ndarray = field(repr=False)  # parameter index per cell, -1 where b is +inf
    lambdas: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        b = np.asarray(self.b, dtype=np.float64)
        if b.shape != (self.xgrid.n, self.ygrid.n):
            raise ValueError(f"table shape {b.shape} does not match the grids")
        if np.isnan(b).any() or np.isneginf(b).any():
            raise ValueError("table values must lie in R u {+inf}")

    @classmethod
    def from_values(cls, xgrid, ygrid, b) -> "BipotentialTable":
        """Wrap a hand-built table; argmin is left undefined (-1)."""
        b = np.asarray(b, dtype=np.float64)
        return cls(xgrid, ygrid, b, np.full(b.shape, -1, dtype=np.int64))

    @property
    def xy(self) -> np.ndarray:
        return self.xgrid.points[:, None] * self.ygrid.points[None, :]

    def gap(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            return self.b - self.xy

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.b).all())

    def _write(self, path, data, fmt):
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x\\y", *map(format_real, self.ygrid.points)])
            for xv, row in zip(self.xgrid.points, data):
                w.writerow([format_real(xv), *map(fmt, row)])

    def to_csv(self, path) -> None:
        self._write(path, self.b, format_real)

    def argmin_to_csv(self, path) -> None:
        self._write(path, self.argmin, lambda k: str(int(k)))


def synth_value(C: Cover, i: int, j: int) -> tuple[float, int]:
    """``(b(x_i, y_j), k)`` with ``k`` the smallest minimizing parameter index.

    Candidates within ``TIE_TOL`` of the minimum count as ties; ``k`` is -1
    when every candidate is +inf.
    """
    cand = C.phi[:, i] + C.phi_star[:, j]
    best = float(cand.min())
    if math.isinf(best):
        return INF, -1
    return best, int(np.argmax(cand <= best + TIE_TOL))


def synth_table(C: Cover, backend=None) -> BipotentialTable:
    k = _backend.get(backend)
    b, arg = k.synth_min(C.phi, C.phi_star, TIE_TOL, _backend.num_threads())
    return BipotentialTable(C.xgrid, C.ygrid, b, arg, C.lambdas)


def extract_graph(T: BipotentialTable, tol=None) -> OperatorGraph:
    """``M(b) = {(x, y): b(x, y) - <x, y> <= tol}``; tolerance as for graphs by default."""
    return OperatorGraph(T.xgrid, T.ygrid, T.gap() <= _tol_array(tol, T.xgrid, T.ygrid))


@dataclass
class CheckResult:
    passed: bool
    worst: float
    tol: float = 0.0
    detail: str = ""

    def __bool__(self) -> bool:
        return self.passed


_EQ_DTYPE = np.dtype([("i", np.int64), ("j", np.int64), ("in_x", bool), ("in_y", bool), ("on_graph", bool)])


@dataclass
class AxiomReport:
    convex_in_x: CheckResult
    convex_in_y: CheckResult
    fenchel_like: CheckResult
    equivalence: CheckResult
    equivalences: np.ndarray = field(repr=False)  # structured rows, see _EQ_DTYPE
    within_hypotheses: bool = True  # False when the table holds +inf entries

    @property
    def overall(self) -> bool:
        return bool(self.convex_in_x and self.convex_in_y and self.fenchel_like and self.equivalence)

    def __bool__(self) -> bool:
        return self.overall

    def lines(self) -> list[str]:
        out = []
        for name in ("convex_in_x", "convex_in_y", "fenchel_like", "equivalence"):
            r = getattr(self, name)
            out.append(f"{name}: {'pass' if r.passed else 'FAIL'} worst={format_real(r.worst)} tol={format_real(r.tol)}"
                       + (f" {r.detail}" if r.detail else ""))
        out.append(f"within_hypotheses: {self.within_hypotheses}")
        out.append(f"overall: {'pass' if self.overall else 'FAIL'}")
        return out


def _convexity(b: np.ndarray, h: float, tol) -> CheckResult:
    """Rows of ``b`` as functions along axis 0 of the table."""
    fin = b[np.isfinite(b)]
    scale = float(np.abs(fin).max()) if fin.size else 0.0
    if tol is None:
        # min over a finite parameter sample leaves concave kinks of order h^2
        tol = h * h * (1.0 + scale)
    worst, bad = 0.0, []
    for k, col in enumerate(b.T):
        d, contiguous = convexity_defect(col)
        worst = min(worst, d)
        if not contiguous or d < -tol:
            bad.append(k)
    detail = f"failing_lines={len(bad)}" + (f" first={bad[0]}" if bad else "")
    return CheckResult(not bad, worst, tol, detail)


def _slopes(b: np.ndarray, h: float):
    """Left/right difference quotients along axis 0; open sides at ends and +inf neighbours."""
    left = np.full(b.shape, -INF)
    right = np.full(b.shape, INF)
    with np.errstate(invalid="ignore"):
        d = (b[1:] - b[:-1]) / h
    ok = np.isfinite(d)
    left[1:][ok] = d[ok]
    right[:-1][ok] = d[ok]
    return left, right


def verify_axioms(T: BipotentialTable, tol=None, *, conv_tol=None, slack=None, off_tol=None,
                  n_off: int = 1000, seed: int = 0, exhaustive: bool = False) -> AxiomReport:
    """Check the bipotential conditions on a table.

    (a) every line ``b(., y_j)`` and ``b(x_i, .)`` is discretely convex
        within ``conv_tol`` (default ``h^2 (1 + max|b|)``);
    (b) ``b - xy >= -1e-12`` everywhere;
    (c) points with gap ``<= tol`` (default ``h_x h_y (1 + |x| + |y|) / 2``)
        have ``y_j`` in the grid subdifferential of ``b(., y_j)`` at ``x_i``
        and ``x_i`` in that of ``b(x_i, .)`` at ``y_j``, each widened by the
        half-step slack ``h (1 + |other variable|)``; conversely points with
        gap ``> off_tol`` (default: the graph tolerance) must not satisfy
        both memberships. Off-graph points are sampled (``n_off``, seeded)
        unless ``exhaustive``.
    """
    xg, yg = T.xgrid, T.ygrid
    b = T.b
    x, y = xg.points, yg.points
    gap = T.gap()

    conv_x = _convexity(b, xg.h, conv_tol)
    conv_y = _convexity(b.T, yg.h, conv_tol)

    fin_gap = gap[np.isfinite(gap)]
    min_gap = float(fin_gap.min()) if fin_gap.size else INF
    fenchel = CheckResult(min_gap >= -FENCHEL_TOL, min_gap, FENCHEL_TOL)

    if tol is None:
        tol = xg.h * yg.h * (1.0 + np.abs(x)[:, None] + np.abs(y)[None, :]) / 2.0
    on_tol = _tol_array(tol, xg, yg)
    off = default_graph_tol(xg, yg) if off_tol is None else _tol_array(off_tol, xg, yg)
    if slack is None:
        sx = xg.h * (1.0 + np.abs(y))[None, :]
        sy = yg.h * (1.0 + np.abs(x))[:, None]
    else:
        sx = sy = float(slack)

    lx, rx = _slopes(b, xg.h)
    ly_t, ry_t = _slopes(b.T, yg.h)
    ly, ry = ly_t.T, ry_t.T
    Y = np.broadcast_to(y[None, :], b.shape)
    X = np.broadcast_to(x[:, None], b.shape)
    finite = np.isfinite(b)
    in_x = finite & (lx - sx <= Y) & (Y <= rx + sx)
    in_y = finite & (ly - sy <= X) & (X <= ry + sy)

    on = gap <= on_tol
    off_mask = ~(gap <= off)
    off_idx = np.argwhere(off_mask)
    if not exhaustive and off_idx.shape[0] > n_off:
        rng = np.random.default_rng(seed)
        pick = np.sort(rng.choice(off_idx.shape[0], size=n_off, replace=False))
        off_idx = off_idx[pick]
    on_idx = np.argwhere(on)
    idx = np.concatenate([on_idx, off_idx]) if off_idx.size else on_idx
    rec = np.empty(idx.shape[0], dtype=_EQ_DTYPE)
    rec["i"], rec["j"] = idx[:, 0], idx[:, 1]
    rec["in_x"] = in_x[idx[:, 0], idx[:, 1]]
    rec["in_y"] = in_y[idx[:, 0], idx[:, 1]]
    rec["on_graph"] = on[idx[:, 0], idx[:, 1]]
    fwd_fail = int((rec["on_graph"] & ~(rec["in_x"] & rec["in_y"])).sum())
    conv_fail = int((~rec["on_graph"] & rec["in_x"] & rec["in_y"]).sum())
    equivalence = CheckResult(
        fwd_fail == 0 and conv_fail == 0,
        float(fwd_fail + conv_fail),
        0.0,
        f"on_graph={on_idx.shape[0]} off_checked={off_idx.shape[0]} forward_failures={fwd_fail} "
        f"converse_failures={conv_fail}",
    )
    return AxiomReport(conv_x, conv_y, fenchel, equivalence, rec, T.finite)


def check_cover_graph_identity(C: Cover, tol=None, slack: int = 1, T: BipotentialTable | None = None) -> bool:
    """``M(b)`` against the union of the cover's graphs, up to ``slack`` index steps."""
    if T is None:
        T = synth_table(C)
    return graphs_equal(extract_graph(T, tol), cover_union_graph(C, tol), slack)
