"""Operator graphs ``M`` in ``X x Y``, their sections and the BB-graph test.

A graph is stored as a boolean membership mask over the product grid;
``pairs()`` gives the equivalent set of index pairs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .conjugate import conjugate
from .errors import ConfigError
from .extgrid import Grid1D, SampledFn, format_real, parse_real

__all__ = [
    "OperatorGraph",
    "Sections",
    "BBReport",
    "default_graph_tol",
    "graph_of_potential",
    "sections",
    "bb_check",
    "graphs_equal",
    "read_graph_csv",
]


@dataclass(frozen=True)
class OperatorGraph:
    xgrid: Grid1D
    ygrid: Grid1D
    mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.mask, dtype=bool)
        if m.shape != (self.xgrid.n, self.ygrid.n):
            raise ValueError(f"mask shape {m.shape} does not match grids ({self.xgrid.n}, {self.ygrid.n})")
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @classmethod
    def from_pairs(cls, xgrid, ygrid, pairs) -> "OperatorGraph":
        mask = np.zeros((xgrid.n, ygrid.n), dtype=bool)
        for i, j in pairs:
            if not (0 <= i < xgrid.n and 0 <= j < ygrid.n):
                raise IndexError(f"pair {(i, j)} out of range")
            mask[i, j] = True
        return cls(xgrid, ygrid, mask)

    def pairs(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in np.argwhere(self.mask)]

    def __contains__(self, pair) -> bool:
        i, j = pair
        return bool(self.mask[i, j])

    def __len__(self) -> int:
        return int(self.mask.sum())

    def __eq__(self, other) -> bool:
        if not isinstance(other, OperatorGraph):
            return NotImplemented
        return self.xgrid == other.xgrid and self.ygrid == other.ygrid and np.array_equal(self.mask, other.mask)

    __hash__ = None

    def union(self, other: "OperatorGraph") -> "OperatorGraph":
        _same_grids(self, other)
        return OperatorGraph(self.xgrid, self.ygrid, self.mask | other.mask)

    def to_csv(self, path) -> None:
        """Rows ``x_value,y_value`` in index order."""
        x, y = self.xgrid.points, self.ygrid.points
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "y"])
            for i, j in np.argwhere(self.mask):
                w.writerow([format_real(x[i]), format_real(y[j])])


def read_graph_csv(path, xgrid: Grid1D, ygrid: Grid1D) -> OperatorGraph:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"graph file not found: {path}")
    pairs = []
    with path.open(newline="") as fh:
        for k, row in enumerate(csv.reader(fh)):
            if not row:
                continue
            if k == 0 and row[0].strip().lower() == "x":
                continue
            if len(row) != 2:
                raise ConfigError(f"{path}: expected 2 columns, got {row!r}")
            pairs.append((xgrid.index_of(parse_real(row[0])), ygrid.index_of(parse_real(row[1]))))
    return OperatorGraph.from_pairs(xgrid, ygrid, pairs)


def default_graph_tol(xgrid: Grid1D, ygrid: Grid1D) -> np.ndarray:
    """Membership tolerance ``4 h (1 + |x| + |y|)`` on the product grid."""
    h = max(xgrid.h, ygrid.h)
    return 4.0 * h * (1.0 + np.abs(xgrid.points)[:, None] + np.abs(ygrid.points)[None, :])


def _tol_array(tol, xgrid, ygrid):
    if tol is None:
        return default_graph_tol(xgrid, ygrid)
    return np.broadcast_to(np.asarray(tol, dtype=np.float64), (xgrid.n, ygrid.n))


def gap_table(phi_vals, phi_star_vals, xgrid: Grid1D, ygrid: Grid1D) -> np.ndarray:
    """Fenchel gap ``phi*(y_j) - (y_j x_i - phi(x_i))``, +inf where either value is +inf.

    Written this way the gap of a grid conjugate is >= 0 in floating point
    too, since ``phi*(y_j)`` is the max of exactly these bracketed terms.
    """
    inner = ygrid.points[None, :] * xgrid.points[:, None] - phi_vals[:, None]
    with np.errstate(invalid="ignore"):
        g = phi_star_vals[None, :] - inner
    return np.where(np.isinf(phi_vals)[:, None] | np.isinf(phi_star_vals)[None, :], np.inf, g)


def graph_of_potential(f: SampledFn, ygrid: Grid1D, tol=None, f_conj: SampledFn | None = None) -> OperatorGraph:
    """Grid model of ``M(phi) = {(x, y): phi(x) + phi*(y) = <x, y>}``."""
    if f_conj is None:
        f_conj = conjugate(f, ygrid)
    gap = gap_table(f.values, f_conj.values, f.grid, ygrid)
    return OperatorGraph(f.grid, ygrid, gap <= _tol_array(tol, f.grid, ygrid))


@dataclass(frozen=True)
class Sections:
    m: list  # m[i]: y-indices with (i, j) in M
    m_star: list  # m_star[j]: x-indices with (i, j) in M
    dom: np.ndarray
    im: np.ndarray


def sections(G: OperatorGraph) -> Sections:
    m = [np.flatnonzero(row) for row in G.mask]
    m_star = [np.flatnonzero(col) for col in G.mask.T]
    dom = np.flatnonzero(G.mask.any(axis=1))
    im = np.flatnonzero(G.mask.any(axis=0))
    return Sections(m, m_star, dom, im)


@dataclass
class BBReport:
    passed: bool
    violations: list = field(default_factory=list)  # (axis, index, description)

    def __bool__(self) -> bool:
        return self.passed


def _holes(idx: np.ndarray):
    jumps = np.flatnonzero(np.diff(idx) > 1)
    return [(int(idx[k]), int(idx[k + 1])) for k in jumps]


def bb_check(G: OperatorGraph) -> BBReport:
    """Every nonempty section ``m(x)``, ``m*(y)`` must be a contiguous index run.

    Contiguous runs are the grid picture of closed convex subsets of R.
    """
    if not G.mask.any():
        raise ValueError("bb_check needs a nonempty graph")
    s = sections(G)
    violations = []
    for axis, secs, dom in (("x", s.m, s.dom), ("y", s.m_star, s.im)):
        for i in dom:
            for a, b in _holes(secs[i]):
                violations.append((axis, int(i), f"gap between indices {a} and {b}"))
    return BBReport(not violations, violations)


def _same_grids(G1, G2):
    if G1.xgrid != G2.xgrid or G1.ygrid != G2.ygrid:
        raise ValueError("graphs live on different grids")


def _dilate(mask: np.ndarray, r: int) -> np.ndarray:
    """Chebyshev-ball dilation by ``r`` index steps."""
    if r <= 0:
        return mask
    out = mask.copy()
    n, m = mask.shape
    for d in range(1, min(r, n - 1) + 1):
        out[d:, :] |= mask[:-d, :]
        out[:-d, :] |= mask[d:, :]
    rows = out.copy()
    for d in range(1, min(r, m - 1) + 1):
        out[:, d:] |= rows[:, :-d]
        out[:, :-d] |= rows[:, d:]
    return out


def graphs_equal(G1: OperatorGraph, G2: OperatorGraph, slack: int = 0) -> bool:
    """Each member of one graph is within Chebyshev index distance ``slack`` of the other."""
    _same_grids(G1, G2)
    if slack < 0:
        raise ValueError("slack must be >= 0")
    a, b = G1.mask, G2.mask
    return bool(not (a & ~_dilate(b, slack)).any() and not (b & ~_dilate(a, slack)).any())
