"""Witness searches for generalized convexity, and the minimax identities.

A ``FanInstance`` is a finite table ``F[w, v]``: rows are the witness
axis (a parameter sample), columns the opponent axis. ``F`` is convex on
the witness axis in Fan's sense if for every pair ``w1, w2`` and weight
``a`` some row ``w`` satisfies ``F[w, v] <= a F[w1, v] + (1 - a) F[w2, v]``
for all ``v`` at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .covers import Cover
from .extgrid import Grid1D, format_real
from .synth import synth_value

__all__ = [
    "DEFAULT_ALPHAS",
    "FanInstance",
    "WitnessReport",
    "FanBicReport",
    "MinimaxReport",
    "g_instance",
    "h_instance",
    "f_instance",
    "xbar_y_instance",
    "check_fan_convex",
    "check_implicit_convex",
    "check_fan_bic",
    "check_bic",
    "minimax_verify",
    "opponent_concavity_defect",
]

DEFAULT_ALPHAS = (0.0, 0.25, 0.5, 0.75, 1.0)
MAX_EXHAUSTIVE_AXIS = 128
WEAK_DUALITY_TOL = 1e-12


@dataclass(frozen=True)
class FanInstance:
    values: np.ndarray = field(repr=False)
    label: str = "user"
    witness_sampled: bool = True  # witness axis samples a continuum
    opponent: Grid1D | None = None

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] == 0 or v.shape[1] == 0:
            raise ValueError("a Fan instance is a nonempty 2-D table")
        if not np.isfinite(v).all():
            raise ValueError("Fan instances take finite values only")
        if self.opponent is not None and self.opponent.n != v.shape[1]:
            raise ValueError("opponent grid does not match the table")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def shape(self):
        return self.values.shape

    def witness_jump(self) -> float:
        """Largest change of ``F`` between neighbouring witness rows (0 when not a sampled continuum)."""
        if not self.witness_sampled or self.values.shape[0] < 2:
            return 0.0
        return float(np.abs(np.diff(self.values, axis=0)).max())

    def default_delta(self) -> float:
        """First-order snapping slack: local parameter step times the local lambda-Lipschitz bound.

        Cell by cell that product is just the jump of ``F`` across the cell.
        """
        return self.witness_jump()


@dataclass
class WitnessReport:
    passed: bool
    tested_pairs: int
    failures: list  # ((w1, w2, alpha), residual, best witness)
    delta_used: float
    worst_residual: float
    exhaustive: bool
    label: str = ""

    def __bool__(self) -> bool:
        return self.passed

    def failed_alphas(self) -> set:
        return {f[0][2] for f in self.failures}


def _all_pairs(W: int) -> np.ndarray:
    a, b = np.meshgrid(np.arange(W), np.arange(W), indexing="ij")
    keep = a != b
    return np.stack([a[keep], b[keep]], axis=1).astype(np.int64)


def _pairs(W: int, budget: int, exhaustive: bool, seed) -> tuple[np.ndarray, bool]:
    total = W * (W - 1)
    if total == 0:
        return np.zeros((0, 2), dtype=np.int64), True
    if budget >= total or (exhaustive and W <= MAX_EXHAUSTIVE_AXIS):
        return _all_pairs(W), True
    rng = np.random.default_rng(seed)
    code = np.sort(rng.choice(total, size=budget, replace=False))
    w1 = code // (W - 1)
    r = code % (W - 1)
    w2 = r + (r >= w1)
    return np.stack([w1, w2], axis=1).astype(np.int64), False


def check_fan_convex(F: FanInstance, pair_budget: int = 4096, alphas=DEFAULT_ALPHAS, delta: float | None = None,
                     seed=0, exhaustive: bool = False, backend=None) -> WitnessReport:
    """Search every witness row for each sampled (pair, alpha) probe.

    A probe passes when some row has worst-case residual ``<= delta``.
    All ordered pairs are probed when the budget covers them or when
    ``exhaustive`` is set and the witness axis has at most 128 rows.
    """
    alphas = np.asarray(alphas, dtype=np.float64)
    if np.any((alphas < 0) | (alphas > 1)):
        raise ValueError("weights must lie in [0, 1]")
    if delta is None:
        delta = F.default_delta()
    if delta < 0:
        raise ValueError("delta must be >= 0")
    pairs, full = _pairs(F.shape[0], pair_budget, exhaustive, seed)
    k = _backend.get(backend)
    best, arg = k.fan_best(F.values, np.ascontiguousarray(pairs), alphas, _backend.num_threads())
    failures = []
    for p, a in zip(*np.nonzero(best > delta)):
        w1, w2 = pairs[p]
        failures.append(((int(w1), int(w2), float(alphas[a])), float(best[p, a]), int(arg[p, a])))
    worst = float(best.max()) if best.size else -math.inf
    return WitnessReport(not failures, int(pairs.shape[0]), failures, float(delta), worst, full, F.label)


def check_implicit_convex(F: FanInstance, pair_budget: int = 4096, alphas=DEFAULT_ALPHAS, delta: float | None = None,
                          seed=0, exhaustive: bool = False) -> WitnessReport:
    """Implicit convexity of ``F`` over (parameter, grid point) elements.

    For probes ``((k1, v1), (k2, v2), a)`` some parameter ``k`` must give
    ``F[k, snap(a z1 + (1 - a) z2)] <= a F[k1, v1] + (1 - a) F[k2, v2] + delta``.
    ``snap`` rounds to the nearest grid point, ties to the lower index. The
    default ``delta`` adds half the largest step along the grid (the
    snapping error) to the parameter-step slack.
    """
    if F.opponent is None:
        raise ValueError("implicit convexity needs the opponent axis grid")
    grid = F.opponent
    vals = F.values
    W, V = vals.shape
    alphas = np.asarray(alphas, dtype=np.float64)
    if delta is None:
        delta = F.witness_jump() + float(np.abs(np.diff(vals, axis=1)).max()) / 2.0
    pairs, full = _pairs(W * V, pair_budget, exhaustive, seed)
    e1, e2 = pairs[:, 0], pairs[:, 1]
    k1, v1 = np.divmod(e1, V)
    k2, v2 = np.divmod(e2, V)
    z = grid.points
    failures = []
    worst = -math.inf
    for a in alphas.tolist():
        bta = 1.0 - a
        target = a * vals[k1, v1] + bta * vals[k2, v2]
        t = (a * z[v1] + bta * z[v2] - grid.lo) / grid.h
        vs = np.clip(np.ceil(t - 0.5).astype(np.int64), 0, V - 1)
        cand = vals[:, vs] - target[None, :]
        w = np.argmin(cand, axis=0)
        res = cand[w, np.arange(cand.shape[1])]
        if res.size:
            worst = max(worst, float(res.max()))
        for p in np.flatnonzero(res > delta):
            failures.append((((int(k1[p]), int(v1[p])), (int(k2[p]), int(v2[p])), a), float(res[p]), int(w[p])))
    return WitnessReport(not failures, int(pairs.shape[0]), failures, float(delta), worst, full, F.label)


def g_instance(C: Cover, i: int) -> FanInstance:
    """``g(x_i, lambda, z) = phi_lambda(x_i) - phi_lambda(z)``, witness lambda, opponent z."""
    return FanInstance(C.phi[:, i:i + 1] - C.phi, f"g@x={format_real(C.xgrid.points[i])}", C.params.sampled, C.xgrid)


def h_instance(C: Cover, j: int) -> FanInstance:
    """``h(y_j, lambda, u) = phi*_lambda(y_j) - phi*_lambda(u)``, witness lambda, opponent u."""
    return FanInstance(C.phi_star[:, j:j + 1] - C.phi_star, f"h@y={format_real(C.ygrid.points[j])}",
                       C.params.sampled, C.ygrid)


def f_instance(C: Cover, *, x_index: int | None = None, y_index: int | None = None) -> FanInstance:
    """``f(lambda, ., y_j)`` over the x-grid, or ``f(lambda, x_i, .)`` over the y-grid."""
    if (x_index is None) == (y_index is None):
        raise ValueError("give exactly one of x_index, y_index")
    if y_index is not None:
        return FanInstance(C.phi + C.phi_star[:, y_index:y_index + 1],
                           f"f(.,.,y={format_real(C.ygrid.points[y_index])})", C.params.sampled, C.xgrid)
    return FanInstance(C.phi[:, x_index:x_index + 1] + C.phi_star,
                       f"f(.,x={format_real(C.xgrid.points[x_index])},.)", C.params.sampled, C.ygrid)


def xbar_y_instance(C: Cover, i: int, j: int) -> FanInstance:
    """``phi_lambda(x_i) + (y_j z - phi_lambda(z))``: the saddle function of the minimax argument."""
    y = C.ygrid.points[j]
    inner = y * C.xgrid.points[None, :] - C.phi
    return FanInstance(C.phi[:, i:i + 1] + inner, f"xbar_y@({i},{j})", C.params.sampled, C.xgrid)


def opponent_concavity_defect(F: FanInstance) -> float:
    """Largest positive second difference along the opponent axis (0 for concave rows)."""
    v = F.values
    if v.shape[1] < 3:
        return 0.0
    d2 = v[:, :-2] - 2.0 * v[:, 1:-1] + v[:, 2:]
    return float(max(0.0, d2.max()))


def _default_points(n: int, target: int = 41) -> np.ndarray:
    step = max(1, -(-(n - 1) // (target - 1)))
    idx = list(range(0, n, step))
    if idx[-1] != n - 1:
        idx.append(n - 1)
    return np.array(idx)


@dataclass
class FanBicReport:
    passed: bool
    g_reports: list  # (x index, WitnessReport)
    h_reports: list  # (y index, WitnessReport)
    lambda_count: int
    note: str = ""

    def __bool__(self) -> bool:
        return self.passed

    def failures(self):
        for side, reps in (("g", self.g_reports), ("h", self.h_reports)):
            for idx, r in reps:
                for f in r.failures:
                    yield side, idx, f


def _witness_sweep(C, build_g, build_h, x_indices, y_indices, lambda_stride, **kw):
    C = C.thinned(lambda_stride) if lambda_stride > 1 else C
    if not C.real_valued:
        return FanBicReport(False, [], [], len(C), "cover takes +inf values; outside the theorem's hypotheses")
    xs = _default_points(C.xgrid.n) if x_indices is None else np.asarray(x_indices)
    ys = _default_points(C.ygrid.n) if y_indices is None else np.asarray(y_indices)
    g = [(int(i), build_g(C, int(i), **kw)) for i in xs]
    h = [(int(j), build_h(C, int(j), **kw)) for j in ys]
    ok = all(r.passed for _, r in g) and all(r.passed for _, r in h)
    return FanBicReport(ok, g, h, len(C))


def check_fan_bic(C: Cover, *, x_indices=None, y_indices=None, lambda_stride: int = 1, pair_budget: int = 4096,
                  alphas=DEFAULT_ALPHAS, delta: float | None = None, seed=0, exhaustive: bool = False,
                  backend=None) -> FanBicReport:
    """Fan bi-implicit convexity: ``g(x, ., .)`` and ``h(y, ., .)`` Fan-convex in lambda.

    ``x_indices``/``y_indices`` default to about 41 evenly spread grid
    points; ``lambda_stride`` thins the parameter sample first.
    """
    kw = dict(pair_budget=pair_budget, alphas=alphas, delta=delta, seed=seed, exhaustive=exhaustive, backend=backend)
    return _witness_sweep(
        C,
        lambda C, i, **k: check_fan_convex(g_instance(C, i), **k),
        lambda C, j, **k: check_fan_convex(h_instance(C, j), **k),
        x_indices, y_indices, lambda_stride, **kw,
    )


def check_bic(C: Cover, *, x_indices=None, y_indices=None, lambda_stride: int = 1, pair_budget: int = 4096,
              alphas=DEFAULT_ALPHAS, delta: float | None = None, seed=0) -> FanBicReport:
    """Bi-implicit convexity: ``f(., ., y)`` and ``f(., x, .)`` implicitly convex."""
    kw = dict(pair_budget=pair_budget, alphas=alphas, delta=delta, seed=seed)
    return _witness_sweep(
        C,
        lambda C, j, **k: check_implicit_convex(f_instance(C, y_index=j), **k),
        lambda C, i, **k: check_implicit_convex(f_instance(C, x_index=i), **k),
        y_indices, x_indices, lambda_stride, **kw,
    )


@dataclass
class MinimaxReport:
    i: int
    j: int
    side: str
    lhs: float  # min over lambda of max over the grid
    rhs: float  # max over the grid of min over lambda
    b_value: float
    xbar_conj: float
    tol: float
    gap_tol: float | None = None

    @property
    def gap(self) -> float:
        return self.lhs - self.rhs

    @property
    def lhs_error(self) -> float:
        return abs(self.lhs - self.b_value)

    @property
    def rhs_error(self) -> float:
        return abs(self.rhs - self.xbar_conj)

    @property
    def passed(self) -> bool:
        ok = self.lhs_error <= self.tol and self.rhs_error <= self.tol and self.gap >= -WEAK_DUALITY_TOL
        if self.gap_tol is not None:
            ok = ok and abs(self.gap) <= self.gap_tol
        return ok

    def __bool__(self) -> bool:
        return self.passed


def minimax_verify(C: Cover, i: int, j: int, tol: float | None = None, side: str = "x",
                   gap_tol: float | None = None) -> MinimaxReport:
    """Both sides of the minimax equality for the saddle function at ``(x_i, y_j)``.

    ``side="x"`` uses ``phi_lambda(x) + (y z - phi_lambda(z))`` over the
    x-grid: the min-max side reproduces ``b(x, y)`` and the max-min side is
    the conjugate at ``y`` of ``z -> max_lambda phi_lambda(z) - phi_lambda(x)``.
    ``side="y"`` swaps the roles of ``phi`` and ``phi*``.

    The default ``tol`` is 1e-9 on the x side of covers whose conjugates were
    computed on the grid (the min-max side then equals the recipe value up to
    rounding) and ``h^2 (1 + |x| + |y|)`` otherwise.
    """
    x, y = C.xgrid.points[i], C.ygrid.points[j]
    if side == "x":
        base, table, grid, at = C.phi[:, i], C.phi, C.xgrid, y
    elif side == "y":
        base, table, grid, at = C.phi_star[:, j], C.phi_star, C.ygrid, x
    else:
        raise ValueError("side must be 'x' or 'y'")
    inner = at * grid.points[None, :] - table
    sad = base[:, None] + inner
    lhs = float(sad.max(axis=1).min())
    rhs = float(sad.min(axis=0).max())
    bar = (table - base[:, None]).max(axis=0)
    bar_conj = float((at * grid.points - bar).max())
    b_value = synth_value(C, i, j)[0]
    if tol is None:
        tol = 1e-9 if C.star_mode == "computed" and side == "x" else grid.h ** 2 * (1 + abs(x) + abs(y))
    return MinimaxReport(i, j, side, lhs, rhs, b_value, bar_conj, float(tol), gap_tol)
