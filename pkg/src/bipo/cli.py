"""Command-line front end: ``bipo <command> --config run.json``.

Exit codes: 0 all checks pass, 1 a verification failed, 2 configuration or
usage error, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from ._backend import BACKEND
from .conjugate import biconjugate, conjugate
from .covers import Cover, builtin_cover, continuity_jumps, cover_union_graph, load_tabulated_cover
from .errors import BipoError, ConfigError
from .extgrid import Grid1D, format_real, sample, write_values_csv
from .fancheck import DEFAULT_ALPHAS, check_fan_bic, minimax_verify
from .graphs import bb_check, read_graph_csv
from .synth import check_cover_graph_identity, extract_graph, synth_table, verify_axioms

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_INTERNAL = 0, 1, 2, 3
COMMANDS = ("conjugate", "synth", "verify", "minimax", "fan-check", "graph")

_TOP_KEYS = {"xgrid", "ygrid", "cover", "function", "graph", "tolerances", "sampling", "output"}
_TOL_KEYS = {"graph", "convexity", "equivalence", "fan_delta", "minimax", "minimax_gap", "slack"}
_SAMPLING_KEYS = {"seed", "pair_budget", "alphas", "probe_grid", "probe_points", "fan_points", "exhaustive",
                  "lambda_stride", "off_graph_samples"}


@dataclass
class Tolerances:
    graph: float | None = None
    convexity: float | None = None
    equivalence: float | None = None
    fan_delta: float | None = None
    minimax: float | None = None
    minimax_gap: float | None = 2e-3
    slack: int = 1


@dataclass
class Sampling:
    seed: int = 0
    pair_budget: int = 4096
    alphas: tuple = DEFAULT_ALPHAS
    probe_grid: int = 5
    probe_points: list | None = None  # explicit (x, y) values, snapped to the grids
    fan_points: int = 41
    exhaustive: bool = False
    lambda_stride: int = 1
    off_graph_samples: int = 1000


@dataclass
class RunConfig:
    xgrid: Grid1D
    ygrid: Grid1D
    cover: dict | None
    function: Any
    graph: str | None
    tolerances: Tolerances
    sampling: Sampling
    output: Path
    base_dir: Path


@dataclass
class RunSummary:
    command: str
    checks: dict = field(default_factory=dict)  # name -> {passed, worst, file}
    manifest: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def record(self, name, passed, worst, file):
        self.checks[name] = {"passed": bool(passed), "worst": float(worst), "file": file}

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values())

    def failing(self) -> list:
        return [k for k, c in self.checks.items() if not c["passed"]]


def _grid(desc, name) -> Grid1D:
    if not isinstance(desc, dict) or set(desc) - {"lo", "hi", "n"} or len(desc) != 3:
        raise ConfigError(f"{name} must be an object with exactly lo, hi, n")
    n = desc["n"]
    if isinstance(n, bool) or not isinstance(n, int):
        raise ConfigError(f"{name}.n must be an integer")
    try:
        return Grid1D(float(desc["lo"]), float(desc["hi"]), n)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from None


def _nonneg(value, name, integer=False):
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number")
    if integer and not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer")
    if not (value >= 0) or (not integer and math.isnan(value)):
        raise ConfigError(f"{name} must be >= 0, got {value}")
    return value


def _section(raw, key, allowed):
    sec = raw.get(key, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"{key} must be an object")
    extra = set(sec) - allowed
    if extra:
        raise ConfigError(f"unknown {key} key(s): {', '.join(sorted(extra))}")
    return sec


def parse_config(raw: dict, base_dir: Path, overrides: dict | None = None) -> RunConfig:
    """Validate a config mapping; ``overrides`` come from command-line flags."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    extra = set(raw) - _TOP_KEYS
    if extra:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(extra))}")
    ov = overrides or {}
    if "xgrid" not in raw:
        raise ConfigError("config needs an xgrid")
    xg = _grid(raw["xgrid"], "xgrid")
    yg = _grid(raw["ygrid"], "ygrid") if "ygrid" in raw else xg

    t = _section(raw, "tolerances", _TOL_KEYS)
    tol = Tolerances()
    for k in ("graph", "convexity", "equivalence", "fan_delta", "minimax", "minimax_gap"):
        if k in t:
            setattr(tol, k, _nonneg(t[k], f"tolerances.{k}"))
    if "slack" in t:
        tol.slack = _nonneg(t["slack"], "tolerances.slack", integer=True)
    if ov.get("tol_graph") is not None:
        tol.graph = _nonneg(ov["tol_graph"], "--tol-graph")
    if ov.get("delta") is not None:
        tol.fan_delta = _nonneg(ov["delta"], "--delta")
    if ov.get("slack") is not None:
        tol.slack = _nonneg(ov["slack"], "--slack", integer=True)

    s = _section(raw, "sampling", _SAMPLING_KEYS)
    smp = Sampling()
    for k in ("seed", "pair_budget", "probe_grid", "fan_points", "lambda_stride", "off_graph_samples"):
        if k in s:
            setattr(smp, k, _nonneg(s[k], f"sampling.{k}", integer=True))
    if smp.lambda_stride < 1 or smp.probe_grid < 1 or smp.fan_points < 2:
        raise ConfigError("sampling.lambda_stride and probe_grid must be >= 1, fan_points >= 2")
    if "alphas" in s:
        a = s["alphas"]
        if not isinstance(a, list) or not a or not all(isinstance(v, (int, float)) and 0 <= v <= 1 for v in a):
            raise ConfigError("sampling.alphas must be a nonempty list of weights in [0, 1]")
        smp.alphas = tuple(float(v) for v in a)
    if "probe_points" in s:
        pts = s["probe_points"]
        if not isinstance(pts, list) or not all(isinstance(p, list) and len(p) == 2 for p in pts):
            raise ConfigError("sampling.probe_points must be a list of [x, y] pairs")
        smp.probe_points = [(float(p[0]), float(p[1])) for p in pts]
    if "exhaustive" in s:
        smp.exhaustive = bool(s["exhaustive"])
    if ov.get("seed") is not None:
        smp.seed = _nonneg(ov["seed"], "--seed", integer=True)
    if ov.get("exhaustive"):
        smp.exhaustive = True

    cover = raw.get("cover")
    if cover is not None:
        if not isinstance(cover, dict) or (("builtin" in cover) == ("tabulated" in cover)):
            raise ConfigError("cover must name exactly one of 'builtin' or 'tabulated'")
        allowed = {"builtin", "params"} if "builtin" in cover else {"tabulated", "lambda_set"}
        if set(cover) - allowed:
            raise ConfigError(f"unknown cover key(s): {', '.join(sorted(set(cover) - allowed))}")

    out = ov.get("out")
    if out is not None:
        output = Path(out)
    else:
        output = (base_dir / raw.get("output", "out")).resolve()
    return RunConfig(xg, yg, cover, raw.get("function"), raw.get("graph"), tol, smp, output, base_dir)


def load_config(path, overrides: dict | None = None) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return parse_config(raw, path.resolve().parent, overrides)


def build_cover(cfg: RunConfig) -> Cover:
    if cfg.cover is None:
        raise ConfigError("this command needs a 'cover' entry")
    if "builtin" in cfg.cover:
        params = cfg.cover.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("cover.params must be an object")
        return builtin_cover(cfg.cover["builtin"], params, cfg.xgrid, cfg.ygrid, base_dir=cfg.base_dir)
    p = Path(cfg.cover["tabulated"])
    if not p.is_absolute():
        p = cfg.base_dir / p
    return load_tabulated_cover(p, cfg.xgrid, cfg.ygrid, cfg.cover.get("lambda_set", "interval"))


def _writer(path):
    fh = Path(path).open("w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        # -inf only arises as the max over an empty probe set
        return "-inf" if v == -math.inf else format_real(float(v))
    return str(v)


def _write_rows(path, header, rows):
    fh, w = _writer(path)
    with fh:
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


class _Run:
    """Collects output files and stage timings for one command."""

    def __init__(self, cfg: RunConfig, command: str):
        self.cfg = cfg
        self.out = cfg.output
        self.out.mkdir(parents=True, exist_ok=True)
        self.summary = RunSummary(command)
        self._t = time.perf_counter()

    def path(self, name) -> Path:
        if name not in self.summary.manifest:
            self.summary.manifest.append(name)
        return self.out / name

    def stage(self, name):
        now = time.perf_counter()
        self.summary.timings[name] = now - self._t
        self._t = now


def _probe_indices(cfg: RunConfig):
    s = cfg.sampling
    if s.probe_points is not None:
        return [(cfg.xgrid.snap(x), cfg.ygrid.snap(y)) for x, y in s.probe_points]
    k = s.probe_grid

    def pick(n):
        return sorted({int(round(t)) for t in np.linspace(0, n - 1, k)})

    return [(i, j) for i in pick(cfg.xgrid.n) for j in pick(cfg.ygrid.n)]


def _spread(n, k):
    return sorted({int(round(t)) for t in np.linspace(0, n - 1, min(k, n))})


# -- stages shared by several commands ------------------------------------

def _stage_synth(run: _Run, C: Cover):
    cfg = run.cfg
    T = synth_table(C)
    T.to_csv(run.path("b_table.csv"))
    T.argmin_to_csv(run.path("argmin_lambda.csv"))
    extract_graph(T, cfg.tolerances.graph).to_csv(run.path("graph_b.csv"))
    U = cover_union_graph(C, cfg.tolerances.graph)
    U.to_csv(run.path("graph_union.csv"))
    run.stage("synth")
    return T, U


def _stage_axioms(run: _Run, T):
    cfg = run.cfg
    rep = verify_axioms(T, cfg.tolerances.equivalence, conv_tol=cfg.tolerances.convexity,
                        n_off=cfg.sampling.off_graph_samples, seed=cfg.sampling.seed,
                        exhaustive=cfg.sampling.exhaustive)
    name = "axioms.csv"
    rows = [(k, getattr(rep, k).passed, getattr(rep, k).worst, getattr(rep, k).tol, getattr(rep, k).detail)
            for k in ("convex_in_x", "convex_in_y", "fenchel_like", "equivalence")]
    _write_rows(run.path(name), ["check", "passed", "worst", "tol", "detail"], rows)
    eq = rep.equivalences
    x, y = T.xgrid.points, T.ygrid.points
    _write_rows(run.path("axiom_equivalences.csv"), ["x", "y", "on_graph", "in_dx", "in_dy"],
                ((x[r["i"]], y[r["j"]], r["on_graph"], r["in_x"], r["in_y"]) for r in eq))
    for k in ("convex_in_x", "convex_in_y", "fenchel_like", "equivalence"):
        r = getattr(rep, k)
        run.summary.record(f"axiom_{k}", r.passed, r.worst, name)
    run.stage("axioms")
    return rep


def _stage_bb(run: _Run, G):
    rep = bb_check(G)
    name = "bb_violations.csv"
    _write_rows(run.path(name), ["axis", "index", "value", "description"],
                ((a, i, (G.xgrid if a == "x" else G.ygrid).points[i], d) for a, i, d in rep.violations))
    run.summary.record("bb_graph", rep.passed, len(rep.violations), name)
    run.stage("bb_check")
    return rep


def _stage_identity(run: _Run, C, T):
    cfg = run.cfg
    ok = check_cover_graph_identity(C, cfg.tolerances.graph, cfg.tolerances.slack, T=T)
    name = "graph_identity.csv"
    _write_rows(run.path(name), ["slack", "equal"], [(cfg.tolerances.slack, ok)])
    run.summary.record("graph_identity", ok, 0.0 if ok else 1.0, name)
    run.stage("graph_identity")
    return ok


def _stage_fan(run: _Run, C):
    cfg = run.cfg
    s = cfg.sampling
    rep = check_fan_bic(C, x_indices=_spread(C.xgrid.n, s.fan_points), y_indices=_spread(C.ygrid.n, s.fan_points),
                        lambda_stride=s.lambda_stride, pair_budget=s.pair_budget, alphas=s.alphas,
                        delta=cfg.tolerances.fan_delta, seed=s.seed, exhaustive=s.exhaustive)
    rows = []
    worst = -math.inf
    for side, reps, grid in (("g", rep.g_reports, C.xgrid), ("h", rep.h_reports, C.ygrid)):
        for idx, r in reps:
            rows.append((side, grid.points[idx], r.passed, r.tested_pairs, r.exhaustive, r.delta_used,
                         r.worst_residual, len(r.failures)))
            if r.tested_pairs:
                worst = max(worst, r.worst_residual - r.delta_used)
    _write_rows(run.path("fan_bic.csv"), ["side", "point", "passed", "tested_pairs", "exhaustive", "delta",
                                          "worst_residual", "failures"], rows)
    lam = C.thinned(s.lambda_stride).lambdas if s.lambda_stride > 1 else C.lambdas
    frows = []
    for side, idx, ((w1, w2, a), res, wit) in rep.failures():
        grid = C.xgrid if side == "g" else C.ygrid
        frows.append((side, grid.points[idx], lam[w1], lam[w2], a, res, lam[wit]))
    _write_rows(run.path("fan_failures.csv"), ["side", "point", "lambda1", "lambda2", "alpha", "residual",
                                               "best_witness"], frows)
    if not rows:
        worst = math.inf
    elif worst == -math.inf:
        worst = 0.0  # a single parameter: no pair to test
    run.summary.record("fan_bic", rep.passed, worst, "fan_bic.csv")
    if rep.note:
        run.summary.checks["fan_bic"]["note"] = rep.note
    run.stage("fan_bic")
    return rep


def _stage_minimax(run: _Run, C):
    cfg = run.cfg
    rows, ok, worst = [], True, 0.0
    for side in ("x", "y"):
        for i, j in _probe_indices(cfg):
            m = minimax_verify(C, i, j, cfg.tolerances.minimax, side=side, gap_tol=cfg.tolerances.minimax_gap)
            rows.append((side, C.xgrid.points[i], C.ygrid.points[j], m.lhs, m.rhs, m.b_value, m.xbar_conj,
                         m.gap, m.lhs_error, m.rhs_error, m.passed))
            ok = ok and m.passed
            worst = max(worst, m.lhs_error, m.rhs_error, abs(m.gap))
    _write_rows(run.path("minimax.csv"), ["side", "x", "y", "lhs", "rhs", "b", "xbar_conj", "gap", "lhs_error",
                                          "rhs_error", "passed"], rows)
    run.summary.record("minimax", ok, worst, "minimax.csv")
    run.stage("minimax")


def _stage_continuity(run: _Run, C):
    j = continuity_jumps(C)
    _write_rows(run.path("continuity.csv"), ["quantity", "value"], sorted(j.items()))
    run.stage("continuity")


# -- commands ---------------------------------------------------------------

def cmd_conjugate(run: _Run) -> None:
    cfg = run.cfg
    if cfg.function is None:
        raise ConfigError("conjugate needs a 'function' descriptor")
    f = sample(cfg.function, cfg.xgrid, base_dir=cfg.base_dir)
    fc = conjugate(f, cfg.ygrid)
    write_values_csv(run.path("conjugate.csv"), cfg.ygrid, fc.values, header=("y", "value"))
    fcc = biconjugate(f, cfg.ygrid)
    with np.errstate(invalid="ignore"):
        gap = np.where(np.isinf(f.values), np.where(np.isinf(fcc.values), 0.0, np.inf), f.values - fcc.values)
    _write_rows(run.path("biconjugate_gap.csv"), ["x", "f", "biconjugate", "gap"],
                zip(cfg.xgrid.points, f.values, fcc.values, gap))
    run.stage("conjugate")


def cmd_synth(run: _Run) -> None:
    C = build_cover(run.cfg)
    run.stage("cover")
    _stage_synth(run, C)


def cmd_graph(run: _Run) -> None:
    cfg = run.cfg
    if cfg.graph is not None:
        p = Path(cfg.graph)
        G = read_graph_csv(p if p.is_absolute() else cfg.base_dir / p, cfg.xgrid, cfg.ygrid)
        if not G.mask.any():
            raise ConfigError("graph file lists no points")
        _stage_bb(run, G)
        return
    C = build_cover(cfg)
    run.stage("cover")
    T, U = _stage_synth(run, C)
    _stage_bb(run, U)
    _stage_identity(run, C, T)


def cmd_fan_check(run: _Run) -> None:
    C = build_cover(run.cfg)
    run.stage("cover")
    _stage_fan(run, C)


def cmd_minimax(run: _Run) -> None:
    C = build_cover(run.cfg)
    run.stage("cover")
    _stage_minimax(run, C)


def cmd_verify(run: _Run) -> None:
    C = build_cover(run.cfg)
    run.stage("cover")
    T, U = _stage_synth(run, C)
    _stage_axioms(run, T)
    _stage_bb(run, U)
    _stage_identity(run, C, T)
    _stage_fan(run, C)
    _stage_minimax(run, C)
    _stage_continuity(run, C)


_DISPATCH = {
    "conjugate": cmd_conjugate,
    "synth": cmd_synth,
    "verify": cmd_verify,
    "minimax": cmd_minimax,
    "fan-check": cmd_fan_check,
    "graph": cmd_graph,
}


def _write_summary(run: _Run) -> None:
    s = run.summary
    lines = [f"command: {s.command}"]
    for name, c in s.checks.items():
        lines.append(f"{name}: {'pass' if c['passed'] else 'FAIL'} worst={format_real(c['worst'])} file={c['file']}")
    lines.append(f"overall: {'pass' if s.passed else 'FAIL'}")
    if s.failing():
        lines.append(f"failing: {', '.join(s.failing())}")
    run.path("summary.txt").write_text("\n".join(lines) + "\n")
    data = {
        "command": s.command,
        "passed": s.passed,
        "checks": {k: {**v, "worst": format_real(v["worst"])} for k, v in s.checks.items()},
        "failing": s.failing(),
        "manifest": s.manifest,
        "config": {
            "xgrid": run.cfg.xgrid.to_dict(),
            "ygrid": run.cfg.ygrid.to_dict(),
            "cover": run.cfg.cover,
            "seed": run.cfg.sampling.seed,
            "exhaustive": run.cfg.sampling.exhaustive,
        },
    }
    # the manifest names summary.json too; record it before writing
    run.path("summary.json").write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bipo", description="Build and check bipotentials from convex covers.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, metavar="PATH", help="JSON run configuration")
    p.add_argument("--out", metavar="DIR", help="output directory (overrides 'output')")
    p.add_argument("--seed", type=int, metavar="N")
    p.add_argument("--exhaustive", action="store_true", help="test every pair / every off-graph point")
    p.add_argument("--tol-graph", type=float, metavar="F")
    p.add_argument("--delta", type=float, metavar="F", help="witness slack for the Fan checks")
    p.add_argument("--slack", type=int, metavar="N", help="index slack for graph comparison")
    return p


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    overrides = {"out": args.out, "seed": args.seed, "exhaustive": args.exhaustive, "tol_graph": args.tol_graph,
                 "delta": args.delta, "slack": args.slack}
    try:
        cfg = load_config(args.config, overrides)
        r = _Run(cfg, args.command)
        _DISPATCH[args.command](r)
        if r.summary.checks:
            _write_summary(r)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BipoError, ArithmeticError, ValueError, OSError) as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    s = r.summary
    for name, c in s.checks.items():
        print(f"{name}: {'pass' if c['passed'] else 'FAIL'} (worst {format_real(c['worst'])})", file=stdout)
    total = sum(s.timings.values())
    timing = " ".join(f"{k}={v:.2f}s" for k, v in s.timings.items())
    print(f"backend={BACKEND} wrote {len(s.manifest)} file(s) to {cfg.output} in {total:.2f}s [{timing}]", file=stdout)
    if not s.passed:
        print(f"verification failed: {', '.join(s.failing())}", file=stdout)
        return EXIT_FAIL
    return EXIT_OK


def main(argv=None) -> int:
    try:
        return run(argv)
    except SystemExit as exc:  # argparse usage errors exit with 2
        return int(exc.code) if isinstance(exc.code, int) else EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
