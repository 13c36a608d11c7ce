import numpy as np
import pytest

from bipo import synth_table
from bipo.covers import (
    Cover,
    ParamSet,
    builtin_cover,
    continuity_jumps,
    cover_union_graph,
    load_tabulated_cover,
    write_tabulated_cover,
)
from bipo.errors import ConfigError
from bipo.extgrid import SampledFn, make_grid
from bipo.graphs import bb_check, graph_of_potential


def test_geometric_midpoint_is_exact(grid):
    C = builtin_cover("quadratic_fan", {"K": 3}, grid)
    assert C.lambdas.tolist() == [0.25, 1.0, 4.0]


def test_default_fan_contains_one(fan):
    assert len(fan) == 65
    k = int(np.flatnonzero(fan.lambdas == 1.0)[0])
    assert fan.phi_star[k, fan.ygrid.index_of(2.0)] == 2.0


def test_arithmetic_spacing(grid):
    C = builtin_cover("quadratic_fan", {"K": 5, "spacing": "arithmetic", "lambda_min": 1, "lambda_max": 3}, grid)
    assert C.lambdas.tolist() == [1.0, 1.5, 2.0, 2.5, 3.0]


def test_singleton_is_separable(single, grid):
    f = single.f_table(0)
    assert np.abs(f - (grid.points[:, None] ** 2 + grid.points[None, :] ** 2) / 2).max() <= 1e-4


def test_star_modes_agree(fan, fan_computed):
    assert fan.star_mode == "closed-form" and fan_computed.star_mode == "computed"
    # the grid conjugate only matches y^2 / (2 lambda) while the maximizer y / lambda stays on the grid
    y = fan.ygrid.points
    inside = np.abs(y)[None, :] <= 2 * fan.lambdas[:, None]
    assert np.abs(fan.phi_star - fan_computed.phi_star)[inside].max() <= 1e-3
    assert np.all(fan_computed.phi_star <= fan.phi_star + 1e-12)


@pytest.mark.parametrize("params", [{"lambda_min": 4, "lambda_max": 1}, {"lambda_min": 0}, {"K": 1}, {"K": 2.5},
                                    {"spacing": "log"}, {"star": "numeric"}, {"lambda_set": "dense"}])
def test_bad_fan_params(grid, params):
    with pytest.raises(ConfigError):
        builtin_cover("quadratic_fan", params, grid)


def test_unknown_cover(grid):
    with pytest.raises(ConfigError):
        builtin_cover("cauchy", {}, grid)
    with pytest.raises(ConfigError):
        builtin_cover("singleton", {}, grid)


def test_param_set_validation():
    with pytest.raises(ValueError):
        ParamSet([1.0, 1.0])
    with pytest.raises(ValueError):
        ParamSet([])


def test_from_potentials_rejects_concave(grid):
    with pytest.raises(ConfigError, match="lambda"):
        Cover.from_potentials(ParamSet([0.0]), [SampledFn(grid, -grid.points**2)], grid)


def test_tabulated_round_trip(tmp_path, grid, fan_computed):
    write_tabulated_cover(fan_computed, tmp_path / "fan.csv")
    C = load_tabulated_cover(tmp_path / "fan.csv", grid)
    assert np.array_equal(C.lambdas, fan_computed.lambdas)
    assert np.abs(synth_table(C).b - synth_table(fan_computed).b).max() <= 1e-9


def test_tabulated_single_row_and_errors(tmp_path, grid):
    g5 = make_grid(-1, 1, 5)
    (tmp_path / "one.csv").write_text("lambda,-1,-0.5,0,0.5,1\n0,1,0.25,0,0.25,1\n")
    C = load_tabulated_cover(tmp_path / "one.csv", g5)
    assert len(C) == 1 and not C.params.sampled
    (tmp_path / "bad.csv").write_text("lambda,-1,-0.5,0,0.5,1\n0,0,1,2,1,0\n")
    with pytest.raises(ConfigError):
        load_tabulated_cover(tmp_path / "bad.csv", g5)
    (tmp_path / "short.csv").write_text("lambda,-1,-0.5,0,0.5,1\n0,0,1\n")
    with pytest.raises(ConfigError):
        load_tabulated_cover(tmp_path / "short.csv", g5)
    with pytest.raises(ConfigError):
        load_tabulated_cover(tmp_path / "none.csv", g5)


def test_union_graph_is_cone_bundle(fan, grid):
    U = cover_union_graph(fan, tol=0.01)
    assert bb_check(U).passed
    x = grid.points
    for k in range(0, 65, 8):
        for i in range(0, 161, 10):
            j = grid.snap(fan.lambdas[k] * x[i])
            if abs(fan.lambdas[k] * x[i]) <= 2:
                assert U.mask[i, j]
    # nothing far outside the cone
    i, j = np.nonzero(U.mask)
    ratio_ok = (np.abs(x[j]) <= 4 * np.abs(x[i]) + 0.3) & (np.abs(x[j]) >= np.abs(x[i]) / 4 - 0.3)
    assert ratio_ok.all()


def test_union_contains_each_graph_and_is_monotone(fan):
    U = cover_union_graph(fan)
    for k in (0, 32, 64):
        Gk = graph_of_potential(fan.phi_fn(k), fan.ygrid, f_conj=fan.phi_star_fn(k))
        assert not (Gk.mask & ~U.mask).any()
    sub = cover_union_graph(fan.thinned(8))
    assert not (sub.mask & ~U.mask).any()


def test_thinned_keeps_ends(fan):
    t = fan.thinned(10)
    assert t.lambdas[0] == 0.25 and t.lambdas[-1] == 4.0
    assert len(t) == 8


def test_continuity_statistic(fan, single):
    j = continuity_jumps(fan)
    # d/dlambda of lambda x^2 / 2 is at most 2 on [-2, 2]
    assert j["phi_lipschitz"] == pytest.approx(2.0, rel=1e-6)
    assert j["phi_max_jump"] == pytest.approx(2.0 * np.diff(fan.lambdas).max(), rel=1e-6)
    assert j["star_lipschitz"] > j["phi_lipschitz"]  # y^2 / (2 lambda) is steep at small lambda
    assert continuity_jumps(single)["phi_max_jump"] == 0.0
