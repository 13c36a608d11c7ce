import numpy as np
import pytest

from bipo import builtin_cover, make_grid
from bipo.covers import cover_union_graph
from bipo.graphs import graphs_equal
from bipo.synth import (
    BipotentialTable,
    check_cover_graph_identity,
    extract_graph,
    synth_table,
    synth_value,
    verify_axioms,
)


@pytest.fixture(scope="module")
def dense(grid):
    return builtin_cover("quadratic_fan", {"K": 401}, grid)


def test_value_on_the_cone(dense, grid):
    v, k = synth_value(dense, grid.index_of(1.0), grid.index_of(1.0))
    assert v == pytest.approx(1.0, abs=1e-12)
    assert dense.lambdas[k] == pytest.approx(1.0)


def test_value_on_clamped_branch():
    g = make_grid(-8, 8, 33)
    C = builtin_cover("quadratic_fan", {"K": 65}, g)
    v, k = synth_value(C, g.index_of(1.0), g.index_of(8.0))
    assert v == 10.0 and k == 64


def test_origin_ties_to_first_index(fan, grid):
    o = grid.index_of(0.0)
    assert synth_value(fan, o, o) == (0.0, 0)


def test_table_matches_pointwise(fan, grid):
    T = synth_table(fan)
    for i, j in [(0, 0), (17, 140), (80, 3), (160, 99)]:
        v, k = synth_value(fan, i, j)
        assert T.b[i, j] == v and T.argmin[i, j] == k


def test_singleton_table_is_separable(single):
    T = synth_table(single)
    assert np.array_equal(T.b, single.phi[0][:, None] + single.phi_star[0][None, :])
    assert (T.argmin == 0).all()


def test_table_bounds(fan, grid):
    T = synth_table(fan)
    assert T.gap().min() >= 0.0
    for k in range(0, 65, 16):
        assert np.all(T.b <= fan.phi[k][:, None] + fan.phi_star[k][None, :])


def test_larger_cover_never_raises_b(fan):
    assert np.all(synth_table(fan).b <= synth_table(fan.thinned(4)).b)


def test_deterministic(fan):
    a, b = synth_table(fan), synth_table(fan)
    assert np.array_equal(a.b, b.b) and np.array_equal(a.argmin, b.argmin)


def test_extract_graph_cone(fan, grid):
    G = extract_graph(synth_table(fan), tol=1e-12)
    x = grid.points
    i, j = np.nonzero(G.mask)
    r = np.divide(x[j], x[i], out=np.zeros_like(x[j]), where=x[i] != 0)
    inside = (x[i] == 0) & (x[j] == 0) | ((r >= 0.25 - 1e-12) & (r <= 4 + 1e-12))
    assert inside.all()
    assert G.mask[grid.index_of(1.0), grid.index_of(2.0)]


def test_extract_graph_impossible_threshold(single):
    assert not extract_graph(synth_table(single), tol=-1.0).mask.any()


def test_extract_contains_union(fan):
    T = synth_table(fan)
    U = cover_union_graph(fan)
    assert not (U.mask & ~extract_graph(T).mask).any()


def test_axioms_pass_on_theorem_cases(fan, single):
    for C in (fan, single):
        rep = verify_axioms(synth_table(C))
        assert rep.overall, rep.lines()
        assert rep.equivalences["on_graph"].sum() > 0


def test_axioms_fail_below_pairing(grid):
    xy = grid.points[:, None] * grid.points[None, :]
    rep = verify_axioms(BipotentialTable.from_values(grid, grid, xy - 1.0))
    assert not rep.fenchel_like
    assert not rep.overall


def test_axioms_converse_catches_shifted_separable(single):
    """b = phi + phi* + 1 never touches xy, yet grid slopes still match on the diagonal."""
    T = synth_table(single)
    rep = verify_axioms(BipotentialTable.from_values(T.xgrid, T.ygrid, T.b + 1.0), exhaustive=True)
    assert rep.convex_in_x and rep.fenchel_like
    assert not rep.equivalence


def test_sparse_cover_fails_convexity(grid):
    C = builtin_cover("quadratic_fan", {"K": 2}, grid)
    rep = verify_axioms(synth_table(C))
    assert not rep.convex_in_x and not rep.convex_in_y


def test_sparse_cover_graph_identity_is_exact(grid):
    # min_k a_k <= t exactly when some a_k <= t, so M(b) is the union even at slack 0
    C = builtin_cover("quadratic_fan", {"K": 2}, grid)
    assert check_cover_graph_identity(C, slack=0)
    assert check_cover_graph_identity(C, tol=1e-3, slack=0)


def test_identity_on_theorem_cases(fan, single):
    assert check_cover_graph_identity(fan, slack=1)
    assert check_cover_graph_identity(single, slack=1)


def test_inf_entries_flag_hypotheses(grid):
    C = builtin_cover("singleton", {"function": {"kind": "indicator_interval", "lo": -1, "hi": 1}}, grid)
    rep = verify_axioms(synth_table(C))
    assert not rep.within_hypotheses


def test_csv_layout(tmp_path, single):
    T = synth_table(single)
    T.to_csv(tmp_path / "b.csv")
    T.argmin_to_csv(tmp_path / "a.csv")
    lines = (tmp_path / "b.csv").read_text().splitlines()
    assert lines[0].startswith("x\\y,-2.0,-1.975")
    assert len(lines) == 162
    assert (tmp_path / "a.csv").read_text().splitlines()[1].startswith("-2.0,0,0")


def test_graph_identity_matches_graphs_equal(fan):
    T = synth_table(fan)
    assert check_cover_graph_identity(fan, slack=1, T=T) == graphs_equal(extract_graph(T), cover_union_graph(fan), 1)
