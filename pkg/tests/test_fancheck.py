import math

import numpy as np
import pytest

from bipo import builtin_cover, make_grid
from bipo.fancheck import (
    FanInstance,
    check_bic,
    check_fan_bic,
    check_fan_convex,
    check_implicit_convex,
    f_instance,
    g_instance,
    h_instance,
    minimax_verify,
    opponent_concavity_defect,
    xbar_y_instance,
)
from bipo.synth import synth_value


@pytest.fixture(scope="module")
def small():
    g = make_grid(-2, 2, 41)
    return builtin_cover("quadratic_fan", {"K": 17}, g)


def test_g_instance_values(small):
    F = g_instance(small, 30)
    x = small.xgrid.points
    assert np.allclose(F.values, small.lambdas[:, None] * (x[30] ** 2 - x[None, :] ** 2) / 2)


def _failing_pairs(rep):
    return sorted((w1, w2) for (w1, w2, _), _, _ in rep.failures)


def test_g_has_arithmetic_mean_witness():
    lam = np.array([1.0, 2.0, 3.0])
    z = np.linspace(-1, 1, 9)
    F = FanInstance(lam[:, None] * (0.25 - z[None, :] ** 2) / 2, witness_sampled=False)
    rep = check_fan_convex(F, alphas=[0.5], delta=0.0)
    assert rep.tested_pairs == 6
    # the midpoint of 1 and 3 is sampled, those of adjacent pairs are not
    assert _failing_pairs(rep) == [(0, 1), (1, 0), (1, 2), (2, 1)]


def test_h_has_harmonic_mean_witness():
    inv = np.array([1.0, 0.75, 0.5])  # 1 / lambda for lambda = 1, 4/3, 2
    u = np.linspace(-1, 1, 9)
    F = FanInstance(inv[:, None] * (0.25 - u[None, :] ** 2) / 2, witness_sampled=False)
    rep = check_fan_convex(F, alphas=[0.5], delta=0.0)
    assert (0, 2) not in _failing_pairs(rep) and (2, 0) not in _failing_pairs(rep)


def test_two_point_witness_absent(two_point):
    rep = check_fan_convex(g_instance(two_point, 120), exhaustive=True)  # x = 1
    assert not rep.passed
    assert rep.delta_used == 0.0
    assert rep.failed_alphas() == {0.25, 0.5, 0.75}
    (w1, w2, a), res, wit = next(f for f in rep.failures if f[0][2] == 0.5)
    assert res > 0 and wit in (0, 1)


def test_infinite_delta_always_passes(two_point):
    assert check_fan_convex(g_instance(two_point, 0), delta=math.inf).passed


def test_delta_monotone(two_point):
    F = g_instance(two_point, 5)
    rep0 = check_fan_convex(F, delta=0.0)
    needed = rep0.worst_residual
    assert not rep0.passed
    assert not check_fan_convex(F, delta=needed * 0.99).passed
    assert check_fan_convex(F, delta=needed).passed


def test_degenerate_weights_are_exact(two_point):
    rep = check_fan_convex(g_instance(two_point, 0), alphas=[0.0, 1.0], delta=0.0)
    assert rep.passed


def test_sampled_pairs_are_seeded(small):
    F = h_instance(small, 3)
    a = check_fan_convex(F, pair_budget=20, seed=4)
    b = check_fan_convex(F, pair_budget=20, seed=4)
    assert a.tested_pairs == 20 and not a.exhaustive
    assert (a.passed, a.worst_residual) == (b.passed, b.worst_residual)
    full = check_fan_convex(F, pair_budget=10, exhaustive=True)
    assert full.exhaustive and full.tested_pairs == 17 * 16


def test_backends_agree(small):
    F = g_instance(small, 7)
    a = check_fan_convex(F, exhaustive=True, backend="python")
    b = check_fan_convex(F, exhaustive=True)
    assert a.worst_residual == b.worst_residual and a.failures == b.failures


def test_fan_bic_theorem_case(small):
    rep = check_fan_bic(small, exhaustive=True)
    assert rep.passed
    assert len(rep.g_reports) == 41 and len(rep.h_reports) == 41


def test_fan_bic_two_point_fails(two_point):
    rep = check_fan_bic(two_point, x_indices=[10, 40], y_indices=[20])
    assert not rep.passed
    sides = {side for side, _, _ in rep.failures()}
    assert sides == {"g", "h"}


def test_fan_bic_singleton_passes(single):
    assert check_fan_bic(single, x_indices=[0, 50], y_indices=[160]).passed


def test_fan_bic_rejects_inf_covers(grid):
    C = builtin_cover("singleton", {"function": {"kind": "indicator_interval", "lo": -1, "hi": 1}}, grid)
    rep = check_fan_bic(C)
    assert not rep.passed and "hypotheses" in rep.note


def test_implicit_convexity(small, single):
    assert check_implicit_convex(f_instance(single, y_index=5), exhaustive=True).passed
    assert check_implicit_convex(f_instance(small, y_index=30), exhaustive=True).passed
    assert check_implicit_convex(f_instance(small, x_index=3), alphas=[1.0], delta=0.0).passed
    assert check_bic(small, x_indices=[0, 20], y_indices=[5, 40]).passed
    with pytest.raises(ValueError):
        f_instance(small)


def test_saddle_concave_in_opponent(small):
    for i, j in [(0, 0), (20, 33), (40, 7)]:
        assert opponent_concavity_defect(xbar_y_instance(small, i, j)) <= 1e-12


def test_minimax_at_one_two(grid):
    C = builtin_cover("quadratic_fan", {"K": 65, "star": "computed"}, grid)
    m = minimax_verify(C, grid.index_of(1.0), grid.index_of(2.0), tol=1e-12)
    assert m.lhs == m.b_value == 2.0
    assert m.rhs == pytest.approx(2.0, abs=2e-3)
    assert m.passed


def test_minimax_singleton(single, grid):
    for i, j in [(10, 150), (80, 80)]:
        m = minimax_verify(single, i, j)
        assert m.gap == 0.0
        assert m.lhs == synth_value(single, i, j)[0]


def test_minimax_weak_duality_on_sparse_cover(grid):
    C = builtin_cover("quadratic_fan", {"K": 2, "lambda_set": "finite", "star": "computed"}, grid)
    m = minimax_verify(C, grid.index_of(1.0), grid.index_of(1.0), gap_tol=2e-3)
    assert m.gap > 0.1  # no Fan convexity, no minimax equality
    assert not m.passed
    assert m.lhs_error <= m.tol


def test_minimax_side_validation(single):
    with pytest.raises(ValueError):
        minimax_verify(single, 0, 0, side="z")


def test_instance_validation():
    with pytest.raises(ValueError):
        FanInstance(np.array([[1.0, math.inf]]))
    with pytest.raises(ValueError):
        FanInstance(np.zeros((0, 3)))
