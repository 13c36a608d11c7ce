import math

import numpy as np
import pytest

from bipo.errors import ConfigError, EmptyDomainError
from bipo.extgrid import (
    INF,
    Grid1D,
    SampledFn,
    check_ext,
    ext_add,
    format_real,
    make_grid,
    pairing,
    parse_real,
    read_values_csv,
    sample,
    write_values_csv,
)


def test_grid_points_and_step():
    g = make_grid(-2, 2, 161)
    assert g.points[0] == -2.0 and g.points[-1] == 2.0
    assert g.points[80] == 0.0
    assert g.h == pytest.approx(0.025)
    assert np.all(np.diff(g.points) > 0)
    with pytest.raises(ValueError):
        g.points[0] = 1.0


@pytest.mark.parametrize("lo,hi,n", [(0, 1, 1), (1, 1, 5), (2, 1, 5), (-math.inf, 1, 5), (0, math.nan, 3)])
def test_grid_rejects_bad_specs(lo, hi, n):
    with pytest.raises(ConfigError):
        Grid1D(lo, hi, n)


def test_index_of_and_snap():
    g = make_grid(-1, 1, 5)  # -1, -0.5, 0, 0.5, 1
    assert g.index_of(0.5) == 3
    with pytest.raises(ValueError):
        g.index_of(0.3)
    assert g.snap(0.3) == 3
    assert g.snap(0.25) == 2  # tie goes to the lower index
    assert g.snap(-7) == 0 and g.snap(9) == 4


def test_pairing_is_product():
    assert pairing(1.5, -2.0) == -3.0
    assert np.array_equal(pairing(np.array([1.0, 2.0]), 3.0), [3.0, 6.0])


def test_extended_reals():
    assert ext_add(1.0, INF) == INF
    assert ext_add(2.0, 3.0) == 5.0
    with pytest.raises(ValueError):
        check_ext([0.0, -INF])
    with pytest.raises(ValueError):
        check_ext([math.nan])


def test_sampled_fn_requires_finite_point():
    g = make_grid(0, 1, 3)
    with pytest.raises(EmptyDomainError):
        SampledFn(g, [INF, INF, INF])
    f = SampledFn(g, [INF, 1.0, 2.0])
    assert f.finite.tolist() == [False, True, True]
    assert f.shifted(1.0).values[1] == 2.0


@pytest.mark.parametrize("v", [0.1, -3.0, 1e-300, 2.0 / 3.0, INF])
def test_real_round_trip(v):
    assert parse_real(format_real(v)) == v


def test_format_has_one_zero():
    assert format_real(-0.0) == format_real(0.0) == "0.0"
    with pytest.raises(ValueError):
        format_real(-INF)
    with pytest.raises(ConfigError):
        parse_real("-inf")


def test_values_csv_round_trip(tmp_path):
    g = make_grid(-1, 1, 5)
    vals = np.array([INF, 0.25, 0.0, 0.25, INF])
    write_values_csv(tmp_path / "f.csv", g, vals)
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == "x,value"
    assert np.array_equal(read_values_csv(tmp_path / "f.csv", g), vals)


def test_sample_descriptors(tmp_path):
    g = make_grid(-2, 2, 161)
    assert np.array_equal(sample({"kind": "quadratic", "coeff": 2}, g).values, g.points**2)
    assert np.array_equal(sample({"kind": "abs", "scale": 3}, g).values, 3 * np.abs(g.points))
    ind = sample({"kind": "indicator_point", "at": 0.51}, g).values
    assert np.isfinite(ind).sum() == 1 and ind[g.index_of(0.5)] == 0.0
    box = sample({"kind": "indicator_interval", "lo": -1, "hi": 1}, g).values
    assert np.isfinite(box).sum() == 81
    write_values_csv(tmp_path / "t.csv", g, g.points**4)
    assert np.array_equal(sample({"kind": "table", "path": "t.csv"}, g, base_dir=tmp_path).values, g.points**4)
    assert sample(lambda t: abs(t) ** 3, g).values[-1] == 8.0


@pytest.mark.parametrize("spec", [{"kind": "nope"}, {"coeff": 1}, {"kind": "indicator_point"},
                                  {"kind": "table", "path": "/does/not/exist.csv"}])
def test_sample_config_errors(spec):
    with pytest.raises(ConfigError):
        sample(spec, make_grid(-1, 1, 5))


def test_indicator_outside_grid_is_empty_domain():
    with pytest.raises(EmptyDomainError):
        sample({"kind": "indicator_point", "at": 5.0}, make_grid(-1, 1, 5))
