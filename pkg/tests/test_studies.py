import csv

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from sphere_nse.errors import ConfigError
from sphere_nse.harmonics import HarmonicIndex
from sphere_nse.studies import (
    ConvergenceTable, fitted_order, helmholtz_study, interpolation_study, is_monotone_decreasing,
    manufactured_temporal_study, parse_target,
)


@given(p=st.floats(0.5, 6.0), c=st.floats(1e-3, 1e3))
def test_fitted_order_recovers_power_law(p, c):
    h = np.array([0.4, 0.2, 0.1, 0.05])
    assert_allclose(fitted_order(h, c * h ** p), p, rtol=1e-9)


def test_fitted_order_needs_two_points():
    assert fitted_order([0.1], [1.0]) is None
    assert fitted_order([0.1, 0.05], [0.0, 0.0]) is None


def test_monotone():
    assert is_monotone_decreasing([3, 2, 1])
    assert not is_monotone_decreasing([3, 3, 1])
    assert is_monotone_decreasing([1.0])


def test_table_single_row_flag(tmp_path):
    t = ConvergenceTable(("N", "h", "max_error"), rows=[(100, 0.2, 1e-3)])
    assert t.order is None
    assert "single row" in t.flag and "single row" in t.summary()
    t.write_csv(tmp_path / "t.csv")
    rows = list(csv.reader(open(tmp_path / "t.csv")))
    assert rows == [["N", "h", "max_error"], ["100", "0.2", "0.001"]]


def test_table_order():
    h = [0.2, 0.1, 0.05]
    t = ConvergenceTable(("N", "h", "max_error"), rows=[(n, x, 3 * x ** 4) for n, x in
                                                      zip((1, 2, 3), h)])
    assert_allclose(t.order, 4.0)
    assert t.monotone and t.flag == ""
    assert "order: 4.000" in t.format()


def test_parse_target():
    assert parse_target("y3,0") == [("y", HarmonicIndex.from_order(3, 0))]
    assert parse_target(" y2,1 + z2,-1 ") == [("y", HarmonicIndex.from_order(2, 1)),
                                              ("z", HarmonicIndex.from_order(2, -1))]
    for bad in ("x3,0", "y3", "y0,0", "y2,3", ""):
        with pytest.raises(ConfigError):
            parse_target(bad)


def test_interpolation_study_converges():
    t = interpolation_study("wendland2:eps=1", "y3,0", [100, 200, 400], probe=1000)
    assert t.meta["method"] == "div"
    assert t.monotone and t.order > 3.0


@pytest.mark.parametrize("target,method", [("z2,1", "curl_project"), ("y2,1+z2,1", "leray")])
def test_default_methods(target, method):
    t = interpolation_study("wendland2:eps=1", target, [100], probe=200)
    assert t.meta["method"] == method and t.order is None


def test_unknown_method():
    with pytest.raises(ConfigError):
        interpolation_study("wendland2:eps=1", "y3,0", [100], method="magic")


def test_helmholtz_study():
    t = helmholtz_study("wendland4:eps=1", "y3,0", [100, 200], probe=500)
    assert np.all(t.column("nodal_residual") < 1e-9)
    assert t.monotone


def test_helmholtz_rejects_curl_free_target():
    with pytest.raises(ConfigError):
        helmholtz_study("wendland4:eps=1", "z2,0", [100])


def test_temporal_study_semi_implicit_is_first_order():
    t = manufactured_temporal_study(n=150, taus=(2e-2, 1e-2, 5e-3), T=0.2,
                                    scheme="semi_implicit_euler")
    assert t.x_column == "tau"
    assert 0.8 <= t.order <= 1.2
