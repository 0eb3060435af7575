from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gmekit.errors import ConfigError
from gmekit.report import (
    PlotSeries,
    emit,
    read_json,
    series_from_result,
    standardized_quantity,
    z_inverse,
    z_scale,
)
from gmekit.uncertainty import QuantityResult, UncertaintyRegion


def _result(point=2.0, lo=1.0, hi=3.0, **kw):
    return QuantityResult(point, (UncertaintyRegion("hdr", 0.05, ((lo, hi),)),), **kw)


def test_z_scale_examples():
    assert z_scale(2.0, (2.0, 6.0)) == 0.0
    assert z_scale(6.0, (2.0, 6.0)) == 1.0
    assert z_scale(4.0, (2.0, 6.0)) == 0.5
    assert z_scale(7.0, (2.0, 6.0)) == 0.0
    np.testing.assert_allclose(z_scale([1.0, 3.0, 5.0, 4.0], [1.0, 3.0, 5.0]), [0.0, 0.5, 1.0, 0.0])


@given(st.floats(-1e3, 1e3), st.floats(1e-3, 1e3), st.floats(0, 1))
def test_z_scale_roundtrip(lo, width, z):
    Q = (lo, lo + width)
    assert z_scale(z_inverse(z, Q), Q) == pytest.approx(z, abs=1e-9)


def test_degenerate_window():
    with pytest.raises(ConfigError):
        z_scale(1.0, (2.0, 2.0))


def test_standardize_identity_and_scaling():
    r = _result()
    same = standardized_quantity(r, 1.0)
    assert same.point == 2.0 and same.regions[0].intervals == ((1.0, 3.0),)
    s = standardized_quantity(r, 4.0)
    assert s.point == 0.5
    assert s.regions[0].intervals == ((0.25, 0.75),)
    assert s.meta["sd_y"] == 4.0


def test_standardize_curve_grid_and_sentence():
    grid = ((2.0, 1.0, UncertaintyRegion("hdr", 0.05, ((0.0, 2.0),))),
            (6.0, 3.0, UncertaintyRegion("hdr", 0.05, ((2.0, 4.0),))))
    r = QuantityResult(np.array([1.0, 3.0]), tuple(g[2] for g in grid), grid=grid)
    s = standardized_quantity(r, 2.0, Q=(2.0, 6.0), outcome="stay")
    assert [g[0] for g in s.grid] == [0.0, 1.0]
    assert s.grid[1][2].intervals == ((1.0, 2.0),)
    assert "stay" in s.meta["sentence"]
    with pytest.raises(ConfigError):
        standardized_quantity(r, 0.0)


def test_forest_of_three_models_roundtrip():
    series = [series_from_result(name, _result(v, v - 1, v + 1)) for name, v in
              (("linear", 0.1), ("poisson", 0.2), ("logistic", 0.3))]
    blob = emit(series, "json")
    assert blob == emit(series, "json")
    doc = json.loads(blob)
    assert [s["series_id"] for s in doc["series"]] == ["linear", "poisson", "logistic"]
    back = read_json(blob)
    assert back[2].point == (0.3,)


def test_empty_series_rejected():
    with pytest.raises(ConfigError):
        PlotSeries("x", "curve", (), (), (), ())
    with pytest.raises(ConfigError):
        emit([], "json")
    with pytest.raises(ConfigError):
        PlotSeries("x", "curve", (0.0,), (1.0,), (2.0,), (0.0,))


def test_csv_and_svg():
    s = PlotSeries("c", "curve", (0.0, 1.0), (0.5, 0.6), (0.4, 0.5), (0.6, 0.7))
    lines = emit([s], "csv").decode().splitlines()
    assert lines[0] == "series_id,x,point,lo,hi"
    assert lines[1] == "c,0.0,0.5,0.4,0.6"
    svg = emit([s], "svg").decode()
    assert svg.startswith("<svg") and "<polyline" in svg
    with pytest.raises(ConfigError):
        emit([s], "png")
