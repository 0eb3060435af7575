from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gmekit.errors import ConfigError, DataError
from gmekit.model import (
    compile_schema,
    decode,
    encode,
    encode_rows,
    expectation,
    local_slope,
    model_from_json,
    model_from_schema,
    model_to_json,
    theta_names,
)
from conftest import main_effects_model
from oracles import central_difference, g as oracle_g, sigmoid

CLINICAL = {
    "columns": [
        {"name": "age", "kind": "metric"},
        {"name": "race", "kind": "categorical", "levels": ["White", "Latinx", "Black", "Other"], "reference": "White"},
        {"name": "gender", "kind": "categorical", "levels": ["F", "M"], "reference": "F"},
        {"name": "group", "kind": "categorical", "levels": ["C", "G"], "reference": "C"},
    ],
    "interest": "race",
}


def test_minimal_metric_schema():
    s = compile_schema({"columns": [{"name": "age", "kind": "metric"}], "interest": "age"})
    assert (s.p, s.d_I, s.m, s.c) == (1, 1, 0, 0)
    assert s.interest_kind == "metric"


def test_clinical_schema_dimensions():
    s = compile_schema(CLINICAL)
    assert s.d_I == 3
    assert s.p == 6
    assert s.interest_kind == "categorical"


def test_two_categorical_interaction_has_five_entries():
    s = compile_schema({
        "columns": [
            {"name": "smoking", "kind": "categorical", "levels": ["no", "yes"]},
            {"name": "gender", "kind": "categorical", "levels": ["f", "m", "d"]},
        ],
        "interest": "smoking*gender",
    })
    assert s.interest_kind == "categorical_interaction"
    assert s.d_I == 5


@pytest.mark.parametrize("race,block", [("White", (0, 0, 0)), ("Black", (0, 1, 0)), ("Latinx", (1, 0, 0))])
def test_dummy_blocks(race, block):
    s = compile_schema(CLINICAL)
    x = encode(s, {"age": 40, "race": race, "gender": "F", "group": "C"}).x
    assert tuple(x[list(s.indices("race"))]) == block


def test_mixed_record_encoding():
    s = compile_schema(CLINICAL)
    x = encode(s, {"age": 50, "race": "Latinx", "gender": "F", "group": "G"}).x
    assert tuple(x) == (50, 1, 0, 0, 0, 1)
    assert decode(s, x) == {"age": 50.0, "race": "Latinx", "gender": "F", "group": "G"}


def test_encode_errors():
    s = compile_schema(CLINICAL)
    with pytest.raises(DataError):
        encode(s, {"age": 50, "race": "Martian", "gender": "F", "group": "G"})
    with pytest.raises(DataError):
        encode(s, {"age": 50, "race": "White", "gender": "F"})
    with pytest.raises(DataError):
        encode(s, {"age": float("nan"), "race": "White", "gender": "F", "group": "G"})


def test_schema_validation():
    with pytest.raises(ConfigError):
        compile_schema({"columns": [{"name": "a", "kind": "metric"}, {"name": "a", "kind": "metric"}],
                        "interest": "a"})
    with pytest.raises(ConfigError):
        compile_schema({"columns": [{"name": "c", "kind": "categorical", "levels": ["x"]}], "interest": "c"})
    with pytest.raises(ConfigError):
        compile_schema({"columns": [{"name": "a", "kind": "metric"}], "interest": "b"})


def test_expectation_examples():
    m = main_effects_model("gaussian", 1)
    assert expectation(m, [1.0, 2.0, 1.0], [3.0]) == pytest.approx(7.0, abs=0)
    mb = main_effects_model("binomial", 1)
    assert expectation(mb, [0.0, 0.0], [1.7]) == 0.5
    mp = main_effects_model("poisson", 1)
    assert expectation(mp, [0.0, 1.0], [1.0], offset=math.log(1.0)) == pytest.approx(math.e, rel=1e-15)


def test_local_slope_examples():
    m = main_effects_model("gaussian", 1)
    assert local_slope(m, [0.3, -1.2, 1.0], [5.0], 0) == pytest.approx(-1.2, abs=1e-15)
    mb = main_effects_model("binomial", 2)
    beta = [0.2, 0.7, -0.4]
    x = [0.5, 1.5]
    P = sigmoid(0.2 + 0.35 - 0.6)
    assert local_slope(mb, beta, x, 0) == pytest.approx(0.7 * P * (1 - P), rel=1e-13)


def test_local_slope_with_interaction_term():
    m = main_effects_model("gaussian", 2, interactions=[(0, 1)])
    beta = [0.1, 1.5, -0.3, 0.8, 1.0]
    x = [0.7, -2.0]
    assert local_slope(m, beta, x, 0) == pytest.approx(1.5 + 0.8 * -2.0, rel=1e-14)


def test_block_contrast():
    m = main_effects_model("binomial", 3)
    beta = [0.1, 0.5, -0.2, 0.9]
    x = [0.0, 1.0, 0.0]
    got = local_slope(m, beta, x, (1, 2))
    assert got == pytest.approx(sigmoid(0.1 - 0.2) - sigmoid(0.1), rel=1e-14)


@settings(max_examples=60, deadline=None)
@given(
    family=st.sampled_from(["gaussian", "binomial", "poisson"]),
    beta=st.lists(st.floats(-1.5, 1.5), min_size=5, max_size=5),
    x=st.lists(st.floats(-2, 2), min_size=3, max_size=3),
    j=st.integers(0, 2),
)
def test_slope_matches_finite_difference(family, beta, x, j):
    inter = [(0, 2)]
    m = main_effects_model(family, 3, interactions=inter, n_aux=0)
    f = lambda z: oracle_g(family, beta, z, inter)
    fd = central_difference(f, x, j)
    got = local_slope(m, beta, x, j)
    assert got == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_eta_saturation_keeps_poisson_finite():
    m = main_effects_model("poisson", 1)
    assert np.isfinite(expectation(m, [0.0, 1.0], [1e6]))


def test_json_round_trip():
    s = compile_schema(CLINICAL)
    m = model_from_schema(s, "binomial")
    theta = np.arange(m.k, dtype=float) / 10
    cov = np.eye(m.k) * 0.01
    doc = model_to_json(m, theta, cov)
    m2, th2, cov2 = model_from_json(doc)
    assert m2.family == "binomial-logit"
    np.testing.assert_array_equal(th2, theta)
    np.testing.assert_array_equal(cov2, cov)
    X = encode_rows(s, [{"age": 40, "race": "Black", "gender": "M", "group": "G"}])
    assert expectation(m2, th2, X[0]) == expectation(m, theta, X[0])
    assert theta_names(m)[0] == "(intercept)"


def test_gaussian_parameter_names_include_variance():
    s = compile_schema({"columns": [{"name": "a", "kind": "metric"}], "interest": "a"})
    assert theta_names(model_from_schema(s, "gaussian"))[-1] == "sigma2"
