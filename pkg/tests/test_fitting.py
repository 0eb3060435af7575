from __future__ import annotations

import numpy as np
import pytest

from gmekit.errors import SeparationError
from gmekit.fitting import fit
from conftest import main_effects_model

sm = pytest.importorskip("statsmodels.api")


def test_noiseless_linear_fit():
    x = np.linspace(0, 5, 20)
    y = 2 * x + 1
    res = fit(main_effects_model("gaussian", 1), x[:, None], y)
    np.testing.assert_allclose(res.theta[:2], [1.0, 2.0], atol=1e-12)
    assert np.max(np.abs(res.cov)) < 1e-20


def test_separable_logistic_raises():
    x = np.array([-3.0, -2.0, -1.0, 1.0, 2.0, 3.0])
    y = (x > 0).astype(float)
    with pytest.raises(SeparationError, match="separated"):
        fit(main_effects_model("binomial", 1), x[:, None], y)


def _data(seed=3, n=400):
    rng = np.random.default_rng(seed)
    X = np.column_stack([rng.normal(size=n), rng.integers(0, 2, n)])
    return X


def test_logistic_matches_reference_fit():
    X = _data()
    rng = np.random.default_rng(4)
    y = (rng.random(len(X)) < 1 / (1 + np.exp(-(0.3 + 0.8 * X[:, 0] - 0.5 * X[:, 1])))).astype(float)
    res = fit(main_effects_model("binomial", 2), X, y)
    ref = sm.GLM(y, sm.add_constant(X), family=sm.families.Binomial()).fit(tol=1e-12)
    np.testing.assert_allclose(res.theta, ref.params, rtol=1e-6, atol=1e-8)
    np.testing.assert_allclose(res.cov, ref.cov_params(), rtol=1e-5)


def test_poisson_with_offset_matches_reference_fit():
    X = _data(5)
    rng = np.random.default_rng(6)
    expo = rng.integers(1, 30, len(X)).astype(float)
    y = rng.poisson(expo * np.exp(-1.0 + 0.4 * X[:, 0]))
    res = fit(main_effects_model("poisson", 2), X, y, offset=np.log(expo))
    ref = sm.GLM(y, sm.add_constant(X), family=sm.families.Poisson(), offset=np.log(expo)).fit(tol=1e-12)
    np.testing.assert_allclose(res.theta, ref.params, rtol=1e-6, atol=1e-8)


def test_binomial_trials_matches_reference_fit():
    X = _data(7, 200)
    rng = np.random.default_rng(8)
    trials = rng.integers(5, 50, len(X)).astype(float)
    succ = rng.binomial(trials.astype(int), 1 / (1 + np.exp(-(-1 + 0.5 * X[:, 0]))))
    res = fit(main_effects_model("binomial", 2), X, succ, trials=trials)
    ref = sm.GLM(np.column_stack([succ, trials - succ]), sm.add_constant(X),
                 family=sm.families.Binomial()).fit(tol=1e-12)
    np.testing.assert_allclose(res.theta, ref.params, rtol=1e-6, atol=1e-8)


def test_bundled_logistic_fixture_golden():
    from gmekit.datasets import clinical_like
    from gmekit.model import compile_schema, encode_rows, model_from_schema

    ds = clinical_like()
    s = compile_schema(ds.schema)
    X = encode_rows(s, ds.records())
    res = fit(model_from_schema(s, "binomial"), X, ds.columns["long_stay"])
    golden = [-3.3764453088668027, 0.05383657979225753, 0.3918055999151716, 0.74904731665461,
              0.6002260350895852, 0.4078884273784354, -0.40062328403898867]
    np.testing.assert_allclose(res.theta, golden, rtol=1e-6)
