from __future__ import annotations

import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import norm

from gmekit.errors import ConfigError, DataError, DomainError
from gmekit.uncertainty import (
    UncertaintyRegion,
    curve_band,
    equal_tailed,
    estimate,
    hdr,
    make_ensemble,
    normal_ensemble,
    read_draws,
    region,
)


def test_zero_covariance_gives_copies():
    ens = normal_ensemble([1.0, -2.0], np.zeros((2, 2)), n=10)
    np.testing.assert_array_equal(ens.draws, np.tile([1.0, -2.0], (10, 1)))


def test_normal_moments():
    ens = normal_ensemble([0.0], [[1.0]], n=200_000, seed=3)
    assert abs(ens.draws.mean()) < 0.01
    assert abs(ens.draws.var() - 1.0) < 0.02


def test_fixed_coordinates_stay_fixed_without_warning():
    cov = np.diag([0.5, 0.0])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ens = normal_ensemble([0.0, 3.0], cov, n=50)
    assert np.all(ens.draws[:, 1] == 3.0)
    assert ens.draws[:, 0].std() > 0


def test_non_psd_covariance_is_clipped_with_warning():
    cov = np.array([[1.0, 2.0], [2.0, 1.0]])
    with pytest.warns(RuntimeWarning):
        ens = normal_ensemble([0.0, 0.0], cov, n=100)
    assert ens.info["factorization"] == "eigen_clipped"


def test_same_seed_same_draws():
    a = normal_ensemble([0, 0], np.eye(2), n=20, seed=9)
    b = normal_ensemble([0, 0], np.eye(2), n=20, seed=9)
    np.testing.assert_array_equal(a.draws, b.draws)


def test_posterior_file(tmp_path):
    rng = np.random.default_rng(0)
    data = rng.normal(size=(4000, 3))
    path = tmp_path / "draws.csv"
    np.savetxt(path, data, delimiter=",", header="a,b,c", comments="")
    ens = make_ensemble(path)
    assert ens.n_draws == 4000
    assert ens.provenance == "posterior_file"
    sub = read_draws(path, ["c", "a"])
    np.testing.assert_allclose(sub.draws[:, 0], data[:, 2])
    with pytest.raises(DataError):
        read_draws(path, ["zzz"])


def test_constant_quantity():
    ens = normal_ensemble([0.0], [[1.0]], n=500)
    res = estimate(lambda th: 4.2, ens)
    assert res.point == pytest.approx(4.2)
    assert res.regions[0].intervals == ((4.2, 4.2),)


def test_linear_quantity_equal_tailed():
    ens = normal_ensemble([1.5, 0.0], np.diag([0.25, 1.0]), n=100_000, seed=1)
    res = estimate(lambda th: th[..., 0], ens, 0.05, "equal_tailed", vectorized=False)
    assert res.point == pytest.approx(1.5, abs=0.01)
    assert res.regions[0].lo == pytest.approx(1.5 - 1.96 * 0.5, abs=0.02)
    assert res.regions[0].hi == pytest.approx(1.5 + 1.96 * 0.5, abs=0.02)


def test_vector_quantity_has_one_region_per_component():
    ens = normal_ensemble([0.0, 1.0, 2.0], np.eye(3) * 0.01, n=1000)
    res = estimate(lambda th: th.T, ens, vectorized=True, labels=("a", "b", "c"))
    assert len(res.regions) == 3
    assert res.to_dict()["labels"] == ["a", "b", "c"]


def test_vectorized_shape_checked():
    ens = normal_ensemble([0.0], [[1.0]], n=100)
    with pytest.raises(ConfigError):
        estimate(lambda th: np.zeros(7), ens, vectorized=True)


def test_non_finite_quantity_names_draw():
    ens = normal_ensemble([0.0], [[1.0]], n=100)
    with pytest.raises(DomainError, match="draw"):
        estimate(lambda th: np.log(th[:, 0]), ens, vectorized=True)


def test_hdr_uniform_grid():
    x = np.linspace(0, 1, 1001)
    reg = hdr(x, 0.1)
    assert reg.width == pytest.approx(0.9, abs=0.002)


def test_hdr_skewed_is_shorter_than_equal_tailed():
    x = np.random.default_rng(2).exponential(size=50_000)
    assert hdr(x).width < equal_tailed(x).width
    assert hdr(x).lo < 0.01


def test_bimodal_hdr_has_two_intervals():
    rng = np.random.default_rng(4)
    x = np.concatenate([rng.normal(-5, 1, 20_000), rng.normal(5, 1, 20_000)])
    reg = hdr(x, 0.05, multimodal=True)
    assert len(reg.intervals) == 2
    (a, b), (c, d) = reg.intervals
    assert b < 0 < c
    assert a == pytest.approx(-5 - 1.96, abs=0.1) and d == pytest.approx(5 + 1.96, abs=0.1)
    assert np.mean(reg.contains(x)) >= 0.95


@settings(max_examples=40)
@given(st.integers(20, 3000), st.sampled_from([0.01, 0.05, 0.1, 0.32]), st.integers(0, 2 ** 31))
def test_regions_cover_at_least_nominal_mass(n, alpha, seed):
    x = np.random.default_rng(seed).standard_t(3, size=n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for kind in ("hdr", "equal_tailed"):
            reg = region(x, alpha, kind)
            assert np.mean(reg.contains(x)) >= 1 - alpha - 1e-12
        assert hdr(x, alpha).width <= equal_tailed(x, alpha).width + 1e-12


def test_region_validation():
    with pytest.raises(ConfigError):
        hdr([1.0, 2.0], 1.5)
    with pytest.raises(ConfigError):
        region([1.0, 2.0], 0.1, "nonsense")


def test_small_sample_warning():
    with pytest.warns(RuntimeWarning):
        hdr(np.arange(10.0), 0.05)


def test_curve_band_zero_covariance_collapses():
    ens = normal_ensemble([0.2, 1.0], np.zeros((2, 2)), n=10)
    res = curve_band(lambda th, x: th[:, 0] + th[:, 1] * x, ens, [0.0, 1.0, 2.0])
    for x, p, reg in res.grid:
        assert p == pytest.approx(0.2 + x)
        assert reg.lo == reg.hi == pytest.approx(p)


def test_scaled_region():
    r = UncertaintyRegion("hdr", 0.05, ((1.0, 2.0),)).scaled(0.5)
    assert r.intervals == ((0.5, 1.0),)
