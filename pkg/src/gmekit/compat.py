"""Established effect summaries as special cases of measure-weighted
quantities.

Every function computes its summary in one of two ways, selected by
``route``:

* ``"literal"`` (default) evaluates the textbook formula directly on the data
  with the model's expectation function;
* ``"gme"`` builds the corresponding measures and calls the generic routines
  of :mod:`gmekit.quantities` (always by quadrature, never by the uniform
  closed form).

The two routes share no code beyond the model evaluation, so comparing them
checks the correspondence rather than restating it.

All functions take a :class:`~gmekit.quantities.Layout` without separated
interaction terms and an encoded data matrix ``X`` of shape ``(n, p)``.
``categorical_blocks`` lists the encoded index blocks of categorical
columns, which matters wherever representative values are formed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
from scipy.special import expit, logit

from .errors import ConfigError, DataError
from .measures import (
    BinnedConditional,
    Dirac,
    DiscretePoints,
    EmpiricalJoint,
    EmpiricalMarginal,
    ExactConditional,
    Measure,
    Uniform,
    product_measure,
)
from .model import as_theta2
from .quantities import (
    A_I,
    A_II_DOUBLEPRIME,
    A_II_PRIME,
    Layout,
    QuantitySpec,
    averaged_expectation,
    gme_categorical,
    gme_metric,
    individualized_expectation,
)

ROUTES = ("literal", "gme")


def _route(route: str) -> str:
    if route not in ROUTES:
        raise ConfigError(f"route must be one of {ROUTES}, got {route!r}")
    return route


def _plain(layout: Layout) -> None:
    if layout.overridden or layout.offset_coord or layout.kind == "mixed":
        raise ConfigError("compatibility summaries need a layout without separated terms or offsets")


def _data(layout: Layout, X: Any) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != layout.p:
        raise DataError(f"data must be a matrix with {layout.p} encoded columns")
    if len(X) == 0:
        raise DataError("data are empty")
    return X


def _out(res: np.ndarray, single: bool):
    if single:
        res = res[..., 0]
    return float(res) if np.ndim(res) == 0 else res


def _g(layout: Layout, theta2: np.ndarray, X: np.ndarray) -> np.ndarray:
    return layout.model.g(theta2, X)


# --------------------------------------------------------------------------- #
# Representative values
# --------------------------------------------------------------------------- #


@dataclass(frozen=True, eq=False)
class _Representative:
    """Metric columns at their means, categorical blocks with their observed
    proportions: a list of ``(weight, x)`` combinations."""

    combos: tuple[tuple[float, np.ndarray], ...]
    blocks: tuple[tuple[int, ...], ...]
    block_atoms: tuple[tuple[np.ndarray, np.ndarray], ...]
    means: np.ndarray


def _representative(X: np.ndarray, blocks: Sequence[Sequence[int]], policy: str) -> _Representative:
    blocks = tuple(tuple(int(i) for i in b) for b in blocks)
    if blocks and policy == "strict":
        raise ConfigError("the mean of a categorical regressor is undefined; pass policy='proportions'")
    if policy not in ("strict", "proportions"):
        raise ConfigError(f"unknown categorical policy {policy!r}")
    means = X.mean(axis=0)
    atoms = []
    for b in blocks:
        uniq, counts = np.unique(X[:, list(b)], axis=0, return_counts=True)
        atoms.append((uniq, counts / len(X)))
    combos = []
    for choice in itertools.product(*[range(len(a[1])) for a in atoms]):
        x = means.copy()
        w = 1.0
        for b, (uniq, props), c in zip(blocks, atoms, choice):
            x[list(b)] = uniq[c]
            w *= props[c]
        combos.append((w, x))
    return _Representative(tuple(combos), blocks, tuple(atoms), means)


def _rep_measure(layout: Layout, rep: _Representative, coords: Sequence[int]) -> Measure:
    """Measure over ``coords`` (in order): Dirac at the mean for metric
    coordinates, observed proportions for categorical blocks."""
    block_of = {}
    for b, atoms in zip(rep.blocks, rep.block_atoms):
        for i in b:
            block_of[i] = (b, atoms)
    parts: list[Measure] = []
    i = 0
    coords = list(coords)
    while i < len(coords):
        c = coords[i]
        if c in block_of:
            b, (uniq, props) = block_of[c]
            cols = [b.index(cc) for cc in coords[i : i + len(b)] if cc in b]
            parts.append(DiscretePoints(uniq[:, cols], props))
            i += len(cols)
        else:
            parts.append(Dirac([rep.means[c]]))
            i += 1
    return parts[0] if len(parts) == 1 else product_measure(parts)


# --------------------------------------------------------------------------- #
# Adjusted predictions and marginal effects
# --------------------------------------------------------------------------- #


def aap(layout: Layout, theta: Any, X: Any, route: str = "literal"):
    """Average adjusted prediction: mean of the expectation over the rows."""
    _plain(layout)
    X = _data(layout, X)
    theta2, single = as_theta2(theta)
    if _route(route) == "literal":
        return _out(_g(layout, theta2, X).mean(axis=0), single)
    joint = EmpiricalJoint.from_data(X)
    mu_I = EmpiricalMarginal(joint, layout.rest)
    spec = QuantitySpec(A_II_DOUBLEPRIME, mu_I, ExactConditional(joint, layout.interest) if layout.rest else None)
    return individualized_expectation(layout, theta, spec)


def ame(layout: Layout, theta: Any, X: Any, route: str = "literal"):
    """Average marginal effect.

    Metric interest: mean of the partial derivative over the rows (the
    covariates stay paired with their own interest value).  Categorical
    interest: per category, mean over all rows of the expectation with the
    block set to that category minus with the block at the reference.
    """
    _plain(layout)
    X = _data(layout, X)
    theta2, single = as_theta2(theta)
    if _route(route) == "literal":
        if layout.kind == "metric":
            j = layout.interest[0]
            return _out(layout.model.dg_dx(theta2, X, j).mean(axis=0), single)
        block = list(layout.interest)
        X0 = X.copy()
        X0[:, block] = 0.0
        g0 = _g(layout, theta2, X0)
        out = []
        for l in range(len(block)):
            Xl = X0.copy()
            Xl[:, block[l]] = 1.0
            out.append((_g(layout, theta2, Xl) - g0).mean(axis=0))
        return _out(np.stack(out), single)
    joint = EmpiricalJoint.from_data(X)
    if layout.kind == "metric":
        mu = EmpiricalMarginal(joint, layout.rest) if layout.rest else joint
        cov = ExactConditional(joint, layout.interest) if layout.rest else None
        return gme_metric(layout, theta, QuantitySpec(A_II_DOUBLEPRIME, mu, cov), method="quadrature")
    cov = EmpiricalMarginal(joint, layout.interest) if layout.rest else None
    return gme_categorical(layout, theta, QuantitySpec(A_II_PRIME, None, cov))


def apr(layout: Layout, theta: Any, x_rep: Any, route: str = "literal"):
    """Adjusted prediction at a representative vector."""
    _plain(layout)
    x = np.asarray(x_rep, dtype=float).ravel()
    if len(x) != layout.p:
        raise ConfigError(f"representative vector needs length {layout.p}")
    theta2, single = as_theta2(theta)
    if _route(route) == "literal":
        return _out(_g(layout, theta2, x[None, :])[0], single)
    cov = Dirac(x[list(layout.rest)]) if layout.rest else None
    return averaged_expectation(layout, theta, x[list(layout.interest)], QuantitySpec(A_I, None, cov))


def mer(layout: Layout, theta: Any, x_rep: Any, route: str = "literal"):
    """Marginal effect at a representative vector (a vector of contrasts for
    categorical interest)."""
    _plain(layout)
    x = np.asarray(x_rep, dtype=float).ravel()
    if len(x) != layout.p:
        raise ConfigError(f"representative vector needs length {layout.p}")
    theta2, single = as_theta2(theta)
    if _route(route) == "literal":
        if layout.kind == "metric":
            return _out(layout.model.dg_dx(theta2, x[None, :], layout.interest[0])[0], single)
        x0 = x.copy()
        x0[list(layout.interest)] = 0.0
        g0 = _g(layout, theta2, x0[None, :])[0]
        out = []
        for c in layout.interest:
            xl = x0.copy()
            xl[c] = 1.0
            out.append(_g(layout, theta2, xl[None, :])[0] - g0)
        return _out(np.stack(out), single)
    cov = Dirac(x[list(layout.rest)]) if layout.rest else None
    if layout.kind == "metric":
        spec = QuantitySpec(A_I, Dirac(x[list(layout.interest)]), cov)
        return gme_metric(layout, theta, spec, method="quadrature")
    return gme_categorical(layout, theta, QuantitySpec(A_I, None, cov))


def apm(layout: Layout, theta: Any, X: Any, categorical_blocks: Sequence[Sequence[int]] = (),
        policy: str = "proportions", route: str = "literal"):
    """Adjusted prediction at the means.

    Categorical blocks have no mean; under ``policy="proportions"`` they are
    averaged over their observed category proportions, under ``"strict"``
    their presence is an error.
    """
    _plain(layout)
    X = _data(layout, X)
    rep = _representative(X, categorical_blocks, policy)
    theta2, single = as_theta2(theta)
    if _route(route) == "literal":
        acc = np.zeros(theta2.shape[0])
        for w, x in rep.combos:
            acc = acc + w * _g(layout, theta2, x[None, :])[0]
        return _out(acc, single)
    mu_I = _rep_measure(layout, rep, layout.interest)
    cov = _rep_measure(layout, rep, layout.rest) if layout.rest else None
    return individualized_expectation(layout, theta, QuantitySpec(A_I, mu_I, cov))


def mem(layout: Layout, theta: Any, X: Any, categorical_blocks: Sequence[Sequence[int]] = (),
        policy: str = "proportions", route: str = "literal"):
    """Marginal effect at the means (covariate categorical blocks handled as
    in :func:`apm`)."""
    _plain(layout)
    X = _data(layout, X)
    interest = set(layout.interest)
    cov_blocks = [b for b in categorical_blocks if not set(b) & interest]
    rep = _representative(X, cov_blocks, policy)
    theta2, single = as_theta2(theta)
    if _route(route) == "literal":
        acc = None
        for w, x in rep.combos:
            val = mer(layout, theta2, x, route="literal")
            acc = w * val if acc is None else acc + w * val
        return _out(np.asarray(acc), single)
    cov = _rep_measure(layout, rep, layout.rest) if layout.rest else None
    if layout.kind == "metric":
        spec = QuantitySpec(A_I, Dirac(rep.means[list(layout.interest)]), cov)
        return gme_metric(layout, theta, spec, method="quadrature")
    return gme_categorical(layout, theta, QuantitySpec(A_I, None, cov))


# --------------------------------------------------------------------------- #
# Predictive comparisons and Kaufman's measures
# --------------------------------------------------------------------------- #


def predictive_comparison(layout: Layout, theta: Any, X: Any, u_lo: float, u_hi: float, route: str = "literal"):
    """Average predictive comparison per unit change of a metric input from
    ``u_lo`` to ``u_hi``, averaged over the observed covariates."""
    _plain(layout)
    if layout.kind != "metric":
        raise ConfigError("predictive comparisons need a metric input")
    if not u_lo < u_hi:
        raise ConfigError("need u_lo < u_hi")
    X = _data(layout, X)
    theta2, single = as_theta2(theta)
    j = layout.interest[0]
    if _route(route) == "literal":
        hi, lo = X.copy(), X.copy()
        hi[:, j] = u_hi
        lo[:, j] = u_lo
        return _out(((_g(layout, theta2, hi) - _g(layout, theta2, lo)) / (u_hi - u_lo)).mean(axis=0), single)
    cov = EmpiricalMarginal(EmpiricalJoint.from_data(X), layout.interest) if layout.rest else None
    spec = QuantitySpec(A_II_PRIME, Uniform(u_lo, u_hi), cov)
    return gme_metric(layout, theta, spec, method="quadrature")


@dataclass(frozen=True)
class KaufmanResult:
    dP: Any
    DeltaP: Any


def kaufman(layout: Layout, theta: Any, x_ref: Any, coef_index: int | None = None, route: str = "literal") -> KaufmanResult:
    """Kaufman's instantaneous (``dP``) and unit-centred discrete (``DeltaP``)
    changes in probability for a logistic model at ``x_ref``."""
    _plain(layout)
    model = layout.model
    if model.family != "binomial-logit":
        raise ConfigError("Kaufman's measures need a binomial-logit model")
    if layout.kind != "metric":
        raise ConfigError("Kaufman's measures need a metric regressor")
    j = layout.interest[0]
    involving = [t for t in model.terms if j in t.factors]
    if len(involving) != 1 or involving[0].factors != (j,):
        raise ConfigError("the regressor must enter the model through a single main-effect term")
    if coef_index is None:
        coef_index = involving[0].coef
    x = np.asarray(x_ref, dtype=float).ravel()
    theta2, single = as_theta2(theta)
    if _route(route) == "literal":
        b = theta2[:, coef_index]
        P = _g(layout, theta2, x[None, :])[0]
        dP = b * P * (1.0 - P)
        base = logit(P)
        DeltaP = expit(base + 0.5 * b) - expit(base - 0.5 * b)
        return KaufmanResult(_out(dP, single), _out(DeltaP, single))
    cov = Dirac(x[list(layout.rest)]) if layout.rest else None
    dP = gme_metric(layout, theta, QuantitySpec(A_I, Dirac([x[j]]), cov), method="quadrature")
    DeltaP = gme_metric(layout, theta, QuantitySpec(A_I, Uniform(x[j] - 0.5, x[j] + 0.5), cov), method="quadrature")
    return KaufmanResult(dP, DeltaP)


# --------------------------------------------------------------------------- #
# Accumulated local effects
# --------------------------------------------------------------------------- #


def ale_edges(X: np.ndarray, j: int, z_grid: Sequence[float]) -> np.ndarray:
    """Bin edges: the observed minimum followed by the grid points above it."""
    xmin = float(X[:, j].min())
    z = np.unique(np.asarray(z_grid, dtype=float))
    if np.any(z < xmin):
        raise DataError(f"grid point below the observed minimum {xmin}")
    return np.concatenate([[xmin], z[z > xmin]])


def ale_curve(layout: Layout, theta: Any, X: Any, z_grid: Sequence[float], route: str = "literal"):
    """Uncentred first-order accumulated local effects at the grid points.

    The grid points (after the observed minimum) act as bin edges.  Returns a
    list of ``(z, value)`` pairs sorted by ``z``.
    """
    _plain(layout)
    if layout.kind != "metric":
        raise ConfigError("ALE needs a metric regressor")
    X = _data(layout, X)
    theta2, single = as_theta2(theta)
    j = layout.interest[0]
    edges = ale_edges(X, j, z_grid)
    xj = X[:, j]
    k_of = BinnedConditional(EmpiricalJoint.from_data(X), j, edges).bin_of(xj) if len(edges) > 1 else None
    z_out = sorted(set(float(z) for z in z_grid))
    if _route(route) == "literal":
        acc = np.zeros(theta2.shape[0])
        values = {edges[0]: acc.copy()}
        for k in range(1, len(edges)):
            rows = X[k_of == k - 1]
            if len(rows) == 0:
                raise DataError(f"ALE bin ({edges[k - 1]}, {edges[k]}] has no observations")
            hi, lo = rows.copy(), rows.copy()
            hi[:, j] = edges[k]
            lo[:, j] = edges[k - 1]
            acc = acc + (_g(layout, theta2, hi) - _g(layout, theta2, lo)).mean(axis=0)
            values[edges[k]] = acc.copy()
        return [(z, _out(values[z], single)) for z in z_out]
    joint = EmpiricalJoint.from_data(X)
    out = []
    for z in z_out:
        if z == edges[0]:
            out.append((z, _out(np.zeros(theta2.shape[0]), single)))
            continue
        kern = BinnedConditional(joint, j, edges) if layout.rest else None
        spec = QuantitySpec(A_II_DOUBLEPRIME, Uniform(edges[0], z, breakpoints=tuple(edges[1:-1])), kern)
        out.append((z, gme_metric(layout, theta, spec, method="quadrature") * (z - edges[0])))
    return out


# --------------------------------------------------------------------------- #
# Forward marginal effects
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class FameResult:
    value: Any
    extrapolated: np.ndarray
    """Boolean mask over rows whose shifted value exceeds the observed
    maximum (metric interest only)."""


def fame(layout: Layout, theta: Any, X: Any, h: float | None = None, route: str = "literal") -> FameResult:
    """Forward average marginal effect.

    Metric interest: mean over rows of ``g(x_i + h, v_i) - g(x_i, v_i)``.
    Categorical interest: mean over the non-reference rows of the change in
    expectation when the row is moved to the reference category.
    """
    _plain(layout)
    X = _data(layout, X)
    theta2, single = as_theta2(theta)
    n = len(X)
    if layout.kind == "metric":
        if h is None or not h > 0:
            raise ConfigError("metric forward effects need a step h > 0")
        j = layout.interest[0]
        extrap = X[:, j] + h > X[:, j].max()
        if _route(route) == "literal":
            Xh = X.copy()
            Xh[:, j] += h
            return FameResult(_out((_g(layout, theta2, Xh) - _g(layout, theta2, X)).mean(axis=0), single), extrap)
        acc = np.zeros(theta2.shape[0])
        for u in np.unique(X[:, j]):
            sub = X[X[:, j] == u]
            cov = EmpiricalMarginal(EmpiricalJoint.from_data(sub), layout.interest) if layout.rest else None
            spec = QuantitySpec(A_II_PRIME, Uniform(u, u + h), cov)
            acc = acc + len(sub) / n * gme_metric(layout, theta2, spec, method="quadrature")
        return FameResult(_out(h * acc, single), extrap)

    block = list(layout.interest)
    is_ref = ~X[:, block].any(axis=1)
    n_ref = int(is_ref.sum())
    if n == n_ref:
        raise DataError("every observation is at the reference category")
    none = np.zeros(n, dtype=bool)
    if _route(route) == "literal":
        rows = X[~is_ref]
        R = rows.copy()
        R[:, block] = 0.0
        return FameResult(_out((_g(layout, theta2, R) - _g(layout, theta2, rows)).sum(axis=0) / (n - n_ref), single),
                          none)
    acc = np.zeros(theta2.shape[0])
    for l, c in enumerate(block):
        mask = X[:, c] == 1.0
        n_l = int(mask.sum())
        if n_l == 0:
            continue
        sub = X[mask]
        cov = EmpiricalMarginal(EmpiricalJoint.from_data(sub), layout.interest) if layout.rest else None
        comp = gme_categorical(layout, theta2, QuantitySpec(A_II_PRIME, None, cov))[l]
        acc = acc + n_l * (-comp)
    return FameResult(_out(acc / (n - n_ref), single), none)
