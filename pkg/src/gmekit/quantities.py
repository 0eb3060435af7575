"""Averaged expectations, slopes of expectation and generalized marginal
effects.

Quantities are evaluated in a *coordinate space* managed by :class:`Layout`.
The first ``p`` coordinates are the encoded regressors.  When interactions are
quantified separately, every interaction term that involves the regressor of
interest becomes an additional coordinate whose value replaces the product of
its factors in the linear predictor.  An optional last coordinate carries a
per-record offset.  Coordinates are split into *interest* coordinates and the
remaining *covariate* coordinates (in increasing order); covariate measures
are always expressed over the latter.

All functions accept ``theta`` of shape ``(k,)`` or ``(n_draws, k)``.  With a
matrix of draws the draws axis is the last axis of the result.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, MeasureError, NumericError
from .measures import (
    ConditionalKernel,
    Dirac,
    DiscretePoints,
    EmpiricalJoint,
    EmpiricalMarginal,
    ExactConditional,
    Interval,
    Measure,
    Uniform,
    interaction_measure,
    normalize,
    product_measure,
)
from .model import ParametricModel, RegressorSchema, as_theta2

A_I = "A.I"
A_II_PRIME = "A.II'"
A_II_DOUBLEPRIME = "A.II''"
ASSUMPTIONS = (A_I, A_II_PRIME, A_II_DOUBLEPRIME)
_ASSUMPTION_ALIASES = {
    "a.i": A_I, "ai": A_I, "a_i": A_I, "a1": A_I,
    "a.ii'": A_II_PRIME, "a.ii_prime": A_II_PRIME, "a_ii_prime": A_II_PRIME, "aii'": A_II_PRIME,
    "a.ii''": A_II_DOUBLEPRIME, "a.ii_doubleprime": A_II_DOUBLEPRIME,
    "a_ii_doubleprime": A_II_DOUBLEPRIME, "aii''": A_II_DOUBLEPRIME, 'a.ii"': A_II_DOUBLEPRIME,
}
CLOSED_FORM_TOL = 1e-8


def canonical_assumption(name: str) -> str:
    key = str(name).strip().lower().replace("\u2033", "''").replace("\u2032", "'")
    out = _ASSUMPTION_ALIASES.get(key)
    if out is None:
        raise ConfigError(f"unknown assumption {name!r}; expected one of {ASSUMPTIONS}")
    return out


def _debug() -> bool:
    return os.environ.get("GMEKIT_DEBUG", "").strip() not in ("", "0", "false")


# --------------------------------------------------------------------------- #
# Interaction vectors
# --------------------------------------------------------------------------- #


@dataclass(frozen=True, eq=False)
class InteractionVectors:
    """Per-entry vectors ``v`` and ``ref`` for a combined categorical
    regressor of interest (rows indexed by entry)."""

    labels: tuple[str, ...]
    v: np.ndarray
    ref: np.ndarray

    @property
    def d(self) -> int:
        return len(self.labels)


def vectors_from_factor_sets(labels: Sequence[str], factor_sets: Sequence[frozenset]) -> InteractionVectors:
    """``v_l`` marks entry ``l`` and every entry whose factors are a strict
    subset of entry ``l``'s factors; ``ref_l = v_l - e_l``."""
    d = len(factor_sets)
    v = np.zeros((d, d))
    for l, fl in enumerate(factor_sets):
        v[l, l] = 1.0
        if len(fl) > 1:
            for k, fk in enumerate(factor_sets):
                if k != l and fk < fl:
                    v[l, k] = 1.0
    ref = v - np.eye(d)
    return InteractionVectors(tuple(labels), v, ref)


# --------------------------------------------------------------------------- #
# Layout
# --------------------------------------------------------------------------- #


@dataclass(frozen=True, eq=False)
class Layout:
    """Binds a model to a designation of the regressor of interest.

    Parameters
    ----------
    model : ParametricModel
    kind : {"metric", "categorical", "mixed"}
    interest : tuple of int
        Interest coordinates.  For ``mixed``: the metric coordinate first,
        then the categorical entries.
    overridden : tuple of int
        Model term indices turned into free coordinates ``p, p+1, ...``.
    vectors : InteractionVectors, optional
        For categorical and mixed kinds (over the categorical entries).
    offset_coord : bool
        Whether a trailing offset coordinate is present.
    n_main : int
        Mixed kind only: number of categorical main-effect entries (the
        remaining categorical entries are metric-by-category terms).
    """

    model: ParametricModel
    kind: str
    interest: tuple[int, ...]
    overridden: tuple[int, ...] = ()
    vectors: InteractionVectors | None = None
    offset_coord: bool = False
    n_main: int = 0
    labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("metric", "categorical", "mixed"):
            raise ConfigError(f"unknown interest kind {self.kind!r}")
        n_z = self.n_coords
        if len(set(self.interest)) != len(self.interest) or any(not 0 <= i < n_z for i in self.interest):
            raise ConfigError("interest coordinates invalid")
        if self.offset_coord and (n_z - 1) in self.interest:
            raise ConfigError("offset coordinate cannot be of interest")
        if self.kind == "metric" and len(self.interest) != 1:
            raise ConfigError("metric interest needs exactly one coordinate")
        if self.kind != "metric" and self.vectors is None:
            d = len(self.interest) - (1 if self.kind == "mixed" else 0)
            object.__setattr__(self, "vectors", InteractionVectors(
                tuple(f"x{i}" for i in range(d)), np.eye(d), np.zeros((d, d))))

    # -- basic structure --------------------------------------------------- #
    @property
    def p(self) -> int:
        return self.model.p

    @property
    def n_coords(self) -> int:
        return self.model.p + len(self.overridden) + (1 if self.offset_coord else 0)

    @property
    def rest(self) -> tuple[int, ...]:
        excl = set(self.interest)
        return tuple(i for i in range(self.n_coords) if i not in excl)

    @property
    def d_I(self) -> int:
        return len(self.interest)

    # -- constructors -------------------------------------------------------- #
    @classmethod
    def metric(cls, model: ParametricModel, j: int, separate: Sequence[int] = (), offset_coord: bool = False) -> Layout:
        """Metric regressor ``j``; ``separate`` lists term indices to treat as
        free coordinates."""
        return cls(model, "metric", (int(j),), tuple(separate), None, offset_coord)

    @classmethod
    def metric_term(cls, model: ParametricModel, term: int, offset_coord: bool = False) -> Layout:
        """An interaction term between metric regressors treated as a new
        regressor of interest."""
        return cls(model, "metric", (model.p,), (int(term),), None, offset_coord)

    @classmethod
    def categorical(cls, model: ParametricModel, block: Sequence[int], separate: Sequence[int] = (),
                    offset_coord: bool = False) -> Layout:
        return cls(model, "categorical", tuple(int(b) for b in block), tuple(separate), None, offset_coord)

    # -- evaluation -------------------------------------------------------- #
    def _split(self, Z: np.ndarray):
        X = Z[:, : self.p]
        ov = {t: Z[:, self.p + k] for k, t in enumerate(self.overridden)} or None
        off = Z[:, -1] if self.offset_coord else None
        return X, ov, off

    def g(self, theta2: np.ndarray, Z: np.ndarray) -> np.ndarray:
        X, ov, off = self._split(Z)
        return self.model.g(theta2, X, ov, off)

    def dg(self, theta2: np.ndarray, Z: np.ndarray, coord: int) -> np.ndarray:
        X, ov, off = self._split(Z)
        if coord < self.p:
            return self.model.dg_dx(theta2, X, coord, ov, off)
        if self.offset_coord and coord == self.n_coords - 1:
            return self.model.inverse_link_deriv(self.model.eta(theta2, X, ov, off))
        return self.model.dg_dterm(theta2, X, self.overridden[coord - self.p], ov, off)

    def assemble(self, x_I: np.ndarray, rest_pts: np.ndarray | None) -> np.ndarray:
        """Points in coordinate space from one interest value and covariate
        atoms (``None`` when there are no covariates)."""
        x_I = np.atleast_1d(np.asarray(x_I, dtype=float))
        n = 1 if rest_pts is None else len(rest_pts)
        Z = np.zeros((n, self.n_coords))
        Z[:, list(self.interest)] = x_I[None, :]
        if rest_pts is not None and len(self.rest):
            Z[:, list(self.rest)] = rest_pts
        return Z

    def assemble_grid(self, interest_pts: np.ndarray, rest_pts: np.ndarray | None) -> np.ndarray:
        """Tensor grid: all interest atoms times all covariate atoms
        (interest-major)."""
        interest_pts = np.asarray(interest_pts, dtype=float).reshape(len(interest_pts), -1)
        ni = len(interest_pts)
        nr = 1 if rest_pts is None else len(rest_pts)
        Z = np.zeros((ni * nr, self.n_coords))
        Z[:, list(self.interest)] = np.repeat(interest_pts, nr, axis=0)
        if rest_pts is not None and len(self.rest):
            Z[:, list(self.rest)] = np.tile(rest_pts, (ni, 1))
        return Z

    # -- data helpers ------------------------------------------------------ #
    def extend(self, X: np.ndarray, offset: Any = None) -> np.ndarray:
        """Map encoded rows to coordinate space by appending the values of
        separated terms (and the offset when present)."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.p:
            raise ConfigError(f"data must have {self.p} encoded columns")
        T = self.model.term_values(X)
        cols = [X] + [T[:, [t]] for t in self.overridden]
        if self.offset_coord:
            off = np.zeros(len(X)) if offset is None else np.broadcast_to(np.asarray(offset, dtype=float), (len(X),))
            cols.append(off[:, None])
        return np.hstack(cols)

    def interest_values(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z)[:, list(self.interest)]

    def covariate_values(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z)[:, list(self.rest)]

    def categorical_entries(self) -> tuple[int, ...]:
        """Interest coordinates of the categorical entries."""
        if self.kind == "categorical":
            return self.interest
        if self.kind == "mixed":
            return self.interest[1:]
        return ()


def build_interaction_vectors(schema: RegressorSchema, interactions: str = "separated") -> InteractionVectors:
    """Vectors ``v_l`` and ``ref_l`` for a categorical (or mixed) regressor of
    interest.  Without interactions, or with ``combined`` policy, ``v_l`` is
    the unit vector and ``ref_l`` is zero."""
    kind = schema.interest_kind
    if kind in ("metric", "metric_interaction"):
        raise ConfigError("interaction vectors need a categorical component of interest")
    slot_names = schema.slot_names
    if kind == "categorical" or interactions == "combined":
        slots = [s for n in schema.interest if schema.column(n).kind == "categorical" for s in schema.indices(n)]
        labels = [slot_names[s] for s in slots]
        return vectors_from_factor_sets(labels, [frozenset([s]) for s in slots])
    labels, sets = _interest_entries(schema)
    return vectors_from_factor_sets(labels, sets)


def _interest_entries(schema: RegressorSchema) -> tuple[list[str], list[frozenset]]:
    """Categorical entries of an interaction of interest with their factor
    slot sets: dummies in column order, then products lexicographically."""
    names = schema.slot_names
    labels: list[str] = []
    sets: list[frozenset] = []
    for n in schema.interest:
        if schema.column(n).kind == "categorical":
            for s in schema.indices(n):
                labels.append(names[s])
                sets.append(frozenset([s]))
    for prod in schema.interaction_slot_products(schema.interest):
        labels.append(":".join(names[s] for s in prod))
        sets.append(frozenset(prod))
    return labels, sets


def _other_touching(schema: RegressorSchema, model: ParametricModel, taken: tuple[int, ...]) -> tuple[int, ...]:
    """Interaction terms involving an interest column besides those already
    separated; they become covariate coordinates."""
    slots = {s for n in schema.interest for s in schema.indices(n)}
    return tuple(i for i, t in enumerate(model.terms)
                 if len(t.factors) > 1 and set(t.factors) & slots and i not in taken)


def layout_from_schema(schema: RegressorSchema, model: ParametricModel, interactions: str = "combined",
                       offset_coord: bool = False) -> Layout:
    """Derive the coordinate layout for the schema's regressor of interest.

    ``combined`` keeps interaction terms as products of their factors;
    ``separated`` turns interaction terms involving the regressor of interest
    into free coordinates.
    """
    if interactions not in ("combined", "separated"):
        raise ConfigError(f"interactions must be 'combined' or 'separated', not {interactions!r}")
    kind = schema.interest_kind
    if kind in ("metric", "categorical"):
        name = schema.interest[0]
        block = schema.indices(name)
        separate: tuple[int, ...] = ()
        if interactions == "separated":
            separate = tuple(i for i, t in enumerate(model.terms)
                             if len(t.factors) > 1 and set(t.factors) & set(block))
        if kind == "metric":
            return Layout(model, "metric", block, separate, None, offset_coord, labels=(name,))
        vec = build_interaction_vectors(schema, interactions)
        return Layout(model, "categorical", block, separate, vec, offset_coord, labels=vec.labels)

    if interactions != "separated":
        raise ConfigError(f"an interaction of interest ({kind}) requires interactions='separated'")
    if kind == "metric_interaction":
        prods = schema.interaction_slot_products(schema.interest)
        term = model.find_term(prods[0])
        return Layout.metric_term(model, term, offset_coord)

    labels, sets = _interest_entries(schema)
    if kind == "categorical_interaction":
        prods = [s for s in sets if len(s) > 1]
        terms = tuple(model.find_term(s) for s in prods)
        dummies = [next(iter(s)) for s in sets if len(s) == 1]
        interest = tuple(dummies) + tuple(model.p + k for k in range(len(terms)))
        vec = vectors_from_factor_sets(labels, sets)
        terms = terms + _other_touching(schema, model, terms)
        return Layout(model, "categorical", interest, terms, vec, offset_coord, labels=tuple(labels))

    # mixed: exactly one metric and one categorical column
    cols = [schema.column(n) for n in schema.interest]
    metrics = [c for c in cols if c.kind == "metric"]
    cats = [c for c in cols if c.kind == "categorical"]
    if len(metrics) != 1 or len(cats) != 1:
        raise ConfigError("mixed interest supports one metric and one categorical column")
    met = schema.indices(metrics[0].name)[0]
    dummies = schema.indices(cats[0].name)
    terms = tuple(model.find_term((met, s)) for s in dummies)
    cat_labels = [schema.slot_names[s] for s in dummies]
    prod_labels = [f"{schema.slot_names[met]}:{schema.slot_names[s]}" for s in dummies]
    sets_cat = [frozenset([s]) for s in dummies] + [frozenset([s, met]) for s in dummies]
    vec = vectors_from_factor_sets(cat_labels + prod_labels, sets_cat)
    interest = (met,) + tuple(dummies) + tuple(model.p + k for k in range(len(terms)))
    terms = terms + _other_touching(schema, model, terms)
    return Layout(model, "mixed", interest, terms, vec, offset_coord, n_main=len(dummies),
                  labels=(schema.slot_names[met],) + tuple(cat_labels + prod_labels))


# --------------------------------------------------------------------------- #
# Specification of measures
# --------------------------------------------------------------------------- #


@dataclass(frozen=True, eq=False)
class QuantitySpec:
    """Measures and conventions for one quantity.

    ``covariate_measure`` is a :class:`Measure` over the covariate
    coordinates under A.I and A.II', and a :class:`ConditionalKernel` (or any
    callable returning a measure) under A.II''.  It may be ``None`` when there
    are no covariates.  ``interest_measure`` weights the regressor of
    interest (metric coordinate for metric and mixed kinds).
    """

    assumption: str
    interest_measure: Measure | None = None
    covariate_measure: Any = None
    interactions: str = "combined"
    partition: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "assumption", canonical_assumption(self.assumption))
        if self.interactions not in ("combined", "separated"):
            raise ConfigError(f"interactions must be 'combined' or 'separated', not {self.interactions!r}")
        cov = self.covariate_measure
        if self.assumption == A_II_DOUBLEPRIME:
            if cov is not None and not isinstance(cov, ConditionalKernel) and not callable(cov):
                raise ConfigError("A.II'' needs a conditional kernel as covariate measure")
        elif cov is not None and not isinstance(cov, Measure):
            raise ConfigError(f"{self.assumption} needs a measure over the covariates")
        if self.partition is not None:
            object.__setattr__(self, "partition", tuple((float(a), float(b)) for a, b in self.partition))

    def with_interest(self, mu: Measure | None) -> QuantitySpec:
        return QuantitySpec(self.assumption, mu, self.covariate_measure, self.interactions, self.partition)


def covariate_measure(layout: Layout, spec: QuantitySpec, x_I: Any) -> Measure | None:
    """Covariate measure in effect at interest value ``x_I``."""
    if not layout.rest:
        return None
    cov = spec.covariate_measure
    if cov is None:
        raise ConfigError("a covariate measure is required (the model has covariates)")
    if spec.assumption == A_II_DOUBLEPRIME:
        mu = cov.at(x_I) if isinstance(cov, ConditionalKernel) else cov(np.atleast_1d(x_I))
    else:
        mu = cov
    if mu.dim != len(layout.rest):
        raise ConfigError(f"covariate measure has dimension {mu.dim}, expected {len(layout.rest)}")
    return mu


def _rest_nodes(mu: Measure | None):
    if mu is None:
        return None, np.ones(1)
    return mu.nodes()


def auto_covariate_measure(layout: Layout, Z: np.ndarray, assumption: str,
                           groups: Sequence[Sequence[int]] | None = None) -> Any:
    """Covariate measure derived from data in coordinate space.

    * A.I: product of per-regressor empirical marginals.  ``groups`` lists
      coordinate blocks belonging to one regressor (e.g. a dummy block); each
      separated interaction coordinate gets the interaction measure of its
      factors' marginals.
    * A.II': empirical marginal of the joint dropping the interest.
    * A.II'': exact empirical conditional on the interest coordinates.
    """
    assumption = canonical_assumption(assumption)
    Z = np.asarray(Z, dtype=float)
    if not layout.rest:
        return None
    joint = EmpiricalJoint.from_data(Z)
    if assumption == A_II_PRIME:
        return EmpiricalMarginal(joint, layout.interest)
    if assumption == A_II_DOUBLEPRIME:
        return ExactConditional(joint, layout.interest)
    rest = list(layout.rest)
    group_of: dict[int, tuple[int, ...]] = {}
    for gr in groups or ():
        for c in gr:
            group_of[c] = tuple(gr)
    parts: list[Measure] = []
    i = 0
    while i < len(rest):
        c = rest[i]
        block = [cc for cc in group_of.get(c, (c,)) if cc in rest] or [c]
        if layout.p <= c < layout.p + len(layout.overridden):
            term = layout.model.terms[layout.overridden[c - layout.p]]
            mu: Measure = EmpiricalMarginal(joint, tuple(k for k in range(Z.shape[1]) if k != term.factors[0]))
            for f in term.factors[1:]:
                nxt = EmpiricalMarginal(joint, tuple(k for k in range(Z.shape[1]) if k != f))
                mu = interaction_measure(mu, nxt)
            parts.append(mu)
            i += 1
            continue
        parts.append(EmpiricalMarginal(joint, tuple(k for k in range(Z.shape[1]) if k not in block)))
        i += len(block)
    return parts[0] if len(parts) == 1 else product_measure(parts)


# --------------------------------------------------------------------------- #
# Core quantities
# --------------------------------------------------------------------------- #


def _finish(res: np.ndarray, single: bool):
    """``res`` has draws as last axis."""
    if single:
        res = res[..., 0]
    return float(res) if np.ndim(res) == 0 else res


def _check_interest_value(layout: Layout, x_I: Any) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x_I, dtype=float))
    if len(x) != layout.d_I:
        raise ConfigError(f"interest value has length {len(x)}, expected {layout.d_I}")
    return x


def _avg_g(layout: Layout, theta2: np.ndarray, x: np.ndarray, spec: QuantitySpec) -> np.ndarray:
    mu = covariate_measure(layout, spec, x)
    pts, w = _rest_nodes(mu)
    return w @ layout.g(theta2, layout.assemble(x, pts))


def averaged_expectation(layout: Layout, theta: Any, x_I: Any, spec: QuantitySpec):
    """Expectation averaged over the covariates at interest value ``x_I``."""
    theta2, single = as_theta2(theta)
    x = _check_interest_value(layout, x_I)
    return _finish(_avg_g(layout, theta2, x, spec), single)


def _interest_nodes(layout: Layout, spec: QuantitySpec):
    mu = spec.interest_measure
    if mu is None:
        raise ConfigError("an interest measure is required")
    if mu.dim != layout.d_I:
        raise ConfigError(f"interest measure has dimension {mu.dim}, expected {layout.d_I}")
    return mu.nodes()


def individualized_expectation(layout: Layout, theta: Any, spec: QuantitySpec):
    """Averaged expectation integrated over the interest measure."""
    theta2, single = as_theta2(theta)
    ipts, iw = _interest_nodes(layout, spec)
    if spec.assumption == A_II_DOUBLEPRIME:
        acc = np.zeros(theta2.shape[0])
        for x, w in zip(ipts, iw):
            acc = acc + w * _avg_g(layout, theta2, x, spec)
        return _finish(acc, single)
    mu = covariate_measure(layout, spec, ipts[0])
    rpts, rw = _rest_nodes(mu)
    vals = layout.g(theta2, layout.assemble_grid(ipts, rpts))
    vals = vals.reshape(len(iw), len(rw), -1)
    return _finish(np.einsum("i,j,ijd->d", iw, rw, vals), single)


def _slope_avg(layout: Layout, theta2: np.ndarray, x: np.ndarray, spec: QuantitySpec) -> np.ndarray:
    if layout.kind == "metric":
        mu = covariate_measure(layout, spec, x)
        pts, w = _rest_nodes(mu)
        return w @ layout.dg(theta2, layout.assemble(x, pts), layout.interest[0])
    if layout.kind == "categorical":
        zero = np.zeros_like(x)
        if spec.assumption == A_II_DOUBLEPRIME:
            return _avg_g(layout, theta2, x, spec) - _avg_g(layout, theta2, zero, spec)
        mu = covariate_measure(layout, spec, x)
        pts, w = _rest_nodes(mu)
        return w @ (layout.g(theta2, layout.assemble(x, pts)) - layout.g(theta2, layout.assemble(zero, pts)))
    raise ConfigError("slope of expectation for a mixed interest is defined component-wise; use gme_mixed")


def slope_of_expectation(layout: Layout, theta: Any, x_I: Any, spec: QuantitySpec):
    """Averaged local slope at interest value ``x_I``.

    Metric interest: averaged partial derivative.  Categorical interest:
    averaged difference to the reference; under A.II'' the two expectations
    are averaged under their own conditional measures.
    """
    theta2, single = as_theta2(theta)
    x = _check_interest_value(layout, x_I)
    return _finish(_slope_avg(layout, theta2, x, spec), single)


def _metric_quadrature(layout: Layout, theta2: np.ndarray, spec: QuantitySpec) -> np.ndarray:
    ipts, iw = _interest_nodes(layout, spec)
    j = layout.interest[0]
    if spec.assumption == A_II_DOUBLEPRIME:
        acc = np.zeros(theta2.shape[0])
        for x, w in zip(ipts, iw):
            acc = acc + w * _slope_avg(layout, theta2, x, spec)
        return acc
    mu = covariate_measure(layout, spec, ipts[0])
    rpts, rw = _rest_nodes(mu)
    vals = layout.dg(theta2, layout.assemble_grid(ipts, rpts), j).reshape(len(iw), len(rw), -1)
    return np.einsum("i,j,ijd->d", iw, rw, vals)


def _metric_closed_form(layout: Layout, theta2: np.ndarray, spec: QuantitySpec) -> np.ndarray:
    mu = spec.interest_measure
    assert isinstance(mu, Uniform)
    cov = covariate_measure(layout, spec, np.array([mu.a]))
    pts, w = _rest_nodes(cov)
    hi = layout.g(theta2, layout.assemble(np.array([mu.b]), pts))
    lo = layout.g(theta2, layout.assemble(np.array([mu.a]), pts))
    return w @ (hi - lo) / (mu.b - mu.a)


def _closed_form_applies(layout: Layout, spec: QuantitySpec) -> bool:
    return (layout.kind == "metric" and spec.assumption in (A_I, A_II_PRIME)
            and isinstance(spec.interest_measure, Uniform))


def _gme_metric_one(layout: Layout, theta2: np.ndarray, spec: QuantitySpec, method: str) -> np.ndarray:
    if method == "quadrature" or (method == "auto" and not _closed_form_applies(layout, spec)):
        return _metric_quadrature(layout, theta2, spec)
    if not _closed_form_applies(layout, spec):
        raise ConfigError("the closed form needs a uniform interest measure under A.I or A.II'")
    cf = _metric_closed_form(layout, theta2, spec)
    if _debug():
        quad = _metric_quadrature(layout, theta2, spec)
        err = np.abs(cf - quad) / np.maximum(1.0, np.abs(cf))
        if np.any(err > CLOSED_FORM_TOL):
            raise NumericError(f"closed form and quadrature disagree (relative gap {err.max():.3e})")
    return cf


def gme_metric(layout: Layout, theta: Any, spec: QuantitySpec, method: str = "auto"):
    """Generalized marginal effect for a metric regressor of interest.

    Parameters
    ----------
    method : {"auto", "quadrature", "closed_form"}
        ``auto`` uses the endpoint-difference closed form when the interest
        measure is uniform and the interest is treated as independent (A.I,
        A.II'), and quadrature otherwise.  With ``GMEKIT_DEBUG`` set the closed
        form is cross-checked against quadrature.

    Returns
    -------
    float or ndarray
        One value per draw; with ``spec.partition`` one value per cell (cells
        first), the interest measure being normalized to each cell.
    """
    if layout.kind != "metric":
        raise ConfigError("gme_metric needs a metric regressor of interest")
    if method not in ("auto", "quadrature", "closed_form"):
        raise ConfigError(f"unknown method {method!r}")
    theta2, single = as_theta2(theta)
    if spec.partition is None:
        return _finish(_gme_metric_one(layout, theta2, spec, method), single)
    if spec.interest_measure is None:
        raise ConfigError("an interest measure is required")
    cells = []
    for a, b in spec.partition:
        sub = spec.with_interest(normalize(spec.interest_measure, Interval(a, b)))
        cells.append(_gme_metric_one(layout, theta2, sub, method))
    return _finish(np.stack(cells), single)


def gme_categorical(layout: Layout, theta: Any, spec: QuantitySpec):
    """Vector of contrasts ``s(v_l) - s(ref_l)`` over the categorical entries."""
    if layout.kind != "categorical":
        raise ConfigError("gme_categorical needs a categorical regressor of interest")
    theta2, single = as_theta2(theta)
    vec = layout.vectors
    out = np.empty((vec.d, theta2.shape[0]))
    for l in range(vec.d):
        val = _slope_avg(layout, theta2, vec.v[l], spec)
        if vec.ref[l].any():
            val = val - _slope_avg(layout, theta2, vec.ref[l], spec)
        out[l] = val
    return _finish(out, single)


def gme_mixed(layout: Layout, theta: Any, spec: QuantitySpec):
    """Separated main and interaction effects for a metric-by-categorical
    interaction of interest.

    Components: the metric slope with the categorical entries at zero; one
    averaged contrast per category (interaction terms switched off); and
    per category the averaged derivative with respect to the
    metric-by-category term, whose value is an independent copy of the
    metric regressor drawn from the same interest measure.
    """
    if layout.kind != "mixed":
        raise ConfigError("gme_mixed needs a mixed regressor of interest")
    theta2, single = as_theta2(theta)
    ipts, iw = _interest_nodes_metric(spec)
    vec = layout.vectors
    d_c = vec.d
    out = np.zeros((1 + d_c, theta2.shape[0]))
    met = layout.interest[0]

    def covariates(xfull):
        return _rest_nodes(covariate_measure(layout, spec, xfull))

    for x, w in zip(ipts[:, 0], iw):
        xi = np.concatenate([[x], np.zeros(d_c)])
        pts, rw = covariates(xi)
        out[0] += w * (rw @ layout.dg(theta2, layout.assemble(xi, pts), met))
        for l in range(layout.n_main):
            xv = np.concatenate([[x], vec.v[l]])
            xr = np.concatenate([[x], vec.ref[l]])
            pv, wv = covariates(xv)
            pr, wr = covariates(xr)
            out[1 + l] += w * (wv @ layout.g(theta2, layout.assemble(xv, pv))
                               - wr @ layout.g(theta2, layout.assemble(xr, pr)))
        for l in range(layout.n_main, d_c):
            coord = layout.interest[1 + l]
            for xc, wc in zip(ipts[:, 0], iw):
                xv = np.concatenate([[x], vec.v[l]])
                xv[1 + l] = xc
                pv, wv = covariates(xv)
                out[1 + l] += w * wc * (wv @ layout.dg(theta2, layout.assemble(xv, pv), coord))
    return _finish(out, single)


def _interest_nodes_metric(spec: QuantitySpec):
    mu = spec.interest_measure
    if mu is None or mu.dim != 1:
        raise ConfigError("mixed interest needs a univariate measure for the metric component")
    return mu.nodes()


def gme(layout: Layout, theta: Any, spec: QuantitySpec, method: str = "auto"):
    """Dispatch on the kind of regressor of interest."""
    if layout.kind == "metric":
        return gme_metric(layout, theta, spec, method)
    if layout.kind == "categorical":
        return gme_categorical(layout, theta, spec)
    return gme_mixed(layout, theta, spec)


def curve_target(layout: Layout, target: str) -> Callable:
    if target in ("g_avg", "expectation"):
        return lambda theta, x, spec: averaged_expectation(layout, theta, x, spec)
    if target in ("s_bar", "slope"):
        return lambda theta, x, spec: slope_of_expectation(layout, theta, x, spec)
    raise ConfigError(f"unknown curve target {target!r}")


def interest_grid(layout: Layout) -> np.ndarray:
    """The categorical grid ``B(d)``: reference first, then unit vectors."""
    if layout.kind != "categorical":
        raise ConfigError("interest grid is only defined for categorical interest")
    d = layout.d_I
    return np.vstack([np.zeros(d), np.eye(d)])
