"""Regressor schemas, dummy encoding and parametric expectation functions.

A :class:`RegressorSchema` describes the raw columns of a data set, which one
is the regressor of interest and which interactions the model contains.
Encoding follows declaration order: a metric column occupies one slot, a
categorical column with ``d + 1`` levels occupies ``d`` slots (levels in
declared order, reference excluded), and the reference level maps to the zero
block.

A :class:`ParametricModel` evaluates ``g_theta(x) = h(eta(x))`` where ``eta``
is a sum of coefficient-weighted products of regressors. Any term's product
value may be *overridden* by an externally supplied value; this is how
interaction terms are treated as free-standing regressors when main and
interaction effects are quantified separately.

All functions that take ``theta`` accept either a single parameter vector of
shape ``(k,)`` or a matrix of draws of shape ``(n_draws, k)``.  With several
points and several draws the result has shape ``(n_points, n_draws)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
from scipy.special import expit

from .errors import ConfigError, DataError

ETA_BOUND = 700.0

FAMILIES = ("gaussian-identity", "binomial-logit", "poisson-log")
_FAMILY_ALIASES = {
    "gaussian": "gaussian-identity",
    "normal": "gaussian-identity",
    "linear": "gaussian-identity",
    "binomial": "binomial-logit",
    "logistic": "binomial-logit",
    "logit": "binomial-logit",
    "poisson": "poisson-log",
}


def canonical_family(name: str) -> str:
    name = str(name).lower()
    name = _FAMILY_ALIASES.get(name, name)
    if name not in FAMILIES:
        raise ConfigError(f"unknown family {name!r}; expected one of {FAMILIES}")
    return name


# --------------------------------------------------------------------------- #
# Schema
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class Column:
    name: str
    kind: str  # "metric" | "categorical"
    levels: tuple[str, ...] = ()
    reference: str | None = None

    @property
    def width(self) -> int:
        return 1 if self.kind == "metric" else len(self.levels) - 1

    @property
    def dummy_levels(self) -> tuple[str, ...]:
        return tuple(lv for lv in self.levels if lv != self.reference)


@dataclass(frozen=True)
class RegressorSchema:
    """Compiled description of the regressor vector.

    Attributes
    ----------
    columns : tuple of Column
        Raw columns in declaration order.
    interest : tuple of str
        Column name(s) making up the regressor of interest.  A single name
        designates one column; two or more designate an interaction.
    interactions : tuple of tuple of str
        Declared interaction terms as tuples of column names.
    slots : tuple of (column name, level or None)
        One entry per encoded position.
    """

    columns: tuple[Column, ...]
    interest: tuple[str, ...]
    interactions: tuple[tuple[str, ...], ...]
    slots: tuple[tuple[str, str | None], ...] = field(repr=False)

    # -- lookups ----------------------------------------------------------- #
    def column(self, name: str) -> Column:
        for col in self.columns:
            if col.name == name:
                return col
        raise ConfigError(f"unknown column {name!r}")

    def indices(self, name: str) -> tuple[int, ...]:
        """Encoded positions occupied by column ``name``."""
        out = tuple(i for i, (col, _) in enumerate(self.slots) if col == name)
        if not out:
            raise ConfigError(f"unknown column {name!r}")
        return out

    @property
    def p(self) -> int:
        return len(self.slots)

    @property
    def slot_names(self) -> tuple[str, ...]:
        return tuple(c if lv is None else f"{c}[{lv}]" for c, lv in self.slots)

    @property
    def interest_kind(self) -> str:
        """``metric``, ``categorical``, ``metric_interaction``,
        ``categorical_interaction`` or ``mixed``."""
        kinds = {self.column(n).kind for n in self.interest}
        if len(self.interest) == 1:
            return kinds.pop()
        if kinds == {"metric"}:
            return "metric_interaction"
        if kinds == {"categorical"}:
            return "categorical_interaction"
        return "mixed"

    def interaction_slot_products(self, names: Sequence[str]) -> list[tuple[int, ...]]:
        """Encoded-index tuples of every product term generated by an
        interaction of the given columns (lexicographic over dummy slots)."""
        blocks = [self.indices(n) for n in names]
        out: list[tuple[int, ...]] = [()]
        for block in blocks:
            out = [prev + (j,) for prev in out for j in block]
        return out

    # -- derived counts (natural interaction policy) ------------------------ #
    @property
    def d_I(self) -> int:
        kind = self.interest_kind
        if kind in ("metric", "metric_interaction"):
            return 1
        if kind == "categorical":
            return self.column(self.interest[0]).width
        cats = [n for n in self.interest if self.column(n).kind == "categorical"]
        d_cat = sum(self.column(n).width for n in cats)
        if kind == "categorical_interaction":
            return d_cat + len(self.interaction_slot_products(self.interest))
        return 1 + d_cat + len(self.interaction_slot_products(self.interest))

    def _rest_columns(self) -> list[Column]:
        if self.interest_kind == "metric_interaction":
            # the factors become ordinary covariates
            return list(self.columns)
        return [c for c in self.columns if c.name not in self.interest]

    @property
    def m(self) -> int:
        return sum(1 for c in self._rest_columns() if c.kind == "metric")

    @property
    def c(self) -> int:
        return sum(1 for c in self._rest_columns() if c.kind == "categorical")

    @property
    def d_C(self) -> tuple[int, ...]:
        return tuple(c.width for c in self._rest_columns() if c.kind == "categorical")


def _parse_interaction(item: Any) -> tuple[str, ...]:
    if isinstance(item, str):
        parts = tuple(s.strip() for s in item.split("*"))
    else:
        parts = tuple(str(s) for s in item)
    if len(parts) < 2 or any(not p for p in parts):
        raise ConfigError(f"malformed interaction {item!r}")
    return parts


def compile_schema(spec: Mapping[str, Any]) -> RegressorSchema:
    """Build a :class:`RegressorSchema` from a declarative mapping.

    Example::

        {"columns": [{"name": "age", "kind": "metric"},
                     {"name": "race", "kind": "categorical",
                      "levels": ["White", "Latinx", "Black", "Other"],
                      "reference": "White"}],
         "interest": "race",
         "interactions": ["age*race"]}
    """
    raw_cols = spec.get("columns")
    if not raw_cols:
        raise ConfigError("schema needs a non-empty 'columns' list")
    columns: list[Column] = []
    seen: set[str] = set()
    for raw in raw_cols:
        name = str(raw["name"])
        if name in seen:
            raise ConfigError(f"duplicate column name {name!r}")
        seen.add(name)
        kind = raw.get("kind", "metric")
        if kind == "metric":
            columns.append(Column(name, "metric"))
            continue
        if kind != "categorical":
            raise ConfigError(f"column {name!r}: unknown kind {kind!r}")
        levels = tuple(str(lv) for lv in raw.get("levels", ()))
        if len(levels) < 2:
            raise ConfigError(f"categorical column {name!r} needs at least 2 levels")
        if len(set(levels)) != len(levels):
            raise ConfigError(f"categorical column {name!r} has duplicate levels")
        ref = raw.get("reference", levels[0])
        ref = str(ref)
        if ref not in levels:
            raise ConfigError(f"column {name!r}: unknown reference level {ref!r}")
        columns.append(Column(name, "categorical", levels, ref))

    interactions = tuple(_parse_interaction(i) for i in spec.get("interactions", ()))
    for inter in interactions:
        for n in inter:
            if n not in seen:
                raise ConfigError(f"interaction references unknown column {n!r}")

    raw_interest = spec.get("interest")
    if raw_interest is None:
        raise ConfigError("schema needs an 'interest' designation")
    if isinstance(raw_interest, str) and "*" not in raw_interest:
        interest: tuple[str, ...] = (raw_interest,)
    else:
        interest = _parse_interaction(raw_interest)
    for n in interest:
        if n not in seen:
            raise ConfigError(f"interest column {n!r} absent from schema")
    if len(interest) > 1:
        if not any(set(i) == set(interest) for i in interactions):
            interactions = interactions + (interest,)

    slots: list[tuple[str, str | None]] = []
    for col in columns:
        if col.kind == "metric":
            slots.append((col.name, None))
        else:
            slots.extend((col.name, lv) for lv in col.dummy_levels)
    return RegressorSchema(tuple(columns), interest, interactions, tuple(slots))


@dataclass(frozen=True)
class EncodedRecord:
    x: np.ndarray
    roles: tuple[tuple[str, str | None], ...]


def _encode_values(schema: RegressorSchema, record: Mapping[str, Any]) -> np.ndarray:
    x = np.zeros(schema.p)
    pos = 0
    for col in schema.columns:
        if col.name not in record:
            raise DataError(f"record is missing column {col.name!r}")
        val = record[col.name]
        if col.kind == "metric":
            try:
                fval = float(val)
            except (TypeError, ValueError):
                raise DataError(f"column {col.name!r}: non-numeric value {val!r}") from None
            if not math.isfinite(fval):
                raise DataError(f"column {col.name!r}: non-finite value {val!r}")
            x[pos] = fval
            pos += 1
        else:
            sval = str(val)
            if sval not in col.levels:
                raise DataError(f"column {col.name!r}: unknown level {sval!r}")
            if sval != col.reference:
                x[pos + col.dummy_levels.index(sval)] = 1.0
            pos += col.width
    return x


def encode(schema: RegressorSchema, record: Mapping[str, Any]) -> EncodedRecord:
    """Dummy-code one raw record."""
    return EncodedRecord(_encode_values(schema, record), schema.slots)


def encode_rows(schema: RegressorSchema, records: Iterable[Mapping[str, Any]]) -> np.ndarray:
    rows = [_encode_values(schema, r) for r in records]
    if not rows:
        return np.zeros((0, schema.p))
    return np.vstack(rows)


def decode(schema: RegressorSchema, x: Sequence[float] | EncodedRecord) -> dict[str, Any]:
    """Inverse of :func:`encode` on valid encodings."""
    if isinstance(x, EncodedRecord):
        x = x.x
    x = np.asarray(x, dtype=float)
    out: dict[str, Any] = {}
    pos = 0
    for col in schema.columns:
        if col.kind == "metric":
            out[col.name] = float(x[pos])
        else:
            block = x[pos : pos + col.width]
            hot = np.flatnonzero(block)
            if len(hot) == 0:
                out[col.name] = col.reference
            elif len(hot) == 1 and block[hot[0]] == 1.0:
                out[col.name] = col.dummy_levels[hot[0]]
            else:
                raise DataError(f"column {col.name!r}: block {block} is not one-hot-or-zero")
        pos += col.width
    return out


# --------------------------------------------------------------------------- #
# Parametric model
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class Term:
    coef: int
    factors: tuple[int, ...] = ()


@dataclass(frozen=True)
class ParametricModel:
    """Generalized linear expectation function.

    ``theta = (beta, v)``: the first ``n_beta`` entries are coefficients
    referenced by ``terms``; the remaining ``n_aux`` entries (e.g. the
    gaussian error variance) do not enter ``g_theta``.
    """

    family: str
    terms: tuple[Term, ...]
    p: int
    n_beta: int
    n_aux: int = 0
    offset: float = 0.0
    names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", canonical_family(self.family))
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            if not 0 <= t.coef < self.n_beta:
                raise ConfigError(f"term {t} references coefficient outside beta")
            for f in t.factors:
                if not 0 <= f < self.p:
                    raise ConfigError(f"term {t} references regressor {f} outside 0..{self.p - 1}")

    @property
    def k(self) -> int:
        return self.n_beta + self.n_aux

    def find_term(self, factors: Iterable[int]) -> int:
        target = sorted(factors)
        for i, t in enumerate(self.terms):
            if sorted(t.factors) == target:
                return i
        raise ConfigError(f"model has no term with factors {tuple(target)}")

    # -- link ------------------------------------------------------------- #
    def inverse_link(self, eta: np.ndarray) -> np.ndarray:
        if self.family == "gaussian-identity":
            return eta
        eta = np.clip(eta, -ETA_BOUND, ETA_BOUND)
        if self.family == "binomial-logit":
            return expit(eta)
        return np.exp(eta)

    def inverse_link_deriv(self, eta: np.ndarray) -> np.ndarray:
        if self.family == "gaussian-identity":
            return np.ones_like(eta)
        eta = np.clip(eta, -ETA_BOUND, ETA_BOUND)
        if self.family == "binomial-logit":
            mu = expit(eta)
            return mu * (1.0 - mu)
        return np.exp(eta)

    # -- internals on (N, p) points and (D, k) draws ---------------------- #
    def _check(self, theta: np.ndarray, X: np.ndarray) -> None:
        if theta.shape[-1] != self.k:
            raise ConfigError(f"theta has length {theta.shape[-1]}, model expects {self.k}")
        if X.shape[-1] != self.p:
            raise ConfigError(f"x has length {X.shape[-1]}, model expects {self.p}")

    def term_values(self, X: np.ndarray, overrides: Mapping[int, np.ndarray] | None = None) -> np.ndarray:
        """Matrix ``(N, n_terms)`` of term values at points ``X``."""
        N = X.shape[0]
        T = np.empty((N, len(self.terms)))
        for i, t in enumerate(self.terms):
            if overrides is not None and i in overrides:
                T[:, i] = np.broadcast_to(overrides[i], (N,))
            elif t.factors:
                T[:, i] = np.prod(X[:, list(t.factors)], axis=1)
            else:
                T[:, i] = 1.0
        return T

    def _coef_matrix(self, theta2: np.ndarray) -> np.ndarray:
        """``(n_terms, D)`` coefficient per term per draw."""
        return theta2[:, [t.coef for t in self.terms]].T

    def eta(self, theta2: np.ndarray, X: np.ndarray, overrides=None, offset=None) -> np.ndarray:
        self._check(theta2, X)
        off = self.offset if offset is None else np.asarray(offset, dtype=float)
        off = np.asarray(off, dtype=float)
        if off.ndim == 1:
            off = off[:, None]
        return self.term_values(X, overrides) @ self._coef_matrix(theta2) + off

    def deta_dx(self, theta2: np.ndarray, X: np.ndarray, j: int, overrides=None) -> np.ndarray:
        """``d eta / d x_j`` through every non-overridden term, ``(N, D)``."""
        N = X.shape[0]
        D = np.zeros((N, len(self.terms)))
        for i, t in enumerate(self.terms):
            if (overrides is not None and i in overrides) or j not in t.factors:
                continue
            for q, f in enumerate(t.factors):
                if f != j:
                    continue
                others = list(t.factors[:q] + t.factors[q + 1 :])
                D[:, i] += np.prod(X[:, others], axis=1) if others else 1.0
        return D @ self._coef_matrix(theta2)

    def g(self, theta2: np.ndarray, X: np.ndarray, overrides=None, offset=None) -> np.ndarray:
        return self.inverse_link(self.eta(theta2, X, overrides, offset))

    def dg_dx(self, theta2: np.ndarray, X: np.ndarray, j: int, overrides=None, offset=None) -> np.ndarray:
        eta = self.eta(theta2, X, overrides, offset)
        return self.inverse_link_deriv(eta) * self.deta_dx(theta2, X, j, overrides)

    def dg_dterm(self, theta2: np.ndarray, X: np.ndarray, term: int, overrides=None, offset=None) -> np.ndarray:
        """Derivative w.r.t. the value of term ``term`` treated as a regressor."""
        eta = self.eta(theta2, X, overrides, offset)
        coef = theta2[:, self.terms[term].coef][None, :]
        return self.inverse_link_deriv(eta) * coef


def as_theta2(theta: Any) -> tuple[np.ndarray, bool]:
    """Return ``(theta as (D, k), was_single)``."""
    arr = np.asarray(theta, dtype=float)
    if arr.ndim == 1:
        return arr[None, :], True
    if arr.ndim == 2:
        return arr, False
    raise ConfigError(f"theta must be 1-d or 2-d, got shape {arr.shape}")


def as_points(x: Any) -> tuple[np.ndarray, bool]:
    if isinstance(x, EncodedRecord):
        x = x.x
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        return arr[None, :], True
    if arr.ndim == 2:
        return arr, False
    raise ConfigError(f"x must be 1-d or 2-d, got shape {arr.shape}")


def _shape_out(res: np.ndarray, single_theta: bool, single_x: bool):
    if single_theta:
        res = res[:, 0]
    if single_x:
        res = res[0]
    return float(res) if np.ndim(res) == 0 else res


def expectation(model: ParametricModel, theta: Any, x: Any, offset: Any = None):
    """``g_theta(x) = h(eta(x) + offset)``."""
    theta2, st = as_theta2(theta)
    X, sx = as_points(x)
    return _shape_out(model.g(theta2, X, offset=offset), st, sx)


def local_slope(model: ParametricModel, theta: Any, x: Any, with_respect_to: int | Sequence[int], offset: Any = None):
    """Pointwise slope of the expectation in the regressor of interest.

    An ``int`` selects a metric regressor and returns the analytic partial
    derivative.  A sequence of indices selects a categorical dummy block and
    returns ``g(x) - g(x with that block set to 0)``.
    """
    theta2, st = as_theta2(theta)
    X, sx = as_points(x)
    if isinstance(with_respect_to, (int, np.integer)):
        j = int(with_respect_to)
        if not 0 <= j < model.p:
            raise ConfigError(f"regressor index {j} out of range")
        res = model.dg_dx(theta2, X, j, offset=offset)
    else:
        block = list(with_respect_to)
        X0 = X.copy()
        X0[:, block] = 0.0
        res = model.g(theta2, X, offset=offset) - model.g(theta2, X0, offset=offset)
    return _shape_out(res, st, sx)


# --------------------------------------------------------------------------- #
# Construction helpers and JSON
# --------------------------------------------------------------------------- #


def model_from_schema(schema: RegressorSchema, family: str, offset: float = 0.0) -> ParametricModel:
    """Intercept, one term per encoded slot, then every declared interaction
    expanded over dummy slots.  Coefficient ``i`` belongs to term ``i``."""
    terms = [Term(0, ())]
    for j in range(schema.p):
        terms.append(Term(len(terms), (j,)))
    for inter in schema.interactions:
        for prod in schema.interaction_slot_products(inter):
            terms.append(Term(len(terms), prod))
    family = canonical_family(family)
    n_aux = 1 if family == "gaussian-identity" else 0
    names = ("(intercept)",) + schema.slot_names + tuple(
        ":".join(schema.slot_names[j] for j in t.factors) for t in terms[1 + schema.p :]
    )
    return ParametricModel(family, tuple(terms), schema.p, len(terms), n_aux, offset, names)


def term_names(model: ParametricModel) -> list[str]:
    if model.names is not None:
        return list(model.names)
    return [f"beta[{i}]" for i in range(model.n_beta)]


def theta_names(model: ParametricModel) -> list[str]:
    aux = ["sigma2"] if model.family == "gaussian-identity" and model.n_aux == 1 else [
        f"v[{i}]" for i in range(model.n_aux)
    ]
    return term_names(model) + aux


def model_from_json(doc: Mapping[str, Any], p: int | None = None) -> tuple[ParametricModel, np.ndarray, np.ndarray | None]:
    """Parse a model document.

    Returns ``(model, theta, covariance or None)``.  ``p`` may be given when
    the document does not state it (it is then inferred from the terms).
    """
    try:
        family = canonical_family(doc["family"])
        terms = tuple(Term(int(t["coef_index"]), tuple(int(f) for f in t.get("factors", ()))) for t in doc["terms"])
        th = doc.get("theta", {})
        beta = [float(b) for b in th.get("beta", [])]
        v = [float(b) for b in th.get("v", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed model document: {exc}") from None
    if p is None:
        p = int(doc.get("p", 1 + max((f for t in terms for f in t.factors), default=-1)))
    n_beta = len(beta) if beta else 1 + max(t.coef for t in terms)
    model = ParametricModel(family, terms, p, n_beta, len(v), float(doc.get("offset", 0.0)), doc.get("names"))
    theta = np.array(beta + v)
    cov = doc.get("covariance")
    cov_arr = None if cov is None else np.asarray(cov, dtype=float)
    return model, theta, cov_arr


def model_to_json(model: ParametricModel, theta: Any = None, covariance: Any = None) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "family": model.family,
        "p": model.p,
        "terms": [{"coef_index": t.coef, "factors": list(t.factors)} for t in model.terms],
        "offset": model.offset,
    }
    if model.names is not None:
        doc["names"] = list(model.names)
    if theta is not None:
        theta = np.asarray(theta, dtype=float)
        doc["theta"] = {"beta": theta[: model.n_beta].tolist(), "v": theta[model.n_beta :].tolist()}
    if covariance is not None:
        doc["covariance"] = np.asarray(covariance, dtype=float).tolist()
    return doc
