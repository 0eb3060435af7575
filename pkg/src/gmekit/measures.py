"""Probability measures used as integration weights.

Every measure reduces to a finite set of weighted atoms through
:meth:`Measure.nodes`: point masses and empirical measures are exact, a
continuous uniform measure is represented by its Gauss-Legendre nodes, and a
product measure by the tensor grid of its factors (which is the same as
iterated integration in declaration order).  :func:`integrate` is then a
weighted sum.

Conditional measures needed when the remaining regressors are conditioned on
the regressor of interest are supplied as *kernels* (see
:class:`ExactConditional`, :class:`BinnedConditional` and
:class:`DeclaredConditional`), i.e. maps from a conditioning value to a
measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Mapping, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ConfigError, DomainError, MeasureError

DEFAULT_NODES = 64
INTERACTION_ATOMS = 4096
MAX_GRID = 4_000_000
_MASS_TOL = 1e-10


# --------------------------------------------------------------------------- #
# Support sets
# --------------------------------------------------------------------------- #


class SupportSet:
    """Base class for explicit support descriptors."""

    dim: int = 1

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask over the rows of a ``(n, dim)`` array."""
        raise NotImplementedError


@dataclass(frozen=True)
class Interval(SupportSet):
    """Closed interval ``[a, b]``; infinite bounds are allowed for filtering
    but not for quadrature."""

    a: float
    b: float

    def __post_init__(self) -> None:
        if not self.a <= self.b:
            raise MeasureError(f"interval needs a <= b, got [{self.a}, {self.b}]")

    @property
    def dim(self) -> int:  # type: ignore[override]
        return 1

    def contains(self, points):
        pts = np.asarray(points, dtype=float).reshape(len(points), -1)[:, 0]
        return (pts >= self.a) & (pts <= self.b)


@dataclass(frozen=True, eq=False)
class FinitePoints(SupportSet):
    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        pts = np.unique(pts, axis=0)
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:  # type: ignore[override]
        return self.points.shape[1]

    def contains(self, points):
        pts = np.asarray(points, dtype=float).reshape(len(points), -1)
        return (pts[:, None, :] == self.points[None, :, :]).all(axis=2).any(axis=1)


@dataclass(frozen=True)
class CategoricalBasis(SupportSet):
    """The set ``{0, e_1, ..., e_d}`` of valid dummy blocks."""

    d: int

    @property
    def dim(self) -> int:  # type: ignore[override]
        return self.d

    def elements(self) -> np.ndarray:
        return np.vstack([np.zeros(self.d), np.eye(self.d)])

    def contains(self, points):
        pts = np.asarray(points, dtype=float).reshape(len(points), -1)
        binary = ((pts == 0.0) | (pts == 1.0)).all(axis=1)
        return binary & (pts.sum(axis=1) <= 1.0)


@dataclass(frozen=True)
class ProductSet(SupportSet):
    parts: tuple[SupportSet, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise MeasureError("product set needs at least one part")

    @property
    def dim(self) -> int:  # type: ignore[override]
        return sum(p.dim for p in self.parts)

    def contains(self, points):
        pts = np.asarray(points, dtype=float).reshape(len(points), -1)
        mask = np.ones(len(pts), dtype=bool)
        pos = 0
        for part in self.parts:
            mask &= part.contains(pts[:, pos : pos + part.dim])
            pos += part.dim
        return mask


# --------------------------------------------------------------------------- #
# Measures
# --------------------------------------------------------------------------- #


def _as_points(values: Any) -> np.ndarray:
    pts = np.asarray(values, dtype=float)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise MeasureError(f"points must be 1-d or 2-d, got shape {pts.shape}")
    return pts


def _merge_atoms(points: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge duplicate atoms; result is sorted lexicographically."""
    uniq, inverse = np.unique(points, axis=0, return_inverse=True)
    merged = np.zeros(len(uniq))
    np.add.at(merged, inverse.ravel(), weights)
    return uniq, merged


def _check_weights(weights: np.ndarray) -> np.ndarray:
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise MeasureError("weights must be finite and nonnegative")
    total = weights.sum()
    if abs(total - 1.0) > _MASS_TOL:
        raise MeasureError(f"weights sum to {total!r}, expected 1")
    return weights / total


class Measure:
    """Base class.  Subclasses provide :attr:`dim`, :meth:`nodes` and
    :attr:`support`."""

    normalized_to: SupportSet | None = None

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(points, weights)`` with shapes ``(n, dim)`` and ``(n,)``."""
        raise NotImplementedError

    @property
    def support(self) -> SupportSet:
        raise NotImplementedError

    @property
    def is_discrete(self) -> bool:
        return True

    def mass(self) -> float:
        return float(self.nodes()[1].sum())


@dataclass(frozen=True, eq=False)
class Dirac(Measure):
    point: Any
    normalized_to: SupportSet | None = None

    def __post_init__(self) -> None:
        pt = np.atleast_1d(np.asarray(self.point, dtype=float))
        if pt.ndim != 1 or not np.all(np.isfinite(pt)):
            raise MeasureError(f"Dirac point must be a finite vector, got {self.point!r}")
        object.__setattr__(self, "point", pt)

    @property
    def dim(self) -> int:
        return len(self.point)

    def nodes(self):
        return self.point[None, :].copy(), np.ones(1)

    @property
    def support(self) -> SupportSet:
        return FinitePoints(self.point[None, :])


@dataclass(frozen=True, eq=False)
class DiscretePoints(Measure):
    """Finitely many atoms; ``weights`` default to equal masses."""

    points: Any
    weights: Any = None
    normalized_to: SupportSet | None = None

    def __post_init__(self) -> None:
        pts = _as_points(self.points)
        if len(pts) == 0:
            raise MeasureError("DiscretePoints needs at least one atom")
        if self.weights is None:
            w = np.full(len(pts), 1.0 / len(pts))
        else:
            w = np.asarray(self.weights, dtype=float).ravel()
            if len(w) != len(pts):
                raise MeasureError("points and weights differ in length")
            w = _check_weights(w)
        if not np.all(np.isfinite(pts)):
            raise MeasureError("atoms must be finite")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def nodes(self):
        return self.points, self.weights

    @property
    def support(self) -> SupportSet:
        return FinitePoints(self.points[self.weights > 0])


@dataclass(frozen=True, eq=False)
class Uniform(Measure):
    """Uniform probability measure on ``(a, b)``.

    Integration uses a ``n_nodes``-point Gauss-Legendre rule, applied on each
    piece when interior ``breakpoints`` are given (useful for integrands with
    kinks, e.g. piecewise conditional measures).
    """

    a: float
    b: float
    n_nodes: int = DEFAULT_NODES
    breakpoints: tuple[float, ...] = ()
    normalized_to: SupportSet | None = None

    def __post_init__(self) -> None:
        a, b = float(self.a), float(self.b)
        if not (math.isfinite(a) and math.isfinite(b)):
            raise MeasureError("uniform measure needs finite bounds")
        if not a < b:
            raise MeasureError(f"uniform measure needs a < b, got ({a}, {b})")
        if int(self.n_nodes) < 1:
            raise MeasureError("n_nodes must be positive")
        bps = tuple(sorted(float(t) for t in self.breakpoints if a < float(t) < b))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "n_nodes", int(self.n_nodes))
        object.__setattr__(self, "breakpoints", bps)

    @property
    def dim(self) -> int:
        return 1

    @property
    def is_discrete(self) -> bool:
        return False

    @cached_property
    def _nodes(self) -> tuple[np.ndarray, np.ndarray]:
        t, w = leggauss(self.n_nodes)
        edges = (self.a, *self.breakpoints, self.b)
        pts, wts = [], []
        for lo, hi in zip(edges[:-1], edges[1:]):
            pts.append(0.5 * (hi + lo) + 0.5 * (hi - lo) * t)
            wts.append(w * (0.5 * (hi - lo) / (self.b - self.a)))
        pts_arr = np.concatenate(pts)[:, None]
        pts_arr.setflags(write=False)
        w_arr = np.concatenate(wts)
        w_arr.setflags(write=False)
        return pts_arr, w_arr

    def nodes(self):
        return self._nodes

    @property
    def support(self) -> SupportSet:
        return Interval(self.a, self.b)


@dataclass(frozen=True, eq=False)
class Product(Measure):
    """Independent product of measures; coordinates are concatenated in
    part order."""

    parts: tuple[Measure, ...]
    normalized_to: SupportSet | None = None

    def __post_init__(self) -> None:
        parts = tuple(self.parts)
        if not parts:
            raise MeasureError("product measure needs at least one part")
        for p in parts:
            if not isinstance(p, Measure):
                raise MeasureError(f"product part {p!r} is not a measure")
        object.__setattr__(self, "parts", parts)

    @property
    def dim(self) -> int:
        return sum(p.dim for p in self.parts)

    @property
    def is_discrete(self) -> bool:
        return all(p.is_discrete for p in self.parts)

    @cached_property
    def _nodes(self):
        node_sets = [p.nodes() for p in self.parts]
        size = math.prod(len(w) for _, w in node_sets)
        if size > MAX_GRID:
            raise MeasureError(
                f"product grid would have {size} nodes (limit {MAX_GRID}); "
                "reduce n_nodes of the uniform factors"
            )
        pts, wts = node_sets[0]
        for q, v in node_sets[1:]:
            n, m = len(wts), len(v)
            pts = np.hstack([np.repeat(pts, m, axis=0), np.tile(q, (n, 1))])
            wts = np.repeat(wts, m) * np.tile(v, n)
        return pts, wts

    def nodes(self):
        return self._nodes

    @property
    def support(self) -> SupportSet:
        return ProductSet(tuple(p.support for p in self.parts))


@dataclass(frozen=True, eq=False)
class EmpiricalJoint(Measure):
    """Joint empirical measure: mass ``count(x) / n`` on each distinct row.

    Construct from raw rows with :meth:`from_data`; the direct constructor
    takes already merged atoms.
    """

    points: Any
    weights: Any
    n: int = 0
    normalized_to: SupportSet | None = None

    def __post_init__(self) -> None:
        pts = _as_points(self.points)
        w = _check_weights(np.asarray(self.weights, dtype=float).ravel())
        if len(w) != len(pts) or len(pts) == 0:
            raise MeasureError("empirical measure needs matching, nonempty atoms")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_data(cls, data: Any) -> EmpiricalJoint:
        X = _as_points(data)
        if len(X) == 0:
            raise MeasureError("empirical measure needs at least one row")
        if not np.all(np.isfinite(X)):
            raise MeasureError("data contain non-finite values")
        uniq, counts = np.unique(X, axis=0, return_counts=True)
        return cls(uniq, counts / len(X), len(X))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def nodes(self):
        return self.points, self.weights

    @property
    def support(self) -> SupportSet:
        return FinitePoints(self.points)

    def counts(self) -> np.ndarray:
        """Integer counts per atom (only meaningful for unnormalized data)."""
        return np.rint(self.weights * self.n).astype(int)


@dataclass(frozen=True, eq=False)
class EmpiricalMarginal(Measure):
    """Projection of an empirical measure that drops the given coordinates."""

    parent: Measure
    dropped: tuple[int, ...]
    normalized_to: SupportSet | None = None

    def __post_init__(self) -> None:
        dropped = tuple(sorted(set(int(i) for i in self.dropped)))
        if any(not 0 <= i < self.parent.dim for i in dropped):
            raise MeasureError("dropped coordinate out of range")
        if len(dropped) == self.parent.dim:
            raise MeasureError("cannot drop every coordinate")
        object.__setattr__(self, "dropped", dropped)

    @property
    def kept(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.parent.dim) if i not in self.dropped)

    @property
    def dim(self) -> int:
        return self.parent.dim - len(self.dropped)

    @cached_property
    def _nodes(self):
        pts, w = self.parent.nodes()
        return _merge_atoms(pts[:, list(self.kept)], w)

    def nodes(self):
        return self._nodes

    @property
    def support(self) -> SupportSet:
        return FinitePoints(self._nodes[0])


@dataclass(frozen=True, eq=False)
class EmpiricalConditional(Measure):
    """Renormalized restriction of an empirical measure to atoms whose
    conditioning coordinates equal ``value`` exactly; the conditioning
    coordinates are removed from the result."""

    parent: Measure
    on: tuple[int, ...]
    value: Any
    normalized_to: SupportSet | None = None

    def __post_init__(self) -> None:
        on = tuple(int(i) for i in self.on)
        val = np.atleast_1d(np.asarray(self.value, dtype=float))
        if len(val) != len(on):
            raise MeasureError("conditioning value has wrong length")
        if len(on) >= self.parent.dim:
            raise MeasureError("cannot condition on every coordinate")
        object.__setattr__(self, "on", on)
        object.__setattr__(self, "value", val)
        pts, w = self.parent.nodes()
        mask = (pts[:, list(on)] == val[None, :]).all(axis=1) & (w > 0)
        if not mask.any():
            raise MeasureError(f"no observations match conditioning value {val.tolist()}")
        kept = [i for i in range(self.parent.dim) if i not in on]
        sub_w = w[mask]
        object.__setattr__(self, "_atoms", _merge_atoms(pts[mask][:, kept], sub_w / sub_w.sum()))

    @property
    def dim(self) -> int:
        return self.parent.dim - len(self.on)

    def nodes(self):
        return self._atoms  # type: ignore[attr-defined]

    @property
    def support(self) -> SupportSet:
        return FinitePoints(self.nodes()[0])


def _compress(points: np.ndarray, weights: np.ndarray, n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Merge sorted 1-d atoms into at most ``n_max`` bins of roughly equal
    mass; each bin keeps its total mass and its mean."""
    order = np.argsort(points, kind="stable")
    pts, w = points[order], weights[order]
    cum = np.cumsum(w)
    bins = np.minimum((cum - 0.5 * w) / cum[-1] * n_max, n_max - 1).astype(int)
    mass = np.bincount(bins, weights=w, minlength=n_max)
    moment = np.bincount(bins, weights=w * pts, minlength=n_max)
    keep = mass > 0
    return moment[keep] / mass[keep], mass[keep]


@dataclass(frozen=True, eq=False)
class InteractionProduct(Measure):
    """Law of ``Z = X * Y`` for independent ``X ~ mu1`` and ``Y ~ mu2``.

    Discrete factors are pushed forward exactly with equal products merged.
    A continuous factor is replaced by its quadrature nodes before the
    push-forward, and results with more than ``max_atoms`` atoms are merged
    into mass- and mean-preserving bins.  Total mass and the first moment are
    therefore exact, and smooth integrands are integrated to quadrature
    accuracy.
    """

    mu1: Measure
    mu2: Measure
    max_atoms: int = INTERACTION_ATOMS
    normalized_to: SupportSet | None = None

    def __post_init__(self) -> None:
        if self.mu1.dim != 1 or self.mu2.dim != 1:
            raise MeasureError("interaction measure needs univariate factors")

    @property
    def dim(self) -> int:
        return 1

    @property
    def is_discrete(self) -> bool:
        return self.mu1.is_discrete and self.mu2.is_discrete

    @cached_property
    def _nodes(self):
        p, w = self.mu1.nodes()
        q, v = self.mu2.nodes()
        z = (p[:, 0][:, None] * q[:, 0][None, :]).ravel()
        wz = (w[:, None] * v[None, :]).ravel()
        pts, wts = _merge_atoms(z[:, None], wz)
        if len(wts) > self.max_atoms:
            cz, cw = _compress(pts[:, 0], wts, self.max_atoms)
            pts, wts = cz[:, None], cw
        return pts, wts

    def nodes(self):
        return self._nodes

    @property
    def support(self) -> SupportSet:
        if self.is_discrete:
            return FinitePoints(self._nodes[0])
        lo1, hi1 = _hull(self.mu1)
        lo2, hi2 = _hull(self.mu2)
        ends = [lo1 * lo2, lo1 * hi2, hi1 * lo2, hi1 * hi2]
        return Interval(min(ends), max(ends))


def _hull(mu: Measure) -> tuple[float, float]:
    sup = mu.support
    if isinstance(sup, Interval):
        return sup.a, sup.b
    pts = mu.nodes()[0][:, 0]
    return float(pts.min()), float(pts.max())


# --------------------------------------------------------------------------- #
# Operations
# --------------------------------------------------------------------------- #


def integrate(h: Callable[[np.ndarray], Any], mu: Measure) -> Any:
    """Integrate ``h`` against ``mu``.

    ``h`` is called once with all integration nodes: an array of shape
    ``(n,)`` for univariate measures, ``(n, dim)`` otherwise.  It must return
    an array whose leading axis has length ``n``; trailing axes are kept.
    """
    pts, w = mu.nodes()
    arg = pts[:, 0] if mu.dim == 1 else pts
    vals = np.asarray(h(arg), dtype=float)
    if vals.ndim == 0 or vals.shape[0] != len(w):
        vals = np.broadcast_to(vals, (len(w),) + vals.shape[1:] if vals.ndim else (len(w),))
    bad = ~np.isfinite(vals)
    if bad.any():
        row = int(np.argwhere(bad)[0][0])
        raise DomainError(f"integrand is not finite at support point {pts[row].tolist()}")
    res = np.tensordot(w, vals, axes=(0, 0))
    return float(res) if np.ndim(res) == 0 else res


def product_measure(parts: Sequence[Measure]) -> Product:
    if not parts:
        raise MeasureError("product measure needs at least one part")
    return Product(tuple(parts))


def interaction_measure(mu1: Measure, mu2: Measure, max_atoms: int = INTERACTION_ATOMS) -> InteractionProduct:
    return InteractionProduct(mu1, mu2, max_atoms)


def empirical(data: Any, mode: str = "joint", *, drop: Sequence[int] = (), on: Sequence[int] = (), value: Any = None) -> Measure:
    """Empirical measures from a data matrix.

    ``mode="joint"`` gives the joint empirical measure, ``"marginal"`` drops
    the ``drop`` coordinates, ``"conditional"`` conditions the ``on``
    coordinates on ``value`` by exact matching.
    """
    joint = data if isinstance(data, Measure) else EmpiricalJoint.from_data(data)
    if mode == "joint":
        return joint
    if mode == "marginal":
        return EmpiricalMarginal(joint, tuple(drop))
    if mode == "conditional":
        return EmpiricalConditional(joint, tuple(on), value)
    raise ConfigError(f"unknown empirical mode {mode!r}")


def normalize(mu: Measure, D: SupportSet) -> Measure:
    """Restrict ``mu`` to ``D`` and rescale to unit mass."""
    if D.dim != mu.dim:
        raise MeasureError(f"set has dimension {D.dim}, measure has {mu.dim}")
    if isinstance(mu, Uniform):
        if isinstance(D, Interval):
            a, b = max(mu.a, D.a), min(mu.b, D.b)
            if not a < b:
                raise MeasureError("measure has zero mass on the normalization set")
            return Uniform(a, b, mu.n_nodes, mu.breakpoints, normalized_to=D)
        raise MeasureError("a continuous uniform measure has zero mass on a finite set")
    if isinstance(mu, Product) and isinstance(D, ProductSet) and [p.dim for p in mu.parts] == [s.dim for s in D.parts]:
        return Product(tuple(normalize(m, s) for m, s in zip(mu.parts, D.parts)), normalized_to=D)
    if not mu.is_discrete:
        raise MeasureError(f"cannot normalize {type(mu).__name__} to {type(D).__name__}")
    pts, w = mu.nodes()
    mask = D.contains(pts)
    mass = float(w[mask].sum())
    if mass <= 0.0:
        raise MeasureError("measure has zero mass on the normalization set")
    new_w = w[mask] / mass
    if isinstance(mu, (EmpiricalJoint, EmpiricalMarginal, EmpiricalConditional)):
        return EmpiricalJoint(pts[mask], new_w, getattr(mu, "n", 0), normalized_to=D)
    return DiscretePoints(pts[mask], new_w, normalized_to=D)


# --------------------------------------------------------------------------- #
# Conditional kernels
# --------------------------------------------------------------------------- #


class ConditionalKernel:
    """Map from a value of the conditioning coordinates to a measure over the
    remaining coordinates."""

    def at(self, value: Any) -> Measure:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class ExactConditional(ConditionalKernel):
    """Empirical conditional by exact matching on ``on`` coordinates."""

    joint: Measure
    on: tuple[int, ...]

    def at(self, value):
        return EmpiricalConditional(self.joint, tuple(self.on), value)


@dataclass(frozen=True, eq=False)
class BinnedConditional(ConditionalKernel):
    """Empirical conditional on a single metric coordinate, pooling the rows
    that fall in the same bin.

    Bins are ``[e_0, e_1], (e_1, e_2], ...``; a value equal to an interior
    edge belongs to the bin on its left.  Rows outside ``[e_0, e_last]``
    belong to no bin.
    """

    joint: Measure
    on: int
    edges: Any

    def __post_init__(self) -> None:
        e = np.asarray(self.edges, dtype=float)
        if e.ndim != 1 or len(e) < 2 or np.any(np.diff(e) <= 0):
            raise MeasureError("bin edges must be strictly increasing")
        object.__setattr__(self, "edges", e)

    def bin_of(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(self.edges, x, side="left") - 1
        k = np.where(x == self.edges[0], 0, k)
        return np.where((x < self.edges[0]) | (x > self.edges[-1]), -1, k)

    def at(self, value):
        x = float(np.atleast_1d(value)[0])
        if x < self.edges[0] or x > self.edges[-1]:
            raise MeasureError(f"value {x} lies outside the binned range")
        pts, w = self.joint.nodes()
        k = self.bin_of(np.array([x]))[0]
        mask = (self.bin_of(pts[:, self.on]) == k) & (w > 0)
        if not mask.any():
            raise MeasureError(f"bin {k} contains no observations")
        kept = [i for i in range(self.joint.dim) if i != self.on]
        return DiscretePoints(pts[mask][:, kept], w[mask] / w[mask].sum())


@dataclass(frozen=True, eq=False)
class DeclaredConditional(ConditionalKernel):
    """User-supplied conditional law."""

    fn: Callable[[np.ndarray], Measure]

    def at(self, value):
        mu = self.fn(np.atleast_1d(np.asarray(value, dtype=float)))
        if not isinstance(mu, Measure):
            raise MeasureError("declared conditional must return a Measure")
        return mu


# --------------------------------------------------------------------------- #
# JSON grammar
# --------------------------------------------------------------------------- #


def support_from_spec(spec: Any) -> SupportSet:
    if not isinstance(spec, Mapping) or len(spec) != 1:
        raise ConfigError(f"malformed set spec {spec!r}")
    (key, val), = spec.items()
    if key == "interval":
        lo, hi = (float(v) for v in val)
        return Interval(lo, hi)
    if key == "points":
        return FinitePoints(np.asarray(val, dtype=float))
    if key == "categorical_basis":
        return CategoricalBasis(int(val))
    if key == "product":
        return ProductSet(tuple(support_from_spec(s) for s in val))
    raise ConfigError(f"unknown set kind {key!r}")


def measure_from_spec(spec: Any, data: np.ndarray | None = None) -> Measure:
    """Build a measure from its JSON description.

    ``{"empirical": {...}}`` entries draw on ``data``: ``mode`` is ``joint``,
    ``marginal`` (with ``drop``) or ``conditional`` (with ``on`` and
    ``value``); ``columns`` optionally selects data columns first.
    """
    if not isinstance(spec, Mapping) or len(spec) != 1:
        raise ConfigError(f"malformed measure spec {spec!r}")
    (key, val), = spec.items()
    if key == "dirac":
        return Dirac(val)
    if key == "uniform":
        if isinstance(val, Mapping):
            return Uniform(float(val["a"]), float(val["b"]), int(val.get("n_nodes", DEFAULT_NODES)),
                           tuple(val.get("breakpoints", ())))
        lo, hi = (float(v) for v in val)
        return Uniform(lo, hi)
    if key == "points":
        return DiscretePoints(val["values"], val.get("weights"))
    if key == "empirical":
        if data is None:
            raise ConfigError("empirical measure requested but no data supplied")
        X = np.asarray(data, dtype=float)
        if "columns" in val:
            X = X[:, [int(c) for c in val["columns"]]]
        return empirical(X, val.get("mode", "joint"), drop=val.get("drop", ()), on=val.get("on", ()),
                         value=val.get("value"))
    if key == "product":
        return product_measure([measure_from_spec(s, data) for s in val])
    if key == "interaction":
        a, b = val
        return interaction_measure(measure_from_spec(a, data), measure_from_spec(b, data))
    if key == "normalize":
        return normalize(measure_from_spec(val["of"], data), support_from_spec(val["to"]))
    raise ConfigError(f"unknown measure kind {key!r}")
