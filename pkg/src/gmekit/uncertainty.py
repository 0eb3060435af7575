"""Parameter ensembles, point estimates and uncertainty regions.

Point estimates are ensemble means; uncertainty regions are computed per
component from the per-draw values of a quantity.  The default region is the
highest density region (HDR) obtained as the shortest window of order
statistics; an equal-tailed region and a multimodal KDE-based HDR are
available as alternatives.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
from scipy.stats import gaussian_kde

from .errors import ConfigError, DataError, DomainError

DEFAULT_ALPHA = 0.05
DEFAULT_DRAWS = 4000


# --------------------------------------------------------------------------- #
# Ensembles
# --------------------------------------------------------------------------- #


@dataclass(frozen=True, eq=False)
class ThetaEnsemble:
    """Matrix of parameter draws with provenance.

    Attributes
    ----------
    draws : ndarray, shape (n_draws, k)
    provenance : str
        ``"posterior_file"`` or ``"normal_approx"``.
    seed : int or None
    info : dict
        Extra provenance (file name, whether eigenvalues were clipped, ...).
    """

    draws: np.ndarray
    provenance: str
    seed: int | None = None
    info: dict = field(default_factory=dict)
    names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        d = np.asarray(self.draws, dtype=float)
        if d.ndim != 2:
            raise DataError(f"draws must be a matrix, got shape {d.shape}")
        if d.shape[0] < 2:
            raise DataError("an ensemble needs at least 2 draws")
        if not np.all(np.isfinite(d)):
            row = int(np.argwhere(~np.isfinite(d))[0][0])
            raise DataError(f"draw {row} is not finite")
        d.setflags(write=False)
        object.__setattr__(self, "draws", d)

    @property
    def n_draws(self) -> int:
        return self.draws.shape[0]

    @property
    def k(self) -> int:
        return self.draws.shape[1]

    def mean(self) -> np.ndarray:
        return self.draws.mean(axis=0)


def normal_ensemble(theta_hat: Any, cov: Any, n: int = DEFAULT_DRAWS, seed: int = 0) -> ThetaEnsemble:
    """Draws from ``N(theta_hat, cov)`` using a counter-based generator.

    A covariance that is not positive definite has its eigenvalues clipped at
    ``1e-12`` times the largest one (with a warning); an all-zero covariance
    yields draws exactly equal to ``theta_hat``.
    """
    mean = np.asarray(theta_hat, dtype=float).ravel()
    S = np.asarray(cov, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ConfigError(f"covariance must be square, got shape {S.shape}")
    if S.shape[0] != len(mean):
        raise ConfigError(f"covariance is {S.shape[0]}x{S.shape[0]} but theta has length {len(mean)}")
    if not np.allclose(S, S.T, rtol=1e-10, atol=1e-14):
        raise ConfigError("covariance must be symmetric")
    if int(n) < 2:
        raise ConfigError("need at least 2 draws")
    n = int(n)
    rng = np.random.Generator(np.random.Philox(seed))
    info: dict = {"theta_hat": mean.tolist(), "factorization": "cholesky"}
    if not np.any(S):
        draws = np.tile(mean, (n, 1))
        info["factorization"] = "zero"
        return ThetaEnsemble(draws, "normal_approx", seed, info)
    # coordinates with an all-zero row (e.g. a plug-in error variance) stay fixed
    free = np.flatnonzero(np.any(S != 0, axis=1))
    if len(free) < len(mean):
        info["fixed"] = [int(i) for i in np.setdiff1d(np.arange(len(mean)), free)]
    Sf = S[np.ix_(free, free)]
    try:
        L = np.linalg.cholesky(Sf)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(0.5 * (Sf + Sf.T))
        floor = 1e-12 * max(vals.max(), 0.0)
        clipped = np.maximum(vals, floor)
        warnings.warn("covariance is not positive definite; eigenvalues clipped", RuntimeWarning, stacklevel=2)
        L = vecs * np.sqrt(clipped)
        info["factorization"] = "eigen_clipped"
        info["clipped_eigenvalues"] = int(np.sum(vals < floor))
    Zs = rng.standard_normal((n, len(free)))
    draws = np.tile(mean, (n, 1))
    draws[:, free] += Zs @ L.T
    return ThetaEnsemble(draws, "normal_approx", seed, info)


def read_draws(path: str | Path, names: Sequence[str] | None = None) -> ThetaEnsemble:
    """Load posterior draws from a CSV file with a header row.

    When ``names`` is given the header must contain every name; columns are
    reordered to match.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read draws file {path}: {exc}") from None
    if len(rows) < 2:
        raise DataError(f"draws file {path} has no data rows")
    header = [h.strip() for h in rows[0]]
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise DataError(f"draws file {path}: {exc}") from None
    if names is not None:
        missing = [n for n in names if n not in header]
        if missing:
            raise DataError(f"draws file {path} lacks columns {missing}")
        data = data[:, [header.index(n) for n in names]]
        header = list(names)
    return ThetaEnsemble(data, "posterior_file", None, {"path": str(path)}, tuple(header))


def make_ensemble(source: Any = None, *, theta_hat: Any = None, cov: Any = None, n: int = DEFAULT_DRAWS,
                  seed: int = 0, names: Sequence[str] | None = None) -> ThetaEnsemble:
    """Either read ``source`` (a draws CSV path) or sample a normal
    approximation."""
    if source is not None:
        return read_draws(source, names)
    if theta_hat is None or cov is None:
        raise ConfigError("need a draws file or theta_hat with a covariance")
    return normal_ensemble(theta_hat, cov, n, seed)


# --------------------------------------------------------------------------- #
# Regions
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class UncertaintyRegion:
    kind: str
    alpha: float
    intervals: tuple[tuple[float, float], ...]

    def contains(self, values: Any) -> np.ndarray:
        v = np.asarray(values, dtype=float)
        mask = np.zeros(v.shape, dtype=bool)
        for lo, hi in self.intervals:
            mask |= (v >= lo) & (v <= hi)
        return mask

    @property
    def lo(self) -> float:
        return self.intervals[0][0]

    @property
    def hi(self) -> float:
        return self.intervals[-1][1]

    @property
    def width(self) -> float:
        return float(sum(hi - lo for lo, hi in self.intervals))

    def scaled(self, factor: float) -> UncertaintyRegion:
        """Region after multiplying values by ``factor > 0``."""
        return UncertaintyRegion(self.kind, self.alpha, tuple((lo * factor, hi * factor) for lo, hi in self.intervals))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "alpha": self.alpha, "intervals": [list(iv) for iv in self.intervals]}


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def _window_size(n: int, alpha: float) -> int:
    m = max(1, math.ceil((1.0 - alpha) * n - 1e-9))
    while m < n and m / n < 1.0 - alpha:
        m += 1
    return min(m, n)


def equal_tailed(samples: Any, alpha: float = DEFAULT_ALPHA) -> UncertaintyRegion:
    """Interval between the order statistics ``floor(alpha n / 2)`` and
    ``n - 1 - floor(alpha n / 2)``."""
    alpha = _check_alpha(alpha)
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = len(x)
    if n == 0:
        raise DataError("no samples")
    k = int(math.floor(alpha * n / 2.0))
    return UncertaintyRegion("equal_tailed", alpha, ((float(x[k]), float(x[n - 1 - k])),))


def hdr(samples: Any, alpha: float = DEFAULT_ALPHA, multimodal: bool = False) -> UncertaintyRegion:
    """Highest density region of a scalar sample.

    The default returns the shortest window of consecutive order statistics
    holding at least ``(1 - alpha) n`` samples.  With ``multimodal=True`` a
    Gaussian KDE is evaluated at the samples, the density threshold is the
    ``alpha`` quantile of these density values, and the samples at or above
    it are grouped into intervals separated by samples below it.
    """
    alpha = _check_alpha(alpha)
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = len(x)
    if n == 0:
        raise DataError("no samples")
    if not np.all(np.isfinite(x)):
        raise DataError("samples contain non-finite values")
    if n < 20.0 / alpha:
        warnings.warn(f"only {n} samples for alpha={alpha}; region may be unreliable", RuntimeWarning, stacklevel=2)
    if x[0] == x[-1]:
        return UncertaintyRegion("hdr", alpha, ((float(x[0]), float(x[0])),))
    if not multimodal:
        m = _window_size(n, alpha)
        widths = x[m - 1 :] - x[: n - m + 1]
        i = int(np.argmin(widths))
        return UncertaintyRegion("hdr", alpha, ((float(x[i]), float(x[i + m - 1])),))
    dens = gaussian_kde(x)(x)
    m = _window_size(n, alpha)
    # keep the m samples of highest density (ties broken by order)
    order = np.argsort(-dens, kind="stable")
    keep = np.zeros(n, dtype=bool)
    keep[order[:m]] = True
    intervals: list[tuple[float, float]] = []
    start = None
    for i in range(n):
        if keep[i] and start is None:
            start = i
        if start is not None and (i == n - 1 or not keep[i + 1]):
            intervals.append((float(x[start]), float(x[i])))
            start = None
    return UncertaintyRegion("hdr_multimodal", alpha, tuple(intervals))


def region(samples: Any, alpha: float = DEFAULT_ALPHA, kind: str = "hdr") -> UncertaintyRegion:
    if kind == "hdr":
        return hdr(samples, alpha)
    if kind in ("hdr_multimodal", "multimodal"):
        return hdr(samples, alpha, multimodal=True)
    if kind in ("equal_tailed", "et"):
        return equal_tailed(samples, alpha)
    raise ConfigError(f"unknown region kind {kind!r}")


# --------------------------------------------------------------------------- #
# Estimates
# --------------------------------------------------------------------------- #


@dataclass(frozen=True, eq=False)
class QuantityResult:
    """Point estimate, per-component regions and optional curve data.

    ``point`` is a float for scalar quantities or an array for vector
    quantities; ``regions`` follows the flattened component order.  For
    curves, ``grid`` holds one ``(x, point, region)`` triple per grid point.
    """

    point: Any
    regions: tuple[UncertaintyRegion, ...]
    draw_values: np.ndarray | None = None
    grid: tuple[tuple[Any, Any, Any], ...] | None = None
    labels: tuple[str, ...] | None = None
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out: dict = {"point": _jsonable(self.point), "regions": [r.to_dict() for r in self.regions]}
        if self.labels is not None:
            out["labels"] = list(self.labels)
        if self.grid is not None:
            out["grid"] = [
                {"x": _jsonable(x), "point": _jsonable(p),
                 "regions": [r.to_dict() for r in (reg if isinstance(reg, tuple) else (reg,))]}
                for x, p, reg in self.grid
            ]
        if self.meta:
            out["meta"] = self.meta
        return out


def _jsonable(v: Any) -> Any:
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (tuple, list)):
        return [_jsonable(u) for u in v]
    return v


def _values_by_draw(quantity: Callable, ensemble: ThetaEnsemble, vectorized: bool) -> np.ndarray:
    D = ensemble.n_draws
    if vectorized:
        vals = np.asarray(quantity(ensemble.draws), dtype=float)
        if vals.ndim == 0:
            vals = np.full(D, float(vals))
        if vals.shape[-1] != D:
            raise ConfigError(f"vectorized quantity must put the {D} draws on the last axis, got {vals.shape}")
        vals = np.moveaxis(vals, -1, 0)
    else:
        vals = np.stack([np.asarray(quantity(th), dtype=float) for th in ensemble.draws])
    return vals


def estimate(quantity: Callable, ensemble: ThetaEnsemble, alpha: float = DEFAULT_ALPHA, kind: str = "hdr",
             vectorized: bool = False, keep_draws: bool = True, labels: Sequence[str] | None = None) -> QuantityResult:
    """Ensemble mean and per-component uncertainty regions of ``quantity``.

    With ``vectorized=False`` the quantity is called once per draw with a
    1-d parameter vector; otherwise once with the full draw matrix and must
    return draws on its last axis.
    """
    alpha = _check_alpha(alpha)
    vals = _values_by_draw(quantity, ensemble, vectorized)
    bad = ~np.isfinite(vals)
    if bad.any():
        idx = int(np.argwhere(bad)[0][0])
        raise DomainError(f"quantity is not finite at draw {idx}")
    point = vals.mean(axis=0)
    flat = vals.reshape(len(vals), -1)
    regions = tuple(region(flat[:, c], alpha, kind) for c in range(flat.shape[1]))
    point_out: Any = float(point) if np.ndim(point) == 0 else point
    sd = flat.std(axis=0, ddof=1)
    return QuantityResult(point_out, regions, vals if keep_draws else None, None,
                          tuple(labels) if labels is not None else None,
                          {"n_draws": ensemble.n_draws, "alpha": alpha, "kind": kind,
                           "sd": float(sd[0]) if np.ndim(point) == 0 else sd.tolist()})


def curve_band(quantity_at: Callable[[Any, Any], Any], ensemble: ThetaEnsemble, grid: Sequence[Any],
               alpha: float = DEFAULT_ALPHA, kind: str = "hdr", vectorized: bool = True) -> QuantityResult:
    """Point curve and per-grid-point regions.

    ``quantity_at(theta, x)`` evaluates the target at grid point ``x``; with
    ``vectorized=True`` it receives the full draw matrix.
    """
    grid = list(grid)
    if not grid:
        raise ConfigError("empty grid")
    rows = []
    points = []
    for x in grid:
        res = estimate(lambda th, x=x: quantity_at(th, x), ensemble, alpha, kind, vectorized, keep_draws=False)
        reg = res.regions[0] if len(res.regions) == 1 else res.regions
        rows.append((x, res.point, reg))
        points.append(res.point)
    return QuantityResult(np.asarray(points, dtype=float), (), None, tuple(rows), None,
                          {"n_draws": ensemble.n_draws, "alpha": alpha, "kind": kind})
