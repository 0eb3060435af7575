"""Standardized reporting and plot-series emission.

Plot data are carried by :class:`PlotSeries` and serialized with
:func:`emit` as JSON (schema ``gmekit-plot/1``), CSV (columns ``series_id,
x, point, lo, hi``) or a minimal static SVG.  JSON and CSV output is
byte-stable for identical input.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from .errors import ConfigError
from .uncertainty import QuantityResult, UncertaintyRegion

SCHEMA = "gmekit-plot/1"
KINDS = ("curve", "points_with_bars", "forest", "density_overlay")
DEFAULT_QUANTILES = (0.05, 0.95)


# --------------------------------------------------------------------------- #
# Standardization
# --------------------------------------------------------------------------- #


def _bounds(Q: Any) -> tuple[float, float]:
    if isinstance(Q, tuple) and len(Q) == 2 and all(np.isscalar(q) for q in Q):
        lo, hi = float(Q[0]), float(Q[1])
    else:
        arr = np.asarray(Q, dtype=float).ravel()
        if arr.size == 0:
            raise ConfigError("empty window")
        lo, hi = float(arr.min()), float(arr.max())
    if not hi > lo:
        raise ConfigError(f"degenerate window [{lo}, {hi}]")
    return lo, hi


def _in_window(x: np.ndarray, Q: Any, lo: float, hi: float) -> np.ndarray:
    if isinstance(Q, tuple) and len(Q) == 2:
        return (x >= lo) & (x <= hi)
    pts = np.asarray(Q, dtype=float).ravel()
    return np.isin(x, pts)


def z_scale(x: Any, Q: Any):
    """Affine map of the window ``Q`` onto ``[0, 1]``; zero outside ``Q``.

    ``Q`` is an interval given as a 2-tuple ``(lo, hi)`` or a finite point
    set given as a list or array.
    """
    lo, hi = _bounds(Q)
    xa = np.asarray(x, dtype=float)
    z = np.where(_in_window(xa, Q, lo, hi), (xa - lo) / (hi - lo), 0.0)
    return float(z) if z.ndim == 0 else z


def z_inverse(z: Any, Q: Any):
    """Inverse of :func:`z_scale` on ``[0, 1]``."""
    lo, hi = _bounds(Q)
    za = np.asarray(z, dtype=float)
    out = lo + za * (hi - lo)
    return float(out) if out.ndim == 0 else out


def quantile_window(values: Any, q: tuple[float, float] = DEFAULT_QUANTILES) -> tuple[float, float]:
    v = np.asarray(values, dtype=float).ravel()
    lo, hi = np.quantile(v, q)
    return float(lo), float(hi)


def standardized_quantity(result: QuantityResult, sd_y: float, Q: Any = None, center: float | None = None,
                          quantiles: tuple[float, float] | None = None, outcome: str = "Y") -> QuantityResult:
    """Divide point estimates and regions by ``sd_y``.

    With ``Q`` the curve grid is mapped through :func:`z_scale`.  ``center``
    (typically the outcome mean) is subtracted before scaling when given;
    slopes and effects should not be centred.
    """
    sd_y = float(sd_y)
    if not sd_y > 0 or not math.isfinite(sd_y):
        raise ConfigError("sd_y must be positive")
    c = 0.0 if center is None else float(center)

    def scale_val(v: Any) -> Any:
        arr = (np.asarray(v, dtype=float) - c) / sd_y
        return float(arr) if arr.ndim == 0 else arr

    def scale_reg(r: UncertaintyRegion) -> UncertaintyRegion:
        return UncertaintyRegion(r.kind, r.alpha, tuple(((lo - c) / sd_y, (hi - c) / sd_y) for lo, hi in r.intervals))

    grid = None
    if result.grid is not None:
        rows = []
        for x, p, reg in result.grid:
            xx = z_scale(x, Q) if Q is not None else x
            regs = tuple(scale_reg(r) for r in reg) if isinstance(reg, tuple) else scale_reg(reg)
            rows.append((xx, scale_val(p), regs))
        grid = tuple(rows)
    meta = dict(result.meta)
    if "sd" in meta:
        meta["sd"] = (np.asarray(meta["sd"], dtype=float) / sd_y).tolist()
    meta.update({"standardized": True, "sd_y": sd_y, "centered": center is not None})
    if Q is not None:
        lo, hi = _bounds(Q)
        meta["window"] = [lo, hi]
        q1, q2 = quantiles or DEFAULT_QUANTILES
        meta["sentence"] = (
            f"The average slope of expectation of {outcome} between the {q1:g} quantile and the {q2:g} quantile "
            "is {value} standard deviations of " + outcome + " per window."
        )
    draws = None if result.draw_values is None else (result.draw_values - c) / sd_y
    return QuantityResult(scale_val(result.point), tuple(scale_reg(r) for r in result.regions), draws, grid,
                          result.labels, meta)


# --------------------------------------------------------------------------- #
# Plot series
# --------------------------------------------------------------------------- #


@dataclass(frozen=True, eq=False)
class PlotSeries:
    series_id: str
    kind: str
    x: tuple[Any, ...]
    point: tuple[float, ...]
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown series kind {self.kind!r}")
        object.__setattr__(self, "meta", dict(self.meta))
        n = len(self.x)
        if n == 0:
            raise ConfigError(f"series {self.series_id!r} is empty")
        if not (len(self.point) == len(self.lo) == len(self.hi) == n):
            raise ConfigError(f"series {self.series_id!r} has inconsistent lengths")
        for p, a, b in zip(self.point, self.lo, self.hi):
            if a > b:
                raise ConfigError(f"series {self.series_id!r} has an interval with lo > hi")
            if not (a <= p + 1e-12 * max(1.0, abs(p)) and p <= b + 1e-12 * max(1.0, abs(p))):
                # a mean can fall outside the HDR of a strongly skewed sample
                self.meta["point_outside_region"] = True


def _scalar(v: Any) -> float:
    return float(np.asarray(v, dtype=float).ravel()[0])


def series_from_result(series_id: str, result: QuantityResult, kind: str | None = None,
                       meta: dict | None = None) -> PlotSeries:
    """Turn a curve result (with grid) or a vector result into a series."""
    m = dict(meta or {})
    if result.grid is not None:
        xs, pts, los, his = [], [], [], []
        for x, p, reg in result.grid:
            r = reg[0] if isinstance(reg, tuple) else reg
            xs.append(_jsonx(x))
            pts.append(_scalar(p))
            los.append(r.lo)
            his.append(r.hi)
        return PlotSeries(series_id, kind or "curve", tuple(xs), tuple(pts), tuple(los), tuple(his), m)
    point = np.atleast_1d(np.asarray(result.point, dtype=float)).ravel()
    labels = result.labels or tuple(str(i) for i in range(len(point)))
    return PlotSeries(series_id, kind or "forest", tuple(labels), tuple(float(p) for p in point),
                      tuple(r.lo for r in result.regions), tuple(r.hi for r in result.regions), m)


def _jsonx(x: Any) -> Any:
    arr = np.asarray(x)
    if arr.ndim == 0:
        return arr.item()
    return arr.tolist()


def _fmt(v: float) -> str:
    return repr(float(v))


def _x_str(x: Any) -> str:
    if isinstance(x, (list, tuple)):
        return "(" + ";".join(_fmt(v) for v in x) + ")"
    if isinstance(x, str):
        return x
    return _fmt(x)


def to_json(series: Sequence[PlotSeries]) -> bytes:
    doc = {
        "schema": SCHEMA,
        "series": [
            {"series_id": s.series_id, "kind": s.kind, "x": list(s.x), "point": list(s.point),
             "lo": list(s.lo), "hi": list(s.hi), "meta": s.meta}
            for s in series
        ],
    }
    return (json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n").encode()


def to_csv(series: Sequence[PlotSeries]) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["series_id", "x", "point", "lo", "hi"])
    for s in series:
        for x, p, a, b in zip(s.x, s.point, s.lo, s.hi):
            w.writerow([s.series_id, _x_str(x), _fmt(p), _fmt(a), _fmt(b)])
    return buf.getvalue().encode()


def to_svg(series: Sequence[PlotSeries], width: int = 640, height: int = 400) -> bytes:
    """Static rendering: curves as polylines with a shaded band, everything
    else as points with bars."""
    pad = 40
    numeric = all(isinstance(x, (int, float)) for s in series for x in s.x)
    xs_all: list[float] = []
    for s in series:
        xs_all.extend(float(x) for x in s.x) if numeric else xs_all.extend(range(len(s.x)))
    ys_all = [v for s in series for v in (*s.lo, *s.hi, *s.point)]
    x0, x1 = min(xs_all), max(xs_all)
    y0, y1 = min(ys_all), max(ys_all)
    x1 = x1 if x1 > x0 else x0 + 1.0
    y1 = y1 if y1 > y0 else y0 + 1.0

    def px(x: float) -> float:
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def py(y: float) -> float:
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    palette = ["#1b6ca8", "#c0392b", "#27ae60", "#8e44ad", "#d35400", "#2c3e50"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
           f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>']
    for k, s in enumerate(series):
        col = palette[k % len(palette)]
        xv = [float(x) for x in s.x] if numeric else [float(i) + 0.1 * k for i in range(len(s.x))]
        if s.kind in ("curve", "density_overlay") and numeric:
            upper = " ".join(f"{px(x):.2f},{py(h):.2f}" for x, h in zip(xv, s.hi))
            lower = " ".join(f"{px(x):.2f},{py(l):.2f}" for x, l in reversed(list(zip(xv, s.lo))))
            out.append(f'<polygon points="{upper} {lower}" fill="{col}" fill-opacity="0.2" stroke="none"/>')
            line = " ".join(f"{px(x):.2f},{py(p):.2f}" for x, p in zip(xv, s.point))
            out.append(f'<polyline points="{line}" fill="none" stroke="{col}" stroke-width="1.5"/>')
        else:
            for x, p, lo, hi in zip(xv, s.point, s.lo, s.hi):
                out.append(f'<line x1="{px(x):.2f}" y1="{py(lo):.2f}" x2="{px(x):.2f}" y2="{py(hi):.2f}" stroke="{col}"/>')
                out.append(f'<circle cx="{px(x):.2f}" cy="{py(p):.2f}" r="3" fill="{col}"/>')
        out.append(f'<text x="{width - pad}" y="{pad + 14 * k}" font-size="11" text-anchor="end" fill="{col}">'
                   f"{_escape(s.series_id)}</text>")
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode()


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def emit(series: Sequence[PlotSeries], format: str = "json") -> bytes:
    series = list(series)
    if not series:
        raise ConfigError("nothing to emit")
    if format == "json":
        return to_json(series)
    if format == "csv":
        return to_csv(series)
    if format == "svg":
        return to_svg(series)
    raise ConfigError(f"unknown format {format!r}")


def read_json(blob: bytes) -> list[PlotSeries]:
    doc = json.loads(blob)
    if doc.get("schema") != SCHEMA:
        raise ConfigError(f"unsupported schema {doc.get('schema')!r}")
    return [PlotSeries(s["series_id"], s["kind"], tuple(s["x"]), tuple(s["point"]), tuple(s["lo"]), tuple(s["hi"]),
                       s.get("meta", {})) for s in doc["series"]]
