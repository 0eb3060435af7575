"""Command-line interface ``gme-kit``.

Every subcommand is a thin front end to :func:`run`, which executes a JSON
run configuration::

    {
      "data": "data.csv",
      "schema": {...},                      # or a path to a JSON file
      "models": {"logit": {"fit": {"family": "binomial", "outcome": "y"}}},
      "seed": 0, "n_draws": 1000, "alpha": 0.05, "region": "hdr",
      "requests": [{"id": "effect", "model": "logit", "target": "gme",
                    "spec": {"assumption": "A.II'", "covariate_measure": "auto"}}],
      "output": {"dir": "out", "formats": ["json", "csv"]}
    }

Relative paths are resolved against the configuration file.  Exit codes: 0
success, 2 configuration error, 3 numerical error, 4 data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import compat
from .errors import ConfigError, DataError, GmeError, NumericError
from .fitting import FitResult, fit
from .measures import Dirac, EmpiricalJoint, EmpiricalMarginal, Measure, measure_from_spec
from .model import (
    ParametricModel,
    RegressorSchema,
    compile_schema,
    encode_rows,
    model_from_json,
    model_from_schema,
    model_to_json,
    theta_names,
)
from .predictive import PredictiveFamily, marginal_predictive_curve
from .quantities import (
    A_II_DOUBLEPRIME,
    Layout,
    QuantitySpec,
    auto_covariate_measure,
    averaged_expectation,
    canonical_assumption,
    gme,
    individualized_expectation,
    interest_grid,
    layout_from_schema,
    slope_of_expectation,
)
from .report import PlotSeries, emit, series_from_result, standardized_quantity, z_scale
from .uncertainty import QuantityResult, ThetaEnsemble, UncertaintyRegion, estimate, make_ensemble, curve_band

log = logging.getLogger("gmekit")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_DATA = 0, 2, 3, 4


# --------------------------------------------------------------------------- #
# Loading
# --------------------------------------------------------------------------- #


def read_csv(path: Path) -> dict[str, list[str]]:
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    if len(rows) < 2:
        raise DataError(f"{path} has no data rows")
    header = [h.strip() for h in rows[0]]
    cols: dict[str, list[str]] = {h: [] for h in header}
    for r, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DataError(f"{path}:{r}: expected {len(header)} fields, found {len(row)}")
        for h, v in zip(header, row):
            cols[h].append(v.strip())
    return cols


def _numeric(cols: Mapping[str, list[str]], name: str) -> np.ndarray:
    if name not in cols:
        raise DataError(f"data lack column {name!r}")
    try:
        arr = np.array([float(v) for v in cols[name]])
    except ValueError as exc:
        raise DataError(f"column {name!r}: {exc}") from None
    if not np.all(np.isfinite(arr)):
        raise DataError(f"column {name!r} has non-finite values")
    return arr


def _load_json(obj: Any, base: Path) -> Any:
    if isinstance(obj, str):
        path = base / obj
        try:
            return json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return obj


@dataclass
class FittedModel:
    name: str
    model: ParametricModel
    theta: np.ndarray
    cov: np.ndarray | None
    ensemble: ThetaEnsemble
    offset: np.ndarray | None
    outcome: np.ndarray | None
    info: dict = field(default_factory=dict)


def _offset_values(spec: Any, cols: Mapping[str, list[str]]) -> np.ndarray | None:
    if spec is None:
        return None
    if isinstance(spec, (int, float)):
        return np.full(len(next(iter(cols.values()))), float(spec))
    if isinstance(spec, str):
        if spec.startswith("log:"):
            vals = _numeric(cols, spec[4:])
            if np.any(vals <= 0):
                raise DataError(f"log offset needs positive values in {spec[4:]!r}")
            return np.log(vals)
        return _numeric(cols, spec)
    raise ConfigError(f"malformed offset spec {spec!r}")


def build_model(name: str, mspec: Mapping[str, Any], schema: RegressorSchema, X: np.ndarray,
                cols: Mapping[str, list[str]], cfg: Mapping[str, Any], base: Path) -> FittedModel:
    seed = int(cfg.get("seed", 0))
    n_draws = int(cfg.get("n_draws", 1000))
    if "fit" in mspec:
        f = mspec["fit"]
        try:
            family = f["family"]
            outcome_name = f["outcome"]
        except KeyError as exc:
            raise ConfigError(f"model {name!r}: fit needs {exc}") from None
        model = model_from_schema(schema, family)
        y = _numeric(cols, outcome_name)
        trials = _numeric(cols, f["trials"]) if f.get("trials") else None
        offset = _offset_values(f.get("offset"), cols)
        res = fit(model, X, y, trials=trials, offset=offset)
        theta, cov = res.theta, res.cov
        info = {"iterations": res.iterations, "deviance": res.deviance, "n": len(y)}
        ens = make_ensemble(theta_hat=theta, cov=cov, n=n_draws, seed=seed)
        return FittedModel(name, model, theta, cov, ens, offset, y, info)
    if "json" in mspec:
        doc = _load_json(mspec["json"], base)
        model, theta, cov = model_from_json(doc, p=schema.p)
        offset = _offset_values(mspec.get("offset"), cols)
        if doc.get("draws_file"):
            ens = make_ensemble(base / doc["draws_file"])
            if ens.k != model.k:
                raise ConfigError(f"draws file has {ens.k} columns, model expects {model.k}")
        elif cov is not None:
            ens = make_ensemble(theta_hat=theta, cov=cov, n=n_draws, seed=seed)
        else:
            ens = make_ensemble(theta_hat=theta, cov=np.zeros((model.k, model.k)), n=n_draws, seed=seed)
        return FittedModel(name, model, theta, cov, ens, offset, None, {})
    raise ConfigError(f"model {name!r} needs 'fit' or 'json'")


# --------------------------------------------------------------------------- #
# Specs
# --------------------------------------------------------------------------- #


def _categorical_groups(schema: RegressorSchema) -> list[tuple[int, ...]]:
    return [schema.indices(c.name) for c in schema.columns if c.kind == "categorical"]


def _measure(spec: Any, layout: Layout, Z: np.ndarray, coords: Sequence[int]) -> Measure:
    """Measure over ``coords``; empirical specs draw on those columns of
    ``Z``."""
    return measure_from_spec(spec, Z[:, list(coords)])


def build_spec(raw: Mapping[str, Any], layout: Layout, Z: np.ndarray, schema: RegressorSchema) -> QuantitySpec:
    try:
        assumption = canonical_assumption(raw["assumption"])
    except KeyError:
        raise ConfigError("quantity spec needs an 'assumption'") from None
    interactions = raw.get("interactions", "combined")
    im = raw.get("interest_measure")
    if im == "auto":
        interest_mu: Measure | None = EmpiricalMarginal(EmpiricalJoint.from_data(Z), layout.rest) if layout.rest \
            else EmpiricalJoint.from_data(Z)
    elif im is None:
        interest_mu = None
    else:
        coords = layout.interest[:1] if layout.kind == "mixed" else layout.interest
        interest_mu = _measure(im, layout, Z, coords)
    cm = raw.get("covariate_measure", "auto")
    cov: Any
    if not layout.rest:
        cov = None
    elif cm == "auto":
        groups = [g for g in _categorical_groups(schema) if not set(g) & set(layout.interest)]
        cov = auto_covariate_measure(layout, Z, assumption, groups)
    elif assumption == A_II_DOUBLEPRIME:
        raise ConfigError("under A.II'' the covariate measure must be 'auto' (exact empirical conditional)")
    else:
        cov = _measure(cm, layout, Z, layout.rest)
    partition = raw.get("partition")
    return QuantitySpec(assumption, interest_mu, cov, interactions, partition)


# --------------------------------------------------------------------------- #
# Requests
# --------------------------------------------------------------------------- #


def _labels(layout: Layout, schema: RegressorSchema) -> tuple[str, ...]:
    if layout.labels:
        return layout.labels
    return ("effect",)


def _region_kind(req: Mapping[str, Any], cfg: Mapping[str, Any]) -> str:
    return req.get("region", cfg.get("region", "hdr"))


def _grid_from(raw: Any) -> list[float]:
    if isinstance(raw, Mapping):
        return list(np.linspace(float(raw["from"]), float(raw["to"]), int(raw["n"])))
    return [float(v) for v in raw]


def run_request(req: Mapping[str, Any], ctx: dict) -> tuple[dict, list[PlotSeries]]:
    cfg, schema = ctx["cfg"], ctx["schema"]
    rid = str(req.get("id", f"request{ctx['index']}"))
    mname = req.get("model", next(iter(ctx["models"])))
    if mname not in ctx["models"]:
        raise ConfigError(f"request {rid!r} references unknown model {mname!r}")
    fm: FittedModel = ctx["models"][mname]
    target = req.get("target", "gme")
    alpha = float(req.get("alpha", cfg.get("alpha", 0.05)))
    kind = _region_kind(req, cfg)
    raw_spec = req.get("spec", {"assumption": "A.II'"})
    interactions = raw_spec.get("interactions", "combined")
    layout = layout_from_schema(schema, fm.model, interactions, offset_coord=fm.offset is not None)
    Z = layout.extend(ctx["X"], fm.offset)
    spec = build_spec(raw_spec, layout, Z, schema)
    ens = fm.ensemble
    series: list[PlotSeries] = []
    meta = {"model": mname, "target": target, "seed": int(cfg.get("seed", 0)), "n_draws": ens.n_draws}

    if target == "gme":
        res = estimate(lambda th: gme(layout, th, spec), ens, alpha, kind, vectorized=True, keep_draws=False,
                       labels=_labels(layout, schema) if spec.partition is None else
                       tuple(f"[{a:g},{b:g}]" for a, b in spec.partition))
        series.append(series_from_result(f"{rid}", res, "forest", {"model": mname}))
    elif target == "e":
        res = estimate(lambda th: individualized_expectation(layout, th, spec), ens, alpha, kind, vectorized=True,
                       keep_draws=False)
        series.append(PlotSeries(rid, "points_with_bars", (mname,), (float(res.point),), (res.regions[0].lo,),
                                 (res.regions[0].hi,), {"model": mname}))
    elif target in ("g_avg", "s_bar"):
        fn = averaged_expectation if target == "g_avg" else slope_of_expectation
        if layout.kind == "categorical":
            grid = [tuple(v) for v in interest_grid(layout)]
            if target == "s_bar":
                grid = grid[1:]
        else:
            if "grid" not in req:
                raise ConfigError(f"request {rid!r}: a metric curve needs a 'grid'")
            grid = _grid_from(req["grid"])
        res = curve_band(lambda th, x: fn(layout, th, x, spec), ens, grid, alpha, kind)
        skind = "points_with_bars" if layout.kind == "categorical" else "curve"
        s = series_from_result(rid, res, skind, {"model": mname, "target": target})
        if layout.kind == "categorical":
            col = schema.column(schema.interest[0])
            names = ((col.reference,) if target == "g_avg" else ()) + tuple(col.dummy_levels)
            s = PlotSeries(s.series_id, s.kind, names, s.point, s.lo, s.hi, s.meta)
        series.append(s)
    elif target == "compat":
        res = _compat_request(req, layout, fm, ctx, alpha, kind, meta)
        series.append(series_from_result(rid, res, "forest", {"model": mname, "kind": req.get("kind")}))
    elif target == "ippd":
        res, overlay = _ippd_request(req, layout, fm, Z, schema, alpha, kind, rid)
        series.extend(overlay)
    else:
        raise ConfigError(f"request {rid!r}: unknown target {target!r}")
    out = {"id": rid, "meta": meta, "result": res.to_dict()}
    return out, series


def _compat_request(req, layout: Layout, fm: FittedModel, ctx, alpha, kind, meta) -> QuantityResult:
    X = ctx["X"]
    ck = req.get("kind")
    groups = _categorical_groups(ctx["schema"])
    th_hat = fm.theta
    if layout.overridden or layout.offset_coord:
        raise ConfigError("compat requests need a model without offsets and combined interactions")

    def call(th, route):
        if ck == "aap":
            return compat.aap(layout, th, X, route=route)
        if ck == "ame":
            return compat.ame(layout, th, X, route=route)
        if ck in ("apr", "mer"):
            x_rep = req.get("x_rep")
            if x_rep is None:
                raise ConfigError(f"{ck} needs 'x_rep'")
            return getattr(compat, ck)(layout, th, x_rep, route=route)
        if ck in ("apm", "mem"):
            return getattr(compat, ck)(layout, th, X, groups, req.get("policy", "proportions"), route=route)
        if ck == "apc":
            return compat.predictive_comparison(layout, th, X, float(req["u_lo"]), float(req["u_hi"]), route=route)
        if ck == "kaufman":
            return compat.kaufman(layout, th, req["x_ref"], req.get("coef_index"), route=route).DeltaP
        if ck == "ale":
            pts = compat.ale_curve(layout, th, X, req["z_grid"], route=route)
            return np.stack([np.asarray(v) for _, v in pts])
        if ck == "fame":
            return compat.fame(layout, th, X, req.get("h"), route=route).value
        raise ConfigError(f"unknown compat kind {ck!r}")

    lit = np.asarray(call(th_hat, "literal"), dtype=float)
    via = np.asarray(call(th_hat, "gme"), dtype=float)
    meta["dual_route_max_gap"] = float(np.max(np.abs(lit - via)))
    meta["kind"] = ck
    return estimate(lambda th: call(th, "literal"), fm.ensemble, alpha, kind, vectorized=True, keep_draws=False)


def _family_for(fm: FittedModel, req: Mapping[str, Any]) -> PredictiveFamily:
    fam = fm.model.family.split("-")[0]
    if fam == "gaussian":
        if fm.model.n_aux:
            return PredictiveFamily("gaussian", variance_index=fm.model.n_beta)
        return PredictiveFamily("gaussian", variance=float(req["variance"]))
    if fam == "binomial":
        return PredictiveFamily("binomial", trials=int(req.get("trials", 1)))
    return PredictiveFamily("poisson")


def _ippd_request(req, layout: Layout, fm: FittedModel, Z, schema, alpha, kind, rid):
    blocks = req.get("e_specs")
    if not blocks or len(blocks) < 2:
        raise ConfigError("an ippd request needs two or more 'e_specs'")
    fam = _family_for(fm, req)
    if "y_grid" not in req:
        raise ConfigError("an ippd request needs a 'y_grid'")
    y_grid = _grid_from(req["y_grid"])
    overlay = []
    points = []
    for b in blocks:
        spec = build_spec(b["spec"], layout, Z, schema)
        curve = marginal_predictive_curve(y_grid, fm.ensemble, lambda th, spec=spec: individualized_expectation(
            layout, th, spec), fam, alpha, kind)
        label = str(b.get("label", f"spec{len(overlay)}"))
        s = series_from_result(f"{rid}:{label}", curve, "density_overlay", {"e_mean": curve.meta["e_mean"]})
        overlay.append(s)
        points.append(curve.meta["e_mean"])
    res = QuantityResult(np.asarray(points), (), None, None, tuple(str(b.get("label", i)) for i, b in enumerate(blocks)),
                         {"family": fam.family})
    return res, overlay


# --------------------------------------------------------------------------- #
# Run
# --------------------------------------------------------------------------- #


def _atomic_write(path: Path, blob: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    with os.fdopen(fd, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)


def _dumps(obj: Any) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n").encode()


def run(config: Mapping[str, Any], base: Path | str = ".", out_dir: Path | str | None = None) -> dict:
    """Execute a run configuration and write its outputs.

    Returns the summary document (also written as ``summary.json``).
    """
    base = Path(base)
    cfg = dict(config)
    if "data" not in cfg:
        raise ConfigError("configuration needs 'data'")
    schema = compile_schema(_load_json(cfg.get("schema"), base) or {})
    cols = read_csv(base / cfg["data"])
    records = [dict(zip(cols, vals)) for vals in zip(*cols.values())]
    X = encode_rows(schema, records)
    models_raw = cfg.get("models") or ({"model": cfg["model"]} if "model" in cfg else None)
    if not models_raw:
        raise ConfigError("configuration needs 'models' or 'model'")
    models = {name: build_model(name, m, schema, X, cols, cfg, base) for name, m in models_raw.items()}
    log.info("seed=%s n_draws=%s quadrature_nodes=64 rows=%d", cfg.get("seed", 0), cfg.get("n_draws", 1000), len(X))
    ctx = {"cfg": cfg, "schema": schema, "X": X, "models": models}
    outputs, series = [], []
    for i, req in enumerate(cfg.get("requests", [])):
        ctx["index"] = i
        try:
            out, ser = run_request(req, ctx)
        except GmeError as exc:
            raise type(exc)(f"request {i} ({req.get('id', '?')}): {exc}") from exc
        outputs.append(out)
        series.extend(ser)
        log.info("request %d (%s) done", i, out["id"])
    summary = {
        "seed": int(cfg.get("seed", 0)),
        "n_draws": int(cfg.get("n_draws", 1000)),
        "models": {n: {"family": m.model.family, "theta_hat": m.theta.tolist(), "names": theta_names(m.model),
                       "ensemble": m.ensemble.provenance, **m.info} for n, m in models.items()},
        "results": outputs,
    }
    out_cfg = cfg.get("output", {})
    target_dir = Path(out_dir) if out_dir is not None else base / out_cfg.get("dir", "out")
    _atomic_write(target_dir / "summary.json", _dumps(summary))
    for out in outputs:
        _atomic_write(target_dir / f"{out['id']}.json", _dumps(out))
    if series:
        for fmt in out_cfg.get("formats", ["json", "csv"]):
            _atomic_write(target_dir / f"series.{fmt}", emit(series, fmt))
    return summary


# --------------------------------------------------------------------------- #
# Subcommands
# --------------------------------------------------------------------------- #


def _read_config(path: str) -> tuple[dict, Path]:
    p = Path(path)
    try:
        return json.loads(p.read_text()), p.parent
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON ({exc})") from None


def _json_arg(text: str | None) -> Any:
    if text is None:
        return None
    if text.startswith("@"):
        return json.loads(Path(text[1:]).read_text())
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON argument: {exc}") from None


def _base_config(args) -> dict:
    schema = _json_arg(args.schema)
    if args.model_json:
        model = {"json": str(Path(args.model_json).resolve())}
        if getattr(args, "offset", None):
            model["offset"] = args.offset
    elif args.family:
        model = {"fit": {"family": args.family, "outcome": args.outcome}}
        if args.trials:
            model["fit"]["trials"] = args.trials
        if args.offset:
            model["fit"]["offset"] = args.offset
    else:
        raise ConfigError("need --model or --family/--outcome")
    return {"data": str(Path(args.data).resolve()), "schema": schema, "models": {"model": model},
            "seed": args.seed, "n_draws": args.n_draws, "alpha": args.alpha, "region": args.region,
            "output": {"dir": str(Path(args.out).resolve()), "formats": args.formats.split(",")}}


def _print(doc: Any) -> None:
    sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def cmd_fit(args) -> int:
    schema = compile_schema(_json_arg(args.schema))
    cols = read_csv(Path(args.data))
    records = [dict(zip(cols, vals)) for vals in zip(*cols.values())]
    X = encode_rows(schema, records)
    model = model_from_schema(schema, args.family)
    y = _numeric(cols, args.outcome)
    trials = _numeric(cols, args.trials) if args.trials else None
    res: FitResult = fit(model, X, y, trials=trials, offset=_offset_values(args.offset, cols))
    doc = model_to_json(model, res.theta, res.cov)
    doc["fit"] = {"iterations": res.iterations, "deviance": res.deviance}
    blob = _dumps(doc)
    if args.out:
        _atomic_write(Path(args.out), blob)
    else:
        sys.stdout.write(blob.decode())
    return EXIT_OK


def _single_request(args, req: dict) -> int:
    cfg = _base_config(args)
    req.setdefault("id", args.id)
    req["model"] = "model"
    cfg["requests"] = [req]
    summary = run(cfg, ".", cfg["output"]["dir"])
    _print(summary["results"][0])
    return EXIT_OK


def cmd_quantity(args) -> int:
    return _single_request(args, {"target": args.target, "spec": _json_arg(args.spec)})


def cmd_band(args) -> int:
    req = {"target": args.target, "spec": _json_arg(args.spec)}
    if args.grid:
        req["grid"] = _json_arg(args.grid)
    return _single_request(args, req)


def cmd_compat(args) -> int:
    req = {"target": "compat", "kind": args.kind, "spec": {"assumption": "A.II'"}}
    for key in ("x_rep", "x_ref", "z_grid"):
        val = getattr(args, key)
        if val is not None:
            req[key] = _json_arg(val)
    for key in ("u_lo", "u_hi", "h"):
        val = getattr(args, key)
        if val is not None:
            req[key] = val
    if args.policy:
        req["policy"] = args.policy
    return _single_request(args, req)


def cmd_ippd(args) -> int:
    specs = [_json_arg(s) for s in args.e_spec]
    blocks = [{"label": s.get("label", f"spec{i}"), "spec": s.get("spec", s)} for i, s in enumerate(specs)]
    req = {"target": "ippd", "e_specs": blocks, "y_grid": _json_arg(args.y_grid)}
    if args.variance is not None:
        req["variance"] = args.variance
    return _single_request(args, req)


def cmd_standardize(args) -> int:
    doc = json.loads(Path(args.result).read_text())
    raw = doc.get("result", doc)
    regions = tuple(UncertaintyRegion(r["kind"], r["alpha"], tuple(tuple(iv) for iv in r["intervals"]))
                    for r in raw.get("regions", []))
    grid = None
    if raw.get("grid"):
        grid = tuple((g["x"], g["point"], tuple(UncertaintyRegion(r["kind"], r["alpha"],
                      tuple(tuple(iv) for iv in r["intervals"])) for r in g["regions"])) for g in raw["grid"])
        grid = tuple((x, p, r[0] if len(r) == 1 else r) for x, p, r in grid)
    res = QuantityResult(np.asarray(raw["point"], dtype=float) if isinstance(raw["point"], list) else raw["point"],
                         regions, None, grid, tuple(raw["labels"]) if raw.get("labels") else None, raw.get("meta", {}))
    window = tuple(_json_arg(args.window)) if args.window else None
    out = standardized_quantity(res, args.sd_y, window, args.center, outcome=args.outcome_name)
    blob = _dumps({"result": out.to_dict()})
    if args.out:
        _atomic_write(Path(args.out), blob)
    else:
        sys.stdout.write(blob.decode())
    return EXIT_OK


def cmd_run(args) -> int:
    cfg, base = _read_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.n_draws is not None:
        cfg["n_draws"] = args.n_draws
    summary = run(cfg, base, args.out)
    sys.stdout.write(f"{len(summary['results'])} request(s) completed\n")
    return EXIT_OK


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="CSV file with a header row")
    p.add_argument("--schema", required=True, help="schema JSON (inline or @file)")
    p.add_argument("--model", dest="model_json", help="model JSON document")
    p.add_argument("--family", help="fit a model of this family instead of --model")
    p.add_argument("--outcome", help="outcome column when fitting")
    p.add_argument("--trials", help="binomial trials column")
    p.add_argument("--offset", help="offset column, or log:<column>")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-draws", type=int, default=1000)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--region", default="hdr", choices=["hdr", "hdr_multimodal", "equal_tailed"])
    p.add_argument("--out", default="gmekit-out", help="output directory")
    p.add_argument("--formats", default="json,csv")
    p.add_argument("--id", default="result")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gme-kit", description="Measure-weighted effect sizes for regression models.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model and write its JSON document")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--family", required=True)
    p.add_argument("--outcome", required=True)
    p.add_argument("--trials")
    p.add_argument("--offset")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("quantity", help="point estimate and region of one quantity")
    _common(p)
    p.add_argument("--target", default="gme", choices=["gme", "e"])
    p.add_argument("--spec", required=True, help="quantity spec JSON")
    p.set_defaults(func=cmd_quantity)

    p = sub.add_parser("band", help="curve of averaged expectation or slope with bands")
    _common(p)
    p.add_argument("--target", default="g_avg", choices=["g_avg", "s_bar"])
    p.add_argument("--spec", required=True)
    p.add_argument("--grid", help="JSON list or {from,to,n}")
    p.set_defaults(func=cmd_band)

    p = sub.add_parser("compat", help="established effect summaries")
    _common(p)
    p.add_argument("--kind", required=True, choices=["aap", "ame", "apr", "mer", "apm", "mem", "apc", "kaufman",
                                                      "ale", "fame"])
    p.add_argument("--x-rep", dest="x_rep")
    p.add_argument("--x-ref", dest="x_ref")
    p.add_argument("--z-grid", dest="z_grid")
    p.add_argument("--u-lo", dest="u_lo", type=float)
    p.add_argument("--u-hi", dest="u_hi", type=float)
    p.add_argument("--h", type=float)
    p.add_argument("--policy", choices=["proportions", "strict"])
    p.set_defaults(func=cmd_compat)

    p = sub.add_parser("ippd", help="individualized predictive distributions")
    _common(p)
    p.add_argument("--e-spec", action="append", required=True, help="repeat for each curve")
    p.add_argument("--y-grid", required=True)
    p.add_argument("--variance", type=float)
    p.set_defaults(func=cmd_ippd)

    p = sub.add_parser("standardize", help="standardize a stored result")
    p.add_argument("result")
    p.add_argument("--sd-y", dest="sd_y", type=float, required=True)
    p.add_argument("--window", help="JSON [lo, hi]")
    p.add_argument("--center", type=float)
    p.add_argument("--outcome-name", default="Y")
    p.add_argument("--out")
    p.set_defaults(func=cmd_standardize)

    p = sub.add_parser("run", help="execute a run configuration")
    p.add_argument("config")
    p.add_argument("--out", help="override the output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-draws", type=int)
    p.set_defaults(func=cmd_run)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except NumericError as exc:
        sys.stderr.write(f"numeric error: {exc}\n")
        return EXIT_NUMERIC
    except DataError as exc:
        sys.stderr.write(f"data error: {exc}\n")
        return EXIT_DATA
    except (KeyError, TypeError, ValueError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
