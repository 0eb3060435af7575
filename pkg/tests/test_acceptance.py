"""Acceptance criteria, one test per criterion.

Each check returns ``(passed, detail)``; the outcome is printed as one line
per criterion (also in the pytest terminal summary).  Running this file as a
script prints the same lines without pytest.
"""

from __future__ import annotations

import json
import math
import sys
import time
from pathlib import Path

import mpmath
import numpy as np
import pytest
from scipy import integrate as sci_integrate

sys.path.insert(0, str(Path(__file__).parent))

from generators import expected_coefficients, random_case, random_product_measure, specs_for  # noqa: E402

from gmekit import compat  # noqa: E402
from gmekit.cli import run  # noqa: E402
from gmekit.measures import (  # noqa: E402
    BinnedConditional,
    Dirac,
    DiscretePoints,
    EmpiricalJoint,
    EmpiricalMarginal,
    EmpiricalConditional,
    Interval,
    Product,
    Uniform,
    integrate,
    interaction_measure,
    normalize,
)
from gmekit.model import local_slope  # noqa: E402
from gmekit.predictive import PredictiveFamily, ippd_density, predictive_mean  # noqa: E402
from gmekit.quantities import (  # noqa: E402
    A_I,
    A_II_DOUBLEPRIME,
    A_II_PRIME,
    Layout,
    QuantitySpec,
    averaged_expectation,
    gme,
    gme_metric,
    individualized_expectation,
)
from gmekit.uncertainty import curve_band, equal_tailed, hdr, make_ensemble  # noqa: E402

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = Path(__file__).parent / "golden"
CONFIGS = ROOT / "demos" / "configs"
TOL = 1e-8

RESULTS: dict[int, tuple[bool, str]] = {}


def _record(n: int, passed: bool, detail: str) -> None:
    RESULTS[n] = (passed, detail)
    print(f"criterion {n}: {'PASS' if passed else 'FAIL'} - {detail}")


def _gap(a, b) -> float:
    a, b = np.atleast_1d(np.asarray(a, dtype=float)), np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        return math.inf
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


# --------------------------------------------------------------------------- #
# 1. linear models: effects equal their coefficients
# --------------------------------------------------------------------------- #


def check_linear_effects(n_models: int = 200, seed: int = 101):
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    worst, n_checks = 0.0, 0
    kinds_seen = set()
    for _ in range(n_models):
        case = random_case(rng, "gaussian")
        kinds_seen.add(case.schema.interest_kind)
        expected = expected_coefficients(case)
        assumptions = [A_I, A_II_PRIME] + ([A_II_DOUBLEPRIME] if case.layout.kind == "metric" else [])
        for a in assumptions:
            got = gme(case.layout, case.theta, specs_for(rng, case, a))
            worst = max(worst, float(np.max(np.abs(np.atleast_1d(got) - expected))))
            n_checks += 1
    elapsed = time.perf_counter() - t0
    ok = worst <= TOL and elapsed < 30.0
    return ok, (f"{n_models} gaussian models, {n_checks} effect vectors over kinds {sorted(kinds_seen)}, "
                f"max |effect - coefficient| = {worst:.2e} (tol {TOL:g}), {elapsed:.1f}s (limit 30s)")


# --------------------------------------------------------------------------- #
# 2. uniform interest: endpoint closed form and individualized difference
# --------------------------------------------------------------------------- #


def check_endpoint_identity(n_models: int = 100, seed: int = 202):
    rng = np.random.default_rng(seed)
    worst_cf, worst_diff = 0.0, 0.0
    for i in range(n_models):
        family = "binomial" if i % 2 == 0 else "poisson"
        policy = "separated" if rng.random() < 0.5 else "combined"
        case = random_case(rng, family, "metric", interactions=policy)
        for a in (A_I, A_II_PRIME):
            base = specs_for(rng, case, a)
            lo = float(rng.uniform(-2, 1))
            width = float(rng.uniform(0.2, 3.0))
            spec = base.with_interest(Uniform(lo, lo + width))
            quad = gme_metric(case.layout, case.theta, spec, method="quadrature")
            closed = gme_metric(case.layout, case.theta, spec, method="closed_form")
            worst_cf = max(worst_cf, _gap(closed, quad))
            unit = base.with_interest(Uniform(lo, lo + 1.0))
            eff = gme_metric(case.layout, case.theta, unit, method="quadrature")
            e_hi = individualized_expectation(case.layout, case.theta, base.with_interest(Dirac(lo + 1.0)))
            e_lo = individualized_expectation(case.layout, case.theta, base.with_interest(Dirac(lo)))
            worst_diff = max(worst_diff, _gap(e_hi - e_lo, eff))
    ok = worst_cf <= TOL and worst_diff <= TOL
    return ok, (f"{n_models} logistic/poisson models under A.I and A.II': closed form vs quadrature "
                f"max rel gap {worst_cf:.2e}; unit-width effect vs expectation difference {worst_diff:.2e} "
                f"(tol {TOL:g})")


# --------------------------------------------------------------------------- #
# 3. conditional covariates break the endpoint identity
# --------------------------------------------------------------------------- #


def conditional_counterexample():
    """Logistic model in (x, v) with v equal to x in the data; the covariate
    follows x under conditioning.  Returns (effect, endpoint difference)."""
    from conftest import main_effects_model

    model = main_effects_model("binomial", 2)
    theta = np.array([-0.5, 1.0, 1.5])
    grid = np.linspace(0.0, 1.0, 11)
    data = np.column_stack([grid, grid])
    layout = Layout.metric(model, 0)
    kernel = BinnedConditional(EmpiricalJoint.from_data(data), 0, grid)
    spec = QuantitySpec(A_II_DOUBLEPRIME, Uniform(0.0, 1.0, breakpoints=tuple(grid[1:-1])), kernel)
    effect = gme_metric(layout, theta, spec, method="quadrature")
    endpoint = (averaged_expectation(layout, theta, [1.0], spec) - averaged_expectation(layout, theta, [0.0], spec))
    return effect, endpoint


def check_conditional_counterexample():
    effect, endpoint = conditional_counterexample()
    gap = abs(effect - endpoint)
    ok = gap >= 10 * TOL
    return ok, (f"A.II'' effect {effect:.6f} vs endpoint difference {endpoint:.6f}: gap {gap:.3e} "
                f"(must be >= {10 * TOL:g})")


# --------------------------------------------------------------------------- #
# 4. established summaries: literal vs measure route
# --------------------------------------------------------------------------- #


def _compat_case(rng, family, kind):
    return random_case(rng, family, kind, n=20, interactions="combined", max_interactions=0)


def _blocks(case):
    return [case.schema.indices(c.name) for c in case.schema.columns if c.kind == "categorical"]


def _compat_pair(name, case, rng):
    layout, th, X = case.layout, case.theta, case.X
    if name == "aap":
        f = lambda r: compat.aap(layout, th, X, route=r)
    elif name == "ame":
        f = lambda r: compat.ame(layout, th, X, route=r)
    elif name == "apr":
        x = X[int(rng.integers(len(X)))]
        f = lambda r: compat.apr(layout, th, x, route=r)
    elif name == "mer":
        x = X[int(rng.integers(len(X)))]
        f = lambda r: compat.mer(layout, th, x, route=r)
    elif name == "apm":
        f = lambda r: compat.apm(layout, th, X, _blocks(case), route=r)
    elif name == "mem":
        f = lambda r: compat.mem(layout, th, X, _blocks(case), route=r)
    elif name == "predictive_comparison":
        lo = float(rng.uniform(-2, 1))
        hi = lo + float(rng.uniform(0.1, 3))
        f = lambda r: compat.predictive_comparison(layout, th, X, lo, hi, route=r)
    elif name == "kaufman":
        x = X[int(rng.integers(len(X)))]
        f = lambda r: np.array([compat.kaufman(layout, th, x, route=r).dP, compat.kaufman(layout, th, x, route=r).DeltaP])
    elif name == "ale":
        j = layout.interest[0]
        vals = np.unique(X[:, j])
        pick = np.sort(rng.choice(vals[1:], size=min(4, len(vals) - 1), replace=False)) if len(vals) > 1 else vals
        grid = [float(vals[0])] + [float(v) for v in pick]
        f = lambda r: np.array([v for _, v in compat.ale_curve(layout, th, X, grid, route=r)])
    elif name == "fame":
        h = float(rng.uniform(0.1, 2)) if layout.kind == "metric" else None
        f = lambda r: compat.fame(layout, th, X, h, route=r).value
    else:
        raise KeyError(name)
    return f("literal"), f("gme")


COMPAT_KINDS = {
    "aap": ("metric", "categorical"),
    "ame": ("metric", "categorical"),
    "apr": ("metric", "categorical"),
    "mer": ("metric", "categorical"),
    "apm": ("metric", "categorical"),
    "mem": ("metric", "categorical"),
    "predictive_comparison": ("metric",),
    "kaufman": ("metric",),
    "ale": ("metric",),
    "fame": ("metric", "categorical"),
}


def check_compat_routes(n_models: int = 50, seed: int = 303):
    rng = np.random.default_rng(seed)
    gaps = {}
    for name, kinds in COMPAT_KINDS.items():
        worst = 0.0
        for i in range(n_models):
            family = "binomial" if name == "kaufman" else ("gaussian", "binomial", "poisson")[i % 3]
            case = _compat_case(rng, family, kinds[i % len(kinds)])
            lit, via = _compat_pair(name, case, rng)
            worst = max(worst, _gap(lit, via))
        gaps[name] = worst
    ok = all(g <= TOL for g in gaps.values())
    detail = ", ".join(f"{k} {v:.1e}" for k, v in gaps.items())
    return ok, f"{n_models} models per summary, max rel gap: {detail} (tol {TOL:g})"


# --------------------------------------------------------------------------- #
# 5. HDR quality
# --------------------------------------------------------------------------- #


def check_hdr_quality():
    rng = np.random.Generator(np.random.Philox(55))
    x = rng.standard_normal(200_000)
    reg = hdr(x, 0.05)
    et = equal_tailed(x, 0.05)
    lo_err, hi_err = abs(reg.lo + 1.96), abs(reg.hi - 1.96)
    coverage = float(np.mean(reg.contains(x)))
    cov_et = float(np.mean(et.contains(x)))
    ok = lo_err <= 0.03 and hi_err <= 0.03 and coverage >= 0.95 and cov_et >= 0.95 and reg.width <= et.width
    return ok, (f"95% HDR [{reg.lo:.4f}, {reg.hi:.4f}] (endpoint errors {lo_err:.4f}, {hi_err:.4f} <= 0.03), "
                f"coverage {coverage:.5f} >= 0.95, width {reg.width:.4f} <= equal-tailed {et.width:.4f}")


# --------------------------------------------------------------------------- #
# 6. measure algebra
# --------------------------------------------------------------------------- #


def check_measure_algebra(seed: int = 606):
    rng = np.random.default_rng(seed)
    worst_mass, worst_fubini, worst_perm_disc, worst_perm_cont, worst_poly = 0.0, 0.0, 0.0, 0.0, 0.0
    for _ in range(50):
        vals = np.round(rng.normal(0, 2, 8), 1)
        w = rng.dirichlet(np.ones(8))
        disc = DiscretePoints(vals, w)
        data = np.column_stack([vals, rng.integers(0, 2, 8)])
        joint = EmpiricalJoint.from_data(data)
        a = float(rng.uniform(-2, 1))
        unif = Uniform(a, a + float(rng.uniform(0.1, 3)), n_nodes=int(rng.integers(1, 65)))
        variants = [Dirac(vals[0]), disc, unif, Product((disc, unif)), joint, EmpiricalMarginal(joint, (1,)),
                    EmpiricalConditional(joint, (1,), data[0, 1]), interaction_measure(disc, unif),
                    interaction_measure(disc, disc), normalize(disc, Interval(vals.min(), vals.max())),
                    normalize(unif, Interval(a, a + 0.05))]
        worst_mass = max(worst_mass, max(abs(m.mass() - 1.0) for m in variants))

        h = lambda x, y: np.sin(x * y) + x ** 2 * np.exp(-np.abs(y))
        both = integrate(lambda z: h(z[:, 0], z[:, 1]), Product((unif, disc)))
        xy = integrate(lambda x: np.array([integrate(lambda y: h(xx, y), disc) for xx in x]), unif)
        yx = integrate(lambda y: np.array([integrate(lambda x: h(x, yy), unif) for yy in y]), disc)
        worst_fubini = max(worst_fubini, abs(both - xy), abs(both - yx))

        m1, m2, m3 = (DiscretePoints(np.round(rng.normal(0, 1, 3), 1), rng.dirichlet(np.ones(3))) for _ in range(3))
        g = lambda z: np.cos(z) + 0.1 * z ** 3
        ref = integrate(g, interaction_measure(interaction_measure(m1, m2), m3))
        for order in ((m3, m1, m2), (m2, m3, m1), (m2, m1, m3)):
            alt = integrate(g, interaction_measure(interaction_measure(order[0], order[1]), order[2]))
            worst_perm_disc = max(worst_perm_disc, abs(alt - ref))
        c1, c2, c3 = (Uniform(*sorted(rng.uniform(-1, 2, 2))) for _ in range(3))
        ref = integrate(g, interaction_measure(interaction_measure(c1, c2), c3))
        for order in ((c3, c1, c2), (c2, c3, c1)):
            alt = integrate(g, interaction_measure(interaction_measure(order[0], order[1]), order[2]))
            worst_perm_cont = max(worst_perm_cont, abs(alt - ref))

        coefs = rng.uniform(-1, 1, 128)
        poly = np.polynomial.Polynomial(coefs)
        lo = float(rng.uniform(-1, 0))
        hi = lo + float(rng.uniform(0.1, 1.0))
        with mpmath.workdps(40):
            # exact antiderivative in extended precision
            exact = float(sum(mpmath.mpf(float(c)) * (mpmath.mpf(hi) ** (k + 1) - mpmath.mpf(lo) ** (k + 1)) / (k + 1)
                              for k, c in enumerate(coefs)) / (mpmath.mpf(hi) - mpmath.mpf(lo)))
        worst_poly = max(worst_poly, abs(integrate(poly, Uniform(lo, hi)) - exact))
    ok = (worst_mass <= 1e-12 and worst_fubini <= 1e-10 and worst_perm_disc <= 1e-12
          and worst_perm_cont <= 1e-3 and worst_poly <= 1e-10)
    return ok, (f"mass {worst_mass:.1e} (<=1e-12), Fubini {worst_fubini:.1e} (<=1e-10), permutation discrete "
                f"{worst_perm_disc:.1e} (exact) continuous {worst_perm_cont:.1e} (<=1e-3), degree-127 "
                f"{worst_poly:.1e} (<=1e-10)")


# --------------------------------------------------------------------------- #
# 7. predictive module
# --------------------------------------------------------------------------- #


def check_predictive(seed: int = 707):
    rng = np.random.default_rng(seed)
    worst_norm, worst_mean = 0.0, 0.0
    for _ in range(20):
        mu, s2 = float(rng.normal(0, 3)), float(rng.uniform(0.1, 4))
        fam = PredictiveFamily("gaussian", variance=s2)
        dens = lambda y: ippd_density(y, np.zeros(1), mu, fam)
        sd = math.sqrt(s2)
        mass = sci_integrate.quad(dens, mu - 40 * sd, mu + 40 * sd, epsabs=1e-14, limit=200)[0]
        mean = sci_integrate.quad(lambda y: y * dens(y), mu - 40 * sd, mu + 40 * sd, epsabs=1e-14, limit=200)[0]
        worst_norm = max(worst_norm, abs(mass - 1))
        worst_mean = max(worst_mean, abs(mean - float(predictive_mean(None, mu, fam))))

        lam = float(rng.uniform(0.001, 30))
        fam = PredictiveFamily("poisson")
        y = fam.support(int(lam + 40 * math.sqrt(lam) + 60))
        p = ippd_density(y, np.zeros(1), lam, fam)
        worst_norm = max(worst_norm, abs(p.sum() - 1))
        worst_mean = max(worst_mean, abs((y * p).sum() - float(predictive_mean(None, lam, fam))))

        n, q = int(rng.integers(1, 40)), float(rng.uniform(0, 1))
        fam = PredictiveFamily("binomial", trials=n)
        y = fam.support()
        p = ippd_density(y, np.zeros(1), q, fam)
        worst_norm = max(worst_norm, abs(p.sum() - 1))
        worst_mean = max(worst_mean, abs((y * p).sum() - float(predictive_mean(None, q, fam))))

    inside = True
    for _ in range(100):
        case = random_case(rng, "binomial", "metric", n=15, interactions="combined")
        k = case.model.k
        A = rng.normal(0, 0.4, (k, k))
        ens = make_ensemble(theta_hat=case.theta, cov=A @ A.T, n=400, seed=int(rng.integers(2 ** 31)))
        spec = QuantitySpec(A_I, None, random_product_measure(rng, case))
        col = case.Z[:, case.layout.interest[0]]
        grid = np.linspace(col.min() - 1, col.max() + 1, 9)
        res = curve_band(lambda th, x: averaged_expectation(case.layout, th, [x], spec), ens, grid, 0.05, "hdr")
        for _, pt, reg in res.grid:
            inside &= 0.0 < reg.lo <= reg.hi < 1.0 and 0.0 < pt < 1.0
    ok = worst_norm <= 1e-6 and worst_mean <= 1e-8 and inside
    return ok, (f"normalization {worst_norm:.1e} (<=1e-6), mean consistency {worst_mean:.1e} (<=1e-8) "
                f"over gaussian/poisson/binomial; logistic bands inside (0,1) over 100 ensembles: {inside}")


# --------------------------------------------------------------------------- #
# 8. end-to-end golden runs
# --------------------------------------------------------------------------- #


def _run_config(name: str, out: Path) -> dict:
    cfg = json.loads((CONFIGS / f"{name}.json").read_text())
    return run(cfg, CONFIGS, out)


def check_golden_runs(tmp: Path):
    t0 = time.perf_counter()
    mismatches = []
    for name in ("clinical", "red_cards"):
        out = tmp / name
        _run_config(name, out)
        for stem in ("summary", "series"):
            produced = (out / f"{stem}.json").read_bytes()
            golden = (GOLDEN / f"{name}_{stem}.json").read_bytes()
            if produced != golden:
                mismatches.append(f"{name}_{stem}")
    summary = json.loads((tmp / "red_cards" / "summary.json").read_text())
    from gmekit.datasets import red_cards_like

    truth = red_cards_like().truth["slope"]
    parts = []
    comparable = True
    for res in summary["results"]:
        if not res["id"].startswith("effect_"):
            continue
        point, sd = res["result"]["point"], res["result"]["meta"]["sd"]
        z = abs(point - truth) / sd
        comparable &= z <= 2.0
        parts.append(f"{res['meta']['model']} {point:.5f} ({z:.2f} sd)")
    elapsed = time.perf_counter() - t0
    ok = not mismatches and comparable and elapsed < 120
    return ok, (f"goldens byte-identical: {not mismatches}{' ' + str(mismatches) if mismatches else ''}; "
                f"effects vs true slope {truth:.5f}: {', '.join(parts)}; {elapsed:.1f}s (limit 120s)")


# --------------------------------------------------------------------------- #
# 9. derivative oracle
# --------------------------------------------------------------------------- #


def check_derivative_oracle(n_pairs: int = 1000, seed: int = 909):
    rng = np.random.default_rng(seed)
    worst = 0.0
    families = ("gaussian", "binomial", "poisson")
    for i in range(n_pairs):
        case = random_case(rng, families[i % 3], n=5)
        model = case.model
        x = case.X[int(rng.integers(len(case.X)))].astype(float).copy()
        metric_slots = [j for j in range(model.p) if not any(
            j in case.schema.indices(c.name) for c in case.schema.columns if c.kind == "categorical")]
        if metric_slots:
            j = int(rng.choice(metric_slots))
            x[j] = float(rng.uniform(-2, 2))
        else:
            j = int(rng.integers(model.p))
        beta = case.theta[: model.n_beta]

        def g_exact(t):
            xs = [mpmath.mpf(float(v)) for v in x]
            xs[j] = t
            eta = mpmath.mpf(0)
            for term in model.terms:
                prod = mpmath.mpf(1)
                for f in term.factors:
                    prod *= xs[f]
                eta += mpmath.mpf(float(beta[term.coef])) * prod
            if model.family == "gaussian-identity":
                return eta
            if model.family == "binomial-logit":
                return 1 / (1 + mpmath.exp(-eta))
            return mpmath.exp(eta)

        with mpmath.workdps(30):
            fd = float(mpmath.diff(g_exact, mpmath.mpf(float(x[j]))))
        got = float(local_slope(model, case.theta, x, j))
        worst = max(worst, abs(got - fd) / max(abs(fd), 1e-12))
    ok = worst <= 1e-6
    return ok, f"{n_pairs} (model, x) pairs with interactions, max relative error {worst:.2e} (tol 1e-6)"


# --------------------------------------------------------------------------- #
# pytest entry points
# --------------------------------------------------------------------------- #


def _assert(n, result):
    passed, detail = result
    _record(n, passed, detail)
    assert passed, detail


def test_criterion_1_linear_effects_equal_coefficients():
    _assert(1, check_linear_effects())


def test_criterion_2_endpoint_closed_form():
    _assert(2, check_endpoint_identity())


def test_criterion_3_conditional_counterexample():
    _assert(3, check_conditional_counterexample())


def test_criterion_4_compat_dual_routes():
    _assert(4, check_compat_routes())


def test_criterion_5_hdr_quality():
    _assert(5, check_hdr_quality())


def test_criterion_6_measure_algebra():
    _assert(6, check_measure_algebra())


def test_criterion_7_predictive():
    _assert(7, check_predictive())


def test_criterion_8_golden_runs(tmp_path):
    _assert(8, check_golden_runs(tmp_path))


def test_criterion_9_derivative_oracle():
    _assert(9, check_derivative_oracle())


if __name__ == "__main__":
    import tempfile

    checks = [check_linear_effects, check_endpoint_identity, check_conditional_counterexample, check_compat_routes,
              check_hdr_quality, check_measure_algebra, check_predictive,
              lambda: check_golden_runs(Path(tempfile.mkdtemp())), check_derivative_oracle]
    for n, chk in enumerate(checks, start=1):
        _record(n, *chk())
