"""How the choice of measure changes an effect size.

A logistic model with one regressor of interest ``x`` and one covariate
``w``.  The same fitted coefficients give different generalized marginal
effects depending on where ``x`` is averaged (a point, a window, the
observed values) and how ``w`` is averaged.  The compatibility layer shows
that familiar summaries are special cases.
"""

from __future__ import annotations

import numpy as np

from gmekit import (
    A_I,
    A_II_PRIME,
    Dirac,
    EmpiricalJoint,
    EmpiricalMarginal,
    Layout,
    QuantitySpec,
    Uniform,
    compat,
    empirical,
    gme,
    model_from_schema,
    compile_schema,
)


def main() -> None:
    rng = np.random.default_rng(1)
    X = np.column_stack([rng.uniform(-2, 2, 300), rng.normal(size=300)])
    schema = compile_schema({"columns": [{"name": "x", "kind": "metric"}, {"name": "w", "kind": "metric"}],
                             "interest": "x"})
    model = model_from_schema(schema, "binomial")
    theta = np.array([-0.5, 1.2, 0.8])
    L = Layout.metric(model, 0)
    w_marg = EmpiricalMarginal(EmpiricalJoint.from_data(X), (1,))

    rows = [
        ("slope at x=0, w=0", QuantitySpec(A_I, Dirac(0.0), Dirac(0.0))),
        ("x uniform on [-2,2], w=0", QuantitySpec(A_I, Uniform(-2, 2), Dirac(0.0))),
        ("x uniform on [-2,2], w observed", QuantitySpec(A_I, Uniform(-2, 2), empirical(X[:, [1]]))),
        ("x uniform on [0,1], w observed", QuantitySpec(A_II_PRIME, Uniform(0, 1), w_marg)),
        ("x observed, w observed", QuantitySpec(A_II_PRIME, empirical(X[:, [0]]), w_marg)),
    ]
    for label, spec in rows:
        print(f"{label:>34}: {float(gme(L, theta, spec)):.4f}")

    print("\nfamiliar summaries")
    print(f"{'average marginal effect':>34}: {compat.ame(L, theta, X):.4f}")
    print(f"{'predictive comparison 0 -> 1':>34}: {compat.predictive_comparison(L, theta, X, 0, 1):.4f}")
    print(f"{'forward marginal effect, h=1':>34}: {compat.fame(L, theta, X, 1.0).value:.4f}")


if __name__ == "__main__":
    main()
