"""Measure-weighted expectations, slopes and effect sizes for fitted
regression models."""

from __future__ import annotations

from .errors import (
    ConfigError,
    ConvergenceError,
    DataError,
    DomainError,
    GmeError,
    MeasureError,
    NumericError,
    SeparationError,
)
from .fitting import FitResult, fit
from .measures import (
    BinnedConditional,
    CategoricalBasis,
    DeclaredConditional,
    Dirac,
    DiscretePoints,
    EmpiricalConditional,
    EmpiricalJoint,
    EmpiricalMarginal,
    ExactConditional,
    FinitePoints,
    InteractionProduct,
    Interval,
    Measure,
    Product,
    ProductSet,
    Uniform,
    empirical,
    integrate,
    interaction_measure,
    normalize,
    product_measure,
)
from .model import (
    ParametricModel,
    RegressorSchema,
    Term,
    compile_schema,
    decode,
    encode,
    encode_rows,
    expectation,
    local_slope,
    model_from_json,
    model_from_schema,
    model_to_json,
)
from .predictive import PredictiveFamily, ippd_density, marginal_predictive_curve, predictive_mean
from .quantities import (
    A_I,
    A_II_DOUBLEPRIME,
    A_II_PRIME,
    Layout,
    QuantitySpec,
    auto_covariate_measure,
    averaged_expectation,
    build_interaction_vectors,
    gme,
    gme_categorical,
    gme_metric,
    gme_mixed,
    individualized_expectation,
    layout_from_schema,
    slope_of_expectation,
)
from .report import PlotSeries, emit, series_from_result, standardized_quantity, z_inverse, z_scale
from .uncertainty import (
    QuantityResult,
    ThetaEnsemble,
    UncertaintyRegion,
    curve_band,
    equal_tailed,
    estimate,
    hdr,
    make_ensemble,
    normal_ensemble,
    region,
)

__version__ = "0.1.0"
