"""Reduced-precision matmul noise toolkit.

Emulates reduction-order-dependent matrix multiplication at float16/bfloat16
precision and evaluates the statistics of the resulting noise: global noise
level, analytic and empirical prediction-flip rates, expected Jensen-Shannon
divergence, and the noise covariance structure against a matched i.i.d.
Gaussian null baseline.
"""

import json as _json

from fpnoise._core import (
    CovarianceSummary,
    ExperimentConfig,
    FlipStats,
    IidNullResult,
    MatmulSpec,
    NoiseReport,
    NoiseSample,
    PrecisionFormat,
    ReductionSchedule,
    dot_scheduled,
    empirical_flip_rate,
    estimate_covariance,
    estimate_sigma,
    expected_js,
    js_divergence,
    logit_margin,
    matmul_batched_row0,
    matmul_single,
    normal_cdf,
    predicted_flip_rate,
    quantize,
    quantize_vector,
    reduction_order,
    regenerate_trial,
    run_experiment,
    simulate_iid_null,
    softmax,
)

__version__ = "0.1.0"


def report_dict(report: NoiseReport) -> dict:
    """The report's JSON document as a python dict."""
    return _json.loads(report.to_json())


__all__ = [
    "CovarianceSummary",
    "ExperimentConfig",
    "FlipStats",
    "IidNullResult",
    "MatmulSpec",
    "NoiseReport",
    "NoiseSample",
    "PrecisionFormat",
    "ReductionSchedule",
    "dot_scheduled",
    "empirical_flip_rate",
    "estimate_covariance",
    "estimate_sigma",
    "expected_js",
    "js_divergence",
    "logit_margin",
    "matmul_batched_row0",
    "matmul_single",
    "normal_cdf",
    "predicted_flip_rate",
    "quantize",
    "quantize_vector",
    "reduction_order",
    "regenerate_trial",
    "report_dict",
    "run_experiment",
    "simulate_iid_null",
    "softmax",
]
