"""Dual ascent drivers."""
from .bundle import run_aggregated_bundle, run_bundle
from .config import METHODS, OptimizerConfig, Trace, TraceRow, default_config
from .coordinate import NotApplicableError, run_coordinate_ascent
from .nsmr import run_nsmr
from .quasi import run_quasi_concave
from .subgradient import run_subgradient

__all__ = [
    "METHODS",
    "OptimizerConfig",
    "Trace",
    "TraceRow",
    "default_config",
    "NotApplicableError",
    "run",
    "run_subgradient",
    "run_bundle",
    "run_aggregated_bundle",
    "run_quasi_concave",
    "run_coordinate_ascent",
    "run_nsmr",
]


def run(model, cfg: OptimizerConfig):
    """Dispatch on ``cfg.method``; always returns ``(DualPoint, Trace)``."""
    if cfg.method == "coord":
        point, trace, _ = run_coordinate_ascent(model, cfg)
        return point, trace
    fn = {
        "subgradient": run_subgradient,
        "bundle": run_bundle,
        "agg-bundle": run_aggregated_bundle,
        "quasi": run_quasi_concave,
        "nsmr": run_nsmr,
    }[cfg.method]
    return fn(model, cfg)
