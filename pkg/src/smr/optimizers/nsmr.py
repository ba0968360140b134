"""Relaxation of non-submodular pairwise Lagrangians bounded by roof duality."""
from __future__ import annotations

from ..energy import EnergyModel
from ..pbf import NotSubmodularError
from .bundle import run_aggregated_bundle, run_bundle
from .config import OptimizerConfig, default_config
from .quasi import run_quasi_concave
from .subgradient import run_subgradient

_DRIVERS = {
    "subgradient": run_subgradient,
    "bundle": run_bundle,
    "agg-bundle": run_aggregated_bundle,
    "quasi": run_quasi_concave,
}


def run_nsmr(model: EnergyModel, cfg: OptimizerConfig = None):
    """Maximize the roof-dual bound of the Lagrangian with the driver named
    by ``cfg.nsmr_driver``; dense tables keep their signs."""
    cfg = cfg or default_config("nsmr")
    if not model.is_pairwise:
        raise NotSubmodularError("pattern potentials are not supported by the QPBO oracle")
    try:
        driver = _DRIVERS[cfg.nsmr_driver]
    except KeyError:
        raise ValueError(f"unknown outer driver {cfg.nsmr_driver!r}") from None
    return driver(model, cfg, mode="nsmr")
