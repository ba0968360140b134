"""Submodular relaxation of MRF energy minimization.

The one-label-per-node constraints are relaxed with Lagrange multipliers;
every dual evaluation is then a single min-cut of a submodular
pseudo-Boolean function (or a roof-dual bound for the non-submodular
variant).  The dual is maximized by subgradient, bundle, quasi-Newton or
coordinate ascent.
"""
from .dual import DualPoint, SMROracle, agreement_sets, evaluate_dual
from .energy import (EnergyModel, LinearConstraint, PairwiseTerm, PatternPotential,
                     RobustEntry, RobustPatternPotential, evaluate_energy, robust_pn_potts)
from .optimizers import OptimizerConfig, default_config, run
from .primal import certify, decode, icm

__version__ = "0.1.0"

__all__ = [
    "DualPoint", "SMROracle", "agreement_sets", "evaluate_dual",
    "EnergyModel", "LinearConstraint", "PairwiseTerm", "PatternPotential", "RobustEntry",
    "RobustPatternPotential", "evaluate_energy", "robust_pn_potts",
    "OptimizerConfig", "default_config", "run",
    "certify", "decode", "icm",
]
