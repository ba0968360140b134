"""Projected subgradient ascent with the adaptive (Polyak-type) step size."""
from __future__ import annotations

import numpy as np

from ..energy import EnergyModel
from .config import DualRun, OptimizerConfig, default_config


def polyak_step(gamma: float, target: float, value: float, gnorm2: float) -> float:
    """``gamma * (A - D) / ||g||^2``."""
    return gamma * (target - value) / gnorm2


def subgradient_loop(run: DualRun, x0=None):
    x = run.project(np.zeros(run.dim) if x0 is None else x0)
    it = 0
    while True:
        value, g, _ = run.evaluate(x)
        gnorm2 = float(g @ g)
        step = 0.0
        if gnorm2 > 0:
            if run.stalled():
                run.gamma *= 0.5
            step = polyak_step(run.gamma, run.target, value, gnorm2)
        run.log(it, value, step, np.sqrt(gnorm2))
        reason = run.stop_reason(it)
        if reason:
            return run.result(reason)
        x = run.project(x + step * g)
        it += 1


def run_subgradient(model: EnergyModel, cfg: OptimizerConfig = None, mode: str = "smr"):
    """Maximize the dual by subgradient ascent; returns ``(best DualPoint, Trace)``."""
    cfg = cfg or default_config("subgradient")
    return subgradient_loop(DualRun(model, cfg, mode))
