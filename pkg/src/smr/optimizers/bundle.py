"""Proximal bundle and aggregated bundle ascent.

Cutting planes are stored in intercept form ``c_j + g_j . lam`` so they stay
valid when the stability center moves.  The next trial point maximizes the
cutting-plane model minus ``(w/2) ||lam - center||^2``; this is solved through
its dual, a QP over the simplex of plane weights.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..energy import EnergyModel
from .config import DualRun, OptimizerConfig, default_config
from .qp import simplex_qp


@dataclass
class Bundle:
    """Cutting planes ``(grads[j], consts[j])`` plus the stability center."""

    center: np.ndarray
    center_value: float
    grads: list = field(default_factory=list)
    consts: list = field(default_factory=list)

    def add(self, point, value, grad, limit: int) -> None:
        grad = np.array(grad, dtype=float)
        self.grads.append(grad)
        self.consts.append(float(value) - float(grad @ point))
        while len(self.grads) > limit:
            self.grads.pop(0)
            self.consts.pop(0)

    def model_value(self, point) -> float:
        G = np.array(self.grads)
        return float(np.min(np.array(self.consts) + G @ point))

    def trial(self, w: float):
        """Trial point and plane weights for the current proximity weight ``w``."""
        G = np.array(self.grads)
        e = np.array(self.consts) + G @ self.center
        alpha = simplex_qp(G @ G.T / w, e)
        direction = G.T @ alpha
        return self.center + direction / w, alpha


def adaptive_weight(run: DualRun, gnorm: float) -> float:
    """Inverse step ``||g|| / (gamma (A - best D))`` projected onto ``[w_min, w_max]``."""
    cfg = run.cfg
    gap = run.target - run.best_dual
    if gap <= 0 or gnorm == 0:
        return cfg.w_max
    return float(np.clip(gnorm / (run.gamma * gap), cfg.w_min, cfg.w_max))


def _bundle_loop(run: DualRun, aggregated: bool):
    cfg = run.cfg
    x = run.project(np.zeros(run.dim))
    value, g, _ = run.evaluate(x)
    bundle = Bundle(x.copy(), value)
    bundle.add(x, value, g, cfg.bundle_size)
    gnorm = float(np.linalg.norm(g))
    w = adaptive_weight(run, gnorm)
    threshold = cfg.m_r if aggregated else cfg.m_L
    it = 0
    run.log(it, value, 1.0 / w, gnorm)
    reason = run.stop_reason(it)
    while not reason:
        it += 1
        trial, alpha = bundle.trial(w)
        trial = run.project(trial)
        predicted = bundle.model_value(trial) - bundle.center_value
        if predicted <= 1e-12 * (1.0 + abs(bundle.center_value)):
            run.log(it, bundle.center_value, 0.0, 0.0)
            reason = "bundle-converged"
            break
        if aggregated:
            # compress every plane into the weighted aggregate
            G = np.array(bundle.grads)
            agg_g = G.T @ alpha
            agg_c = float(np.array(bundle.consts) @ alpha)
            bundle.grads, bundle.consts = [agg_g], [agg_c]
        value, g, _ = run.evaluate(trial)
        gnorm = float(np.linalg.norm(g))
        if aggregated:
            bundle.add(trial, value, g, 2)
        else:
            bundle.add(trial, value, g, cfg.bundle_size)
        if value - bundle.center_value >= threshold * predicted:
            bundle.center = trial.copy()
            bundle.center_value = value
            w = adaptive_weight(run, gnorm)
        run.log(it, value, 1.0 / w, gnorm)
        reason = run.stop_reason(it)
    return run.result(reason)


def run_bundle(model: EnergyModel, cfg: OptimizerConfig = None, mode: str = "smr"):
    """Proximal bundle method; returns ``(best DualPoint, Trace)``."""
    cfg = cfg or default_config("bundle")
    return _bundle_loop(DualRun(model, cfg, mode), aggregated=False)


def run_aggregated_bundle(model: EnergyModel, cfg: OptimizerConfig = None, mode: str = "smr"):
    """Aggregated bundle method: one aggregate plane plus the newest plane."""
    cfg = cfg or default_config("agg-bundle")
    return _bundle_loop(DualRun(model, cfg, mode), aggregated=True)
