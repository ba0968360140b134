"""Coordinate ascent on single multipliers via min-marginal averaging."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dual import agreement_sets
from ..energy import EnergyModel
from .config import DualRun, OptimizerConfig, default_config


class NotApplicableError(ValueError):
    """The driver does not support this kind of model."""


@dataclass
class UpdateCheck:
    node: int
    delta: float
    before: float
    after: float
    ok: bool


def coordinate_update(d1: float, d2: float, tol: float):
    """Shift for ``lambda_j`` or ``None`` when zero already lies in ``[d2, d1]``."""
    if (d1 > tol and d2 > tol) or (d1 < -tol and d2 < -tol):
        return 0.5 * (d1 + d2)
    return None


def run_coordinate_ascent(model: EnergyModel, cfg: OptimizerConfig = None):
    """Sweep nodes in ascending order, moving each multiplier to the midpoint
    of the two largest min-marginal differences.

    Returns ``(DualPoint, Trace, AgreementReport)``.  ``trace.updates`` lists
    the dual value before and after every accepted update and whether
    it met the monotonicity check.
    """
    cfg = cfg or default_config("coord")
    if not model.is_pairwise or not model.is_associative or model.has_constraints:
        raise NotApplicableError(
            "coordinate ascent needs an unconstrained pairwise associative model")
    run = DualRun(model, cfg)
    updates = run.trace.updates
    x = np.zeros(run.dim)
    value, _, ev = run.evaluate(x)
    oracle = run.oracle
    slack = 1e-9 * model.scale
    sweep = 0
    run.log(sweep, value, 0.0, float(np.linalg.norm(ev.subgradient)))
    reason = None
    while reason is None:
        sweep += 1
        changed = False
        for j in range(model.num_nodes):
            tol = 1e-9 * (1.0 + abs(value))
            gaps = oracle.node_gaps(run.point(x), j)
            shift = coordinate_update(gaps.d1, gaps.d2, tol)
            if shift is None:
                continue
            x[j] += shift
            before = value
            value, _, ev = run.evaluate(x)
            updates.append(UpdateCheck(j, shift, before, value, value >= before - slack))
            changed = True
        run.log(sweep, value, 0.0, float(np.linalg.norm(ev.subgradient)))
        if not changed:
            reason = "converged"
        elif sweep >= cfg.max_iter:
            reason = "max-iter"
        elif run.trace.rows[-1].time_ms >= 1000.0 * cfg.time_budget:
            reason = "time-budget"
    point = run.point(x)
    run.trace.stop_reason = reason
    report = agreement_sets(model, point, oracle=oracle)
    return point, run.trace, report


__all__ = ["run_coordinate_ascent", "coordinate_update", "NotApplicableError"]
