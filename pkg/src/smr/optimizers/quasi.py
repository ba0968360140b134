"""Limited-memory quasi-Newton ascent for the non-smooth dual.

Works on ``f = -D``: the direction comes from the L-BFGS two-loop recursion
and the step from a bisection/doubling search for a point satisfying the
weak Wolfe conditions.  When the search fails the iteration falls back to an
adaptive subgradient step and the curvature memory is cleared.
"""
from __future__ import annotations

from collections import deque

import numpy as np

from ..energy import EnergyModel
from .config import DualRun, OptimizerConfig, default_config
from .subgradient import polyak_step

C1 = 1e-4
C2 = 0.9
MAX_TRIALS = 30


def two_loop(grad: np.ndarray, pairs) -> np.ndarray:
    """``-H grad`` for the inverse-Hessian estimate built from ``(s, y)`` pairs."""
    q = grad.copy()
    alphas = []
    for s, y in reversed(pairs):
        rho = 1.0 / float(y @ s)
        a = rho * float(s @ q)
        alphas.append((a, rho))
        q -= a * y
    if pairs:
        s, y = pairs[-1]
        q *= float(s @ y) / float(y @ y)
    for (s, y), (a, rho) in zip(pairs, reversed(alphas)):
        b = rho * float(y @ q)
        q += (a - b) * s
    return -q


def weak_wolfe(run: DualRun, x, fx, gx, d, t0):
    """Search along ``d`` for a weak Wolfe step on ``f = -D``.

    Returns ``(t, x_new, f_new, g_new)`` or ``None`` when no step is found.
    """
    slope = float(gx @ d)
    lo, hi = 0.0, np.inf
    t = t0
    for _ in range(MAX_TRIALS):
        xt = run.project(x + t * d)
        value, g, _ = run.evaluate(xt)
        ft, gt = -value, -g
        if ft > fx + C1 * t * slope:
            hi = t
        elif float(gt @ d) < C2 * slope:
            lo = t
        else:
            return t, xt, ft, gt
        t = 0.5 * (lo + hi) if np.isfinite(hi) else 2.0 * t
    return None


def run_quasi_concave(model: EnergyModel, cfg: OptimizerConfig = None, mode: str = "smr"):
    """Quasi-Newton ascent with memory ``cfg.memory``; returns ``(best DualPoint, Trace)``."""
    cfg = cfg or default_config("quasi")
    run = DualRun(model, cfg, mode)
    x = run.project(np.zeros(run.dim))
    value, g, _ = run.evaluate(x)
    fx, gx = -value, -g
    pairs = deque(maxlen=max(cfg.memory, 1))
    it = 0
    run.log(it, value, 0.0, float(np.linalg.norm(g)))
    reason = run.stop_reason(it)
    while not reason:
        it += 1
        gnorm2 = float(gx @ gx)
        if gnorm2 == 0.0:
            reason = "zero-subgradient"
            break
        use = list(pairs) if cfg.memory > 0 else []
        d = two_loop(gx, use)
        if float(gx @ d) >= 0.0:
            pairs.clear()
            d = -gx
        # Polyak length along the steepest direction sets the trial scale
        t_polyak = polyak_step(run.gamma, run.target, -fx, gnorm2)
        t0 = 1.0 if use else t_polyak
        found = weak_wolfe(run, x, fx, gx, d, t0)
        if found is None:
            pairs.clear()
            step = t_polyak
            x_new = run.project(x - step * gx)
            value, g, _ = run.evaluate(x_new)
            f_new, g_new = -value, -g
        else:
            step, x_new, f_new, g_new = found
            s, y = x_new - x, g_new - gx
            if cfg.memory > 0 and float(s @ y) > 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(y)):
                pairs.append((s, y))
        x, fx, gx = x_new, f_new, g_new
        run.log(it, -fx, step, float(np.linalg.norm(gx)))
        reason = run.stop_reason(it)
    return run.result(reason)
