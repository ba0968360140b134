"""Seeded synthetic Potts grids, optionally signed or with class-size constraints."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..energy import EnergyModel, LinearConstraint, PairwiseTerm


@dataclass(frozen=True)
class GenSpec:
    rows: int
    cols: int
    num_labels: int
    unary_sigma: float = 1.0
    # standard deviation of the Potts weight distribution
    potts_sigma: float = 0.5
    signed: bool = False
    class_size_constraints: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1 or self.num_labels < 1:
            raise ValueError("grid dimensions and label count must be positive")
        if not (self.unary_sigma > 0 and self.potts_sigma > 0):
            raise ValueError("sigmas must be positive")


def grid_edges(rows: int, cols: int) -> list:
    """4-neighbourhood edges ``(i, j)`` with ``i < j``, row-major node ids."""
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return edges


def class_sizes(num_nodes: int, num_labels: int) -> list:
    """Size of class ``p`` proportional to ``p + 1``; the last (largest) class
    takes whatever rounding leaves over so the sizes sum to ``num_nodes``."""
    total = num_labels * (num_labels + 1) / 2
    sizes = [int(round(num_nodes * (p + 1) / total)) for p in range(num_labels - 1)]
    sizes.append(num_nodes - sum(sizes))
    return sizes


def class_size_rows(num_nodes: int, num_labels: int) -> tuple:
    return tuple(
        LinearConstraint([(i, p, 1.0) for i in range(num_nodes)], size)
        for p, size in enumerate(class_sizes(num_nodes, num_labels))
    )


def generate(spec: GenSpec) -> EnergyModel:
    """Random grid model: unaries ``N(0, unary_sigma)``; Potts weights
    ``|N(0, potts_sigma)|`` (associative) or ``N(0, potts_sigma)`` (signed,
    stored as dense ``-w * I`` tables)."""
    rng = np.random.default_rng(spec.seed)
    n, L = spec.rows * spec.cols, spec.num_labels
    unary = rng.normal(0.0, spec.unary_sigma, size=(n, L))
    edges = grid_edges(spec.rows, spec.cols)
    weights = rng.normal(0.0, spec.potts_sigma, size=len(edges))
    if spec.signed:
        eye = np.eye(L)
        pairwise = [PairwiseTerm.dense(i, j, -w * eye) for (i, j), w in zip(edges, weights)]
    else:
        pairwise = [PairwiseTerm.potts(i, j, abs(w), L) for (i, j), w in zip(edges, weights)]
    eq = class_size_rows(n, L) if spec.class_size_constraints else ()
    return EnergyModel(n, L, unary, tuple(pairwise), linear_eq=eq)
