"""Eigenvalue reports and the rough bounds min/max of H(x, 0)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..hamiltonian import HamiltonianSpec
from ..lipschitz import GridFunction

CAPPED = "capped-momentum"
HYPOTHESES_VIOLATED = "hypotheses-violated"
UPPER_BOUND = "upper-bound"
MAX_ITERATIONS = "max-iterations"

METHODS = ("minimax-1d", "minimax-smooth", "pde-oracle", "coercive-limit")


@dataclass
class EigenvalueReport:
    method: str
    c: float
    bracket: tuple[float, float] | None
    rough_bounds: tuple[float, float]
    warnings: list[str] = field(default_factory=list)
    iterations: int = 0
    optimizer: GridFunction | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def capped(self) -> bool:
        return CAPPED in self.warnings

    def to_dict(self, optimizer_ref: str | None = None) -> dict:
        return {
            "method": self.method,
            "c": float(self.c),
            "bracket": None if self.bracket is None else [float(b) for b in self.bracket],
            "rough_bounds": [float(b) for b in self.rough_bounds],
            "warnings": list(self.warnings),
            "iterations": int(self.iterations),
            "optimizer_ref": optimizer_ref,
        }

    def to_json(self, optimizer_ref: str | None = None) -> str:
        return json.dumps(self.to_dict(optimizer_ref), indent=2)


def grid_nodes(m: int, dimension: int) -> np.ndarray:
    x = np.arange(m) / m
    if dimension == 1:
        return x
    return np.stack(np.meshgrid(x, x, indexing="ij"), axis=-1).reshape(-1, 2)


def rough_bounds(h: HamiltonianSpec, m: int = 256) -> tuple[float, float]:
    """(min, max) over grid nodes of H(x, 0)."""
    x = grid_nodes(m, h.dimension)
    h0 = h(x, np.zeros_like(x))
    return float(np.min(h0)), float(np.max(h0))
