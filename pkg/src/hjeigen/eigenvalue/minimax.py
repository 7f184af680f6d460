"""Lipschitz-side minimax in 1D: bisection on the level over per-node
sublevel intervals.

A periodic Lipschitz u on the circle is a bounded slope field with zero mean,
so level ``a`` is attainable iff every node has a nonempty sublevel interval
[l_i, r_i] and sum(l) <= 0 <= sum(r).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InfeasibleError, PreconditionError
from ..hamiltonian import HamiltonianSpec, SublevelIntervals, minimize_momentum, sublevel_intervals
from ..lipschitz import GridFunction
from .report import CAPPED, HYPOTHESES_VIOLATED, MAX_ITERATIONS, UPPER_BOUND, EigenvalueReport, rough_bounds

MAX_BISECTIONS = 200


@dataclass(frozen=True)
class SublevelSelection:
    level: float
    intervals: SublevelIntervals
    gradients: np.ndarray | None
    feasible: bool


class LevelOracle:
    """Feasibility of levels for one (H, m); caches the per-node minimizers."""

    def __init__(self, h: HamiltonianSpec, m: int):
        if h.dimension != 1:
            raise PreconditionError("minimax_1d needs a 1D Hamiltonian")
        if m < 8:
            raise PreconditionError(f"m must be >= 8, got {m}")
        self.h = h
        self.m = m
        self.x = np.arange(m) / m
        self.bound = h.bind(self.x)
        self.p_star, self.h_star = minimize_momentum(h, self.x)

    def intervals(self, a: float) -> SublevelIntervals:
        return sublevel_intervals(self.h, self.x, a, self.p_star, self.h_star, bound=self.bound)

    def feasible(self, a: float) -> bool:
        iv = self.intervals(a)
        return bool(not iv.empty.any() and iv.lo.sum() <= 0.0 <= iv.hi.sum())

    def select(self, a: float) -> SublevelSelection:
        iv = self.intervals(a)
        ok = bool(not iv.empty.any() and iv.lo.sum() <= 0.0 <= iv.hi.sum())
        return SublevelSelection(a, iv, water_fill(iv.lo, iv.hi) if ok else None, ok)


def water_fill(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Zero-sum selection g with lo <= g <= hi.

    Starts from clamp(0, lo, hi) and moves the excess onto nodes with the most
    slack first (ties by index).
    """
    g = np.clip(0.0, lo, hi)
    excess = g.sum()
    if excess > 0:
        slack = g - lo
        sign = -1.0
    elif excess < 0:
        slack = hi - g
        sign = 1.0
    else:
        return g
    remaining = abs(excess)
    for i in np.lexsort((np.arange(g.size), -slack)):
        if remaining <= 0:
            break
        step = min(slack[i], remaining)
        g[i] += sign * step
        remaining -= step
    return g


def reconstruct(g: np.ndarray) -> GridFunction:
    """u_j = (1/m) sum_{i<j} g_i."""
    m = g.size
    return GridFunction(np.concatenate([[0.0], np.cumsum(g)[:-1]]) / m)


def minimax_1d(h: HamiltonianSpec, m: int = 256, tol: float = 1e-6) -> EigenvalueReport:
    """c = inf_u max_i H(x_i, u'_i) over zero-mean slope fields on the m-grid.

    The bracket [c_lo, c_hi] is certified: levels below max_i min_p H(x_i, .)
    leave some sublevel set empty, and c_hi is feasible.
    """
    if not tol > 0:
        raise PreconditionError("tol must be positive")
    oracle = LevelOracle(h, m)
    rough = rough_bounds(h, m)
    a_min = float(np.max(oracle.h_star))
    a_max = rough[1]
    warnings: list[str] = []
    if not oracle.feasible(a_max):
        iv = oracle.intervals(a_max)
        raise InfeasibleError(
            f"level max_x H(x,0) = {a_max!r} is infeasible; P_max = {h.p_max} may be too small",
            {"a_max": a_max, "sum_lo": float(np.nansum(iv.lo)), "sum_hi": float(np.nansum(iv.hi)),
             "empty_nodes": int(iv.empty.sum())},
        )
    lo = min(a_min, a_max)
    hi = a_max
    iterations = 0
    if oracle.feasible(lo):
        hi = lo
    while hi - lo > tol and iterations < MAX_BISECTIONS:
        mid = 0.5 * (lo + hi)
        if oracle.feasible(mid):
            hi = mid
        else:
            lo = mid
        iterations += 1
    if hi - lo > tol:
        warnings.append(MAX_ITERATIONS)

    sel = oracle.select(hi)
    g = sel.gradients
    u = reconstruct(g)
    certificate = float(np.max(oracle.bound((g,))))
    if sel.intervals.capped:
        warnings.append(CAPPED)
    c = 0.5 * (lo + hi)
    bracket: tuple[float, float] | None = (lo, hi)
    if not h.claims_quasiconvex:
        # Sublevel sets need not be intervals; only the replayed candidate is trustworthy.
        warnings += [HYPOTHESES_VIOLATED, UPPER_BOUND]
        c = certificate
        bracket = None
    return EigenvalueReport(
        "minimax-1d",
        c,
        bracket,
        rough,
        warnings,
        iterations,
        u,
        {
            "a_min": a_min,
            "a_max": a_max,
            "certificate": certificate,
            "slope_sum": float(g.sum()),
            "gradients": g,
        },
    )
