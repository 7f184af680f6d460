"""Hamiltonians H(x, p) on the torus: catalog entries, parsed expressions, and
the coercive regularization ``H + |p|/n``.

Points are passed as coordinate arrays.  In 1D a plain array of shape ``(k,)``
holds ``k`` scalar points; in 2D the trailing axis has length 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Union

import numpy as np

from . import expression as ex
from .errors import EvaluationDomainError, InputError, PreconditionError

TWO_PI = 2.0 * math.pi
DEFAULT_P_MAX = 10.0
TERNARY_ITERATIONS = 200
BISECTION_ITERATIONS = 64
LEVEL_TOL = 1e-10
QUASICONVEX_TOL = 1e-9
_SEED_GRID = 401


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------

def _norm(p):
    if len(p) == 1:
        return np.abs(p[0])
    return np.sqrt(p[0] ** 2 + p[1] ** 2)


def _sin_product(x):
    out = np.sin(TWO_PI * x[0])
    for xi in x[1:]:
        out = out * np.sin(TWO_PI * xi)
    return out


def _shifted_norm(x, p, b):
    if len(p) == 1:
        return np.abs(p[0] - b * np.sin(TWO_PI * x[0]))
    return np.sqrt((p[0] - b * np.sin(TWO_PI * x[0])) ** 2 + (p[1] - b * np.sin(TWO_PI * x[1])) ** 2)


def _quadratic(x, p, amp):
    return _norm(p) ** 2 + amp * _sin_product(x)


def _tanh(x, p, sigma, sigma_osc, ps, eps):
    r = _norm(p) / ps
    safe = np.where(r > 0, r, 1.0)
    profile = np.where(r > 0, r * np.tanh(1.0 / safe), 0.0)
    return (sigma + sigma_osc * np.sin(TWO_PI * x[0] / eps)) * profile


def _double_well(x, p, amp):
    return (_norm(p) ** 2 - 1.0) ** 2 - amp * _sin_product(x) ** 2


def _transport(x, p, b):
    return _shifted_norm(x, p, b)


def _saturated(x, p, b, cap):
    return np.minimum(_shifted_norm(x, p, b), cap)


def _capped(x, p, cap, amp):
    return np.minimum(_norm(p), cap) + amp * _sin_product(x)


@dataclass(frozen=True)
class CatalogEntry:
    func: Callable
    defaults: dict
    quasiconvex: bool
    coercive: bool
    radial: bool
    formula: str


CATALOG: dict[str, CatalogEntry] = {
    "quadratic+potential": CatalogEntry(
        _quadratic, {"amp": 1.0}, True, True, True, "|p|^2 + amp*prod sin(2 pi x_i)"
    ),
    "tanh": CatalogEntry(
        _tanh,
        {"sigma": 1.0, "sigma_osc": 0.0, "ps": 1.0, "eps": 1.0},
        True,
        False,
        True,
        "sigma(x1/eps) (|p|/ps) tanh(ps/|p|),  sigma(y) = sigma + sigma_osc*sin(2 pi y)",
    ),
    "double-well": CatalogEntry(
        _double_well, {"amp": 0.0}, False, True, False, "(|p|^2 - 1)^2 - amp*prod sin(2 pi x_i)^2"
    ),
    "transport": CatalogEntry(_transport, {"b": 2.0}, True, True, False, "|p - b sin(2 pi x)|"),
    "saturated-transport": CatalogEntry(
        _saturated, {"b": 2.0, "cap": 1.0}, True, False, False, "min(|p - b sin(2 pi x)|, cap)"
    ),
    "capped-potential": CatalogEntry(
        _capped, {"cap": 1.0, "amp": 1.0}, True, False, True, "min(|p|, cap) + amp*prod sin(2 pi x_i)"
    ),
}

QUASICONVEX_CATALOG = [name for name, e in CATALOG.items() if e.quasiconvex]


# ---------------------------------------------------------------------------
# Descriptor
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CatalogSource:
    name: str
    params: tuple[tuple[str, float], ...]

    def describe(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.params)
        return f"{self.name}({args})"


@dataclass(frozen=True)
class ExpressionSource:
    tree: ex.Node
    text: str

    def describe(self) -> str:
        return self.text


@dataclass(frozen=True)
class SumSource:
    """``base`` plus an expression term (perturbations, regularization)."""

    base: "HamiltonianSpec"
    term: ex.Node
    label: str

    def describe(self) -> str:
        return f"{self.base.describe()} + {self.label}"


Source = Union[CatalogSource, ExpressionSource, SumSource]


@dataclass(frozen=True)
class HamiltonianSpec:
    dimension: int
    source: Source
    p_max: float = DEFAULT_P_MAX
    claims_quasiconvex: bool = False
    claims_coercive: bool = False
    radial: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise InputError(f"dimension must be 1 or 2, got {self.dimension}")
        if not self.p_max > 0:
            raise InputError(f"P_max must be positive, got {self.p_max}")

    def describe(self) -> str:
        return self.source.describe()

    def core(self, x: tuple, p: tuple) -> np.ndarray:
        """Unchecked evaluation on coordinate tuples (x already reduced mod 1)."""
        src = self.source
        if isinstance(src, CatalogSource):
            with np.errstate(all="ignore"):
                return CATALOG[src.name].func(x, p, **dict(src.params))
        if isinstance(src, ExpressionSource):
            return ex.evaluate(src.tree, x, p)
        return src.base.core(x, p) + ex.evaluate(src.term, x, p)

    def __call__(self, x, p) -> np.ndarray:
        """Vectorized evaluation without the momentum-range precondition."""
        xs, ps, scalar = _split(x, p, self.dimension)
        out = np.asarray(self.core(xs, ps), dtype=float)
        out = np.broadcast_to(out, np.broadcast_shapes(*(a.shape for a in xs + ps))).copy()
        if not np.all(np.isfinite(out)):
            raise EvaluationDomainError(self.describe())
        return float(out) if scalar else out

    def bind(self, x) -> Callable[[tuple], np.ndarray]:
        """Return ``p_tuple -> H(x, p)`` with every x-only quantity cached."""
        xs = tuple(np.mod(np.asarray(c, dtype=float), 1.0) for c in _coords(x, self.dimension))
        src = self.source
        if isinstance(src, ExpressionSource):
            tree = ex.bind_x(src.tree, xs)
            return lambda ps: ex.evaluate(tree, (), ps)
        if isinstance(src, SumSource):
            base = src.base.bind(x)
            term = ex.bind_x(src.term, xs)
            return lambda ps: base(ps) + ex.evaluate(term, (), ps)
        return lambda ps: self.core(xs, ps)


def _coords(a, dimension: int) -> tuple[np.ndarray, ...]:
    a = np.asarray(a, dtype=float)
    if dimension == 1:
        return (a,)
    if a.shape[-1] != 2:
        raise InputError(f"2D points need a trailing axis of length 2, got shape {a.shape}")
    return (a[..., 0], a[..., 1])


def _split(x, p, dimension):
    scalar = np.ndim(x) == (0 if dimension == 1 else 1) and np.ndim(p) == (0 if dimension == 1 else 1)
    xs = tuple(np.mod(c, 1.0) for c in _coords(x, dimension))
    ps = _coords(p, dimension)
    return xs, ps, scalar


def momentum_norm(p, dimension: int) -> np.ndarray:
    return _norm(_coords(p, dimension))


def evaluate(h: HamiltonianSpec, x, p):
    """H(x, p) with x taken modulo 1; requires |p| <= 10 P_max."""
    if np.any(momentum_norm(p, h.dimension) > 10.0 * h.p_max):
        raise PreconditionError(f"|p| exceeds 10*P_max = {10.0 * h.p_max}")
    return h(x, p)


def catalog(name: str, dimension: int = 1, p_max: float = DEFAULT_P_MAX, **params) -> HamiltonianSpec:
    if name not in CATALOG:
        raise InputError(f"unknown catalog entry {name!r}; choose from {sorted(CATALOG)}")
    entry = CATALOG[name]
    unknown = set(params) - set(entry.defaults)
    if unknown:
        raise InputError(f"unknown parameters for {name!r}: {sorted(unknown)}")
    full = {**entry.defaults, **{k: float(v) for k, v in params.items()}}
    if name == "tanh":
        k = 1.0 / full["eps"]
        if full["eps"] <= 0 or abs(k - round(k)) > 1e-9:
            raise InputError("tanh entry needs eps = 1/k for a positive integer k (periodicity)")
        if full["ps"] <= 0:
            raise InputError("tanh entry needs ps > 0")
        if full["sigma"] - abs(full["sigma_osc"]) <= 0:
            raise InputError("tanh entry needs a positive sigma (sigma > |sigma_osc|)")
    return HamiltonianSpec(
        dimension,
        CatalogSource(name, tuple(sorted(full.items()))),
        p_max,
        claims_quasiconvex=entry.quasiconvex,
        claims_coercive=entry.coercive,
        radial=entry.radial,
    )


def parse_hamiltonian(
    text: str,
    dimension: int = 1,
    *,
    p_max: float = DEFAULT_P_MAX,
    quasiconvex: bool = True,
    coercive: bool | None = None,
) -> HamiltonianSpec:
    """Parse an expression into a HamiltonianSpec.

    ``quasiconvex`` is the user's claim (spot-check it with
    :func:`check_quasiconvexity`).  ``coercive=None`` probes growth on the
    momentum box via :func:`looks_coercive`.
    """
    tree = ex.parse(text, dimension)
    h = HamiltonianSpec(dimension, ExpressionSource(tree, text), p_max, quasiconvex, bool(coercive))
    if coercive is None:
        h = replace(h, claims_coercive=looks_coercive(h))
    return h


def add_term(h: HamiltonianSpec, term: str | ex.Node, *, label: str | None = None, **flags) -> HamiltonianSpec:
    """``h + term`` where term is an expression; flags default to h's."""
    node = ex.parse(term, h.dimension) if isinstance(term, str) else term
    new = HamiltonianSpec(
        h.dimension,
        SumSource(h, node, label or (term if isinstance(term, str) else ex.to_text(node))),
        h.p_max,
        flags.get("claims_quasiconvex", h.claims_quasiconvex),
        flags.get("claims_coercive", h.claims_coercive),
        flags.get("radial", False),
    )
    return new


def _norm_node(dimension: int) -> ex.Node:
    if dimension == 1:
        return ex.Call("abs", (ex.Var("p", 0),))
    sq = [ex.BinOp("^", ex.Var("p", i), ex.Const(2.0)) for i in range(2)]
    return ex.Call("sqrt", (ex.BinOp("+", sq[0], sq[1]),))


def coercive_regularize(h: HamiltonianSpec, n: int) -> HamiltonianSpec:
    """H_n(x, p) = H(x, p) + |p|/n.

    The quasiconvexity claim survives unconditionally only for radially
    nondecreasing entries; otherwise it is re-established by sampling, since
    a sum of quasiconvex functions need not be quasiconvex (even in 1D).
    """
    if n < 1:
        raise PreconditionError(f"n must be >= 1, got {n}")
    term = ex.BinOp("/", _norm_node(h.dimension), ex.Const(float(n)))
    out = HamiltonianSpec(
        h.dimension, SumSource(h, term, f"|p|/{n}"), h.p_max, False, True, radial=h.radial
    )
    if h.claims_quasiconvex and (h.radial or check_quasiconvexity(out, 4000, seed=n).passed):
        out = replace(out, claims_quasiconvex=True)
    return out


def looks_coercive(h: HamiltonianSpec, samples: int = 512, seed: int = 0) -> bool:
    """Heuristic growth probe: H on the sphere |p| = 10 P_max must clear the
    box maximum of H on |p| <= P_max/2 by at least 1."""
    rng = np.random.default_rng(seed)
    x = rng.random((samples, h.dimension))
    d = _unit_directions(rng, samples, h.dimension)
    inner = rng.uniform(-0.5, 0.5, (samples, h.dimension)) * h.p_max
    far = 10.0 * h.p_max * d
    xs = x[:, 0] if h.dimension == 1 else x
    fix = (lambda a: a[:, 0]) if h.dimension == 1 else (lambda a: a)
    try:
        outer_min = np.min(h(xs, fix(far)))
        inner_max = np.max(h(xs, fix(inner)))
    except EvaluationDomainError:
        return False
    return bool(outer_min > inner_max + 1.0)


def _unit_directions(rng, k, dimension):
    if dimension == 1:
        return rng.choice([-1.0, 1.0], size=(k, 1))
    theta = rng.uniform(0, TWO_PI, k)
    return np.stack([np.cos(theta), np.sin(theta)], axis=1)


# ---------------------------------------------------------------------------
# Structural probes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuasiconvexityVerdict:
    passed: bool
    x: np.ndarray | None = None
    p: np.ndarray | None = None
    q: np.ndarray | None = None
    theta: float | None = None
    values: tuple[float, float, float] | None = None  # H(mid), H(p), H(q)

    def to_dict(self) -> dict:
        if self.passed:
            return {"verdict": "pass"}
        return {
            "verdict": "witness",
            "x": self.x.tolist(),
            "p": self.p.tolist(),
            "q": self.q.tolist(),
            "theta": self.theta,
            "values": {"mid": self.values[0], "p": self.values[1], "q": self.values[2]},
        }


def check_quasiconvexity(h: HamiltonianSpec, trials: int = 10_000, seed: int = 0) -> QuasiconvexityVerdict:
    """Sample (x, p, q, theta) and test H(x, mid) <= max(H(x,p), H(x,q)) + 1e-9."""
    if trials < 1:
        raise PreconditionError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    N = h.dimension
    x = rng.random((trials, N))
    p = rng.uniform(-h.p_max, h.p_max, (trials, N))
    q = rng.uniform(-h.p_max, h.p_max, (trials, N))
    theta = rng.random(trials)
    mid = theta[:, None] * p + (1 - theta[:, None]) * q
    sq = (lambda a: a[:, 0]) if N == 1 else (lambda a: a)
    hm, hp, hq = h(sq(x), sq(mid)), h(sq(x), sq(p)), h(sq(x), sq(q))
    bad = np.nonzero(hm > np.maximum(hp, hq) + QUASICONVEX_TOL)[0]
    if bad.size == 0:
        return QuasiconvexityVerdict(True)
    i = bad[0]
    return QuasiconvexityVerdict(False, x[i], p[i], q[i], float(theta[i]), (float(hm[i]), float(hp[i]), float(hq[i])))


def minimize_momentum(h: HamiltonianSpec, x: np.ndarray, p_max: float | None = None):
    """Per-node minimizer of p -> H(x, p) on [-P_max, P_max] (1D).

    A coarse grid seeds the bracket so that flat plateaus cannot mislead the
    ternary search; 200 ternary iterations then refine it.  Returns
    ``(p_star, h_star)`` arrays.
    """
    _require_1d(h)
    R = h.p_max if p_max is None else p_max
    x = np.atleast_1d(np.asarray(x, dtype=float))
    f = h.bind(x[:, None])
    grid = np.linspace(-R, R, _SEED_GRID)
    vals = f((np.broadcast_to(grid, (x.size, grid.size)),))
    vals = np.broadcast_to(vals, (x.size, grid.size))
    k = np.argmin(vals, axis=1)
    best_p = grid[k]
    best_v = vals[np.arange(x.size), k]
    lo = grid[np.maximum(k - 1, 0)]
    hi = grid[np.minimum(k + 1, grid.size - 1)]

    g = h.bind(x)
    for _ in range(TERNARY_ITERATIONS):
        third = (hi - lo) / 3.0
        m1, m2 = lo + third, hi - third
        left = g((m1,)) < g((m2,))
        hi = np.where(left, m2, hi)
        lo = np.where(left, lo, m1)
    p_star = 0.5 * (lo + hi)
    v_star = np.broadcast_to(g((p_star,)), p_star.shape)
    better = v_star <= best_v
    return np.where(better, p_star, best_p), np.where(better, v_star, best_v)


def minimize_momentum_2d(h: HamiltonianSpec, x: np.ndarray, grid: int = 41, iterations: int = 60):
    """Per-node minimizer of p -> H(x, p) over the box [-P_max, P_max]^2.

    Coarse grid search followed by a compass search whose stencil halves
    whenever no neighbour improves.  Returns ``(p_star (k, 2), h_star (k,))``.
    """
    if h.dimension != 2:
        raise PreconditionError("minimize_momentum_2d needs a 2D Hamiltonian")
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    R = h.p_max
    ticks = np.linspace(-R, R, grid)
    g1, g2 = np.meshgrid(ticks, ticks, indexing="ij")
    g1, g2 = g1.ravel(), g2.ravel()
    f = h.bind(x[:, None, :])
    vals = np.broadcast_to(f((g1[None, :], g2[None, :])), (len(x), g1.size))
    k = np.argmin(vals, axis=1)
    best = np.stack([g1[k], g2[k]], axis=1)
    best_v = vals[np.arange(len(x)), k]
    step = np.full(len(x), ticks[1] - ticks[0])
    f = h.bind(x)
    moves = np.array([[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [1, -1], [-1, 1], [-1, -1]], dtype=float)
    for _ in range(iterations):
        improved = np.zeros(len(x), dtype=bool)
        for d in moves:
            cand = np.clip(best + step[:, None] * d, -R, R)
            v = np.broadcast_to(f((cand[:, 0], cand[:, 1])), best_v.shape)
            better = v < best_v
            best = np.where(better[:, None], cand, best)
            best_v = np.where(better, v, best_v)
            improved |= better
        step = np.where(improved, step, step / 2.0)
    return best, best_v


@dataclass(frozen=True)
class SublevelIntervals:
    """Vectorized result of :func:`sublevel_intervals` (one entry per node)."""

    lo: np.ndarray
    hi: np.ndarray
    empty: np.ndarray
    unbounded_lo: np.ndarray
    unbounded_hi: np.ndarray

    @property
    def capped(self) -> bool:
        return bool(np.any(~self.empty & (self.unbounded_lo | self.unbounded_hi)))


def sublevel_intervals(
    h: HamiltonianSpec,
    x: np.ndarray,
    a: float,
    p_star: np.ndarray | None = None,
    h_star: np.ndarray | None = None,
    bound=None,
) -> SublevelIntervals:
    """Sublevel intervals {p : H(x_i, p) <= a} for many nodes at once (1D).

    Bisection keeps the inner endpoint on the feasible side, so every
    returned endpoint satisfies H <= a + tol.
    """
    _require_1d(h)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if p_star is None or h_star is None:
        p_star, h_star = minimize_momentum(h, x)
    g = bound if bound is not None else h.bind(x)
    R = h.p_max
    empty = h_star > a + LEVEL_TOL
    ends = np.broadcast_to(g((np.stack([np.full(x.size, -R), np.full(x.size, R)]),)), (2, x.size))
    unb_lo = ends[0] <= a
    unb_hi = ends[1] <= a

    def side(outer0):
        inner = p_star.copy()
        outer = np.full(x.size, outer0)
        for _ in range(BISECTION_ITERATIONS):
            mid = 0.5 * (inner + outer)
            ok = np.broadcast_to(g((mid,)), mid.shape) <= a
            inner = np.where(ok, mid, inner)
            outer = np.where(ok, outer, mid)
        return inner

    lo = np.where(unb_lo, -R, side(-R))
    hi = np.where(unb_hi, R, side(R))
    lo = np.where(empty, np.nan, lo)
    hi = np.where(empty, np.nan, hi)
    return SublevelIntervals(lo, hi, empty, unb_lo & ~empty, unb_hi & ~empty)


@dataclass(frozen=True)
class SublevelInterval:
    empty: bool
    lo: float | None = None
    hi: float | None = None
    unbounded_lo: bool = False
    unbounded_hi: bool = False


def sublevel_interval(h: HamiltonianSpec, x: float, a: float, p_max: float | None = None) -> SublevelInterval:
    """{p : H(x, p) <= a} on [-P_max, P_max] for a 1D quasiconvex H."""
    if p_max is not None:
        h = replace(h, p_max=p_max)
    r = sublevel_intervals(h, np.array([x], dtype=float), a)
    if r.empty[0]:
        return SublevelInterval(True)
    return SublevelInterval(False, float(r.lo[0]), float(r.hi[0]), bool(r.unbounded_lo[0]), bool(r.unbounded_hi[0]))


def _require_1d(h: HamiltonianSpec):
    if h.dimension != 1:
        raise PreconditionError("this operation is only defined for 1D Hamiltonians")
