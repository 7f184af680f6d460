"""Executable versions of the structural facts behind the minimax formula:
coercive regularization limit, monotonicity in H, sup over classical vs.
generalized gradients, and a cross-method comparison."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError, PreconditionError
from ..hamiltonian import HamiltonianSpec, coercive_regularize
from ..lipschitz import GridFunction, cell_gradients
from .minimax import minimax_1d
from .pde import pde_eigenvalue
from .report import CAPPED, HYPOTHESES_VIOLATED, UPPER_BOUND, EigenvalueReport, rough_bounds
from .smooth import minimax_smooth

DEFAULT_N_SCHEDULE = (5, 10, 20, 40, 80)


# ---------------------------------------------------------------------------
# Coercive limit
# ---------------------------------------------------------------------------

@dataclass
class CoerciveLimitResult:
    n_schedule: list[int]
    values: list[float]
    reports: list[EigenvalueReport]
    c_plus: float
    slope: float
    nonincreasing: bool

    def report(self) -> EigenvalueReport:
        last = self.reports[-1]
        warnings = sorted({w for r in self.reports for w in r.warnings})
        if not self.nonincreasing:
            warnings.append("non-monotone-sequence")
        return EigenvalueReport(
            "coercive-limit",
            self.c_plus,
            None,
            last.rough_bounds,
            warnings,
            sum(r.iterations for r in self.reports),
            None,
            {"n": self.n_schedule, "c_n": self.values, "slope": self.slope},
        )

    def series_csv(self) -> str:
        return "n,c_n\n" + "".join(f"{n},{c!r}\n" for n, c in zip(self.n_schedule, self.values))


def coercive_limit(
    h: HamiltonianSpec,
    n_schedule=DEFAULT_N_SCHEDULE,
    m: int = 256,
    tol: float = 1e-6,
) -> CoerciveLimitResult:
    """c_n = minimax value of H + |p|/n, extrapolated by c_n = c+ + A/n.

    The fit uses the last three entries.  Since H_n decreases pointwise in n,
    the sequence must be nonincreasing (within ``tol``).
    """
    ns = [int(n) for n in n_schedule]
    if len(ns) < 3 or ns != sorted(set(ns)):
        raise PreconditionError("n_schedule needs at least 3 strictly increasing entries")
    reports = [minimax_1d(coercive_regularize(h, n), m, tol) for n in ns]
    values = [r.c for r in reports]
    nonincreasing = all(b <= a + tol for a, b in zip(values, values[1:]))
    inv = 1.0 / np.array(ns[-3:], dtype=float)
    A = np.stack([np.ones(3), inv], axis=1)
    (c_plus, slope), *_ = np.linalg.lstsq(A, np.array(values[-3:]), rcond=None)
    return CoerciveLimitResult(ns, values, reports, float(c_plus), float(slope), nonincreasing)


# ---------------------------------------------------------------------------
# Monotonicity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MonotonicityVerdict:
    passed: bool
    c1: float
    c2: float


def sample_order(h1: HamiltonianSpec, h2: HamiltonianSpec, samples: int = 10_000, seed: int = 0):
    """Return a point where H1 > H2 (beyond 1e-12), or None."""
    if h1.dimension != h2.dimension:
        raise InputError("Hamiltonians have different dimensions")
    rng = np.random.default_rng(seed)
    N = h1.dimension
    R = min(h1.p_max, h2.p_max)
    x = rng.random((samples, N))
    p = rng.uniform(-R, R, (samples, N))
    if N == 1:
        x, p = x[:, 0], p[:, 0]
    d = h1(x, p) - h2(x, p)
    bad = np.nonzero(d > 1e-12)[0]
    if bad.size:
        i = bad[0]
        return x[i], p[i], float(d[i])
    return None


def monotonicity_check(
    h1: HamiltonianSpec, h2: HamiltonianSpec, m: int = 256, tol: float = 1e-6, seed: int = 0
) -> MonotonicityVerdict:
    """Verify H1 <= H2 by sampling, then c(H1) <= c(H2) + tol."""
    witness = sample_order(h1, h2, seed=seed)
    if witness is not None:
        x, p, d = witness
        raise InputError(f"H1 > H2 at x={np.asarray(x).tolist()}, p={np.asarray(p).tolist()} (by {d!r})")
    c1 = minimax_1d(h1, m, tol).c
    c2 = minimax_1d(h2, m, tol).c
    return MonotonicityVerdict(c1 <= c2 + tol, c1, c2)


# ---------------------------------------------------------------------------
# sup over classical gradients vs. sup over Clarke gradients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClarkeSupVerdict:
    passed: bool
    sup_classical: float
    sup_clarke: float
    tolerance: float


def clarke_sup_equality_check(
    h: HamiltonianSpec, u: GridFunction, samples: int = 64, cell_points: int = 9
) -> ClarkeSupVerdict:
    """Compare sup of H over the graph of cell slopes with sup over Clarke sets.

    The classical side samples each closed cell at ``cell_points`` positions
    with the cell slope.  The Clarke side adds, at every node, ``samples``
    evenly spaced points of the interval spanned by the two adjacent slopes.
    Tolerance is 1e-6 plus the largest change of H between consecutive
    interval samples.
    """
    if h.dimension != 1 or u.dimension != 1:
        raise PreconditionError("clarke_sup_equality_check is 1D")
    m = u.m
    slopes = cell_gradients(u)[0][:, 0]
    t = np.linspace(0.0, 1.0, cell_points)
    xs = (np.arange(m)[:, None] + t[None, :]) / m
    sup_classical = float(np.max(h(xs, np.broadcast_to(slopes[:, None], xs.shape))))

    nodes = np.arange(m) / m
    # Generalized gradient at a node: hull of the two adjacent cell slopes.
    left = np.roll(slopes, 1)
    lo = np.minimum(left, slopes)
    hi = np.maximum(left, slopes)
    s = np.linspace(0.0, 1.0, samples)
    ps = lo[:, None] + s[None, :] * (hi - lo)[:, None]
    vals = h(np.broadcast_to(nodes[:, None], ps.shape), ps)
    sup_clarke = max(sup_classical, float(np.max(vals)))
    modulus = float(np.max(np.abs(np.diff(vals, axis=1)))) if samples > 1 else 0.0
    tolerance = 1e-6 + modulus
    return ClarkeSupVerdict(abs(sup_clarke - sup_classical) <= tolerance, sup_classical, sup_clarke, tolerance)


# ---------------------------------------------------------------------------
# Cross-method comparison
# ---------------------------------------------------------------------------

@dataclass
class Comparison:
    reports: list[EigenvalueReport]
    rough: tuple[float, float]
    verdict: str  # "agree" | "disagree" | "not-asserted"
    banner: str | None = None
    notes: list[str] = field(default_factory=list)
    gap: float | None = None

    @property
    def passed(self) -> bool:
        return self.verdict != "disagree"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "banner": self.banner,
            "rough_bounds": list(self.rough),
            "gap": self.gap,
            "notes": list(self.notes),
            "reports": [r.to_dict() for r in self.reports],
        }


def compare_all(
    h: HamiltonianSpec,
    m: int = 256,
    tol: float = 1e-2,
    *,
    T: float = 50.0,
    n_schedule=DEFAULT_N_SCHEDULE,
    bisection_tol: float = 1e-6,
) -> Comparison:
    """Run the minimax route, the PDE route (or coercive limit), and rough bounds.

    For quasiconvex H the values must agree within ``tol`` and
    lie in the rough bounds (up to ``tol``).  Outside them (no
    quasiconvexity claim) a banner is emitted, the minimax value is labelled
    an upper bound, and only the observed gap is recorded.
    """
    rough = rough_bounds(h, m)
    hypotheses = h.claims_quasiconvex
    reports: list[EigenvalueReport] = []
    notes: list[str] = []
    if h.dimension == 1:
        reports.append(minimax_1d(h, m, bisection_tol))
    else:
        reports.append(minimax_smooth(h, m))
    if not hypotheses and UPPER_BOUND not in reports[0].warnings:
        reports[0].warnings += [HYPOTHESES_VIOLATED, UPPER_BOUND]
    if h.claims_coercive:
        reports.append(pde_eigenvalue(h, m, T))
    elif h.dimension == 1:
        reports.append(coercive_limit(h, n_schedule, m, bisection_tol).report())
    else:
        notes.append("2D non-coercive input: no independent route available")
    values = [r.c for r in reports]
    gap = float(max(values) - min(values))
    if not hypotheses:
        return Comparison(
            reports,
            rough,
            "not-asserted",
            "HYPOTHESES VIOLATED: H is not declared quasiconvex; the minimax value is only an upper bound "
            "and no equality is asserted",
            notes + [f"observed gap between routes: {gap!r}"],
            gap,
        )
    ok = gap <= tol
    for r in reports:
        if CAPPED in r.warnings:
            notes.append(f"{r.method}: capped momentum, rough-bound containment not asserted")
            continue
        if not rough[0] - tol <= r.c <= rough[1] + tol:
            ok = False
            notes.append(f"{r.method}: c={r.c!r} outside rough bounds {rough}")
    return Comparison(reports, rough, "agree" if ok else "disagree", None, notes, gap)
