"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (lines appear in the
"acceptance criteria" summary section) or ``python tests/test_acceptance.py``.
"""

import json
import sys
import time

import numpy as np
import pytest

from hjeigen.cli import run
from hjeigen.eigenvalue import (
    clarke_sup_equality_check,
    coercive_limit,
    compare_all,
    minimax_1d,
    minimax_smooth,
    monotonicity_check,
    pde_eigenvalue,
    rough_bounds,
)
from hjeigen.eigenvalue.report import HYPOTHESES_VIOLATED, UPPER_BOUND
from hjeigen.hamiltonian import CATALOG, QUASICONVEX_CATALOG, add_term, catalog, parse_hamiltonian
from hjeigen.lipschitz import GridFunction, mollification_convergence_check, tent
from hjeigen.quasiconvex import DiscreteMeasure, find_violating_measure, freeze, hull_membership, jensen_check

BISECTION_TOL = 1e-6


def timed(f, *args, **kwargs):
    t0 = time.perf_counter()
    out = f(*args, **kwargs)
    return out, time.perf_counter() - t0


def random_quasiconvex_expression(rng) -> str:
    """w(x) * phi(|p - s(x)|) + V(x) with w > 0 and phi increasing: sublevel sets are intervals."""
    k, k2 = rng.integers(1, 3, 2)
    b, a = rng.uniform(-2, 2), rng.uniform(-1, 1)
    w0 = rng.uniform(0.5, 2.0)
    w1 = rng.uniform(0, 0.4) * w0
    t = f"abs(p - {b:.4f}*sin(2*pi*{k}*x))"
    phi = rng.choice([t, f"({t})^2", f"sqrt({t})", f"min({t}, {rng.uniform(0.5, 2):.3f})", f"{t}*tanh({t})"])
    return f"({w0:.4f} + {w1:.4f}*sin(2*pi*x)) * {phi} + {a:.4f}*cos(2*pi*{k2}*x)"


# ---------------------------------------------------------------------------

def test_criterion_01_known_value(record):
    h = catalog("quadratic+potential")
    r1, t1 = timed(minimax_1d, h, 256, BISECTION_TOL)
    r2, t2 = timed(pde_eigenvalue, h, 256, 50.0)
    ok = abs(r1.c - 1) <= 1e-3 and t1 < 1 and abs(r2.c - 1) <= 1e-2 and t2 < 10
    assert record(1, ok, f"minimax c={r1.c:.6f} ({t1:.2f}s), pde c={r2.c:.6f} ({t2:.2f}s incl. compile)")


def test_criterion_02_nontrivial_optimizer(record):
    r, t = timed(minimax_1d, catalog("transport"), 256, BISECTION_TOL)
    x = np.arange(256) / 256
    target = -np.cos(2 * np.pi * x) / np.pi
    u = r.optimizer.values
    err = float(np.max(np.abs((u - u.mean()) - (target - target.mean()))))
    ok = abs(r.c) <= 1e-3 and err <= 1e-2 and t < 1
    assert record(2, ok, f"c={r.c:.2e}, |u - u*|_inf={err:.2e} ({t:.2f}s)")


def test_criterion_03_smooth_equals_lipschitz(record):
    t0 = time.perf_counter()
    gaps = {}
    for name in QUASICONVEX_CATALOG:
        h = catalog(name)
        gaps[name] = abs(minimax_smooth(h, 256).c - minimax_1d(h, 256, BISECTION_TOL).c)
    elapsed = time.perf_counter() - t0
    worst = max(gaps.values())
    ok = worst <= 5e-3 and elapsed < 30
    assert record(3, ok, f"max |smooth - lipschitz| = {worst:.2e} over {len(gaps)} entries ({elapsed:.1f}s)")


def test_criterion_04_rough_bounds(record):
    t0 = time.perf_counter()
    m = 128
    rng = np.random.default_rng(2024)
    checked, failures = 0, []

    def check(label, rep, h):
        nonlocal checked
        if rep.capped:
            return
        lo, hi = rough_bounds(h, m)
        checked += 1
        if not lo - BISECTION_TOL <= rep.c <= hi + BISECTION_TOL:
            failures.append((label, rep.c, lo, hi))

    for name in CATALOG:
        h = catalog(name)
        check(name + "/minimax", minimax_1d(h, m, BISECTION_TOL), h)
        if h.claims_quasiconvex:
            check(name + "/smooth", minimax_smooth(h, m), h)
        if h.claims_coercive:
            check(name + "/pde", pde_eigenvalue(h, m, 25.0), h)
        elif h.claims_quasiconvex:
            check(name + "/coercive-limit", coercive_limit(h, m=m, tol=BISECTION_TOL).report(), h)
    for i in range(20):
        text = random_quasiconvex_expression(rng)
        h = parse_hamiltonian(text, 1, quasiconvex=True)
        check(f"random[{i}]", minimax_1d(h, m, BISECTION_TOL), h)
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 60
    assert record(4, ok, f"{checked} uncapped eigenvalues inside rough bounds, {len(failures)} outside ({elapsed:.1f}s)")


def test_criterion_05_monotonicity(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    passed = 0
    for _ in range(20):
        h = parse_hamiltonian(random_quasiconvex_expression(rng), 1, quasiconvex=True)
        a, b, k = rng.uniform(0, 0.5), rng.uniform(0, 1), rng.integers(1, 4)
        h2 = add_term(h, f"{a:.4f} + {b:.4f}*sin(2*pi*{k}*x)^2")
        passed += monotonicity_check(h, h2, 128, 1e-6).passed
    elapsed = time.perf_counter() - t0
    ok = passed == 20 and elapsed < 60
    assert record(5, ok, f"{passed}/20 pairs satisfy c(h) <= c(h + delta) + 1e-6 ({elapsed:.1f}s)")


def test_criterion_06_coercive_limit(record):
    t0 = time.perf_counter()
    sat = coercive_limit(catalog("saturated-transport"), (5, 10, 20, 40, 80), 256, BISECTION_TOL)
    th = coercive_limit(catalog("tanh"), (5, 10, 20, 40, 80), 256, BISECTION_TOL)
    elapsed = time.perf_counter() - t0
    tanh_zero = all(abs(c) <= BISECTION_TOL for c in th.values)
    ok = sat.nonincreasing and abs(sat.c_plus) <= 5e-3 and tanh_zero and elapsed < 10
    assert record(
        6, ok, f"saturated c_n={[round(c, 6) for c in sat.values]} -> {sat.c_plus:.2e}; tanh all zero={tanh_zero} "
        f"({elapsed:.1f}s)"
    )


def test_criterion_07_jensen(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    violations = 0
    for name in QUASICONVEX_CATALOG:
        h = catalog(name)
        for x in rng.random(10):
            f = freeze(h, np.array([x]))
            for _ in range(1000):
                k = int(rng.integers(1, 9))
                mu = DiscreteMeasure(rng.uniform(-10, 10, (k, 1)), rng.dirichlet(np.ones(k)))
                violations += not jensen_check(f, mu).holds
    dw = freeze(catalog("double-well"), np.zeros(1))
    found = sum(find_violating_measure(dw, 1000, seed) is not None for seed in range(50))
    elapsed = time.perf_counter() - t0
    ok = violations == 0 and found == 50 and elapsed < 10
    assert record(7, ok, f"{violations} violations on 5x10^4 measures; double-well witness at {found}/50 seeds "
                         f"({elapsed:.1f}s)")


def test_criterion_08_separation(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    bad = 0
    separated = 0
    for i in range(1000):
        dim = 1 + i % 2
        pts = rng.normal(size=(int(rng.integers(1, 10)), dim))
        e = rng.normal(scale=2.0, size=dim)
        r = hull_membership(pts, e)
        stored = json.loads(json.dumps(r.to_dict()))
        if stored["status"] == "inside":
            continue
        separated += 1
        v = np.array(stored["direction"])
        a_sep, margin = stored["offset"], stored["margin"]
        if not (margin > 0 and np.all(pts @ v <= a_sep + 1e-9) and float(e @ v) >= a_sep + margin):
            bad += 1
    elapsed = time.perf_counter() - t0
    ok = bad == 0 and elapsed < 5
    assert record(8, ok, f"{separated} separations re-verified from stored JSON, {bad} failures ({elapsed:.2f}s)")


def test_criterion_09_mollification(record):
    t0 = time.perf_counter()
    u = tent(512)
    schedule = [4, 8, 16, 32]
    kinks = [mollification_convergence_check(u, schedule, x) for x in (0.0, 0.5)]
    floor = 2 / u.m * u.lipschitz_constant()
    kinks_ok = all(d <= floor for rep in kinks for d in rep.distances)
    interior = mollification_convergence_check(u, schedule, 0.25)
    mono = all(b <= a for a, b in zip(interior.distances, interior.distances[1:]))
    elapsed = time.perf_counter() - t0
    ok = kinks_ok and mono and elapsed < 5
    assert record(9, ok, f"kink distances <= {floor:.4f}: {kinks_ok}; x=0.25 distances "
                         f"{[f'{d:.1e}' for d in interior.distances]} nonincreasing: {mono} ({elapsed:.2f}s)")


def test_criterion_10_clarke_sup(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    m = 128
    hs = [catalog(name) for name in QUASICONVEX_CATALOG]
    passed = total = 0
    for _ in range(20):
        knots = np.sort(rng.choice(np.arange(1, m), int(rng.integers(2, 8)), replace=False))
        slopes = rng.uniform(-4, 4, len(knots) + 1)
        g = np.repeat(slopes, np.diff(np.concatenate([[0], knots, [m]])))
        g -= g.mean()
        u = GridFunction(np.concatenate([[0.0], np.cumsum(g)[:-1]]) / m)
        for h in hs:
            total += 1
            passed += clarke_sup_equality_check(h, u).passed
    elapsed = time.perf_counter() - t0
    ok = passed == total == 100 and elapsed < 10
    assert record(10, ok, f"{passed}/{total} (u, H) pairs equal ({elapsed:.2f}s)")


def test_criterion_11_out_of_hypothesis(record, tmp_path, capsys):
    h = catalog("double-well", amp=0.5)
    cmp = compare_all(h, 256)
    mm = cmp.reports[0]
    labelled = HYPOTHESES_VIOLATED in mm.warnings and UPPER_BOUND in mm.warnings
    code = run(["compare", "--catalog", "double-well", "--amp", "0.5", "--m", "256", "--out", str(tmp_path / "d.json")])
    out = capsys.readouterr().out
    ok = (
        cmp.verdict == "not-asserted"
        and cmp.banner is not None
        and labelled
        and code == 0
        and "HYPOTHESES VIOLATED" in out
        and "(upper bound)" in out
    )
    assert record(11, ok, f"banner emitted, minimax {mm.c:.4f} labelled upper bound, observed gap {cmp.gap:.4f}, "
                          f"exit {code}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
