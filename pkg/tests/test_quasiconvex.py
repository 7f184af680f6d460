import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hjeigen.errors import InputError
from hjeigen.hamiltonian import QUASICONVEX_CATALOG, catalog, parse_hamiltonian
from hjeigen.quasiconvex import (
    DiscreteMeasure,
    barycenter,
    convex_hull_2d,
    find_violating_measure,
    freeze,
    hull_membership,
    jensen_check,
    project_onto_hull,
)


def f_of(text):
    return freeze(parse_hamiltonian(text, 1, coercive=False), np.zeros(1))


def exhaustive_jensen_violation(f) -> bool:
    """Independent oracle: p, q on a 0.1 grid in [-2, 2], theta on a 0.05 grid."""
    ticks = np.round(np.arange(-20, 21) * 0.1, 12)
    theta = np.arange(21) * 0.05
    P, Q, TH = np.meshgrid(ticks, ticks, theta, indexing="ij")
    mid = f((TH * P + (1 - TH) * Q).reshape(-1, 1)).reshape(P.shape)
    fp = f(P.reshape(-1, 1)).reshape(P.shape)
    fq = f(Q.reshape(-1, 1)).reshape(P.shape)
    return bool(np.any(mid > np.maximum(fp, fq) + 1e-9))


# -- measures -----------------------------------------------------------------

def test_measure_validation():
    with pytest.raises(InputError):
        DiscreteMeasure(np.array([[0.0], [1.0]]), np.array([0.5, 0.6]))
    with pytest.raises(InputError):
        DiscreteMeasure(np.array([[0.0], [1.0]]), np.array([1.5, -0.5]))
    with pytest.raises(InputError):
        DiscreteMeasure(np.zeros((0, 1)), np.zeros(0))


@pytest.mark.parametrize(
    "points, weights, expected",
    [
        ([[0.0], [1.0]], [0.5, 0.5], [0.5]),
        ([[-1.0], [1.0]], [0.5, 0.5], [0.0]),
        ([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]], [1 / 3, 1 / 3, 1 / 3], [1 / 3, 1 / 3]),
    ],
)
def test_barycenter_examples(points, weights, expected):
    mu = DiscreteMeasure(np.array(points), np.array(weights))
    np.testing.assert_allclose(barycenter(mu), expected, atol=1e-15)


@given(st.integers(1, 8), st.integers(1, 2), st.integers(0, 2**32 - 1))
def test_barycenter_in_box(k, dim, seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-3, 3, (k, dim))
    w = rng.random(k) + 1e-3
    e = barycenter(DiscreteMeasure(pts, w / w.sum()))
    assert np.all(e >= pts.min(axis=0) - 1e-12) and np.all(e <= pts.max(axis=0) + 1e-12)


# -- hulls and separation -------------------------------------------------------

def test_hull_examples():
    r = hull_membership(np.array([[0.0], [1.0]]), np.array([2.0]))
    assert r.status == "separated"
    np.testing.assert_allclose(r.direction, [1.0])
    assert r.offset == 1.0 and r.margin == 1.0
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    assert hull_membership(tri, np.array([0.25, 0.25])).inside
    r = hull_membership(tri, np.array([1.0, 1.0]))
    assert not r.inside
    np.testing.assert_allclose(r.direction, [0.5, 0.5], atol=1e-15)
    assert r.offset == pytest.approx(0.5, abs=1e-15)
    assert r.verify(tri, np.array([1.0, 1.0]))


def test_convex_hull_ccw_and_degenerate():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5]], dtype=float)
    hull = convex_hull_2d(sq)
    assert len(hull) == 4
    area = 0.5 * sum(a[0] * b[1] - b[0] * a[1] for a, b in zip(hull, np.roll(hull, -1, axis=0)))
    assert area == pytest.approx(1.0)
    assert len(convex_hull_2d(np.array([[1.0, 1.0], [1.0, 1.0]]))) == 1
    assert len(convex_hull_2d(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]))) == 2


@given(st.integers(1, 2), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_convex_combinations_inside(dim, k, seed):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(k, dim))
    w = rng.dirichlet(np.ones(k))
    assert hull_membership(pts, w @ pts).inside


@given(st.integers(1, 2), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_separation_certificates_verify(dim, k, seed):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(k, dim))
    e = rng.normal(scale=3.0, size=dim)
    r = hull_membership(pts, e)
    if r.inside:
        assert np.linalg.norm(project_onto_hull(pts, e) - e) <= 1e-9
        return
    assert r.margin > 0
    assert np.all(pts @ r.direction <= r.offset + 1e-9)
    assert e @ r.direction >= r.offset + r.margin
    assert r.verify(pts, e)


# -- Jensen-type inequality -----------------------------------------------------

def test_jensen_examples():
    v = jensen_check(f_of("abs(p)"), DiscreteMeasure(np.array([[-2.0], [2.0]]), np.array([0.5, 0.5])))
    assert v.holds and v.lhs == 0.0 and v.rhs == 2.0
    v = jensen_check(f_of("(p^2-1)^2"), DiscreteMeasure(np.array([[-1.0], [1.0]]), np.array([0.5, 0.5])))
    assert not v.holds and v.lhs == 1.0 and v.rhs == 0.0
    v = jensen_check(f_of("sqrt(abs(p))"), DiscreteMeasure(np.array([[0.0], [4.0]]), np.array([0.75, 0.25])))
    assert v.holds and v.lhs == 1.0 and v.rhs == 2.0


def test_zero_weight_points_ignored():
    f = f_of("(p^2-1)^2")
    mu = DiscreteMeasure(np.array([[-1.0], [1.0], [0.0]]), np.array([0.5, 0.5, 0.0]))
    assert not jensen_check(f, mu).holds


def test_jensen_accepts_hamiltonian():
    mu = DiscreteMeasure(np.array([[-1.0], [1.0]]), np.array([0.5, 0.5]))
    assert not jensen_check(catalog("double-well"), mu).holds


@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_jensen_permutation_and_merging(k, seed):
    rng = np.random.default_rng(seed)
    f = f_of("(p^2-1)^2")
    pts = rng.uniform(-2, 2, (k, 1))
    w = rng.dirichlet(np.ones(k))
    base = jensen_check(f, DiscreteMeasure(pts, w))
    perm = rng.permutation(k)
    permuted = jensen_check(f, DiscreteMeasure(pts[perm], w[perm]))
    assert permuted.holds == base.holds and permuted.rhs == base.rhs
    assert permuted.lhs == pytest.approx(base.lhs, abs=1e-12)
    split = DiscreteMeasure(np.concatenate([pts, pts[:1]]), np.concatenate([w[:1] / 2, w[1:], w[:1] / 2]))
    merged = jensen_check(f, split)
    assert merged.holds == base.holds
    assert merged.rhs == base.rhs and merged.lhs == pytest.approx(base.lhs, abs=1e-12)


def test_exhaustive_oracle_agrees_with_examples():
    assert exhaustive_jensen_violation(f_of("(p^2-1)^2"))
    assert not exhaustive_jensen_violation(freeze(catalog("tanh"), np.zeros(1)))
    assert not exhaustive_jensen_violation(f_of("abs(p)^2"))


def test_find_violating_measure_examples():
    mu = find_violating_measure(f_of("(p^2-1)^2"), 1000, seed=0)
    assert mu is not None and not jensen_check(f_of("(p^2-1)^2"), mu).holds
    assert find_violating_measure(f_of("abs(p)^2"), 1000, seed=0) is None
    assert find_violating_measure(freeze(catalog("tanh"), np.zeros(1)), 1000, seed=0) is None


def test_find_violating_measure_2d():
    h = catalog("double-well", dimension=2)
    mu = find_violating_measure(freeze(h, np.zeros(2)), 1000, seed=1, dimension=2)
    assert mu is not None and mu.points.shape[1] == 2


@pytest.mark.parametrize("name", QUASICONVEX_CATALOG)
def test_quasiconvex_profiles_hold_on_random_measures(name, rng):
    h = catalog(name)
    for x in (0.0, 0.13, 0.5, 0.77):
        f = freeze(h, np.array([x]))
        for _ in range(200):
            k = int(rng.integers(1, 9))
            mu = DiscreteMeasure(rng.uniform(-10, 10, (k, 1)), rng.dirichlet(np.ones(k)))
            assert jensen_check(f, mu).holds
