import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hjeigen.errors import EvaluationDomainError, InputError, PreconditionError, UnknownIdentifierError
from hjeigen.hamiltonian import (
    CATALOG,
    QUASICONVEX_CATALOG,
    catalog,
    check_quasiconvexity,
    coercive_regularize,
    evaluate,
    minimize_momentum,
    parse_hamiltonian,
    sublevel_interval,
    sublevel_intervals,
)

# Root of r*tanh(1/r) = 1/2, computed once with scipy.optimize.brentq on [0.1, 2].
TANH_HALF_ROOT = 0.5221910168804168


def test_catalog_examples():
    assert evaluate(catalog("quadratic+potential"), 0.25, 0.0) == pytest.approx(1.0, abs=1e-15)
    assert evaluate(catalog("tanh", sigma=1, ps=1), 0.3, 0.0) == 0.0
    assert evaluate(catalog("double-well"), 0.7, 1.0) == 0.0


def test_catalog_two_dimensional():
    h = catalog("quadratic+potential", dimension=2)
    assert h(np.array([0.25, 0.25]), np.array([0.0, 0.0])) == pytest.approx(1.0)
    assert h(np.array([0.1, 0.4]), np.array([3.0, 4.0])) == pytest.approx(25 + np.sin(0.2 * np.pi) * np.sin(0.8 * np.pi))


def test_catalog_rejects_bad_parameters():
    with pytest.raises(InputError):
        catalog("nope")
    with pytest.raises(InputError):
        catalog("tanh", eps=0.3)
    with pytest.raises(InputError):
        catalog("transport", sigma=1)


def test_momentum_range_precondition():
    with pytest.raises(PreconditionError):
        evaluate(catalog("transport"), 0.0, 101.0)


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_periodic_in_x(name, rng):
    # Dyadic nodes make the shift by 1 exact in floating point.
    h = catalog(name)
    x = rng.integers(0, 1024, 200) / 1024
    p = rng.uniform(-10, 10, 200)
    np.testing.assert_array_equal(h(x, p), h(x + 1.0, p))
    y = rng.random(200)
    np.testing.assert_allclose(h(y, p), h(y + 1.0, p), rtol=0, atol=1e-12)


def test_expression_periodic():
    h = parse_hamiltonian("abs(p)^2 + cos(2*pi*x)*sin(4*pi*x)", 1, coercive=True)
    x = np.linspace(0, 1, 101)
    np.testing.assert_allclose(h(x, 0.7), h(x + 3.0, 0.7), atol=1e-12)


def test_parse_matches_catalog(rng):
    h = parse_hamiltonian("abs(p)^2 + sin(2*pi*x)", 1)
    c = catalog("quadratic+potential")
    x, p = rng.random(500), rng.uniform(-10, 10, 500)
    np.testing.assert_allclose(h(x, p), c(x, p), rtol=1e-14, atol=1e-12)
    assert h.claims_coercive


def test_parse_examples():
    h = parse_hamiltonian("abs(p1 - 2*sin(2*pi*x1))", 2)
    assert h.dimension == 2
    with pytest.raises(UnknownIdentifierError):
        parse_hamiltonian("abs(q)", 1)
    with pytest.raises(UnknownIdentifierError):
        parse_hamiltonian("p2", 1)
    bounded = parse_hamiltonian("min(abs(p), 1) + 0", 1)
    assert not bounded.claims_coercive


def test_evaluation_domain_error():
    h = parse_hamiltonian("1/p", 1, coercive=False)
    with pytest.raises(EvaluationDomainError):
        h(0.0, 0.0)


def test_tanh_continuous_at_zero():
    h = catalog("tanh")
    assert h(0.1, 1e-12) == pytest.approx(0.0, abs=1e-11)


# -- quasiconvexity sampler ---------------------------------------------------

def test_quasiconvexity_examples():
    assert check_quasiconvexity(parse_hamiltonian("abs(p)^2 + sin(2*pi*x)"), 10_000, 0).passed
    assert check_quasiconvexity(parse_hamiltonian("min(abs(p), 1) + sin(2*pi*x)"), 10_000, 0).passed
    v = check_quasiconvexity(parse_hamiltonian("(p^2-1)^2"), 10_000, 0)
    assert not v.passed
    assert v.values[0] > max(v.values[1], v.values[2]) + 1e-9
    assert v.to_dict()["verdict"] == "witness"


def test_bounded_capped_exhaustive_theta_grid(rng):
    # Independent check for min(|p|,1)+sin: 100 random (x, p, q) on a 101-point theta grid.
    h = catalog("capped-potential")
    theta = np.linspace(0, 1, 101)
    for _ in range(100):
        x = rng.random()
        p, q = rng.uniform(-10, 10, 2)
        mid = h(np.full(101, x), theta * p + (1 - theta) * q)
        assert np.all(mid <= max(h(x, p), h(x, q)) + 1e-12)


@pytest.mark.parametrize("name", QUASICONVEX_CATALOG)
def test_catalog_quasiconvex_entries_pass(name):
    assert check_quasiconvexity(catalog(name), 5000, 3).passed


def test_double_well_fails_sampler():
    assert not check_quasiconvexity(catalog("double-well"), 10_000, 0).passed


# -- coercive regularization --------------------------------------------------

def test_regularize_examples():
    h = catalog("tanh")
    h10 = coercive_regularize(h, 10)
    assert h10(0.0, 2.0) == pytest.approx(h(0.0, 2.0) + 0.2, abs=1e-15)
    assert h10.claims_coercive
    one = coercive_regularize(parse_hamiltonian("abs(p)"), 1)
    assert one(0.3, -1.5) == pytest.approx(3.0)
    assert check_quasiconvexity(one, 5000, 0).passed


def test_regularize_rejects_n():
    with pytest.raises(PreconditionError):
        coercive_regularize(catalog("tanh"), 0)


@pytest.mark.parametrize("name", ["tanh", "capped-potential", "quadratic+potential"])
@pytest.mark.parametrize("n", [1, 10, 100])
def test_regularized_radial_entries_stay_quasiconvex(name, n):
    hn = coercive_regularize(catalog(name), n)
    assert hn.claims_quasiconvex
    assert check_quasiconvexity(hn, 4000, n).passed


def test_regularization_can_break_quasiconvexity():
    # min(|p-5|, 1) is quasiconvex; adding |p|/5 leaves local minima at p=0 and p=5.
    h = parse_hamiltonian("min(abs(p - 5), 1)", coercive=False)
    assert check_quasiconvexity(h, 4000, 0).passed
    hn = coercive_regularize(h, 5)
    assert hn(0.0, 4.0) > max(hn(0.0, 0.0), hn(0.0, 5.0))
    assert not hn.claims_quasiconvex


@given(st.integers(1, 50), st.integers(0, 10_000))
def test_regularization_order(n, seed):
    rng = np.random.default_rng(seed)
    h = catalog("saturated-transport")
    x, p = rng.random(100), rng.uniform(-10, 10, 100)
    hn, hn1 = coercive_regularize(h, n)(x, p), coercive_regularize(h, n + 1)(x, p)
    assert np.all(hn >= h(x, p))
    assert np.all(hn1 <= hn)


# -- momentum minimization and sublevel intervals ------------------------------

@pytest.mark.parametrize("name", QUASICONVEX_CATALOG)
def test_ternary_result_below_endpoints(name, rng):
    h = catalog(name)
    x = rng.random(64)
    _, v = minimize_momentum(h, x)
    assert np.all(v <= h(x, np.full(64, -10.0)) + 1e-12)
    assert np.all(v <= h(x, np.full(64, 10.0)) + 1e-12)


def test_sublevel_examples():
    h = parse_hamiltonian("abs(p)^2")
    iv = sublevel_interval(h, 0.3, 4.0)
    assert iv.lo == pytest.approx(-2.0, abs=1e-8) and iv.hi == pytest.approx(2.0, abs=1e-8)
    assert not iv.unbounded_lo and not iv.unbounded_hi
    assert sublevel_interval(catalog("quadratic+potential"), 0.25, 0.5).empty


def test_sublevel_tanh_against_root_oracle():
    iv = sublevel_interval(catalog("tanh", sigma=1, ps=1), 0.6, 0.5)
    assert iv.hi == pytest.approx(TANH_HALF_ROOT, abs=1e-8)
    assert iv.lo == pytest.approx(-TANH_HALF_ROOT, abs=1e-8)


def test_sublevel_unbounded_sides_capped():
    iv = sublevel_interval(catalog("capped-potential"), 0.75, 0.5)
    assert iv.unbounded_lo and iv.unbounded_hi
    assert (iv.lo, iv.hi) == (-10.0, 10.0)


def test_sublevel_endpoints_are_feasible():
    h = catalog("transport")
    x = np.linspace(0, 1, 32, endpoint=False)
    iv = sublevel_intervals(h, x, 0.3)
    assert np.all(h(x, iv.lo) <= 0.3 + 1e-10)
    assert np.all(h(x, iv.hi) <= 0.3 + 1e-10)
    assert np.all(np.abs(h(x, iv.lo) - 0.3) <= 1e-10)


@given(st.floats(0, 1, exclude_max=True), st.floats(-1, 5), st.floats(-1, 5))
def test_sublevel_monotone_in_level(x, a1, a2):
    a1, a2 = sorted((a1, a2))
    h = catalog("quadratic+potential")
    i1, i2 = sublevel_interval(h, x, a1), sublevel_interval(h, x, a2)
    if i1.empty:
        return
    assert not i2.empty
    assert i2.lo <= i1.lo + 1e-9 and i1.hi <= i2.hi + 1e-9
