"""Series-ring unit tests: worked examples plus randomized ring laws."""

import numpy as np
import pytest

from parafatou.series import TruncSeries, SeriesError, approx_equal

N = 12


def S(coeffs, lo=0, order=None):
    t = TruncSeries(lo, coeffs)
    return t.pad_known_zeros(order) if order is not None else t


def rand_series(rng, lo=0, n=8, scale=1.0):
    c = scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return TruncSeries(lo, c)


# ---------------------------------------------------------------- mul

def test_mul_monomials():
    x = TruncSeries.x(N)
    assert approx_equal(x * x, TruncSeries.x(N + 1, power=2).truncate(x.order + 1))


def test_mul_one_plus_x_times_one_minus_x():
    a = S([1, 1])
    b = S([1, -1])
    p = a * b
    assert p.coeff(0) == 1 and p.coeff(1) == 0
    # order is pessimistic: (order 2) * (lo 0) -> 2, so x^2 is unknown
    assert p.order == 2


def test_mul_hand_cauchy():
    a = S([1, -1], lo=1, order=3)   # x - x^2
    b = S([1, 1], lo=1, order=3)    # x + x^2
    p = a * b                       # x^2 - x^4, determined to x^4
    assert p.coeff(2) == 1 and p.coeff(3) == 0
    assert p.order == 4


# ------------------------------------------------------------ compose

def test_compose_identity_inner():
    f = S([1, 1], lo=1)  # x + x^2
    x = TruncSeries.x(N)
    assert approx_equal(f.compose(x), f.truncate(3))


def test_compose_principal_part():
    # 1/(x(1+x)) = x^{-1} - 1 + x - x^2 + ...
    outer = TruncSeries.x(N, power=-1)
    inner = S([1, 1], lo=1, order=N)
    g = outer.compose(inner)
    expect = [1, -1, 1, -1, 1]
    for j, c in enumerate(expect, start=-1):
        assert abs(g.coeff(j) - c * (-1) ** 0) < 1e-13 or abs(g.coeff(j) - c) < 1e-13
    assert abs(g.coeff(-1) - 1) < 1e-14
    assert abs(g.coeff(0) + 1) < 1e-14
    assert abs(g.coeff(1) - 1) < 1e-14
    assert abs(g.coeff(2) + 1) < 1e-14


def test_compose_square():
    outer = TruncSeries.x(N, power=2)
    inner = S([1, -1], lo=1, order=N)  # x - x^2
    g = outer.compose(inner)           # x^2 - 2x^3 + x^4
    assert abs(g.coeff(2) - 1) < 1e-14
    assert abs(g.coeff(3) + 2) < 1e-14
    assert abs(g.coeff(4) - 1) < 1e-14


def test_compose_rejects_constant_term():
    outer = S([1, 1], lo=1)
    inner = S([0.5, 1.0])
    with pytest.raises(SeriesError):
        outer.compose(inner)


# ---------------------------------------------------------- reversion

def test_reversion_identity():
    x = TruncSeries.x(N)
    assert approx_equal(x.reversion(), x)


def test_reversion_catalan():
    f = S([1, 1], lo=1, order=N).pad_known_zeros(N)  # x + x^2 exactly
    g = f.reversion()
    # x - x^2 + 2x^3 - 5x^4 + 14 x^5 (signed Catalan numbers)
    for j, c in [(1, 1), (2, -1), (3, 2), (4, -5), (5, 14)]:
        assert abs(g.coeff(j) - c) < 1e-11


def test_reversion_round_trip_random():
    # spec range ||coeffs|| <= 10; roundoff grows like (1+|c|)^order
    rng = np.random.default_rng(7)
    for scale in (1.0, 10.0):
        for _ in range(10):
            c = rng.uniform(-scale, scale, size=N - 1) + 1j * rng.uniform(-scale, scale, size=N - 1)
            c[0] = 1.0
            f = TruncSeries(1, c)
            g = f.reversion()
            comp = f.compose(g)
            err = comp - TruncSeries.x(comp.order)
            tol = 1e-13 * (1 + scale) ** (N + 2)
            assert err.is_zero() or np.max(np.abs(err.coeffs)) < tol


def test_reversion_zero_linear_coefficient():
    with pytest.raises(SeriesError):
        S([1], lo=2).reversion()


# --------------------------------------------------------- reciprocal

def test_reciprocal_geometric():
    f = S([1, 1]).pad_known_zeros(N)
    g = f.reciprocal()
    for j in range(N - 1):
        assert abs(g.coeff(j) - (-1) ** j) < 1e-13


def test_reciprocal_laurent():
    f = S([-1, 1], lo=2, order=N)    # -x^2 + x^3
    g = f.reciprocal()               # -x^{-2} - x^{-1} - 1 - x - ...
    for j in range(-2, 3):
        assert abs(g.coeff(j) + 1) < 1e-13
    assert g.lo == -2


def test_reciprocal_of_x():
    g = TruncSeries.x(4).reciprocal()
    assert g.lo == -1 and abs(g.coeff(-1) - 1) < 1e-15


def test_reciprocal_zero_series():
    with pytest.raises(SeriesError):
        TruncSeries.zero(5).reciprocal()


# ----------------------------------------------------------- nth_root

def test_sqrt_x_squared():
    f = TruncSeries.x(N, power=2)
    r = f.nth_root(2)
    assert r.lo == 1 and abs(r.coeff(1) - 1) < 1e-14


def test_sqrt_binomial():
    # sqrt(x^2/(1+x)) = x (1+x)^{-1/2} = x - x^2/2 + 3x^3/8 - ...
    f = (TruncSeries.x(N, power=2) * S([1, 1]).pad_known_zeros(N).reciprocal())
    r = f.nth_root(2)
    assert abs(r.coeff(1) - 1) < 1e-13
    assert abs(r.coeff(2) + 0.5) < 1e-13
    assert abs(r.coeff(3) - 3 / 8) < 1e-13


def test_nth_root_round_trip_random():
    rng = np.random.default_rng(11)
    for n in (2, 3, 5):
        c = rng.uniform(-1, 1, size=8) + 1j * rng.uniform(-1, 1, size=8)
        c[0] = 1.5
        f = TruncSeries(n, c) if n != 3 else TruncSeries(0, c)
        r = f.nth_root(n)
        assert approx_equal(r ** n, f, tol=1e-10)


def test_nth_root_bad_valuation():
    with pytest.raises(SeriesError):
        TruncSeries.x(6).nth_root(2)


# ----------------------------------------------------------- calculus

def test_derivative_residue_antiderivative():
    assert approx_equal(TruncSeries.x(5, power=2).derivative(),
                        TruncSeries.x(4, coeff=2.0))
    f = S([-1, -1, -1, -1], lo=-2, order=2)
    assert abs(f.residue() + 1) < 1e-15
    assert approx_equal(S([3], lo=2, order=5).antiderivative(),
                        TruncSeries.x(6, power=3).truncate(6))


def test_antiderivative_rejects_residue():
    with pytest.raises(SeriesError):
        TruncSeries.x(3, power=-1).antiderivative()


def test_residue_of_derivative_is_zero():
    rng = np.random.default_rng(3)
    for _ in range(10):
        f = rand_series(rng, lo=-4, n=9)
        assert abs(f.derivative().residue()) < 1e-12


# ------------------------------------------------------------ exp/log

def test_exp_zero():
    e = TruncSeries.zero(6).exp()
    assert abs(e.coeff(0) - 1) < 1e-15 and e.order == 6


def test_log_mercator():
    f = S([1, 1]).pad_known_zeros(N)
    g = f.log()
    for j in range(1, N - 1):
        assert abs(g.coeff(j) - (-1) ** (j + 1) / j) < 1e-13


def test_exp_log_round_trip():
    f = S([1, 1]).pad_known_zeros(N)
    assert approx_equal(f.log().exp(), f, tol=1e-12)


def test_exp_precondition():
    with pytest.raises(SeriesError):
        S([1.0, 2.0]).exp()


# ------------------------------------------------------ ring law sweep

def test_ring_laws_randomized():
    rng = np.random.default_rng(42)
    for _ in range(20):
        a = rand_series(rng, lo=int(rng.integers(-2, 3)), n=7)
        b = rand_series(rng, lo=int(rng.integers(-2, 3)), n=7)
        c = rand_series(rng, lo=int(rng.integers(-2, 3)), n=7)
        assert approx_equal(a * b, b * a, tol=1e-13)
        assert approx_equal((a * b) * c, a * (b * c), tol=1e-13)
        assert approx_equal(a * (b + c), a * b + a * c, tol=1e-13)


def test_eval_horner_laurent():
    f = S([2, 0, 1], lo=-1, order=2)   # 2/x + x
    z = 0.5 + 0.25j
    assert abs(f.eval(z) - (2 / z + z)) < 1e-14
