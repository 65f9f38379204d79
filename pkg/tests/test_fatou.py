"""Formal and sectorial Fatou coordinates, Borel kernels."""

import numpy as np
import pytest
from scipy.special import exp1

from parafatou.germ import ParabolicGerm
from parafatou.fatou import (FormalFatou, FatouEvaluator, borel_monomial,
                             borel_tail, SymbolicDirac, FatouError)
from parafatou.contour import ray_integral

N = 40


def model(k=1, a=-1.0, order=N):
    return ParabolicGerm.model_of(k, a, order)


CORPUS = [
    model(),
    ParabolicGerm.from_coefficients([1, 1], N=N),
    ParabolicGerm.from_coefficients([1, -1, 0.2], N=N),
    ParabolicGerm.from_coefficients([1, -1, 0.3, -0.1], N=N),
]


# ---------------------------------------------------------------- formal

def test_formal_model_is_t():
    F = FormalFatou(model())
    assert abs(F.principal[0] - 1.0) < 1e-13      # t(x) = 1/x for k=1,a=-1
    assert abs(F.rho) < 1e-13
    assert np.all(np.abs(F.tail) < 1e-11)


def test_formal_x_plus_x2():
    F = FormalFatou(ParabolicGerm.from_coefficients([1, 1], N=N))
    assert abs(F.principal[0] + 1.0) < 1e-13      # r_{-1} = -1/a = -1
    assert abs(F.rho - 1.0) < 1e-13


def test_formal_abel_residual_series():
    for g in CORPUS:
        F = FormalFatou(g)
        res = F.abel_residual_series()
        if not res.is_zero():
            scale = max(1.0, float(np.max(np.abs(F.tail))) if len(F.tail) else 1.0)
            assert res.lo >= res.order - 2 * g.k - 2 or \
                np.max(np.abs(res.coeffs)) < 1e-10 * scale


def test_formal_truncated_eval_model():
    F = FormalFatou(model())
    assert abs(F.eval_truncated(0.5, 0) - 2.0) < 1e-13
    assert abs(F.eval_truncated(0.5, 5) - 2.0) < 1e-11


# --------------------------------------------------------------- sectorial

def test_sectorial_model_is_shifted_t():
    g = model()
    E = FatouEvaluator(g, x0=complex(g.x_of_t(3.0)))  # t(x0) = 3
    assert abs(E.psi(1.0 / 5.0) - 2.0) < 1e-11        # t = 5, psi = t - 3
    assert abs(E.psi(complex(g.x_of_t(7.5))) - 4.5) < 1e-11
    # analytic normalization reproduces the t0 = 1 convention
    E1 = FatouEvaluator(g, x0=complex(g.x_of_t(1.0)), psi_norm=1.0)
    assert abs(E1.psi(1.0 / 3.0) - 2.0) < 1e-11


def test_abel_equation_corpus():
    rng = np.random.default_rng(2)
    for g in CORPUS:
        x0 = 0.3 if g.a == -1 else -0.3
        E = FatouEvaluator(g, x0=x0)
        for _ in range(20):
            r = rng.uniform(0.05, 0.3)
            th = rng.uniform(-0.5, 0.5)
            x = x0 * np.exp(1j * th) * r / 0.3
            assert abs(E.abel_residual(x)) < 1e-8


def test_psi_on_orbit_points():
    g = ParabolicGerm.from_coefficients([1, -1, 0.2], N=N)
    orb = g.iterate_orbit(0.3, 100)
    E = FatouEvaluator(g, x0=orb.x0)
    vals = E.psi(orb.points)
    assert np.max(np.abs(vals - np.arange(101))) < 1e-8


def test_acceleration_consistency():
    g = ParabolicGerm.from_coefficients([1, -1, 0.2], N=N)
    E1 = FatouEvaluator(g, x0=0.3, J_max=6)
    E2 = FatouEvaluator(g, x0=0.3, J_max=8)
    for x in (0.25, 0.1, 0.2 + 0.05j):
        assert abs(E1.psi(x) - E2.psi(x)) < 1e-8


def test_fatou_inverse_model_orbit():
    g = model()
    E = FatouEvaluator(g, x0=complex(g.x_of_t(1.0)), psi_norm=1.0)
    for n in (1, 2, 5, 9):
        assert abs(E.inverse(float(n)) - 1.0 / (n + 1)) < 1e-9


def test_fatou_inverse_round_trip():
    g = ParabolicGerm.from_coefficients([1, -1, 0.2], N=N)
    E = FatouEvaluator(g, x0=0.25)
    taus = np.array([0.5 + 0.2j, 2.0, 5.0 - 3.0j, 10.0 + 10.0j])
    xs = E.inverse(taus)
    assert np.max(np.abs(E.psi(xs) - taus)) < 1e-9


def test_reconstruction_identity():
    # fatou_inverse(psi(x)+1) = f(x)
    g = ParabolicGerm.from_coefficients([1, -1, 0.3, -0.1], N=N)
    E = FatouEvaluator(g, x0=0.25)
    for x in (0.2, 0.15 + 0.04j):
        lhs = E.inverse(E.psi(x) + 1.0)
        assert abs(lhs - g.eval(x)) < 1e-8


def test_dpsi_model_and_fd():
    g = model()
    E = FatouEvaluator(g, x0=complex(g.x_of_t(1.0)), psi_norm=1.0)
    assert abs(E.dpsi(0.5) + 4.0) < 1e-9          # psi' = -1/x^2
    g2 = ParabolicGerm.from_coefficients([1, -1, 0.2], N=N)
    E2 = FatouEvaluator(g2, x0=0.25)
    x, h = 0.2, 1e-6
    fd = (E2.psi(x + h) - E2.psi(x - h)) / (2 * h)
    assert abs(E2.dpsi(x) - fd) < 1e-6


def test_abel_derivative_identity():
    g = ParabolicGerm.from_coefficients([1, -1, 0.2], N=N)
    E = FatouEvaluator(g, x0=0.25)
    for x in (0.2, 0.12):
        lhs = E.dpsi(g.eval(x)) * g.deriv_eval(x)
        assert abs(lhs - E.dpsi(x)) < 1e-8


def test_repelling_coordinate_abel():
    # psi_minus(f(x)) = psi_minus(x) + 1 near the repelling axis
    g = ParabolicGerm.from_coefficients([1, -1, 0.2], N=N)
    E = FatouEvaluator(g, x0=0.25, log_cut=-np.pi / 2)
    for x in (-0.15 + 0.1j, -0.1 + 0.12j):
        lhs = E.psi_minus_can(g.eval(x))
        rhs = E.psi_minus_can(x) + 1.0
        assert abs(lhs - rhs) < 1e-8


# ------------------------------------------------------------------ Borel

def test_borel_monomial_constants():
    # nu = k: minor = 1/(ak), constant in s
    for (k, a) in [(1, -1.0), (2, -1.0 + 0.3j), (3, 2.0)]:
        v = borel_monomial(k, 0.3 + 0.1j, np.pi, k, a, kind="minor")
        assert abs(v - 1.0 / (a * k)) < 1e-12
        v2 = borel_monomial(2 * k, 0.4j, np.pi, k, a, kind="minor")
        assert abs(v2 - 0.4j / (a * k) ** 2) < 1e-12


def test_borel_monomial_dirac():
    d = borel_monomial(-1, 0.1, np.pi, 1, -1.0, kind="minor")
    assert isinstance(d, SymbolicDirac)
    assert d.order == 1 and abs(d.scale - (-1.0)) < 1e-14
    d0 = borel_monomial(0, 0.1, np.pi, 2, 1.0, kind="minor")
    assert d0.order == 0


def test_borel_tail_model_zero():
    F = FormalFatou(model())
    v, err = borel_tail(F, 0.3, np.pi)
    assert abs(v) < 1e-10


def test_borel_tail_linearity():
    g = ParabolicGerm.from_coefficients([1, -1, 0.2], N=N)
    F = FormalFatou(g)
    s = 0.2 + 0.1j
    v1, _ = borel_tail(F, s, np.pi, J=6)
    v2, _ = borel_tail(F, s, np.pi, J=6)
    assert v1 == v2  # deterministic
    # linearity: scaling the tail scales the transform
    import copy
    F2 = copy.copy(F)
    F2.tail = 2.0 * F.tail
    v3, _ = borel_tail(F2, s, np.pi, J=6)
    assert abs(v3 - 2 * v1) < 1e-12 * max(1.0, abs(v1))


def test_major_borel_of_log_t_is_exp1():
    """Remark-2.4 identity: (1/2pi i) int_{1-e^{-i a}R+} log t e^{-st} dt = E1(s)/(2pi i s)."""
    alpha = np.pi
    for s in (0.7, 1.3 + 0.4j, 2.0 - 0.3j):
        F = lambda t: np.log(t) * np.exp(-s * t)
        res = ray_integral(F, 1.0, -(-alpha) - np.pi, quad_tol=1e-12)
        # ray 1 - e^{-i alpha} R_{>=0} = 1 + e^{i(pi - alpha)} R_{>=0}; alpha=pi -> 1 + R_{>=0}
        val = res.value / (2j * np.pi)
        expect = exp1(s) / (2j * np.pi * s)
        assert abs(val - expect) < 1e-8
