"""Parabolic germs f(x) = x + a x^{k+1} + h.o.t., their orbits and formal data.

A germ is stored as a truncated series with unit linear part.  The
module provides the model germ (time-1 flow of a x^{k+1} d/dx), orbit
iteration with petal checks, the iterative residue, prenormalization,
the conjugacy phi with phi^{k+1} = (f-x)/a, the formal infinitesimal
generator, and model-parameter estimation from orbit asymptotics.
"""

from __future__ import annotations

import json
import cmath
import numpy as np

from .series import TruncSeries, SeriesError


class GermError(ValueError):
    pass


class OrbitError(RuntimeError):
    pass


def _binomial_series(alpha, n):
    """Coefficients of (1+y)^alpha up to y^{n-1}."""
    b = np.zeros(n, dtype=complex)
    b[0] = 1.0
    for j in range(1, n):
        b[j] = b[j - 1] * (alpha - (j - 1)) / j
    return b


class ParabolicGerm:
    """Tangent-to-identity germ with parabolic multiplicity k and leading
    nonlinear coefficient a.

    Attributes
    ----------
    k : int
    a : complex
    series : TruncSeries
        Lowest exponent 1, linear coefficient 1.
    r_eval : float
        Evaluation radius used by orbit iteration (ratio-test heuristic,
        can be overridden per call).
    """

    def __init__(self, series, r_eval=None):
        if series.is_zero() or series.lo != 1 or abs(series.coeff(1) - 1.0) > 1e-12:
            raise GermError("germ must have the form x + h.o.t. with f'(0)=1")
        nl = None
        for j in range(2, series.order):
            if abs(series.coeff(j)) > 1e-14:
                nl = j
                break
        if nl is None:
            raise GermError("identity germ: no nonlinear term found")
        self.k = nl - 1
        self.a = series.coeff(nl)
        if self.a == 0:
            raise GermError("leading nonlinear coefficient a must be nonzero")
        if series.order < 2 * self.k + 2:
            raise GermError(f"truncation order {series.order} < 2k+2 = {2 * self.k + 2}")
        self.series = series
        self.N = series.order
        self.r_eval = float(r_eval) if r_eval is not None else self._default_radius()
        self._cache = {}

    # -- constructors ---------------------------------------------------

    @staticmethod
    def model_of(k, a, N):
        """Model germ x / (1 - a k x^k)^{1/k} to order N."""
        if a == 0:
            raise GermError("a must be nonzero")
        if N < 2 * k + 2:
            raise GermError("N must be at least 2k+2")
        nterms = (N - 1 + k - 1) // k  # powers of x^k available below N
        b = _binomial_series(-1.0 / k, nterms + 1)
        c = np.zeros(N - 1, dtype=complex)
        for j in range(nterms + 1):
            e = 1 + j * k
            if e < N:
                c[e - 1] = b[j] * (-a * k) ** j
        return ParabolicGerm(TruncSeries(1, c, N))

    @staticmethod
    def from_coefficients(coeffs, N=None):
        """Build from the coefficient list for x^1 ... (must start with 1)."""
        coeffs = np.asarray(coeffs, dtype=complex)
        s = TruncSeries(1, coeffs)
        if N is not None:
            s = s.pad_known_zeros(N)
        return ParabolicGerm(s)

    @staticmethod
    def from_spec(spec):
        """Load from the documented JSON germ spec (dict or path).

        Schema: { "k": int (optional), "a": [re, im] (optional),
                  "coeffs": [[re, im], ...] for x^1..x^N, "truncation": N }.
        Coefficients are authoritative; k and a are validated if present.
        """
        if isinstance(spec, (str, bytes)):
            with open(spec) as fh:
                spec = json.load(fh)
        if "coeffs" not in spec:
            raise GermError("germ spec missing field 'coeffs'")
        try:
            coeffs = np.array([complex(re, im) for re, im in spec["coeffs"]])
        except (TypeError, ValueError) as exc:
            raise GermError(f"germ spec field 'coeffs' malformed: {exc}") from None
        N = spec.get("truncation")
        g = ParabolicGerm.from_coefficients(coeffs, N=N)
        if "k" in spec and spec["k"] is not None and int(spec["k"]) != g.k:
            raise GermError(f"germ spec field 'k'={spec['k']} inconsistent with coefficients (k={g.k})")
        if "a" in spec and spec["a"] is not None:
            a = complex(spec["a"][0], spec["a"][1])
            if abs(a - g.a) > 1e-10 * max(1.0, abs(g.a)):
                raise GermError(f"germ spec field 'a'={a} inconsistent with coefficients (a={g.a})")
        return g

    def to_spec(self):
        c = [[float(z.real), float(z.imag)] for z in
             (self.series.coeff(j) for j in range(1, self.N))]
        return {"k": self.k, "a": [self.a.real, self.a.imag],
                "coeffs": c, "truncation": self.N}

    # -- basic maps -------------------------------------------------------

    def _default_radius(self):
        # ratio-test estimate of the series radius, halved for margin,
        # capped at the petal scale (k|a|)^{-1/k}
        est = np.inf
        for j in range(2, self.N):
            cj = abs(self.series.coeff(j))
            if cj > 1e-14:
                est = min(est, cj ** (-1.0 / (j - 1)))
        petal_scale = (self.k * abs(self.a)) ** (-1.0 / self.k)
        return 0.5 * min(est, 1.5 * petal_scale)

    def eval(self, x):
        return self.series.eval(x)

    def deriv_eval(self, x):
        return self.series.derivative().eval(x)

    def t_of(self, x):
        """Model Fatou weight t(x) = -x^{-k}/(a k)."""
        x = np.asarray(x, dtype=complex)
        val = -(x ** (-self.k)) / (self.a * self.k)
        return val if val.shape else complex(val)

    def x_of_t(self, t, branch=0):
        """Inverse of t(x) on the k-th-root branch `branch`."""
        t = np.asarray(t, dtype=complex)
        w = (-self.a * self.k * t) ** (-1.0 / self.k)
        val = w * np.exp(2j * np.pi * branch / self.k)
        return val if val.shape else complex(val)

    def subtract_x(self):
        """The series f(x) - x (lowest term a x^{k+1})."""
        return self.series - TruncSeries.x(self.N)

    # -- orbit --------------------------------------------------------------

    def iterate_orbit(self, x0, M, r_eval=None, petal_tol=0.35):
        """Forward orbit x_{n+1} = f(x_n), with attraction checks.

        The start point must lie within the evaluation radius and in an
        attracting petal: arg(-a x0^k) within +-(pi/2 + petal_tol) of 0.
        """
        x0 = complex(x0)
        radius = self.r_eval if r_eval is None else float(r_eval)
        if abs(x0) > radius:
            raise OrbitError(f"|x0|={abs(x0):.3g} exceeds evaluation radius {radius:.3g}")
        ang = cmath.phase(-self.a * x0 ** self.k)
        if abs(ang) > np.pi / 2 + petal_tol:
            raise OrbitError(f"x0 not in an attracting petal (arg(-a x0^k)={ang:.3f})")
        pts = np.empty(M + 1, dtype=complex)
        pts[0] = x0
        x = x0
        nondec = 0
        for n in range(M):
            xn = self.series.eval(x)
            if abs(xn) > 1.05 * radius:
                raise OrbitError(f"orbit escaped evaluation radius at step {n + 1}")
            if abs(xn) >= abs(x):
                nondec += 1
                if nondec >= 10:
                    raise OrbitError(f"orbit not attracted: |x_n| non-decreasing for 10 steps at n={n + 1}")
            else:
                nondec = 0
            x = xn
            pts[n + 1] = x
        return Orbit(self, pts)

    def model_orbit(self, t0, M, branch=0):
        """Exact orbit of the *model* dynamics with prescribed t(x0)=t0.

        Valid for model germs (and used in tests/oracles): t advances by
        exactly 1 per step, x_n = t^{-1}(t0+n) on the chosen branch.
        """
        t = np.asarray(t0, dtype=complex) + np.arange(M + 1)
        pts = self.x_of_t(t, branch=branch)
        orb = Orbit(self, np.asarray(pts, dtype=complex))
        orb.meta["exact_model"] = True
        return orb

    # -- formal invariants ----------------------------------------------------

    def residual_invariant(self):
        """rho = res_{x=0} 1/(f(x)-x) + (k+1)/2."""
        g = self.subtract_x()
        return g.reciprocal().residue() + (self.k + 1) / 2.0

    def infinitesimal_generator(self):
        """Formal vector-field coefficient xi(x) with exp(xi d/dx) = f.

        Solved from xi(f(x)) = f'(x) xi(x) order by order; determined to
        order N-k.  The time-1 flow of the result reproduces f (see
        :func:`flow_time1`), which tests use as an independent oracle.
        """
        if "generator" in self._cache:
            return self._cache["generator"]
        fs = self.series
        N, k, a = self.N, self.k, self.a
        xi = TruncSeries.x(N, coeff=a, power=k + 1)
        fp = fs.derivative()
        for p in range(2 * k + 2, N):
            m = p - k
            if m >= N - k:
                break
            R = (xi.compose(fs) - fp * xi).truncate(N)
            delta = -R.coeff(p) / (a * (m - k - 1))
            if delta != 0:
                xi = xi + TruncSeries.x(N, coeff=delta, power=m)
        xi = xi.truncate(N - k)
        self._cache["generator"] = xi
        return xi

    def conjugacy_phi(self):
        """Tangent-to-identity phi with a*phi(x)^{k+1} = f(x) - x."""
        g = self.subtract_x() * (1.0 / self.a)
        return g.nth_root(self.k + 1)

    def conjugate(self, h):
        """The germ h o f o h^{o(-1)}; h must be tangent to the identity."""
        if h.is_zero() or h.lo != 1 or abs(h.coeff(1) - 1.0) > 1e-12:
            raise GermError("conjugating change must be tangent to the identity")
        hinv = h.reversion()
        new = h.compose(self.series.compose(hinv))
        g = ParabolicGerm(new)
        if g.k != self.k or abs(g.a - self.a) > 1e-8 * max(1.0, abs(self.a)):
            raise GermError("conjugation altered (k, a); inconsistent input")
        return g

    def prenormalize(self):
        """Conjugate to the form x + a x^{k+1} + a^2((k+1)/2 - rho) x^{2k+1} + ...

        Returns (germ, h) with germ = h o f o h^{o(-1)}.  Kills the
        coefficients of x^{k+2} .. x^{2k}; trivial for k = 1.
        """
        k, N = self.k, self.N
        h_total = TruncSeries.x(N)
        germ = self
        for p in range(k + 2, 2 * k + 1):
            c0 = germ.series.coeff(p)
            if abs(c0) < 1e-14:
                continue
            m = p - k
            # effect of h = x + eta x^m on the x^p coefficient is linear
            probe = TruncSeries.x(N) + TruncSeries.x(N, coeff=1.0, power=m)
            slope = germ.conjugate(probe).series.coeff(p) - c0
            eta = -c0 / slope
            for _ in range(4):  # polish: higher-order coupling
                h = TruncSeries.x(N) + TruncSeries.x(N, coeff=eta, power=m)
                cp = germ.conjugate(h).series.coeff(p)
                if abs(cp) < 1e-15 * max(1.0, abs(self.a)):
                    break
                eta -= cp / slope
            h = TruncSeries.x(N) + TruncSeries.x(N, coeff=eta, power=m)
            germ = germ.conjugate(h)
            h_total = h.compose(h_total)
        return germ, h_total

    def is_prenormalized(self, tol=1e-12):
        for p in range(self.k + 2, 2 * self.k + 1):
            if abs(self.series.coeff(p)) > tol:
                return False
        return True


class Orbit:
    """Forward orbit with cached model-Fatou weights t(x_n)."""

    def __init__(self, germ, points):
        self.germ = germ
        self.points = np.asarray(points, dtype=complex)
        self.t_values = germ.t_of(self.points)
        t0 = self.t_values[0]
        w = (-germ.a * germ.k * t0) ** (-1.0 / germ.k)
        db = germ.k * (cmath.phase(self.points[0]) - cmath.phase(w)) / (2 * np.pi)
        self.petal_branch = int(round(db)) % germ.k
        self.meta = {}

    def __len__(self):
        return len(self.points)

    @property
    def x0(self):
        return complex(self.points[0])

    def shifted(self, p):
        """The sub-orbit starting at x_p (drops the first p points)."""
        orb = Orbit(self.germ, self.points[p:])
        orb.meta = dict(self.meta)
        return orb

    def is_real(self, tol=1e-12):
        return bool(np.max(np.abs(self.points.imag)) <= tol * max(1.0, np.max(np.abs(self.points)))) \
            and bool(np.all(self.points.real > 0))


def flow_time1(xi, order):
    """Time-1 flow of the vector field xi(x) d/dx as a series (Lie series).

    Independent oracle for :meth:`ParabolicGerm.infinitesimal_generator`.
    """
    term = TruncSeries.x(order)
    total = term
    n = 1
    while True:
        term = (xi * term.derivative()) * (1.0 / n)
        if term.is_zero() or term.lo >= total.order:
            break
        total = total + term
        n += 1
        if n > 4 * order:
            raise RuntimeError("flow series did not terminate")
    return total


def estimate_model_from_orbit(points, min_points=1000, spread_bound=0.25):
    """Estimate (k, a) of the topological model from orbit asymptotics.

    k from -log m / log|x_m| extrapolated over a dyadic ladder in
    1/log m; a from -x_m^{-k}/(k m) with the rounded k, refined by a
    [1, log m / m] least-squares fit.

    Returns (k_est, a_est); raises OrbitError on a non-convergent ladder.
    """
    points = np.asarray(points, dtype=complex)
    M = len(points) - 1
    if M < min_points:
        raise OrbitError(f"need at least {min_points} orbit points, got {M}")
    ms = []
    m = M
    while m >= max(16, M // 64):
        ms.append(m)
        m //= 2
    ms = np.array(ms[::-1], dtype=float)
    xm = points[ms.astype(int)]
    k_vals = -np.log(ms) / np.log(np.abs(xm))
    # k(m) ~ k + c / log m
    A = np.column_stack([np.ones_like(ms), 1.0 / np.log(ms)])
    sol, *_ = np.linalg.lstsq(A, k_vals, rcond=None)
    k_est = float(sol[0])
    k_int = int(round(k_est))
    if k_int < 1 or abs(k_est - k_int) > spread_bound:
        raise OrbitError(f"k-ladder did not converge (k_est={k_est:.4f})")
    resid = k_vals - A @ sol
    if np.max(np.abs(resid)) > spread_bound:
        raise OrbitError("k-ladder relative spread too large")
    a_vals = -(xm ** (-k_int)) / (k_int * ms)
    # a(m) ~ a + c log m / m
    B = np.column_stack([np.ones_like(ms), np.log(ms) / ms])
    sol_a, *_ = np.linalg.lstsq(B.astype(complex), a_vals, rcond=None)
    return k_est, complex(sol_a[0])
