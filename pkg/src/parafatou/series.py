"""Truncated complex Laurent/power series arithmetic.

A :class:`TruncSeries` stores coefficients for exponents
``lo, lo+1, ..., order-1``; exponents ``>= order`` are *unknown* (not
zero).  All operations track the truncation order pessimistically: the
order of a result is the smallest order to which it is actually
determined by the inputs.  Coefficients are complex floating point.

This is the substrate for every formal computation in the package
(germs, infinitesimal generators, formal Fatou coordinates, conjugating
changes of variable).
"""

from __future__ import annotations

import numpy as np

#: coefficients below this (relative to the series scale) are treated as zero
_ZERO_TOL = 1e-300


class SeriesError(ValueError):
    """Raised for structurally invalid series operations."""


class TruncSeries:
    """Truncated Laurent series  sum_{j=lo}^{order-1} c_{j-lo} x^j.

    Parameters
    ----------
    lo : int
        Exponent of the first stored coefficient.
    coeffs : array_like of complex
        Coefficients for exponents ``lo ... lo+len-1``.
    order : int, optional
        Truncation order.  Must equal ``lo + len(coeffs)``; it can be
        given alone (with empty coeffs) to make a zero series known to
        order ``order``.
    """

    __slots__ = ("lo", "coeffs", "order")

    def __init__(self, lo, coeffs, order=None):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.ndim != 1:
            raise SeriesError("coefficient array must be 1-d")
        if order is None:
            order = lo + len(coeffs)
        if order != lo + len(coeffs):
            raise SeriesError("order must equal lo + len(coeffs)")
        # normalize: strip leading zeros so the first stored coefficient
        # of a nonzero series is nonzero
        nz = np.nonzero(np.abs(coeffs) > _ZERO_TOL)[0]
        if len(nz) == 0:
            lo = order
            coeffs = coeffs[:0]
        elif nz[0] > 0:
            lo += int(nz[0])
            coeffs = coeffs[nz[0]:]
        self.lo = int(lo)
        self.coeffs = coeffs
        self.order = int(order)

    # -- constructors -------------------------------------------------

    @staticmethod
    def zero(order):
        return TruncSeries(order, [], order)

    @staticmethod
    def x(order, coeff=1.0, power=1):
        """The monomial ``coeff * x**power`` known to ``order``."""
        if power >= order:
            raise SeriesError("monomial power at or above truncation order")
        c = np.zeros(order - power, dtype=complex)
        c[0] = coeff
        return TruncSeries(power, c, order)

    @staticmethod
    def const(value, order):
        return TruncSeries.x(order, coeff=value, power=0)

    @staticmethod
    def from_coeff_list(coeffs, lo=0, order=None):
        return TruncSeries(lo, coeffs, order)

    # -- basic access --------------------------------------------------

    def __len__(self):
        return len(self.coeffs)

    def is_zero(self):
        return len(self.coeffs) == 0

    def coeff(self, j):
        """Coefficient at exponent ``j`` (0 if stored-zero; error if unknown)."""
        if j >= self.order:
            raise SeriesError(f"coefficient at x^{j} is beyond truncation order {self.order}")
        if j < self.lo:
            return 0.0 + 0.0j
        return complex(self.coeffs[j - self.lo])

    def leading(self):
        if self.is_zero():
            raise SeriesError("zero series has no leading coefficient")
        return self.lo, complex(self.coeffs[0])

    def scale(self):
        """Magnitude of the largest coefficient (0 for the zero series)."""
        return float(np.max(np.abs(self.coeffs))) if len(self.coeffs) else 0.0

    def truncate(self, order):
        """Restrict knowledge to exponents below ``order``."""
        if order >= self.order:
            return self
        n = max(0, order - self.lo)
        return TruncSeries(self.lo, self.coeffs[:n], order)

    def pad_known_zeros(self, order):
        """Extend with explicit zeros (asserts the tail is truly zero).

        Only for series known exactly (e.g. polynomials); use with care.
        """
        if order <= self.order:
            return self.truncate(order)
        c = np.concatenate([self.coeffs, np.zeros(order - self.order, dtype=complex)])
        return TruncSeries(self.lo, c, order)

    def __repr__(self):
        terms = []
        for i, c in enumerate(self.coeffs[:6]):
            terms.append(f"({c:.4g})x^{self.lo + i}")
        body = " + ".join(terms) if terms else "0"
        if len(self.coeffs) > 6:
            body += " + ..."
        return f"TruncSeries[{body} + O(x^{self.order})]"

    # -- ring operations ----------------------------------------------

    def _binary_order(self, other):
        return min(self.order, other.order)

    def __add__(self, other):
        if np.isscalar(other):
            other = TruncSeries.const(other, self.order)
        order = self._binary_order(other)
        lo = min(self.lo if not self.is_zero() else order,
                 other.lo if not other.is_zero() else order)
        n = order - lo
        c = np.zeros(n, dtype=complex)
        for s in (self, other):
            if not s.is_zero():
                a = s.coeffs[:max(0, order - s.lo)]
                c[s.lo - lo:s.lo - lo + len(a)] += a
        return TruncSeries(lo, c, order)

    def __radd__(self, other):
        return self.__add__(other)

    def __neg__(self):
        return TruncSeries(self.lo, -self.coeffs, self.order)

    def __sub__(self, other):
        if np.isscalar(other):
            other = TruncSeries.const(other, self.order)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            if abs(other) <= _ZERO_TOL:
                return TruncSeries(self.order, [], self.order)
            return TruncSeries(self.lo, self.coeffs * other, self.order)
        # zero series carry lo == order, so the order rule is uniform
        order = min(self.order + other.lo, other.order + self.lo)
        if self.is_zero() or other.is_zero():
            return TruncSeries(order, [], order)
        lo = self.lo + other.lo
        full = np.convolve(self.coeffs, other.coeffs)
        return TruncSeries(lo, full[:order - lo], order)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __pow__(self, n):
        if not isinstance(n, (int, np.integer)) or n < 0:
            raise SeriesError("only nonnegative integer powers")
        if n == 0:
            return TruncSeries.const(1.0, self.order)
        result = None
        base = self
        m = n
        while m:
            if m & 1:
                result = base if result is None else result * base
            m >>= 1
            if m:
                base = base * base
        return result

    # -- core nonlinear operations ------------------------------------

    def reciprocal(self):
        """Series g with self*g = 1 to truncation; lo(g) = -lo(self)."""
        if self.is_zero():
            raise SeriesError("reciprocal of the zero series")
        lo, lead = self.leading()
        n = self.order - self.lo          # number of determined coefficients
        a = self.coeffs
        b = np.zeros(n, dtype=complex)
        b[0] = 1.0 / lead
        # triangular solve of convolution(a, b) = e_0
        for m in range(1, n):
            acc = 0.0 + 0.0j
            kmax = min(m, len(a) - 1)
            acc = np.dot(a[1:kmax + 1], b[m - 1::-1][:kmax])
            b[m] = -acc / lead
        return TruncSeries(-lo, b, -lo + n)

    def compose(self, inner):
        """self(inner(x)); inner must vanish at 0 (inner.lo >= 1)."""
        if inner.is_zero():
            if self.lo < 0:
                raise SeriesError("cannot compose principal part with zero inner")
            if self.lo > 0:
                return TruncSeries(inner.order, [], inner.order)
            return TruncSeries.const(self.coeff(0), inner.order)
        if inner.lo < 1:
            raise SeriesError("inner series must have zero constant term")
        # attainable order: unknown outer tail enters at inner.lo*self.order;
        # inner truncation enters through d(inner^j) at inner.order + (j-1)*inner.lo,
        # worst at the most negative stored exponent
        li = inner.lo
        tail_err = self.order * li
        if self.lo < 0:
            inner_err = inner.order + (self.lo - 1) * li
        elif self.order >= 2 or self.lo >= 1:
            inner_err = inner.order + (max(self.lo, 1) - 1) * li
        else:  # constant only
            inner_err = tail_err
        order = min(tail_err, inner_err)
        out = TruncSeries(order, [], order)
        # regular part by Horner in the series ring
        reg_lo = max(self.lo, 0)
        ncoef = self.order - reg_lo
        if ncoef > 0:
            acc = TruncSeries.const(self.coeff(self.order - 1), order)
            for j in range(self.order - 2, reg_lo - 1, -1):
                acc = acc * inner + self.coeff(j)
            if reg_lo > 0:
                acc = acc * (inner ** reg_lo)
            out = out + acc
        # principal part via powers of the reciprocal
        if self.lo < 0:
            inv = inner.reciprocal()
            term = inv  # inv^1
            pieces = {}
            for j in range(1, -self.lo + 1):
                pieces[j] = term
                if j < -self.lo:
                    term = term * inv
            for j in range(self.lo, 0):
                cj = self.coeff(j)
                if cj != 0:
                    out = out + pieces[-j] * cj
        return out

    def reversion(self):
        """Compositional inverse of a series c1*x + ... with c1 != 0.

        Newton iteration on ``compose``; quadratic in the attained order.
        """
        if self.is_zero() or self.lo != 1:
            raise SeriesError("reversion requires a series starting at x^1")
        _, c1 = self.leading()
        if c1 == 0:
            raise SeriesError("zero linear coefficient")
        order = self.order
        g = TruncSeries.x(2, coeff=1.0 / c1)
        while g.order < order:
            new_order = min(2 * (g.order - 1) + 1, order)
            g = g.pad_known_zeros(new_order)  # Newton correction fills these
            f_trunc = self.truncate(new_order)
            err = f_trunc.compose(g) - TruncSeries.x(new_order)
            dfg = f_trunc.derivative().compose(g)
            g = (g - err * dfg.reciprocal()).truncate(new_order)
        return g.truncate(order)

    def nth_root(self, n):
        """g with g**n = self, branch: principal root of the leading coefficient."""
        if self.is_zero():
            raise SeriesError("nth_root of zero series")
        lo, lead = self.leading()
        if lo % n != 0:
            raise SeriesError(f"leading exponent {lo} not divisible by {n}")
        root_lo = lo // n
        lead_root = lead ** (1.0 / n)  # principal branch
        # g = lead_root x^root_lo * (1 + u)^{1/n} with u = self/(lead x^lo) - 1
        norm = TruncSeries(self.lo - lo, self.coeffs / lead, self.order - lo)
        u = norm - 1.0
        m = u.order
        # binomial series (1+u)^{1/n} by Horner over binomial coefficients
        alpha = 1.0 / n
        nterms = m
        binom = np.zeros(nterms, dtype=complex)
        binom[0] = 1.0
        for j in range(1, nterms):
            binom[j] = binom[j - 1] * (alpha - (j - 1)) / j
        acc = TruncSeries.const(binom[nterms - 1], m)
        for j in range(nterms - 2, -1, -1):
            acc = acc * u + binom[j]
        g = acc * lead_root
        g = TruncSeries(g.lo + root_lo, g.coeffs, g.order + root_lo)
        return g

    # -- calculus -------------------------------------------------------

    def derivative(self):
        if self.is_zero():
            return TruncSeries(self.order - 1, [], self.order - 1)
        exps = np.arange(self.lo, self.lo + len(self.coeffs))
        c = self.coeffs * exps
        return TruncSeries(self.lo - 1, c, self.order - 1)

    def antiderivative(self, tol=1e-13):
        """Term-wise integral; requires (numerically) zero x^{-1} coefficient."""
        res = self.residue()
        if abs(res) > tol * max(self.scale(), 1.0):
            raise SeriesError("antiderivative of series with nonzero x^{-1} coefficient")
        exps = np.arange(self.lo, self.lo + len(self.coeffs))
        c = np.zeros(len(self.coeffs), dtype=complex)
        mask = exps != -1
        c[mask] = self.coeffs[mask] / (exps[mask] + 1)
        return TruncSeries(self.lo + 1, c, self.order + 1)

    def residue(self):
        """Coefficient at x^{-1}."""
        if self.order <= -1:
            raise SeriesError("x^{-1} coefficient beyond truncation order")
        if self.lo <= -1:
            return self.coeff(-1)
        return 0.0 + 0.0j

    def calculus(self, mode):
        """Dispatch: 'derivative' | 'antiderivative' | 'residue'."""
        if mode == "derivative":
            return self.derivative()
        if mode == "antiderivative":
            return self.antiderivative()
        if mode == "residue":
            return self.residue()
        raise SeriesError(f"unknown calculus mode {mode!r}")

    def exp(self):
        """Formal exp; requires lo >= 1."""
        if not self.is_zero() and self.lo < 1:
            raise SeriesError("exp requires vanishing constant term")
        order = self.order
        # solve E' = f' E with E(0)=1, term by term
        n = order
        e = np.zeros(n, dtype=complex)
        e[0] = 1.0
        f = np.zeros(n, dtype=complex)
        if not self.is_zero():
            hi = min(self.order, n)
            f[self.lo:hi] = self.coeffs[:hi - self.lo]
        for m in range(1, n):
            # m*e[m] = sum_{j=1}^{m} j*f[j]*e[m-j]
            j = np.arange(1, m + 1)
            e[m] = np.dot(j * f[1:m + 1], e[m - 1::-1][:m]) / m
        return TruncSeries(0, e, order)

    def log(self):
        """Formal log; requires constant term 1."""
        if self.is_zero() or self.lo != 0 or abs(self.coeff(0) - 1.0) > 1e-12:
            raise SeriesError("log requires constant term 1")
        return (self.derivative() * self.reciprocal()).antiderivative()

    def exp_log(self, mode):
        if mode == "exp":
            return self.exp()
        if mode == "log":
            return self.log()
        raise SeriesError(f"unknown exp_log mode {mode!r}")

    # -- evaluation ------------------------------------------------------

    def eval(self, x):
        """Evaluate at scalar or ndarray x by Horner (negative part included)."""
        x = np.asarray(x, dtype=complex)
        acc = np.zeros_like(x)
        for c in self.coeffs[::-1]:
            acc = acc * x + c
        if self.lo != 0:
            acc = acc * x ** self.lo
        return acc if acc.shape else complex(acc)

    def rescale_x(self, lam):
        """Series of f(lam*x)."""
        exps = np.arange(self.lo, self.lo + len(self.coeffs))
        return TruncSeries(self.lo, self.coeffs * lam ** exps, self.order)


def approx_equal(a, b, tol=1e-12):
    """Coefficient-wise comparison to the shared truncation order."""
    order = min(a.order, b.order)
    d = (a - b).truncate(order)
    scale = max(a.scale(), b.scale(), 1.0)
    return d.is_zero() or float(np.max(np.abs(d.coeffs))) <= tol * scale
