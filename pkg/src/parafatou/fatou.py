"""Fatou coordinates: formal solution of the Abel equation, numerical
sectorial coordinates by an accelerated Abel limit, their inverses and
derivatives, and the term-wise minor/major Borel transforms.

Conventions
-----------
The formal Fatou coordinate is

    psi_hat(x) = r_{-k} x^{-k} + ... + r_{-1} x^{-1} + rho log x + C
                 + sum_{j>=1} r_j x^j,

normalized with C = 0 ("canonical").  The sectorial coordinate is
computed as psi(x) = lim_n psi_hat^{(J)}(f^n(x)) - n, which satisfies
the Abel equation with the same asymptotics, then shifted so that
psi(x0) = 0 for the orbit base point.

Borel transforms use the weight t(x) = -x^{-k}/(a k) and the kernel
e^{-s t} (the signs match the dynamic theta function); powers and logs
in the s-plane are cut along e^{i alpha} R_{>=0}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as cgamma

from .series import TruncSeries
from .germ import ParabolicGerm


class FatouError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# branch helpers
# --------------------------------------------------------------------------

def branch_arg(z, cut, prefer=0.0):
    """arg(z) in the 2*pi window with endpoints at the cut angle that
    contains the direction `prefer`."""
    z = np.asarray(z, dtype=complex)
    base = np.angle(z)
    cut_n = np.angle(np.exp(1j * cut))        # normalize to (-pi, pi]
    pref_n = np.angle(np.exp(1j * prefer))
    lo = cut_n - 2 * np.pi
    if not (lo < pref_n <= cut_n):
        lo = cut_n
    th = np.mod(base - lo, 2 * np.pi) + lo
    return th


def branch_log(z, cut, prefer=0.0):
    z = np.asarray(z, dtype=complex)
    return np.log(np.abs(z)) + 1j * branch_arg(z, cut, prefer)


def branch_pow(z, mu, cut, prefer=0.0):
    return np.exp(mu * branch_log(z, cut, prefer))


# --------------------------------------------------------------------------
# formal Fatou coordinate
# --------------------------------------------------------------------------

class FormalFatou:
    """Structured formal Fatou coordinate of a germ.

    principal : TruncSeries with exponents -k..-1 (x^{-1} term removed
        into rho); rho : complex; constant C = 0; tail : TruncSeries of
        the r_j, j >= 1.
    """

    def __init__(self, germ):
        xi = germ.infinitesimal_generator()
        inv = xi.reciprocal()
        self.rho = inv.residue()
        inv_no_res = inv - TruncSeries.x(inv.order, coeff=self.rho, power=-1) \
            if abs(self.rho) > 0 else inv
        psi = inv_no_res.antiderivative()
        self.germ = germ
        self.series = psi                       # everything except rho*log x
        self.k = germ.k
        kk = germ.k
        pr = np.array([psi.coeff(j) for j in range(-kk, 0)], dtype=complex)
        self.principal = pr                     # r_{-k} .. r_{-1}
        ncoef = max(0, psi.order - 1)
        self.tail = np.array([psi.coeff(j) for j in range(1, psi.order)], dtype=complex)
        self.constant = 0.0 + 0.0j
        # consistency: leading principal coefficient must be -1/(a k)
        if abs(pr[0] + 1.0 / (germ.a * kk)) > 1e-9 * max(1.0, abs(1 / germ.a)):
            raise FatouError("formal Fatou principal part inconsistent with t(x)")
        rho2 = germ.residual_invariant()
        if abs(self.rho - rho2) > 1e-9 * max(1.0, abs(rho2)):
            raise FatouError("log coefficient does not match the residual invariant")

    def tail_coeff(self, j):
        return self.tail[j - 1] if 1 <= j <= len(self.tail) else 0.0 + 0.0j

    def n_tail(self):
        return len(self.tail)

    def optimal_J(self, absx, J_max):
        """Truncation index minimizing the omitted tail, with the error
        gauged over a window of omitted terms (single coefficients can be
        anomalously small)."""
        if len(self.tail) == 0:
            return 0, 0.0
        j = np.arange(1, len(self.tail) + 1)
        mags = np.abs(self.tail) * absx ** j
        jmax = min(J_max, len(self.tail))
        win = np.array([np.max(mags[i:min(i + 3, len(mags))]) for i in range(jmax)])
        idx = int(np.argmin(win))                  # omit terms from idx on
        return idx, float(win[idx])

    def eval_truncated(self, x, J, log_cut=np.pi, prefer=0.0):
        """principal part + rho log x + C + first J tail terms."""
        x = np.asarray(x, dtype=complex)
        val = np.zeros_like(x)
        for j in range(-self.k, 0):
            val += self.series.coeff(j) * x ** j
        if self.rho != 0:
            val = val + self.rho * branch_log(x, log_cut, prefer)
        val = val + self.constant
        if J > 0:
            J = min(J, len(self.tail))
            acc = np.zeros_like(x)
            for c in self.tail[:J][::-1]:
                acc = acc * x + c
            val = val + acc * x
        return val if val.shape else complex(val)

    def abel_residual_series(self):
        """Series of psi_hat(f(x)) - psi_hat(x) - 1 (log part expanded)."""
        g = self.germ
        comp = self.series.compose(g.series)
        out = comp - self.series - 1.0
        if abs(self.rho) > 0:
            # rho*(log f(x) - log x) = rho*log(f(x)/x), a true power series
            ratio = TruncSeries(0, g.series.coeffs, g.series.order - 1)
            out = out + ratio.log() * self.rho
        return out


# --------------------------------------------------------------------------
# sectorial Fatou evaluator
# --------------------------------------------------------------------------

class FatouEvaluator:
    """Sectorial Fatou coordinate psi with psi(x0) = 0, on the petal of x0.

    Evaluation is the accelerated Abel limit: iterate f until the formal
    tail at the current point is below tolerance, then read the
    optimally truncated formal coordinate and subtract the step count.
    The repelling-side coordinate (used by horn maps) iterates the
    inverse germ and adds the step count.
    """

    def __init__(self, germ, x0=None, fatou_tol=1e-10, n_max=100000,
                 J_max=20, log_cut=None, prefer_arg=None, psi_norm=None):
        self.germ = germ
        self.formal = FormalFatou(germ)
        self.fatou_tol = float(fatou_tol)
        self.n_max = int(n_max)
        self.J_max = int(J_max)
        if x0 is not None:
            att = np.angle(complex(x0))
        else:
            att = -np.angle(germ.a) / germ.k  # a real-negative germ: 0
        self.prefer_arg = att if prefer_arg is None else prefer_arg
        self.log_cut = (att + np.pi) if log_cut is None else float(log_cut)
        # working radius: largest |x| whose optimal tail error beats tol/10
        self.x_work = self._working_radius()
        self._g_inv = None
        self.x0 = complex(x0) if x0 is not None else None
        if psi_norm is not None:
            # normalization constant supplied analytically (e.g. exact-model
            # orbits whose base point is outside the evaluation radius)
            self.psi_norm = complex(psi_norm)
        elif x0 is not None:
            self.psi_norm = complex(self.psi_can(self.x0))
        else:
            self.psi_norm = 0.0 + 0.0j

    # -- setup ----------------------------------------------------------

    def _working_radius(self):
        f = self.formal
        if f.n_tail() == 0:
            return 0.9 * self.germ.r_eval
        target = self.fatou_tol / 10.0
        lo, hi = 1e-4, 0.95 * self.germ.r_eval
        for _ in range(60):
            mid = np.sqrt(lo * hi)
            _, err = f.optimal_J(mid, self.J_max)
            if err > target:
                hi = mid
            else:
                lo = mid
        return lo

    def _inverse_germ(self):
        if self._g_inv is None:
            self._g_inv = self.germ.series.reversion()
        return self._g_inv

    # -- core batched evaluation -----------------------------------------

    def _backstep(self, x, tol=1e-13, maxit=40):
        """Solve f(w) = x by Newton on the germ series (reversion-seeded
        where the reversion series converges, identity-seeded otherwise)."""
        ginv = self._inverse_germ()
        w = np.where(np.abs(x) < 0.6 * self.germ.r_eval, ginv.eval(x), x)
        fser, fp = self.germ.series, self.germ.series.derivative()
        for _ in range(maxit):
            res = fser.eval(w) - x
            if np.max(np.abs(res)) < tol * max(1e-3, float(np.min(np.abs(x)))):
                return w
            w = w - res / fp.eval(w)
        raise FatouError("backward Newton step did not converge")

    def _psi_can_raw(self, x, repelling=False, with_deriv=False):
        """Canonical coordinate (and dpsi/dx) on an ndarray of points."""
        x = np.atleast_1d(np.asarray(x, dtype=complex))
        sign = 1.0 if repelling else -1.0
        steps = np.zeros(x.shape, dtype=float)
        dlog = np.zeros(x.shape, dtype=complex)  # log of prod (f^{+-1})'(x_i)
        cur = x.copy()
        fser = self.germ.series
        fp = fser.derivative()
        for _ in range(self.n_max):
            active = np.abs(cur) > self.x_work
            if not active.any():
                break
            xa = cur[active]
            if repelling:
                new = self._backstep(xa)
                if with_deriv:
                    dlog[active] -= np.log(fp.eval(new))
            else:
                new = fser.eval(xa)
                if with_deriv:
                    dlog[active] += np.log(fp.eval(xa))
            cur[active] = new
            steps[active] += 1
        else:
            raise FatouError("Abel iteration did not reach the working radius")
        f = self.formal
        absc = np.abs(cur)
        Jstar, _ = f.optimal_J(float(np.max(absc)) if absc.size else 0.0, self.J_max)
        val = f.eval_truncated(cur, Jstar, self.log_cut, self.prefer_arg)
        val = np.atleast_1d(val) + sign * steps
        if not with_deriv:
            return val
        dpsi_end = self._formal_deriv(cur, Jstar)
        return val, dpsi_end * np.exp(dlog)

    def _formal_deriv(self, x, J):
        f = self.formal
        x = np.asarray(x, dtype=complex)
        val = np.zeros_like(x)
        for j in range(-f.k, 0):
            val += j * f.series.coeff(j) * x ** (j - 1)
        if f.rho != 0:
            val += f.rho / x
        if J > 0:
            J = min(J, len(f.tail))
            acc = np.zeros_like(x)
            for jj in range(J, 0, -1):
                acc = acc * x + jj * f.tail[jj - 1]
            val = val + acc
        return val

    # -- public API --------------------------------------------------------

    def psi_can(self, x):
        v = self._psi_can_raw(x)
        return v if np.ndim(x) else complex(v[0])

    def psi(self, x):
        v = self._psi_can_raw(x) - self.psi_norm
        return v if np.ndim(x) else complex(v[0])

    def psi_minus_can(self, x):
        """Repelling-petal coordinate: lim psi_hat(f^{-n} x) + n."""
        v = self._psi_can_raw(x, repelling=True)
        return v if np.ndim(x) else complex(v[0])

    def dpsi(self, x):
        _, d = self._psi_can_raw(x, with_deriv=True)
        return d if np.ndim(x) else complex(d[0])

    def dpsi_minus(self, x):
        _, d = self._psi_can_raw(x, repelling=True, with_deriv=True)
        return d if np.ndim(x) else complex(d[0])

    def abel_residual(self, x):
        return self.psi(self.germ.eval(x)) - self.psi(x) - 1.0

    # -- inversion ---------------------------------------------------------

    def _seed_from_tau(self, tau, branch):
        f = self.formal
        t_target = np.asarray(tau, dtype=complex) + self.psi_norm - f.constant
        for _ in range(3):
            if f.rho != 0:
                corr = (f.rho / f.k) * np.log(np.where(np.abs(t_target) > 1e-12, t_target, 1.0))
                t_new = np.asarray(tau, dtype=complex) + self.psi_norm + corr
            else:
                t_new = t_target
            t_target = t_new
        return self.germ.x_of_t(t_target, branch=branch)

    def inverse(self, tau, branch=None, tol=None, maxit=40):
        """x with psi(x) = tau (damped Newton, model-seeded)."""
        scalar = np.ndim(tau) == 0
        tau = np.atleast_1d(np.asarray(tau, dtype=complex))
        tol = tol if tol is not None else 10 * self.fatou_tol
        if branch is None:
            branch = 0 if self.x0 is None else self._branch_of(self.x0)
        x = self._seed_from_tau(tau, branch)
        for _ in range(maxit):
            val, d = self._psi_can_raw(x, with_deriv=True)
            res = val - self.psi_norm - tau
            if np.max(np.abs(res)) < tol:
                break
            step = res / d
            # damp: never move more than half the distance to the origin
            lim = 0.5 * np.abs(x)
            mag = np.abs(step)
            step = np.where(mag > lim, step * lim / mag, step)
            x = x - step
        else:
            raise FatouError("Newton for the Fatou inverse did not converge")
        return complex(x[0]) if scalar else x

    def _branch_of(self, x):
        g = self.germ
        w = g.x_of_t(g.t_of(x), branch=0)
        db = g.k * (np.angle(complex(x)) - np.angle(complex(w))) / (2 * np.pi)
        return int(round(db)) % g.k


# --------------------------------------------------------------------------
# Borel transforms (term-wise kernels)
# --------------------------------------------------------------------------

@dataclass
class SymbolicDirac:
    """delta_0^{(order)} scaled: minor Borel of x^nu for nu/k in Z_{<=0}."""
    order: int
    scale: complex

    def __repr__(self):
        return f"SymbolicDirac(order={self.order}, scale={self.scale:.6g})"


def borel_monomial(nu, s, alpha, k, a, kind="minor", prefer=None):
    """Minor/major Borel transform of x^nu with weight t(x) = -x^{-k}/(ak).

    minor: (1/(ak Gamma(nu/k))) (s/(ak))^{nu/k - 1}   for nu/k not in Z_{<=0},
           SymbolicDirac otherwise.
    major: includes the log-branch case nu/k in Z_{>0}.
    Powers and logs are cut along e^{i alpha} R_{>=0} in s.
    """
    ak = a * k
    m = nu / k
    cut = alpha - np.angle(ak)
    if prefer is None:
        prefer = alpha - np.pi  # opposite the cut
    prefer_z = prefer - np.angle(ak)
    if kind == "minor":
        if _is_nonpos_int(m):
            return SymbolicDirac(order=int(round(-m.real)), scale=ak ** int(round(-m.real)))
        return (1.0 / (ak * cgamma(m))) * branch_pow(np.asarray(s) / ak, m - 1.0, cut, prefer_z)
    if kind == "major":
        tpi = 2j * np.pi
        if _is_pos_int(m):
            mi = int(round(m.real))
            return (1.0 / (tpi * ak * cgamma(mi))) * branch_pow(np.asarray(s) / ak, mi - 1.0, cut, prefer_z) \
                * branch_log(np.asarray(s), alpha, prefer)
        cut2 = alpha + np.pi - np.angle(ak)
        prefer_z2 = prefer + np.pi - np.angle(ak)
        return (-cgamma(1.0 - m) / (tpi * ak)) * branch_pow(-np.asarray(s) / ak, m - 1.0, cut2, prefer_z2)
    raise ValueError(f"unknown Borel kind {kind!r}")


def _is_nonpos_int(m):
    return abs(m.imag) < 1e-12 and abs(m.real - round(m.real)) < 1e-12 and round(m.real) <= 0


def _is_pos_int(m):
    return abs(m.imag) < 1e-12 and abs(m.real - round(m.real)) < 1e-12 and round(m.real) >= 1


def borel_tail(formal, s, alpha=np.pi, J=None, tol=1e-12):
    """Truncated minor Borel transform of the divergent tail r_hat near s=0.

    Returns (value, error_estimate); raises when |s| is outside the
    truncation-validity radius (the terms never start decreasing).
    """
    g = formal.germ
    s = np.asarray(s, dtype=complex)
    J = len(formal.tail) if J is None else min(J, len(formal.tail))
    terms = []
    for j in range(1, J + 1):
        c = formal.tail_coeff(j)
        terms.append(c * borel_monomial(j, s, alpha, g.k, g.a, kind="minor"))
    if not terms:
        return np.zeros_like(s), 0.0
    mags = np.array([np.max(np.abs(t)) for t in terms])
    # find the optimal stopping point: truncate where terms are smallest
    idx = int(np.argmin(mags)) + 1
    if idx < J and mags[-1] > 10 * max(np.max(mags[:idx]), 1e-300):
        if mags[idx - 1] > tol * max(1.0, float(np.max(mags))):
            raise FatouError("|s| outside truncation-validity radius of the Borel tail")
    val = np.sum(np.array(terms[:idx]), axis=0)
    err = float(mags[idx - 1])
    return (val if val.shape else complex(val)), err


def borel_fatou_function_part(formal, s, alpha=np.pi, J=None):
    """Function part of the minor Borel transform of psi_hat (Diracs dropped).

    rho/k * s^{-1} plus the middle principal monomials plus the tail.
    Valid near s = 0 (inside the 2*pi disc).
    """
    g = formal.germ
    s = np.asarray(s, dtype=complex)
    val = np.zeros_like(s)
    if formal.rho != 0:
        val = val + (formal.rho / g.k) / s
    for j in range(1, g.k):  # middle principal terms -j, 0 < j < k
        c = formal.series.coeff(-j)
        if abs(c) > 0:
            val = val + c * borel_monomial(-j, s, alpha, g.k, g.a, kind="minor")
    tail_val, err = borel_tail(formal, s, alpha, J=J)
    return val + tail_val, err
