"""Dynamic theta function of an orbit: direct sum, strip-wise analytic
continuation, jumps across the cuts 2 pi i Z + e^{i alpha} R_{>=0},
universal-cover bookkeeping, and the integral transforms recovering the
Fatou coordinate.

Geometry (default alpha = pi): the s-plane is slit along omega + R_{<=0}
for omega in 2 pi i Z.  The strip representation with kernel
B_m(psi) = e^{2 pi i m psi} / (e^{2 pi i psi} - 1) converges on the
horizontal strip 2 pi (m-1) < Im s < 2 pi m and is integrated over the
line psi in b + i e^{-i alpha} R (oriented downward for alpha = pi)
parametrized through the Fatou inverse.  Jumps are differences of two
one-sided ray integrals of e^{omega psi} e^{-s t}.
"""

from __future__ import annotations

import numpy as np

from .fatou import FatouEvaluator, FatouError
from .germ import ParabolicGerm, Orbit

TWO_PI = 2 * np.pi
TWO_PI_I = 2j * np.pi


class ThetaError(RuntimeError):
    pass


def _log_bm(tau, m):
    """log of B_m(tau) = e^{2 pi i m tau}/(e^{2 pi i tau} - 1), overflow-safe.

    Branch jumps of 2 pi i are irrelevant: consumers exponentiate.
    """
    tau = np.asarray(tau, dtype=complex)
    out = np.empty(tau.shape, dtype=complex)
    up = tau.imag > 0.5
    dn = tau.imag < -0.5
    mid = ~(up | dn)
    if np.any(up):
        t = tau[up]
        out[up] = TWO_PI_I * m * t - 1j * np.pi - np.log1p(-np.exp(TWO_PI_I * t))
    if np.any(dn):
        t = tau[dn]
        out[dn] = TWO_PI_I * (m - 1) * t - np.log1p(-np.exp(-TWO_PI_I * t))
    if np.any(mid):
        t = tau[mid]
        out[mid] = TWO_PI_I * m * t - np.log(np.exp(TWO_PI_I * t) - 1.0)
    return out


def _panel_nodes(lo, hi, step, gl_order=12):
    """Gauss-Legendre nodes/weights tiling [lo, hi] with panels <= step."""
    x, w = np.polynomial.legendre.leggauss(gl_order)
    edges = np.linspace(lo, hi, max(2, int(np.ceil((hi - lo) / step)) + 1))
    mids = (edges[:-1] + edges[1:]) / 2
    halfs = (edges[1:] - edges[:-1]) / 2
    nodes = (mids[:, None] + halfs[:, None] * x[None, :]).ravel()
    wts = (halfs[:, None] * w[None, :]).ravel()
    return nodes, wts


class _Path:
    """Quadrature path in the psi-plane with cached t-values."""

    __slots__ = ("tau", "w", "T")

    def __init__(self, tau, w, T):
        self.tau = tau
        self.w = w
        self.T = T


class ThetaEvaluator:
    """Evaluator of the dynamic theta function of an orbit.

    Parameters
    ----------
    orbit : Orbit
        Forward orbit; its first point fixes the Fatou normalization
        psi(x0) = 0.
    fatou : FatouEvaluator, optional
        Prebuilt evaluator (must carry the same normalization).
    alpha : float
        Default continuation direction (cut direction), in ]pi/2, 3pi/2[.
    b : float
        Base abscissa of the strip lines, in ]-1, 0[.
    """

    def __init__(self, orbit, fatou=None, alpha=np.pi, b=-0.4,
                 quad_tol=1e-10, direct_min=0.05, beta_max=5 * np.pi / 6):
        if not (np.pi / 2 < alpha < 3 * np.pi / 2):
            raise ThetaError("alpha must lie in ]pi/2, 3pi/2[")
        if not (-1.0 < b < 0.0):
            raise ThetaError("b must lie in ]-1, 0[")
        self.orbit = orbit
        germ = orbit.germ
        if not germ.is_prenormalized():
            raise ThetaError("theta evaluation requires a prenormalized germ")
        self.germ = germ
        self.alpha = float(alpha)
        self.b = float(b)
        self.quad_tol = float(quad_tol)
        self.direct_min = float(direct_min)
        self.beta_max = float(beta_max)
        if fatou is None:
            if orbit.meta.get("exact_model"):
                # base point may lie outside the evaluation radius; the
                # canonical coordinate of the model is t(x) exactly
                fatou = FatouEvaluator(germ, x0=orbit.x0,
                                       psi_norm=complex(orbit.t_values[0]))
            else:
                fatou = FatouEvaluator(germ, x0=orbit.x0)
        self.fatou = fatou
        self._paths = {}
        self._ray_paths = {}

    # ------------------------------------------------------------ direct

    def theta_direct(self, s):
        """Sum over the orbit of e^{-s t(x_n)}, with a geometric tail bound.

        Requires Re(s) >= direct_min.
        """
        scalar = np.ndim(s) == 0
        s = np.atleast_1d(np.asarray(s, dtype=complex))
        if np.any(s.real < self.direct_min):
            raise ThetaError(f"theta_direct requires Re(s) >= {self.direct_min}")
        t = self.orbit.t_values
        val = np.exp(-np.outer(s, t)).sum(axis=1)
        # tail: t advances by >= 1 - eta per step at the orbit end
        dt = np.diff(t.real[-20:])
        eta = max(0.0, 1.0 - float(np.min(dt))) if len(dt) else 0.5
        q = np.exp(-s.real * (1.0 - min(eta, 0.9)))
        tail = np.abs(np.exp(-s * t[-1])) * q / (1.0 - q)
        if np.any(tail > 100 * self.quad_tol * np.maximum(np.abs(val), 1e-30)):
            raise ThetaError("orbit too short for the requested Re(s); extend M")
        return (complex(val[0]) if scalar else val)

    # ------------------------------------------------------------- strips

    def strip_index(self, s):
        """Nominal (alpha = pi) strip index m with 2pi(m-1) < Im s < 2pi m."""
        return int(np.floor(np.imag(s) / TWO_PI)) + 1

    def _strip_rates(self, s, m, alpha):
        d_up = -1j * np.exp(-1j * alpha)
        d_dn = 1j * np.exp(-1j * alpha)
        r_up = -np.real((TWO_PI_I * m - s) * d_up)
        r_dn = -np.real((TWO_PI_I * (m - 1) - s) * d_dn)
        return np.minimum(r_up, r_dn), r_up, r_dn

    def auto_alpha(self, s, m, min_rate=0.25):
        """Pick a (quantized) tilt alpha so the strip-m representation
        converges at s with a usable rate."""
        best, best_rate = None, -np.inf
        for da in np.arange(0.0, 1.45, 0.05):
            for alpha in (self.alpha - da, self.alpha + da) if da else (self.alpha,):
                if not (np.pi / 2 + 0.02 < alpha < 3 * np.pi / 2 - 0.02):
                    continue
                rate, _, _ = self._strip_rates(s, m, alpha)
                rate = float(np.min(rate))
                if rate > best_rate:
                    best, best_rate = alpha, rate
            if best_rate >= min_rate:
                break
        if best is None or best_rate <= 0.02:
            raise ThetaError(f"s={s} not reachable by strip {m} for any tilt")
        return round(float(best), 4), best_rate

    def _strip_path(self, m, alpha, L_up, L_dn):
        # quantize lengths for cache reuse
        L_up = float(np.ceil(L_up / 4.0) * 4.0)
        L_dn = float(np.ceil(L_dn / 4.0) * 4.0)
        key = (m, round(alpha, 4), L_up, L_dn)
        if key in self._paths:
            return self._paths[key]
        xi1, w1 = _panel_nodes(-L_up, -3.0, 1.0)
        xi2, w2 = _panel_nodes(-3.0, 3.0, 0.3)
        xi3, w3 = _panel_nodes(3.0, L_dn, 1.0)
        xi = np.concatenate([xi1, xi2, xi3])
        w = np.concatenate([w1, w2, w3])
        direction = 1j * np.exp(-1j * alpha)
        tau = self.b + direction * xi
        w = w * direction
        x = self.fatou.inverse(tau)
        T = self.germ.t_of(x)
        path = _Path(tau, w, T)
        self._paths[key] = path
        return path

    def theta_strip(self, s, m, alpha=None):
        """Line-integral representation of Theta on the (tilted) strip m.

        For s outside the nominal strip the representation is the
        analytic continuation across the nominal cuts reached by tilting
        the direction (second-sheet values near the cuts).
        """
        scalar = np.ndim(s) == 0
        s_arr = np.atleast_1d(np.asarray(s, dtype=complex))
        if alpha is None:
            alpha, _ = self.auto_alpha(complex(np.mean(s_arr)), m)
        rate, r_up, r_dn = self._strip_rates(s_arr, m, alpha)
        if np.any(rate <= 0.015):
            raise ThetaError(f"strip {m} representation does not converge at given s (tilt {alpha:.3f})")
        drop = -np.log(self.quad_tol * 1e-2)
        L_up = float(np.max(drop / r_up))
        L_dn = float(np.max(drop / r_dn))
        path = self._strip_path(m, alpha, L_up, L_dn)
        lb = _log_bm(path.tau, m)
        ex = np.exp(lb[None, :] - np.outer(s_arr, path.T))
        val = ex @ path.w
        return complex(val[0]) if scalar else val

    # -------------------------------------------------------------- jumps

    def _ray_path(self, beta, L):
        L = float(np.ceil(L / 4.0) * 4.0)
        key = (round(beta, 4), L)
        if key in self._ray_paths:
            return self._ray_paths[key]
        r1, w1 = _panel_nodes(0.0, 3.0, 0.3)
        r2, w2 = _panel_nodes(3.0, L, 1.0)
        r = np.concatenate([r1, r2])
        w = np.concatenate([w1, w2])
        direction = np.exp(-1j * beta)
        tau = self.b + direction * r
        w = w * direction
        x = self.fatou.inverse(tau)
        T = self.germ.t_of(x)
        path = _Path(tau, w, T)
        self._ray_paths[key] = path
        return path

    def _ray_integral(self, omega, s_arr, beta, rate):
        drop = -np.log(self.quad_tol * 1e-2)
        L = float(np.max(drop / rate))
        path = self._ray_path(beta, L)
        ex = np.exp(omega * path.tau[None, :] - np.outer(s_arr, path.T))
        return ex @ path.w

    def _jump_betas(self, omega, s, margin=0.25):
        """Ray angles for the two branches of the across-cut difference."""
        phi = float(np.angle(np.exp(1j * (np.angle(s - omega) - self.alpha + np.pi)))
                    + self.alpha - np.pi)
        # phi = arg(s - omega) in the window centered opposite the cut
        bmax = self.beta_max
        betas = []
        for rep in (phi, phi - TWO_PI if phi > 0 else phi + TWO_PI):
            lo, hi = rep - np.pi / 2 + margin, rep + np.pi / 2 - margin
            b = min(max(0.0, lo), bmax) if rep >= 0 else max(min(0.0, hi), -bmax)
            b = min(max(b, lo), hi)          # pull toward max decay
            b = min(max(b, -bmax), bmax)
            if lo <= b <= hi:
                betas.append(b)
            else:
                betas.append(None)
        return betas  # [down-family (upper branch), up-family (lower branch)]

    def theta_jump(self, omega, s):
        """Across-cut difference of adjacent strip representations at s,
        equal to 2 pi i times the minor Borel transform of
        e^{omega psi} dpsi/dt.  Requires s off the cut omega + e^{i alpha}R+,
        within the reach of admissible ray directions.
        """
        scalar = np.ndim(s) == 0
        s_arr = np.atleast_1d(np.asarray(s, dtype=complex))
        vals = np.empty(s_arr.shape, dtype=complex)
        for i, sv in enumerate(s_arr):
            bD, bU = self._jump_betas(omega, sv)
            if bD is None or bU is None:
                raise ThetaError(f"no admissible ray direction for jump at s={sv}")
            phi = np.angle(sv - omega)
            rD = np.abs(sv - omega) * np.cos(np.angle(np.exp(1j * (phi - bD))))
            rU = np.abs(sv - omega) * np.cos(np.angle(np.exp(1j * (phi - bU))))
            if min(rD, rU) <= 0.01:
                raise ThetaError(f"jump rays do not decay at s={sv}")
            vD = self._ray_integral(omega, np.array([sv]), bD, rD)[0]
            vU = self._ray_integral(omega, np.array([sv]), bU, rU)[0]
            vals[i] = vD - vU
        return complex(vals[0]) if scalar else vals

    # ---------------------------------------------------- sheet evaluation

    def theta_main(self, s):
        """Main-sheet value: direct sum when safely in the right half
        plane, else the strip representation of the nominal strip of s."""
        s = complex(s)
        frac = abs(s.imag / TWO_PI - round(s.imag / TWO_PI))
        if s.real >= max(self.direct_min, 0.15) and frac < 0.08:
            return self.theta_direct(s)
        return self.theta_strip(s, self.strip_index(s))

    def theta_continue(self, point):
        """Evaluate on the universal cover: main-sheet value plus the
        signed jump terms of the recorded cut crossings."""
        s = complex(point.s)
        val = self.theta_main(s)
        for omega_mult, direction in point.crossings:
            omega = TWO_PI_I * omega_mult
            val = val + direction * self.theta_jump(omega, s)
        return val

    # ------------------------------------------------- integral transforms

    def _theta_on_nodes(self, nodes, m_up, m_dn, omega_im=0.0, tilt=0.35):
        """Theta on contour nodes near the cut at height omega_im:
        direct where safe, strip reps elsewhere (tilted close to the cut)."""
        nodes = np.asarray(nodes, dtype=complex)
        out = np.empty(nodes.shape, dtype=complex)
        rel_im = nodes.imag - omega_im
        use_direct = nodes.real >= 0.2
        up = (~use_direct) & (rel_im >= 0)
        dn = (~use_direct) & (rel_im < 0)
        if np.any(use_direct):
            out[use_direct] = self.theta_direct(nodes[use_direct])
        for mask, m in ((up, m_up), (dn, m_dn)):
            if not np.any(mask):
                continue
            sub = nodes[mask]
            res = np.empty(sub.shape, dtype=complex)
            # group by whether the nominal representation converges
            rate, _, _ = self._strip_rates(sub, m, self.alpha)
            ok = rate > 0.25
            if np.any(ok):
                res[ok] = self.theta_strip(sub[ok], m, alpha=self.alpha)
            if np.any(~ok):
                for j in np.nonzero(~ok)[0]:
                    a, _ = self.auto_alpha(complex(sub[j]), m)
                    res[j] = self.theta_strip(complex(sub[j]), m, alpha=a)
            out[mask] = res
        return out

    def _cut_contour(self, omega, t_scale, eta=0.45, n_leg=220, n_arc=80):
        """Keyhole nodes/weights encircling omega + R_{<=0} (alpha = pi),
        oriented positively: in below the cut, around omega, out above."""
        L = max(6.0, 40.0 / max(t_scale, 1.0))
        xs, ws = _panel_nodes(-L, 0.0, min(0.5, L / 12))
        phi, wphi = _panel_nodes(-np.pi / 2, np.pi / 2, np.pi / 16)
        nodes = np.concatenate([
            omega + xs - 1j * eta,                 # below, leftward start
            omega + eta * np.exp(1j * phi),        # arc through Re > Re(omega)
            omega + xs[::-1] + 1j * eta,           # above, back out
        ])
        wts = np.concatenate([
            ws,
            wphi * 1j * eta * np.exp(1j * phi),
            -ws[::-1],
        ])
        return nodes, wts

    def recover_fatou(self, x):
        """(1/2 pi i) Hankel transform of Theta(s)/s e^{s t(x)} over
        Circ(R_{<=0}); equals the sectorial Fatou coordinate up to an
        additive constant which is measured, not assumed."""
        t = complex(self.germ.t_of(x))
        if t.real < 2.0:
            raise ThetaError("t(x) too small for decaying Hankel legs")
        nodes, wts = self._cut_contour(0.0, t.real)
        th = self._theta_on_nodes(nodes, m_up=1, m_dn=0, omega_im=0.0)
        vals = th / nodes * np.exp(nodes * t)
        return complex(np.sum(vals * wts) / TWO_PI_I)

    def verify_bv_identity(self, omega, x):
        """Contour form of the boundary-value identity at omega != 0:
        lhs = (1/2 pi i) Circ(omega + cut) Theta(s)/s e^{s t} ds,
        rhs = e^{omega psi(x)} / omega.  Returns (lhs, rhs, defect)."""
        if omega == 0:
            raise ThetaError("omega must be nonzero; use recover_fatou")
        m = int(round(omega.imag / TWO_PI))
        t = complex(self.germ.t_of(x))
        if t.real < 2.0:
            raise ThetaError("t(x) too small for decaying legs")
        nodes, wts = self._cut_contour(omega, t.real)
        th = self._theta_on_nodes(nodes, m_up=m + 1, m_dn=m, omega_im=omega.imag)
        lhs = complex(np.sum(th / nodes * np.exp(nodes * t) * wts) / TWO_PI_I)
        psi = complex(self.fatou.psi(x))
        rhs = np.exp(omega * psi) / omega
        return lhs, rhs, abs(lhs - rhs)

    def residue_at(self, omega, r=0.5, n_arc=160):
        """Keyhole residue of Theta at omega: arc integral with per-side
        branches plus the radial across-cut correction."""
        m = int(round(np.imag(omega) / TWO_PI))
        phi, wphi = _panel_nodes(-np.pi + 1e-9, np.pi - 1e-9, np.pi / 24)
        nodes = omega + r * np.exp(1j * phi)
        wts = wphi * 1j * r * np.exp(1j * phi)
        th = self._theta_on_nodes(nodes, m_up=m + 1, m_dn=m, omega_im=np.imag(omega))
        arc = np.sum(th * wts)
        xs, ws = _panel_nodes(-r, 0.0, r / 10)
        jump_vals = self.theta_jump(omega, omega + xs + 0j) if self._jump_nonzero() \
            else np.zeros_like(xs, dtype=complex)
        radial = np.sum(jump_vals * ws)
        return complex((arc + radial) / TWO_PI_I)

    def _jump_nonzero(self):
        # the model has zero tail: all jumps vanish identically
        f = self.fatou.formal
        return not (len(f.tail) == 0 or np.max(np.abs(f.tail)) < 1e-13) or abs(f.rho) > 1e-13


class SheetPoint:
    """Point of the universal cover of C minus 2 pi i Z: a base value s
    plus an ordered list of cut crossings (omega multiple, direction)."""

    def __init__(self, s, crossings=()):
        self.s = complex(s)
        self.crossings = [(int(m), int(d)) for m, d in crossings]
        for m, d in self.crossings:
            if d not in (-1, 1):
                raise ValueError("crossing direction must be +-1")

    def serialize(self):
        cr = ",".join(f"{'+' if d > 0 else '-'}{m}" for m, d in self.crossings)
        return f"{self.s.real:.17g},{self.s.imag:.17g};crossings={cr}"

    @staticmethod
    def parse(text):
        head, _, tail = text.partition(";")
        re_s, im_s = (float(v) for v in head.split(","))
        crossings = []
        if tail:
            if not tail.startswith("crossings="):
                raise ValueError("malformed SheetPoint serialization")
            body = tail[len("crossings="):]
            if body:
                for tok in body.split(","):
                    tok = tok.strip()
                    d = 1 if tok[0] == "+" else -1
                    crossings.append((int(tok[1:]), d))
        return SheetPoint(complex(re_s, im_s), crossings)
