"""Complex contour quadrature: Hankel contours, rays, circles.

All integrators call the integrand on ndarrays of nodes, return a
``QuadResult(value, error)``, and refine adaptively until the estimated
relative error is below ``quad_tol``.  Callers are expected to propagate
the error estimates into their own tolerances.
"""

from __future__ import annotations

from collections import namedtuple

import numpy as np

QuadResult = namedtuple("QuadResult", ["value", "error"])

DEFAULT_QUAD_TOL = 1e-10


class QuadratureError(RuntimeError):
    pass


def _gl_nodes(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


_GL_CACHE = {}


def _panel_quad(F, a, b, n):
    """Gauss-Legendre on the straight segment [a, b]."""
    if n not in _GL_CACHE:
        _GL_CACHE[n] = _gl_nodes(n)
    x, w = _GL_CACHE[n]
    mid, half = (a + b) / 2.0, (b - a) / 2.0
    nodes = mid + half * x
    vals = np.asarray(F(nodes))
    return half * np.dot(w, vals)


def _segments_quad(F, points, n, tol):
    """Composite GL over a polyline, refining panels by node doubling."""
    total = 0.0 + 0.0j
    err = 0.0
    for a, b in zip(points[:-1], points[1:]):
        v1 = _panel_quad(F, a, b, n)
        v2 = _panel_quad(F, a, b, 2 * n)
        e = abs(v2 - v1)
        m = 2 * n
        while e > tol and m < 16 * n:
            v1, m = v2, 2 * m
            v2 = _panel_quad(F, a, b, m)
            e = abs(v2 - v1)
        total += v2
        err += e
    return total, err


def _split_panels(a, direction, lengths):
    pts = [a]
    for ln in lengths:
        pts.append(pts[-1] + direction * ln)
    return np.array(pts)


def ray_integral(F, anchor, angle, quad_tol=DEFAULT_QUAD_TOL, first_len=1.0,
                 max_len=400.0, nodes=16, growth_check=True):
    """Integral of F over anchor + e^{i angle} R_{>=0}.

    Panels extend until the last panel contributes below the tail
    tolerance quad_tol/100 relative to the accumulated value; detected
    growth along the ray raises.
    """
    d = np.exp(1j * angle)
    tail_tol = quad_tol / 100.0
    total = 0.0 + 0.0j
    err = 0.0
    pos = 0.0
    ln = first_len
    last_mag = None
    scale = 0.0
    while pos < max_len:
        a = anchor + d * pos
        b = anchor + d * (pos + ln)
        v1 = _panel_quad(F, a, b, nodes)
        v2 = _panel_quad(F, a, b, 2 * nodes)
        e = abs(v2 - v1)
        m = 2 * nodes
        while e > quad_tol * max(abs(total), abs(v2), 1e-30) and m < 16 * nodes:
            v1, m = v2, 2 * m
            v2 = _panel_quad(F, a, b, m)
            e = abs(v2 - v1)
        total += v2
        err += e
        scale = max(scale, abs(total))
        mag = abs(v2) / ln
        if growth_check and last_mag is not None and pos > 8 * first_len:
            if mag > 4.0 * last_mag and mag > 1e3 * max(scale, 1e-30):
                raise QuadratureError(f"integrand grows along ray (angle={angle:.3f})")
        last_mag = mag
        pos += ln
        if abs(v2) < tail_tol * max(scale, 1e-300) and pos > 4 * first_len:
            err += abs(v2)  # tail bound: geometric continuation of last panel
            break
        ln = min(ln * 1.5, 8.0 * first_len)
    else:
        raise QuadratureError("ray integral: truncation length cap reached without decay")
    return QuadResult(total, err)


class ContourSpec:
    """Geometry of a reusable contour.

    kind: 'hankel' | 'ray' | 'line' | 'circle'.  anchor is the ray base
    or circle center, direction the cut/ray angle, radius the Hankel
    loop (or circle) radius, length the leg truncation, nodes the base
    Gauss-Legendre panel order (>= 16).
    """

    def __init__(self, kind, anchor=0.0, direction=np.pi, radius=0.3,
                 length=40.0, nodes=16):
        if nodes < 16:
            raise ValueError("node_count must be at least 16")
        self.kind = kind
        self.anchor = complex(anchor)
        self.direction = float(direction)
        self.radius = float(radius)
        self.length = float(length)
        self.nodes = int(nodes)


def hankel_integral(F, spec, quad_tol=DEFAULT_QUAD_TOL):
    """Integral of F over the Hankel contour encircling the cut ray
    anchor + e^{i direction} R_{>=0}, positively oriented (in along one
    side, around the anchor, out along the other).

    Returns the plain contour integral (no 1/(2 pi i) factor).
    """
    th = spec.direction
    d = np.exp(1j * th)
    r0 = spec.radius
    off_in = r0 * np.exp(1j * (th + np.pi / 2))   # entering side
    off_out = r0 * np.exp(1j * (th - np.pi / 2))  # exiting side
    tail_tol = quad_tol / 100.0

    # choose leg length adaptively: extend until the integrand is tiny
    L = spec.length
    probe = np.array([spec.anchor + d * L + off_in])
    tries = 0
    while abs(F(probe)[0]) > tail_tol and tries < 8:
        L *= 1.5
        probe = np.array([spec.anchor + d * L + off_in])
        tries += 1
    if tries == 8 and abs(F(probe)[0]) > 1e-4:
        raise QuadratureError("hankel legs do not decay")

    # panel breakpoints densest near the loop
    xs = np.unique(np.concatenate([
        np.linspace(0.0, min(2.0, L), 5),
        np.geomspace(min(2.0, L), L, max(6, int(np.log2(L / 2.0 + 1)) * 3)),
    ]))
    leg_in_pts = (spec.anchor + d * xs + off_in)[::-1]     # from far to anchor
    leg_out_pts = spec.anchor + d * xs + off_out           # from anchor to far

    v_in, e_in = _segments_quad(F, leg_in_pts, spec.nodes, quad_tol)
    v_out, e_out = _segments_quad(F, leg_out_pts, spec.nodes, quad_tol)

    # loop: arc of radius r0 around the anchor from angle th+pi/2-2pi to th-pi/2
    def G(phi):
        z = spec.anchor + r0 * np.exp(1j * phi)
        return np.asarray(F(z)) * 1j * r0 * np.exp(1j * phi)

    phis = np.linspace(th + np.pi / 2 - 2 * np.pi, th - np.pi / 2, 9)
    v_arc, e_arc = _segments_quad(G, phis, spec.nodes, quad_tol)

    tail = abs(F(np.array([spec.anchor + d * L + off_in]))[0]) * 2.0
    return QuadResult(v_in + v_arc + v_out, e_in + e_out + e_arc + tail)


def circle_integral(F, center, r, nodes=64):
    """(1/2 pi i) * contour integral of F over the circle |s-center| = r.

    Plain trapezoid in the angle: spectrally accurate for F analytic on
    a neighborhood of the circle.
    """
    phi = np.arange(nodes) * (2 * np.pi / nodes)
    z = center + r * np.exp(1j * phi)
    vals = np.asarray(F(z))
    v = np.mean(vals * r * np.exp(1j * phi))
    # error estimate: compare against half the nodes
    v2 = np.mean(vals[::2] * r * np.exp(1j * phi[::2]))
    return QuadResult(v, abs(v - v2))


def line_integral(F, points, nodes=16, quad_tol=DEFAULT_QUAD_TOL):
    """Composite integral along an explicit polyline (oriented)."""
    v, e = _segments_quad(F, np.asarray(points, dtype=complex), nodes, quad_tol)
    return QuadResult(v, e)
