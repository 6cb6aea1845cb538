"""Quadrature helpers: branch-tracked complex path integrals and cached
phase tables for oscillation phases of the form 2*integral of the gap.

The adiabatic energy is a square root of an analytic function, so its
principal branch can flip sign along a complex path.  All complex-path
integrals here sample the integrand densely in path order and flip signs to
keep the values continuous, anchored at the starting point.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .errors import NumericalError


@lru_cache(maxsize=32)
def _gl_nodes(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def _segment_nodes(a: complex, b: complex, panels: int, order: int):
    """Gauss-Legendre nodes/weights for a straight segment, in path order."""
    x, w = _gl_nodes(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    t = ((edges[:-1, None] + edges[1:, None]) / 2 + (edges[1:, None] - edges[:-1, None]) / 2 * x[None, :]).ravel()
    wt = ((edges[1:, None] - edges[:-1, None]) / 2 * w[None, :]).ravel()
    z = a + (b - a) * t
    return z, wt * (b - a)


def _sqrt_end_nodes(a: complex, b: complex, panels: int, order: int):
    """Nodes/weights for a segment ending at a square-root zero of the
    integrand at ``b``; substitution z = b + (a-b) w^2 makes it smooth.
    Nodes are returned in path order (from a towards b)."""
    x, w = _gl_nodes(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    t = ((edges[:-1, None] + edges[1:, None]) / 2 + (edges[1:, None] - edges[:-1, None]) / 2 * x[None, :]).ravel()
    wt = ((edges[1:, None] - edges[:-1, None]) / 2 * w[None, :]).ravel()
    wv = t[::-1]  # w runs from 1 (a side) down to 0 (b side)
    wts = wt[::-1]
    z = b + (a - b) * wv**2
    return z, -wts * 2.0 * wv * (a - b)


def _track_branch(values: np.ndarray, anchor: complex | None) -> np.ndarray:
    """Flip signs so successive samples are continuous; optionally align the
    first sample with ``anchor``."""
    out = np.array(values, dtype=complex)
    if anchor is not None and (out[0].real * anchor.real + out[0].imag * anchor.imag) < 0:
        out = -out
    prev = out[0]
    for i in range(1, len(out)):
        v = out[i]
        if abs(v - prev) > abs(v + prev):
            v = -v
            out[i] = v
        prev = v
    return out


def tracked_path_integral(f, waypoints, *, sqrt_endpoint=False, panels=24, order=10,
                          anchor: complex | None = None) -> complex:
    """Integrate ``f`` along the polygonal path through ``waypoints`` with
    branch continuity.

    sqrt_endpoint: the integrand vanishes like a square root at the final
    waypoint (a turning point); the last segment is desingularized.
    anchor: value fixing the branch at the first node (e.g. the positive
    physical energy at a real starting time).
    """
    pts = [complex(w) for w in waypoints]
    zs, ws = [], []
    for i in range(len(pts) - 1):
        last = i == len(pts) - 2
        if last and sqrt_endpoint:
            z, w = _sqrt_end_nodes(pts[i], pts[i + 1], panels, order)
        else:
            z, w = _segment_nodes(pts[i], pts[i + 1], panels, order)
        zs.append(z)
        ws.append(w)
    z = np.concatenate(zs)
    w = np.concatenate(ws)
    vals = _track_branch(np.asarray(f(z), dtype=complex), anchor)
    return complex(np.sum(vals * w))


def real_line_integral(f, a: float, b: float, *, points=None) -> float:
    """Adaptive quadrature of a real-valued integrand on the real axis."""
    if a == b:
        return 0.0
    kw = {"limit": 400, "epsabs": 1e-12, "epsrel": 1e-11}
    if points:
        pts = [p for p in points if min(a, b) < p < max(a, b)]
        if pts:
            kw["points"] = sorted(pts)
    val, _err = quad(f, a, b, **kw)
    return val


class PhaseTable:
    """Cumulative integral of a positive energy on a real window with cubic
    Hermite interpolation (exact derivative data), error well below 1e-8."""

    def __init__(self, energy, tau0: float, tauf: float, n_intervals: int | None = None):
        if n_intervals is None:
            n_intervals = int(min(400_000, max(10_000, math.ceil((tauf - tau0) / 0.0025))))
        self.tau0 = float(tau0)
        self.tauf = float(tauf)
        self.n = n_intervals
        x = np.linspace(tau0, tauf, n_intervals + 1)
        gx, gw = _gl_nodes(5)
        h = (tauf - tau0) / n_intervals
        mid = 0.5 * (x[:-1] + x[1:])
        pts = mid[:, None] + (h / 2) * gx[None, :]
        vals = np.asarray(energy(pts), dtype=float)
        seg = (h / 2) * (vals @ gw)
        self.x = x
        self.phi = np.concatenate([[0.0], np.cumsum(seg)])
        self.d = np.asarray(energy(x), dtype=float)
        self._h = h
        self._inv_h = 1.0 / h
        self._energy = energy
        # plain python lists are faster for the scalar hot path
        self._xl = x.tolist()
        self._pl = self.phi.tolist()
        self._dl = self.d.tolist()

    def value(self, t: float) -> float:
        """Phi(t) = integral of the energy from tau0 to t."""
        if t <= self.tau0:
            if t < self.tau0 - 1e-9 * (1 + abs(self.tau0)):
                return -real_line_integral(self._energy, t, self.tau0)
            return 0.0
        if t >= self.tauf:
            if t > self.tauf + 1e-9 * (1 + abs(self.tauf)):
                return self._pl[-1] + real_line_integral(self._energy, self.tauf, t)
            return self._pl[-1]
        i = int((t - self.tau0) * self._inv_h)
        if i >= self.n:
            i = self.n - 1
        x0 = self._xl[i]
        s = (t - x0) * self._inv_h
        s2 = s * s
        s3 = s2 * s
        h00 = 2 * s3 - 3 * s2 + 1
        h10 = s3 - 2 * s2 + s
        h01 = -2 * s3 + 3 * s2
        h11 = s3 - s2
        return (h00 * self._pl[i] + h01 * self._pl[i + 1]
                + self._h * (h10 * self._dl[i] + h11 * self._dl[i + 1]))

    def values(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        i = np.clip(((ts - self.tau0) * self._inv_h).astype(int), 0, self.n - 1)
        s = (ts - self.x[i]) * self._inv_h
        s2 = s * s
        s3 = s2 * s
        h00 = 2 * s3 - 3 * s2 + 1
        h10 = s3 - 2 * s2 + s
        h01 = -2 * s3 + 3 * s2
        h11 = s3 - s2
        return (h00 * self.phi[i] + h01 * self.phi[i + 1]
                + self._h * (h10 * self.d[i] + h11 * self.d[i + 1]))


def segment_distance(p: complex, q: complex, z: complex) -> float:
    """Distance from point z to the segment [p, q]."""
    d = q - p
    L2 = abs(d) ** 2
    if L2 == 0.0:
        return abs(z - p)
    s = ((z - p).real * d.real + (z - p).imag * d.imag) / L2
    s = min(1.0, max(0.0, s))
    return abs(p + s * d - z)


def deformed_waypoints(p: complex, q: complex, obstacles, avoid: float, max_depth: int = 4):
    """Straight path from p to q, detoured around obstacle points that come
    within ``avoid``; raises if deformation keeps failing."""

    def _split(a, b, depth):
        if depth > max_depth:
            raise NumericalError("stokes.imaginary_action",
                                 f"path {a}->{b} cannot avoid turning points (radius {avoid:g})")
        worst = None
        for z in obstacles:
            dist = segment_distance(a, b, z)
            if dist < avoid and (worst is None or dist < worst[0]):
                worst = (dist, z)
        if worst is None:
            return [a, b]
        _, z = worst
        d = b - a
        L2 = abs(d) ** 2
        s = ((z - a).real * d.real + (z - a).imag * d.imag) / L2
        s = min(0.9, max(0.1, s))
        foot = a + s * d
        away = foot - z
        if abs(away) < 1e-14:
            away = 1j * d / abs(d)
        else:
            away = away / abs(away)
        mid = z + away * 2.0 * avoid
        left = _split(a, mid, depth + 1)
        right = _split(mid, b, depth + 1)
        return left[:-1] + right

    return _split(complex(p), complex(q), 0)
