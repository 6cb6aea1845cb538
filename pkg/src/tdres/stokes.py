"""Complex-time geometry of the adiabatic problem.

Turning points are the complex zeros of the adiabatic energy E(tau).  A
Stokes line through a turning point tau_c is the level set
Re integral_{tau_c}^{tau} E(s) ds = 0; the real-axis intersections tau_r of
the lines from upper-half-plane turning points are where nonadiabatic
"jumps" happen, weighted by exp(-2 D_k) with
D_k = Im integral_{tau_r,k}^{tau_c,k} E(s) ds > 0.

Tracing works with the local direction field d tau/d sigma ~ i / E(tau)
(unit-normalized, sign kept continuous), which avoids any global branch-cut
bookkeeping.  Lines terminate at the domain box, at a real-axis crossing, or
when they run into another turning point.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .core import ModelParams
from .errors import NumericalError
from .quadrature import (PhaseTable, deformed_waypoints, tracked_path_integral)


# ---------------------------------------------------------------------------
# energy models (analytic continuations of the positive eigenvalue)

class PowerSweepEnergy:
    """E(tau) = sqrt(tau^(2n) + dt^2) for the power-law sweep model."""

    def __init__(self, n: int, delta_tilde: float):
        self.n = n
        self.delta_tilde = float(delta_tilde)

    def energy(self, z):
        zn = np.asarray(z) ** self.n
        return np.sqrt(zn * zn + self.delta_tilde**2)

    def energy_sq_derivative(self, z: complex) -> complex:
        return 2 * self.n * z ** (2 * self.n - 1)

    def upper_turning_points(self):
        r = self.delta_tilde ** (1.0 / self.n)
        return [r * cmath.exp(1j * (math.pi / (2 * self.n) + k * math.pi / self.n))
                for k in range(self.n)]

    @property
    def scale(self) -> float:
        return self.delta_tilde ** (1.0 / self.n)

    @classmethod
    def from_params(cls, params: ModelParams):
        return cls(params.n, params.delta_tilde)


class AnnealEnergy:
    """E(tau) = sqrt((1 - tau^n)^2 dx^2 + tau^(2n) dz^2) for schedules that
    ramp one coupling down while the other ramps up on [0, 1]."""

    def __init__(self, n: int, dbar_x: float, dbar_z: float):
        self.n = n
        self.dbar_x = float(dbar_x)
        self.dbar_z = float(dbar_z)

    def energy(self, z):
        zn = np.asarray(z) ** self.n
        return np.sqrt((1 - zn) ** 2 * self.dbar_x**2 + zn * zn * self.dbar_z**2)

    def energy_sq_derivative(self, z: complex) -> complex:
        n = self.n
        zn = z**n
        return (-2 * self.dbar_x**2 * (1 - zn) + 2 * self.dbar_z**2 * zn) * n * z ** (n - 1)

    def upper_turning_points(self):
        base = self.dbar_x * (self.dbar_x + 1j * self.dbar_z) / (self.dbar_x**2 + self.dbar_z**2)
        roots = [base ** (1.0 / self.n) * cmath.exp(2j * math.pi * k / self.n) for k in range(self.n)]
        roots += [r.conjugate() for r in roots]
        return [r for r in roots if r.imag > 1e-12]

    @property
    def scale(self) -> float:
        return max(abs(t) for t in self.upper_turning_points())


class ScheduleEnergy:
    """E(tau) = sqrt(dx^2 (1-p(tau))^2 + dz^2 p(tau)^2) for a polynomial
    schedule p; used by the effective two-level reduction of multi-level
    gap profiles."""

    def __init__(self, poly: np.polynomial.Polynomial, dbar_x: float, dbar_z: float):
        self.poly = poly
        self.dbar_x = float(dbar_x)
        self.dbar_z = float(dbar_z)
        self._dpoly = poly.deriv()

    def energy(self, z):
        p = self.poly(np.asarray(z))
        return np.sqrt(self.dbar_x**2 * (1 - p) ** 2 + self.dbar_z**2 * p * p)

    def energy_sq_derivative(self, z: complex) -> complex:
        p = self.poly(z)
        return (-2 * self.dbar_x**2 * (1 - p) + 2 * self.dbar_z**2 * p) * self._dpoly(z)

    def upper_turning_points(self):
        # zeros of dx^2 (1-p)^2 + dz^2 p^2 as a polynomial in tau; trailing
        # noise coefficients of the fitted schedule breed ghost roots, so the
        # polynomial is trimmed first and far-field roots are dropped
        one_minus = np.polynomial.Polynomial([1.0]) - self.poly
        e2 = self.dbar_x**2 * one_minus**2 + self.dbar_z**2 * self.poly**2
        e2 = e2.trim(1e-9 * float(np.max(np.abs(e2.coef))))
        roots = e2.roots()
        ups = [complex(r) for r in roots
               if 1e-9 < r.imag <= 1.5 and -1.0 <= r.real <= 2.0]
        ups.sort(key=lambda z: z.imag)
        return ups

    @property
    def scale(self) -> float:
        tps = self.upper_turning_points()
        return max(abs(t) for t in tps) if tps else 1.0


# ---------------------------------------------------------------------------
# geometry data types

@dataclass(frozen=True)
class TurningPoint:
    location: complex
    k: int
    half_plane: str  # "upper" | "lower"


@dataclass
class StokesLine:
    origin: TurningPoint
    points: np.ndarray  # complex polyline
    crossing: float | None = None


@dataclass
class StokesGeometry:
    turning_points: list
    lines: list
    crossings: np.ndarray      # ascending tau_r
    actions: np.ndarray        # D_k aligned with crossings
    k_indices: np.ndarray      # paper-style k label per crossing
    window: tuple
    model: object = field(repr=False, default=None)
    phase_table: PhaseTable = field(repr=False, default=None)

    def phase(self, a: float, b: float) -> float:
        """integral of E over [a, b] on the real axis."""
        return self.phase_table.value(b) - self.phase_table.value(a)


# ---------------------------------------------------------------------------
# operations

def turning_points(params: ModelParams) -> list:
    """All 2n zeros of the sweep energy, k ordered by descending real part
    within each half-plane."""
    model = PowerSweepEnergy.from_params(params)
    return _label_turning_points(model)


def _label_turning_points(model) -> list:
    ups = sorted(model.upper_turning_points(), key=lambda z: -z.real)
    tps = [TurningPoint(z, k, "upper") for k, z in enumerate(ups)]
    tps += [TurningPoint(z.conjugate(), k, "lower") for k, z in enumerate(ups)]
    return tps


def _seed_directions(model, tau_c: complex):
    """The three Stokes directions from a simple turning point, from the
    local behaviour E ~ c (tau - tau_c)^(1/2)."""
    c = cmath.sqrt(model.energy_sq_derivative(tau_c))
    base = (2.0 / 3.0) * (math.pi / 2 - cmath.phase(c))
    return [base + m * 2.0 * math.pi / 3.0 for m in range(3)]


def _direction(model, z: complex, ref: complex) -> complex:
    v = 1j / model.energy(complex(z))
    v = v / abs(v)
    if (v.real * ref.real + v.imag * ref.imag) < 0:
        v = -v
    return v


def _rk4_point(model, z: complex, h: float, ref: complex) -> complex:
    k1 = _direction(model, z, ref)
    k2 = _direction(model, z + 0.5 * h * k1, ref)
    k3 = _direction(model, z + 0.5 * h * k2, ref)
    k4 = _direction(model, z + h * k3, ref)
    return z + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def trace_stokes_line(origin: TurningPoint, branch: int, model_or_params,
                      box=None, step_scale: float = 1.0) -> StokesLine:
    """Trace one of the three Stokes branches emanating from ``origin``.

    branch: index 0..2 into the seed directions (sorted by angle).
    box: (re_lo, re_hi, im_lo, im_hi) tracing domain.
    """
    model = _as_model(model_or_params)
    tau_c = complex(origin.location)
    scale = max(abs(tau_c), 1e-6)
    if box is None:
        box = default_box(model)
    angles = sorted(a % (2 * math.pi) for a in _seed_directions(model, tau_c))
    ang = angles[branch]
    r0 = 1e-3 * scale
    z = tau_c + r0 * cmath.exp(1j * ang)
    ref = cmath.exp(1j * ang)
    others = [complex(t.location) for t in _label_turning_points(model)
              if abs(complex(t.location) - tau_c) > 1e-12 * scale]
    pts = [tau_c, z]
    h_max = 0.01 * max(scale, 1.0) * step_scale
    h_min = 1e-7 * scale
    crossing = None
    re_lo, re_hi, im_lo, im_hi = box
    for _ in range(500_000):
        d_near = min((abs(z - o) for o in others), default=math.inf)
        if d_near < 1e-5 * scale:
            break  # ran into another turning point
        h = min(h_max, max(h_min, 0.25 * min(d_near, abs(z - tau_c))))
        z_new = _rk4_point(model, z, h, ref)
        if (z.imag > 0) != (z_new.imag > 0) or z_new.imag == 0.0:
            # bisect the step size until the endpoint sits on the real axis
            lo, hi = 0.0, h
            zc = z_new
            for _b in range(80):
                mid = 0.5 * (lo + hi)
                zm = _rk4_point(model, z, mid, ref)
                if (zm.imag > 0) == (z.imag > 0) and zm.imag != 0.0:
                    lo = mid
                else:
                    hi = mid
                    zc = zm
                if abs(zc.imag) < 1e-12 * max(1.0, scale):
                    break
            zc = complex(zc.real, 0.0)
            pts.append(zc)
            crossing = zc.real
            break
        pts.append(z_new)
        ref = _direction(model, z_new, ref)
        z = z_new
        if not (re_lo <= z.real <= re_hi and im_lo <= z.imag <= im_hi):
            break
    else:
        raise NumericalError("stokes.trace_stokes_line",
                             f"tracing from {tau_c!r} branch {branch} did not terminate")
    return StokesLine(origin, np.array(pts, dtype=complex), crossing)


def default_box(model):
    r = 2.5 * model.scale + 0.5
    return (-r, r, -r, r)


def _as_model(model_or_params):
    if isinstance(model_or_params, ModelParams):
        return PowerSweepEnergy.from_params(model_or_params)
    return model_or_params


def line_defect(line: StokesLine, model_or_params) -> float:
    """max |Re integral of E from the turning point| along the polyline, by
    independent quadrature (Gauss-Legendre per segment, branch-continued).

    The stub from the turning point to the first marched point is handled
    with the square-root desingularization."""
    model = _as_model(model_or_params)
    pts = line.points
    from .quadrature import _gl_nodes, _track_branch  # reuse internals

    seed = pts[1]
    v_seed = complex(model.energy(complex(seed)))
    # integral tau_c -> seed, branch tied to the seed value
    acc = -tracked_path_integral(model.energy, [seed, pts[0]], sqrt_endpoint=True,
                                 panels=16, order=10, anchor=v_seed)
    worst = abs(acc.real)
    prev_val = v_seed
    x, w = _gl_nodes(8)
    for i in range(1, len(pts) - 1):
        a, b = pts[i], pts[i + 1]
        z = a + (b - a) * (0.5 + 0.5 * x)
        vals = np.asarray(model.energy(z), dtype=complex)
        vals = _track_branch(np.concatenate([[prev_val], vals]), None)[1:]
        prev_val = vals[-1]
        acc += complex(np.sum(vals * 0.5 * w)) * (b - a)
        worst = max(worst, abs(acc.real))
    return worst


def imaginary_action(k: int, params_or_geometry) -> float:
    """D_k = Im integral from tau_r,k to the upper turning point k."""
    geo = params_or_geometry if isinstance(params_or_geometry, StokesGeometry) \
        else build_geometry(params_or_geometry)
    idx = list(geo.k_indices).index(k)
    return float(geo.actions[idx])


def action_integral(model, tau_r: float, tau_c: complex) -> complex:
    """integral of E along the (deformed) segment tau_r -> tau_c with the
    branch anchored at the positive real energy at tau_r."""
    others = [t for t in _label_turning_points(model)
              if abs(complex(t.location) - tau_c) > 1e-12 * max(abs(tau_c), 1e-6)]
    avoid = 0.1 * abs(tau_c)
    waypoints = deformed_waypoints(complex(tau_r), tau_c,
                                   [complex(t.location) for t in others], avoid)
    anchor = complex(model.energy(complex(tau_r)))
    return tracked_path_integral(model.energy, waypoints, sqrt_endpoint=True,
                                 panels=32, order=10, anchor=anchor)


def build_geometry(params_or_model, window=None, box=None, step_scale: float = 1.0,
                   phase_intervals: int | None = None) -> StokesGeometry:
    """Trace all Stokes lines, collect real-axis crossings inside the window
    (upper half-plane turning points only), and compute the actions D_k."""
    if isinstance(params_or_model, ModelParams):
        model = PowerSweepEnergy.from_params(params_or_model)
        if window is None:
            window = params_or_model.window
    else:
        model = params_or_model
        if window is None:
            raise ValueError("window is required when passing a bare energy model")
    if box is None:
        box = default_box(model)
    tps = _label_turning_points(model)
    lines = []
    records = []
    seen = {}
    for tp in tps:
        for branch in range(3):
            line = trace_stokes_line(tp, branch, model, box, step_scale)
            lines.append(line)
            if (tp.half_plane == "upper" and line.crossing is not None
                    and window[0] <= line.crossing <= window[1]):
                if tp.k in seen and abs(seen[tp.k] - line.crossing) > 1e-6:
                    raise NumericalError(
                        "stokes.build_geometry",
                        f"turning point k={tp.k} crosses the window twice "
                        f"({seen[tp.k]:g} and {line.crossing:g})")
                if tp.k not in seen:
                    seen[tp.k] = line.crossing
                    records.append((tp, line.crossing))
    recs = []
    for tp, tau_r in records:
        # Newton polish on Re integral(tau_r -> tau_c) = 0: the traced
        # crossing carries the marching drift (~1e-8), the polished one is
        # exact to quadrature precision
        act = action_integral(model, tau_r, complex(tp.location))
        for _ in range(3):
            if abs(act.real) < 1e-13 * max(1.0, abs(act.imag)):
                break
            tau_r = tau_r + act.real / float(np.real(model.energy(tau_r)))
            act = action_integral(model, tau_r, complex(tp.location))
        recs.append((tau_r, tp.k, act.imag))
    recs.sort(key=lambda r: r[0])
    crossings = np.array([r[0] for r in recs])
    k_idx = np.array([r[1] for r in recs], dtype=int)
    actions = np.array([r[2] for r in recs])
    table = PhaseTable(model.energy, window[0], window[1], phase_intervals)
    return StokesGeometry(tps, lines, crossings, actions, k_idx, tuple(window),
                          model, table)


@lru_cache(maxsize=16)
def default_geometry(params: ModelParams) -> StokesGeometry:
    return build_geometry(params)


def real_axis_crossings(geometry: StokesGeometry, window=None) -> np.ndarray:
    """Crossings tau_r inside the query window (sorted)."""
    if window is None:
        return geometry.crossings.copy()
    lo, hi = window
    return geometry.crossings[(geometry.crossings >= lo) & (geometry.crossings <= hi)]


def wkb_transition_amplitude(params_or_geometry, tau0: float | None = None,
                             tauf: float | None = None) -> complex:
    """Leading-order transition amplitude: a signed sum of crossing terms
    exp(i phase_in) exp(-i phase_out) exp(-2 D_k)."""
    geo = params_or_geometry if isinstance(params_or_geometry, StokesGeometry) \
        else default_geometry(params_or_geometry)
    t0 = geo.window[0] if tau0 is None else tau0
    tf = geo.window[1] if tauf is None else tauf
    amp = 0.0 + 0.0j
    for tau_r, k, d in zip(geo.crossings, geo.k_indices, geo.actions):
        th_in = geo.phase(t0, tau_r)
        th_out = geo.phase(tau_r, tf)
        amp += (-1) ** int(k) * cmath.exp(1j * th_in - 1j * th_out) * math.exp(-2 * d)
    return amp


def connection_matrix(tp: TurningPoint, dominant: str, geometry: StokesGeometry,
                      tau0: float | None = None) -> np.ndarray:
    """Unipotent basis change across the Stokes line of ``tp``, counter-
    clockwise crossing, leading order (correction integrals g_pm set to 0).

    dominant="minus": lower-triangular, entry (1,0) carries the continued
    half-angle factor (-1)^k times exp(2i integral of E from tau0 to tau_c).
    dominant="plus": upper-triangular with the reciprocal factor.  The
    half-angle continuation is fixed so the product over the upper turning
    points reproduces the signed crossing sum of the transition amplitude.
    """
    t0 = geometry.window[0] if tau0 is None else tau0
    model = geometry.model
    # locate this turning point's real-axis crossing
    matches = [(c, k) for c, k in zip(geometry.crossings, geometry.k_indices) if k == tp.k]
    if not matches:
        raise ValueError(f"turning point k={tp.k} has no crossing inside the window")
    tau_r = matches[0][0]
    tau_c = complex(tp.location)
    if tp.half_plane == "lower":
        tau_c = tau_c.conjugate()  # action computed at the upper partner
    S = action_integral(model, tau_r, tau_c)  # = R + iD with R ~ 0
    phase_in = geometry.phase(t0, tau_r)
    full = phase_in + S  # integral of E from tau0 to the upper turning point
    sign = (-1) ** int(tp.k)
    m = np.eye(2, dtype=complex)
    if dominant == "minus":
        m[1, 0] = sign * cmath.exp(2j * full)
    elif dominant == "plus":
        m[0, 1] = -sign * cmath.exp(-2j * full.conjugate())
    else:
        raise ValueError("dominant must be 'plus' or 'minus'")
    return m


def adiabatic_impulse_amplitude(geometry: StokesGeometry, tau0: float | None = None,
                                tauf: float | None = None) -> complex:
    """Transition amplitude assembled from the product of connection
    matrices over the upper turning points (adiabatic-impulse picture)."""
    t0 = geometry.window[0] if tau0 is None else tau0
    tf = geometry.window[1] if tauf is None else tauf
    total = np.eye(2, dtype=complex)
    uppers = [tp for tp in geometry.turning_points
              if tp.half_plane == "upper" and tp.k in set(int(k) for k in geometry.k_indices)]
    for tp in uppers:
        total = connection_matrix(tp, "minus", geometry, t0) @ total
    return cmath.exp(-1j * geometry.phase(t0, tf)) * total[1, 0]
