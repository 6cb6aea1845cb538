"""Finite-interval annealing-type schedules on [0, 1].

Both Hamiltonian terms are time-dependent:
H(tau) = dbar_x (1 - tau^n) sx + dbar_z tau^n sz, so the Stokes geometry
lives in a finite window and only the crossings inside [0, 1] carry
oscillatory control components.  Both terms of the first-order transition
amplitude are complex here, so the tuned amplitudes come with phases xi.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .core import ControlFunction, QuantumState, StepControl, Trajectory, frame_xz, propagate_xz
from .optctl import ControlGrid, OptProblem
from .stokes import (AnnealEnergy, StokesGeometry, build_geometry,
                     _label_turning_points)


@dataclass(frozen=True)
class AnnealSpec:
    """Schedule u0(tau) = tau^n on [0, 1] with endpoint couplings
    dbar_x (tau=0) and dbar_z (tau=1), both positive."""

    dbar_x: float
    dbar_z: float
    n: int = 1

    def __post_init__(self):
        if not (self.dbar_x > 0 and self.dbar_z > 0):
            raise ValueError("dbar_x and dbar_z must be positive")
        if self.n < 1 or self.n % 2 == 0:
            raise ValueError(f"n must be odd and >= 1, got {self.n}")

    def model(self) -> AnnealEnergy:
        return AnnealEnergy(self.n, self.dbar_x, self.dbar_z)


@dataclass(frozen=True)
class ComplexAmplitude:
    """Oscillation amplitude alpha >= 0 with phase xi in (-pi, pi]."""

    alpha_tilde: float
    xi: float

    def __post_init__(self):
        if self.alpha_tilde < 0:
            raise ValueError("alpha_tilde must be nonnegative")
        if not -math.pi < self.xi <= math.pi + 1e-15:
            raise ValueError("xi must lie in (-pi, pi]")

    @property
    def value(self) -> complex:
        return self.alpha_tilde * cmath.exp(-1j * self.xi)

    @classmethod
    def from_value(cls, w: complex) -> "ComplexAmplitude":
        w = complex(w)
        alpha = math.hypot(w.real, w.imag)
        # atan2 instead of cmath.phase: the latter overflows on denormals
        xi = -math.atan2(w.imag, w.real) if alpha > 0 else 0.0
        if xi <= -math.pi:
            xi += 2 * math.pi
        return cls(alpha, xi)


def anneal_energy(tau, spec: AnnealSpec):
    """sqrt((1-tau^n)^2 dx^2 + tau^(2n) dz^2), principal branch off axis."""
    return spec.model().energy(tau)


def anneal_turning_points(spec: AnnealSpec) -> list:
    """All 2n energy zeros, labeled like the sweep model (upper half-plane,
    k by descending real part; lower mirror)."""
    return _label_turning_points(spec.model())


def anneal_geometry(spec: AnnealSpec, box=None, step_scale: float = 1.0) -> StokesGeometry:
    """Stokes geometry restricted to the window [0, 1]: only crossings that
    land inside the interval are retained (fewer than the infinite-interval
    count once n > 1)."""
    return build_geometry(spec.model(), window=(0.0, 1.0), box=box, step_scale=step_scale)


def crossing_closed_form_n1(spec: AnnealSpec) -> float:
    """tau_r = dx^2 / (dx^2 + dz^2) for the linear schedule."""
    return spec.dbar_x**2 / (spec.dbar_x**2 + spec.dbar_z**2)


def inverse_square_gap_integral(spec: AnnealSpec) -> float:
    model = spec.model()
    val, _ = quad(lambda t: 1.0 / float(np.real(model.energy(t)) ** 2), 0.0, 1.0,
                  limit=400, epsabs=1e-13, epsrel=1e-12)
    return val


@dataclass
class AnnealControl:
    """Coefficient c(tau) applied to the fixed operator
    -dbar_x sx + dbar_z sz on top of the bare schedule."""

    spec: AnnealSpec
    coefficient: ControlFunction

    def x_coefficient(self, tau: float) -> float:
        return self.spec.dbar_x * (1.0 - tau**self.spec.n) - self.spec.dbar_x * self.coefficient(tau)

    def z_coefficient(self, tau: float) -> float:
        return self.spec.dbar_z * tau**self.spec.n + self.spec.dbar_z * self.coefficient(tau)

    def hamiltonian(self, tau: float) -> np.ndarray:
        sx = np.array([[0, 1], [1, 0]], dtype=complex)
        sz = np.array([[1, 0], [0, -1]], dtype=complex)
        return self.x_coefficient(tau) * sx + self.z_coefficient(tau) * sz


def _per_turning_point(spec: AnnealSpec, amplitudes) -> list:
    """Amplitude lists are indexed by the upper-turning-point label
    k = 0 .. n-1; components whose crossings fall outside [0, 1] are simply
    never sampled by the geometry."""
    amps = list(amplitudes)
    if len(amps) != spec.n:
        raise ValueError(f"expected {spec.n} amplitudes (one per upper turning point), "
                         f"got {len(amps)}")
    return amps


def anneal_control(spec: AnnealSpec, amplitudes, geometry: StokesGeometry) -> AnnealControl:
    """c(tau) = sum_k -(alpha_k / E) sin(phi_k(tau) + xi_k) with phi_k the
    phase integral of twice the schedule energy from tau_r,k; the sum runs
    over the crossings retained in the window."""
    amps = _per_turning_point(spec, amplitudes)
    table = geometry.phase_table
    comps = [(amps[int(k)].alpha_tilde, amps[int(k)].xi, 2.0 * table.value(float(tr)))
             for tr, k in zip(geometry.crossings, geometry.k_indices)
             if amps[int(k)].alpha_tilde != 0.0]
    n = spec.n
    dx2, dz2 = spec.dbar_x**2, spec.dbar_z**2

    def evaluator(t: float) -> float:
        if not comps:
            return 0.0
        tn = t**n
        e = math.sqrt((1.0 - tn) ** 2 * dx2 + tn * tn * dz2)
        ph2 = 2.0 * table.value(t)
        acc = 0.0
        for alpha, xi, ref in comps:
            acc -= (alpha / e) * math.sin(ph2 - ref + xi)
        return acc

    desc = "annealing resonance drive " + ",".join(
        f"(a={a.alpha_tilde:.4g},xi={a.xi:.4g})" for a in amps)
    return AnnealControl(spec, ControlFunction(evaluator, desc))


def finite_window_amplitude(spec: AnnealSpec, geometry: StokesGeometry | None = None) -> complex:
    """Leading-order free transition amplitude on [0, 1]: the signed
    crossing sum restricted to the retained crossings."""
    geo = geometry or anneal_geometry(spec)
    amp = 0.0 + 0.0j
    for tau_r, k, d in zip(geo.crossings, geo.k_indices, geo.actions):
        th_in = geo.phase(0.0, tau_r)
        th_out = geo.phase(tau_r, 1.0)
        amp += (-1) ** int(k) * cmath.exp(1j * th_in - 1j * th_out) * math.exp(-2 * d)
    return amp


def anneal_Pe_perturbative(spec: AnnealSpec, amplitudes, geometry: StokesGeometry | None = None) -> float:
    """|free amplitude - (dx dz / 2) sum_k phase_k e^{-i xi_k} alpha_k I|^2
    with I the inverse-square-gap integral; both terms complex."""
    geo = geometry or anneal_geometry(spec)
    amps = _per_turning_point(spec, amplitudes)
    inv2 = inverse_square_gap_integral(spec)
    total = finite_window_amplitude(spec, geo)
    pref = spec.dbar_x * spec.dbar_z / 2.0
    for tau_r, k in zip(geo.crossings, geo.k_indices):
        ph = cmath.exp(1j * geo.phase(0.0, tau_r) - 1j * geo.phase(tau_r, 1.0))
        total -= pref * ph * amps[int(k)].value * inv2
    return abs(total) ** 2


def tune_complex_amplitudes(spec: AnnealSpec, geometry: StokesGeometry | None = None) -> list:
    """Solve for (alpha, xi) cancelling the complex free amplitude.

    Returns one ComplexAmplitude per upper turning point k = 0 .. n-1;
    turning points whose crossing falls outside [0, 1] get amplitude zero,
    and the full cancellation weight is assigned to the first retained
    crossing.
    """
    geo = geometry or anneal_geometry(spec)
    if len(geo.crossings) == 0:
        raise ValueError("no crossings retained inside [0, 1]; nothing to tune")
    free = finite_window_amplitude(spec, geo)
    inv2 = inverse_square_gap_integral(spec)
    out = [ComplexAmplitude(0.0, 0.0)] * spec.n
    tau_r, k = float(geo.crossings[0]), int(geo.k_indices[0])
    ph = cmath.exp(1j * geo.phase(0.0, tau_r) - 1j * geo.phase(tau_r, 1.0))
    w = free * ph.conjugate() * 2.0 / (spec.dbar_x * spec.dbar_z * inv2)
    out[k] = ComplexAmplitude.from_value(w)
    return out


def propagate_anneal(spec: AnnealSpec, control: AnnealControl | None = None,
                     step_ctrl: StepControl | None = None,
                     sample_times=None) -> Trajectory:
    """Propagate from the tau=0 ground state under the (driven) schedule."""
    if control is None:
        n, dx, dz = spec.n, spec.dbar_x, spec.dbar_z
        ax = lambda t: dx * (1.0 - t**n)
        bz = lambda t: dz * t**n
    else:
        ax, bz = control.x_coefficient, control.z_coefficient
    init = QuantumState(frame_xz(spec.dbar_x, 0.0).ground, 0.0)
    ctrl = step_ctrl or StepControl(phase_cap=0.05)
    return propagate_xz(ax, bz, init, 0.0, 1.0, ctrl, sample_times)


def anneal_Pe_numeric(spec: AnnealSpec, amplitudes=None,
                      geometry: StokesGeometry | None = None) -> float:
    """Full propagation: excited-state population at tau = 1."""
    geo = geometry or anneal_geometry(spec)
    if amplitudes is None:
        amplitudes = [ComplexAmplitude(0.0, 0.0)] * spec.n
    ctl = anneal_control(spec, amplitudes, geo)
    traj = propagate_anneal(spec, ctl)
    fr = frame_xz(ctl.x_coefficient(1.0), ctl.z_coefficient(1.0))
    psi = traj.states[-1]
    return float(abs(np.vdot(fr.excited, psi)) ** 2)


def annealing_problem(spec: AnnealSpec, m: int = 2000, margin: float = 0.1) -> OptProblem:
    """Optimal-control formulation of the schedule: H = A + u B with
    A = dbar_x sx, B = -dbar_x sx + dbar_z sz; the box is [0,1] widened by
    ``margin`` so small oscillations near the endpoints are not clipped.
    Initial state and cost Hamiltonian stay pinned to u = 0 and u = 1."""
    bounds = (-margin, 1.0 + margin)
    grid = ControlGrid.from_function(lambda t: t**spec.n, 0.0, 1.0, m, bounds)
    init = QuantumState(frame_xz(spec.dbar_x, 0.0).ground, 0.0)
    return OptProblem(grid, drift_x=spec.dbar_x, drift_z=0.0,
                      ctl_x=-spec.dbar_x, ctl_z=spec.dbar_z,
                      cost_x=0.0, cost_z=spec.dbar_z,
                      initial_state=init, delta_tilde=None)


def fit_complex_amplitude(spec: AnnealSpec, geometry: StokesGeometry | None = None,
                          m: int = 2000, margin: float = 0.1, trim: float = 0.05,
                          grad_tol: float = 1e-8) -> tuple:
    """Optimize the schedule numerically and fit the interior oscillation to
    the resonance ansatz with free phases; returns (fits, optimize result)."""
    from . import optctl
    geo = geometry or anneal_geometry(spec)
    prob = annealing_problem(spec, m=m, margin=margin)
    res = optctl.optimize(prob, optctl.OptimizeConfig(grad_tol=grad_tol))
    n = spec.n
    u0 = ControlFunction(lambda t: t**n, f"u0 = tau^{n}")
    fits = optctl.fit_resonance(res.grid, u0, geo, xi_free=True, trim=trim)
    return fits, res
