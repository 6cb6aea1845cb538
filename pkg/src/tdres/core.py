"""Two-level (and small N-level) states, eigenframes, and propagation.

The dimensionless model is i d|psi>/dtau = (u(tau) sigma_z + dt sigma_x)|psi>
with a power-law sweep u0(tau) = tau^n as the undriven baseline.  The
integrator is a fixed 4th-order one-step scheme (two-point Gauss commutator
form) whose steps are exactly unitary, so norm is conserved to rounding; the
step is capped at 0.1 / (local energy) so the fastest oscillation at
frequency 2E stays resolved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import NumericalError, StepUnderflowError

_SQRT3_6 = math.sqrt(3.0) / 6.0


@dataclass(frozen=True)
class ModelParams:
    """Power-law sweep model: u0(tau) = tau^n against a constant gap."""

    n: int
    delta_tilde: float
    tau0: float
    tauf: float

    def __post_init__(self):
        if self.n < 1 or self.n % 2 == 0:
            raise ValueError(f"n must be odd and >= 1, got {self.n}")
        if not self.delta_tilde > 0:
            raise ValueError(f"delta_tilde must be positive, got {self.delta_tilde}")
        if not self.tau0 < self.tauf:
            raise ValueError(f"need tau0 < tauf, got [{self.tau0}, {self.tauf}]")

    @property
    def window(self):
        return (self.tau0, self.tauf)


@dataclass(frozen=True)
class QuantumState:
    """Normalized complex state vector with a time stamp."""

    amplitudes: np.ndarray
    tau: float

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > 1e-9:
            raise ValueError(f"state norm {nrm!r} deviates from 1 by more than 1e-9")

    @property
    def dim(self) -> int:
        return len(self.amplitudes)


@dataclass(frozen=True)
class ControlFunction:
    """Scalar control u(tau) with a human-readable description."""

    evaluator: Callable[[float], float]
    description: str = ""

    def __call__(self, tau: float) -> float:
        return self.evaluator(tau)


def free_sweep(n: int) -> ControlFunction:
    """The undriven control u0(tau) = tau^n."""
    if n == 1:
        return ControlFunction(lambda t: t, "u0(tau) = tau")
    return ControlFunction(lambda t, _n=n: t**_n, f"u0(tau) = tau^{n}")


@dataclass(frozen=True)
class EigenFrame:
    """Instantaneous eigenpair of u sigma_z + dt sigma_x.

    Column convention: excited = (cos t/2, sin t/2), ground = (sin t/2,
    -cos t/2) with tan t = dt/u, t in (0, pi).
    """

    energy: float
    mixing_angle: float
    ground: np.ndarray
    excited: np.ndarray


def frame_xz(ax: float, bz: float) -> EigenFrame:
    """Eigenframe of bz*sigma_z + ax*sigma_x for ax > 0."""
    energy = math.hypot(ax, bz)
    theta = math.atan2(ax, bz)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    excited = np.array([c, s], dtype=complex)
    ground = np.array([s, -c], dtype=complex)
    return EigenFrame(energy, theta, ground, excited)


def eigenframe(u_value: float, delta_tilde: float) -> EigenFrame:
    if not delta_tilde > 0:
        raise ValueError("delta_tilde must be positive")
    return frame_xz(delta_tilde, u_value)


def free_energy(tau, params: ModelParams):
    """Positive eigenvalue sqrt(tau^(2n) + dt^2); principal branch for
    complex tau (used by the Stokes-geometry machinery)."""
    tn = np.asarray(tau) ** params.n
    return np.sqrt(tn * tn + params.delta_tilde**2)


def ground_state(u_value: float, delta_tilde: float, tau: float) -> QuantumState:
    return QuantumState(frame_xz(delta_tilde, u_value).ground, tau)


def transition_probability(final: QuantumState, frame_final: EigenFrame,
                           initial_frame_label: str = "ground") -> float:
    """Population transferred out of the initial adiabatic branch."""
    target = frame_final.excited if initial_frame_label == "ground" else frame_final.ground
    return float(abs(np.vdot(target, final.amplitudes)) ** 2)


@dataclass(frozen=True)
class StepControl:
    """Step policy for the propagator.

    phase_cap bounds step * local_energy; fixed_step overrides the cap with a
    constant step; adaptive turns on step-doubling error control at rel_tol.
    """

    phase_cap: float = 0.1
    fixed_step: float | None = None
    adaptive: bool = False
    rel_tol: float = 1e-10
    min_step: float = 1e-12


@dataclass
class Trajectory:
    taus: np.ndarray
    states: np.ndarray  # (S, N) complex
    description: str = ""

    @property
    def final(self) -> QuantumState:
        return QuantumState(self.states[-1], float(self.taus[-1]))

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(np.linalg.norm(self.states, axis=1) - 1.0)))


def _magnus_step_xz(ax, bz, t, h, p0, p1):
    """One exactly-unitary 4th-order step for H = ax(t) sx + bz(t) sz."""
    t1 = t + (0.5 - _SQRT3_6) * h
    t2 = t + (0.5 + _SQRT3_6) * h
    a1 = ax(t1)
    b1 = bz(t1)
    a2 = ax(t2)
    b2 = bz(t2)
    if not (math.isfinite(a1) and math.isfinite(b1) and math.isfinite(a2) and math.isfinite(b2)):
        raise NumericalError("core.propagate", f"non-finite Hamiltonian coefficient near tau={t!r}")
    kx = 0.5 * h * (a1 + a2)
    kz = 0.5 * h * (b1 + b2)
    ky = -(_SQRT3_6 * h * h) * (a2 * b1 - a1 * b2)
    r = math.sqrt(kx * kx + ky * ky + kz * kz)
    if r > 1e-150:
        c = math.cos(r)
        sn = math.sin(r) / r
    else:
        c, sn = 1.0, 1.0
    q0 = (c - 1j * sn * kz) * p0 + (-1j * kx - ky) * sn * p1
    q1 = (-1j * kx + ky) * sn * p0 + (c + 1j * sn * kz) * p1
    return q0, q1


def propagate_xz(ax: Callable[[float], float], bz: Callable[[float], float],
                 initial: QuantumState, tau0: float, tauf: float,
                 step_ctrl: StepControl | None = None,
                 sample_times: Sequence[float] | None = None,
                 description: str = "") -> Trajectory:
    """Propagate i d psi/dtau = (ax(tau) sx + bz(tau) sz) psi."""
    ctrl = step_ctrl or StepControl()
    if not tau0 < tauf:
        raise ValueError("need tau0 < tauf")
    if sample_times is None:
        samples = [float(tau0), float(tauf)]
    else:
        samples = [float(s) for s in sample_times]
        if any(s2 <= s1 for s1, s2 in zip(samples, samples[1:])):
            raise ValueError("sample_times must be strictly increasing")
        if samples[0] < tau0 - 1e-12 or samples[-1] > tauf + 1e-12:
            raise ValueError("sample_times must lie within [tau0, tauf]")
        if samples[0] > tau0:
            samples = [float(tau0)] + samples
        if samples[-1] < tauf:
            samples = samples + [float(tauf)]
    p0, p1 = complex(initial.amplitudes[0]), complex(initial.amplitudes[1])
    out = np.empty((len(samples), 2), dtype=complex)
    out[0] = (p0, p1)
    t = float(tau0)

    def _advance(t, target, p0, p1):
        while target - t > 1e-14 * max(1.0, abs(target)):
            a0 = ax(t)
            b0 = bz(t)
            if not (math.isfinite(a0) and math.isfinite(b0)):
                raise NumericalError("core.propagate", f"non-finite control value at tau={t!r}")
            if ctrl.fixed_step is not None:
                h = ctrl.fixed_step
            else:
                eloc = math.hypot(a0, b0)
                h = ctrl.phase_cap / eloc if eloc > 1e-300 else ctrl.phase_cap
            if h < ctrl.min_step:
                raise StepUnderflowError("core.propagate",
                                         f"step underflow at tau={t!r} (h={h!r}); control may be singular")
            h = min(h, target - t)
            if ctrl.adaptive:
                while True:
                    f0, f1 = _magnus_step_xz(ax, bz, t, h, p0, p1)
                    m0, m1 = _magnus_step_xz(ax, bz, t, h / 2, p0, p1)
                    g0, g1 = _magnus_step_xz(ax, bz, t + h / 2, h / 2, m0, m1)
                    err = abs(f0 - g0) + abs(f1 - g1)
                    if err <= ctrl.rel_tol or h <= ctrl.min_step:
                        p0, p1 = g0, g1
                        t += h
                        break
                    h = max(ctrl.min_step, h * max(0.2, 0.9 * (ctrl.rel_tol / err) ** 0.2))
            else:
                p0, p1 = _magnus_step_xz(ax, bz, t, h, p0, p1)
                t += h
        return p0, p1

    for i, target in enumerate(samples[1:], start=1):
        p0, p1 = _advance(t, target, p0, p1)
        t = target
        out[i] = (p0, p1)
    return Trajectory(np.array(samples), out, description)


def propagate(control: ControlFunction, delta_tilde: float, initial: QuantumState,
              tau0: float, tauf: float, step_ctrl: StepControl | None = None,
              sample_times: Sequence[float] | None = None) -> Trajectory:
    """Propagate under u(tau) sigma_z + delta_tilde sigma_x."""
    if not delta_tilde > 0:
        raise ValueError("delta_tilde must be positive")
    dt_const = float(delta_tilde)
    return propagate_xz(lambda t: dt_const, control.evaluator, initial, tau0, tauf,
                        step_ctrl, sample_times, description=control.description)


def propagate_hamiltonian(h_fn: Callable[[float], np.ndarray], initial: QuantumState,
                          tau0: float, tauf: float, *, phase_cap: float = 0.1,
                          sample_times: Sequence[float] | None = None) -> Trajectory:
    """N-level propagation under a Hermitian matrix-valued H(tau).

    Same 4th-order two-point Gauss scheme; the matrix exponential is taken
    through a Hermitian eigendecomposition, so each step is exactly unitary.
    """
    if sample_times is None:
        samples = [float(tau0), float(tauf)]
    else:
        samples = [float(s) for s in sample_times]
        if samples[0] > tau0:
            samples = [float(tau0)] + samples
        if samples[-1] < tauf:
            samples = samples + [float(tauf)]
    psi = np.array(initial.amplitudes, dtype=complex)
    out = np.empty((len(samples), len(psi)), dtype=complex)
    out[0] = psi
    t = float(tau0)
    hnorm = float(np.linalg.norm(h_fn(t), 2))
    for i, target in enumerate(samples[1:], start=1):
        while t < target:
            h = min(phase_cap / max(hnorm, 1e-12), target - t)
            t1 = t + (0.5 - _SQRT3_6) * h
            t2 = t + (0.5 + _SQRT3_6) * h
            H1 = h_fn(t1)
            H2 = h_fn(t2)
            K = 0.5 * h * (H1 + H2) - 1j * (_SQRT3_6 * h * h / 2.0) * (H2 @ H1 - H1 @ H2)
            w, V = np.linalg.eigh(K)
            psi = V @ (np.exp(-1j * w) * (V.conj().T @ psi))
            hnorm = max(abs(w[0]), abs(w[-1])) / h if h > 0 else hnorm
            t += h
        t = target
        out[i] = psi
    return Trajectory(np.array(samples), out)


def trajectory_rows(traj: Trajectory, frame_for_tau: Callable[[float], EigenFrame]):
    """Rows tau,re0,im0,re1,im1,Pg,Pe for CSV export."""
    rows = []
    for tau, psi in zip(traj.taus, traj.states):
        fr = frame_for_tau(float(tau))
        pg = abs(np.vdot(fr.ground, psi)) ** 2
        pe = abs(np.vdot(fr.excited, psi)) ** 2
        rows.append((float(tau), psi[0].real, psi[0].imag, psi[1].real, psi[1].imag, pg, pe))
    return rows


TRAJECTORY_CSV_HEADER = ("tau", "re0", "im0", "re1", "im1", "Pg", "Pe")
