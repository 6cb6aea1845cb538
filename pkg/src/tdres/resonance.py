"""Time-dependent resonance drives and their perturbative analysis.

The drive adds, per real-axis crossing tau_r,k, an oscillation
-(alpha_k / E(tau)) sin(phi_k(tau) + xi_k) on top of the sweep tau^n, with
phi_k(tau) = 2 * integral_{tau_r,k}^{tau} E(s) ds, so the instantaneous
drive frequency equals twice the instantaneous gap.  At first order the
k-th crossing term of the transition amplitude becomes
(-1)^k exp(-2 D_k) - (alpha_k * dt / 2) * integral of E^-2, which is nulled
by the closed-form optimal amplitudes.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as _gamma

from .core import ControlFunction, ModelParams
from .errors import NumericalError
from .stokes import StokesGeometry, default_geometry


class PerturbativeValidityWarning(UserWarning):
    """First-order correction is large; the prediction is extrapolating."""


@dataclass(frozen=True)
class ResonanceProtocol:
    """Per-crossing amplitudes and phases defining the oscillatory control."""

    alphas: np.ndarray
    phases: np.ndarray
    crossings: np.ndarray
    params: ModelParams
    geometry: StokesGeometry = field(repr=False, default=None)

    def __post_init__(self):
        alphas = np.atleast_1d(np.asarray(self.alphas, dtype=float))
        phases = np.atleast_1d(np.asarray(self.phases, dtype=float))
        crossings = np.atleast_1d(np.asarray(self.crossings, dtype=float))
        if not (len(alphas) == len(phases) == len(crossings)):
            raise ValueError(
                f"length mismatch: {len(alphas)} alphas, {len(phases)} phases, "
                f"{len(crossings)} crossings")
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "crossings", crossings)

    @classmethod
    def from_geometry(cls, params: ModelParams, geometry: StokesGeometry,
                      alphas, phases=None) -> "ResonanceProtocol":
        alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
        if phases is None:
            phases = np.zeros_like(alphas)
        return cls(alphas, phases, geometry.crossings.copy(), params, geometry)


@dataclass(frozen=True)
class HarmonicProtocol:
    """Constant-frequency comparison drive A sin(omega * tau)."""

    amplitude: float
    omega_tilde: float

    def __post_init__(self):
        if not math.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")


def _geometry_for(protocol: ResonanceProtocol) -> StokesGeometry:
    if protocol.geometry is not None:
        return protocol.geometry
    return default_geometry(protocol.params)


def build_control(protocol: ResonanceProtocol, geometry: StokesGeometry | None = None) -> ControlFunction:
    """u(tau) = tau^n + sum_k -(alpha_k/E) sin(phi_k + xi_k), phases from the
    cached cumulative-energy table (interpolation error < 1e-8)."""
    geo = geometry or _geometry_for(protocol)
    n = protocol.params.n
    dd = protocol.params.delta_tilde**2
    table = geo.phase_table
    comps = [(float(a), float(xi), 2.0 * table.value(float(tr)))
             for a, xi, tr in zip(protocol.alphas, protocol.phases, protocol.crossings)
             if a != 0.0]
    if not comps:
        ev = (lambda t: t) if n == 1 else (lambda t, _n=n: t**_n)
        return ControlFunction(ev, f"u0(tau) = tau^{n}")
    tval = table.value

    def evaluator(t: float) -> float:
        p = t**n
        e = math.sqrt(p * p + dd)
        ph2 = 2.0 * tval(t)
        acc = 0.0
        for a, xi, ref in comps:
            acc -= (a / e) * math.sin(ph2 - ref + xi)
        return p + acc

    desc = (f"resonance drive n={n} alphas=" +
            "[" + ",".join(f"{a:.6g}" for a in protocol.alphas) + "]")
    return ControlFunction(evaluator, desc)


def inverse_square_gap_integral(params: ModelParams, tau0: float | None = None,
                                tauf: float | None = None) -> float:
    """integral of E^-2 over the window (adaptive quadrature)."""
    t0 = params.tau0 if tau0 is None else tau0
    tf = params.tauf if tauf is None else tauf
    n, dd = params.n, params.delta_tilde**2

    def f(t):
        p = t**n
        return 1.0 / (p * p + dd)

    val, _ = quad(f, t0, tf, points=[0.0] if t0 < 0 < tf else None,
                  limit=400, epsabs=1e-13, epsrel=1e-12)
    return val


def optimal_amplitudes(params: ModelParams, geometry: StokesGeometry | None = None) -> np.ndarray:
    """Per-crossing amplitudes 2 (-1)^k exp(-2 D_k) / (dt * integral E^-2)
    that null the first-order transition amplitude."""
    geo = geometry or default_geometry(params)
    denom = params.delta_tilde * inverse_square_gap_integral(params, *geo.window)
    return np.array([2.0 * (-1) ** int(k) * math.exp(-2.0 * d) / denom
                     for k, d in zip(geo.k_indices, geo.actions)])


def optimal_amplitude_closed_form(n: int, delta_tilde: float, k: int = 0) -> float:
    """Long-window closed forms of the optimal amplitudes for n = 1, 3."""
    if n == 1:
        return (2.0 / math.pi) * math.exp(-delta_tilde**2 * math.pi / 2.0)
    if n == 3:
        expo = (delta_tilde ** (4.0 / 3.0) * math.sin(math.pi * (1.0 / 6.0 + k / 3.0))
                * math.sqrt(math.pi) * _gamma(7.0 / 6.0) / _gamma(5.0 / 3.0))
        return 3.0 * (-1) ** k * math.exp(-expo) / (delta_tilde ** (-2.0 / 3.0) * math.pi)
    raise ValueError(f"closed form available for n in (1, 3), got n={n}")


def _first_order_terms(params: ModelParams, alphas, geo: StokesGeometry,
                       tau0=None, tauf=None):
    t0 = geo.window[0] if tau0 is None else tau0
    tf = geo.window[1] if tauf is None else tauf
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    if len(alphas) != len(geo.crossings):
        raise ValueError(f"expected {len(geo.crossings)} amplitudes, got {len(alphas)}")
    inv2 = inverse_square_gap_integral(params, t0, tf)
    terms = []
    corr_max = 0.0
    for a, tau_r, k, d in zip(alphas, geo.crossings, geo.k_indices, geo.actions):
        ph = cmath.exp(1j * geo.phase(t0, tau_r) - 1j * geo.phase(tau_r, tf))
        corr = a * params.delta_tilde * inv2 / 2.0
        corr_max = max(corr_max, abs(corr))
        terms.append(ph * ((-1) ** int(k) * math.exp(-2.0 * d) - corr))
    return terms, corr_max


def predict_Pe_perturbative(params: ModelParams, alphas,
                            geometry: StokesGeometry | None = None,
                            tau0: float | None = None, tauf: float | None = None) -> float:
    """First-order transition probability under the resonance drive.

    Documented validity: |alpha_k| up to a couple of optimal amplitudes; a
    PerturbativeValidityWarning is emitted once the first-order amplitude
    correction exceeds 0.5.
    """
    geo = geometry or default_geometry(params)
    terms, corr_max = _first_order_terms(params, alphas, geo, tau0, tauf)
    if corr_max > 0.5:
        warnings.warn(
            f"first-order correction magnitude {corr_max:.3g} exceeds 0.5; "
            "prediction is outside its validity range", PerturbativeValidityWarning,
            stacklevel=2)
    return abs(sum(terms)) ** 2


def regularized_confluent_hypergeometric(a, b, z, *, rtol=1e-12, max_terms=10_000) -> complex:
    """1F1(a, b, z) / Gamma(b) by direct series.

    The b = 0 pole (and nonpositive integers generally) is handled through
    the shift identity: the k = 0..m terms vanish, leaving
    (a)_{m+1} z^{m+1} / (m+1)! times the series with b -> m + 2.
    """
    a = complex(a)
    z = complex(z)
    bc = complex(b)
    if abs(bc.imag) < 1e-300 and abs(bc.real - round(bc.real)) < 1e-300 and bc.real <= 0:
        m = int(round(-bc.real))
        pref = z ** (m + 1) / math.factorial(m + 1)
        for j in range(m + 1):
            pref *= a + j
        return pref * regularized_confluent_hypergeometric(
            a + m + 1, m + 2, z, rtol=rtol, max_terms=max_terms)
    term = 1.0 / complex(_gamma(bc))
    total = term
    small_streak = 0
    for k in range(max_terms):
        term = term * (a + k) * z / ((bc + k) * (k + 1))
        total += term
        if abs(term) <= rtol * max(abs(total), 1e-300):
            small_streak += 1
            if small_streak >= 2:
                return total
        else:
            small_streak = 0
    raise NumericalError("resonance.regularized_confluent_hypergeometric",
                         f"series did not converge within {max_terms} terms (|z|={abs(z):.3g})")


def _harmonic_factor(delta_tilde: float, omega_tilde: float) -> complex:
    return regularized_confluent_hypergeometric(
        -1j * delta_tilde**2 / 2.0, 0.0, 1j * omega_tilde / 2.0)


def harmonic_Pe(delta_tilde: float, amplitude: float, omega_tilde: float) -> float:
    """Transition probability under a constant-frequency drive, with the
    unit-modulus interference constant phased for maximal destruction (the
    phase convention is reported by harmonic_interference_phase)."""
    f = _harmonic_factor(delta_tilde, omega_tilde)
    x = math.sqrt(2.0) * amplitude * math.pi * abs(f)
    return math.exp(-math.pi * delta_tilde**2) * (1.0 - x) ** 2


def harmonic_interference_phase(delta_tilde: float, omega_tilde: float) -> float:
    """arg of the interference constant used by harmonic_Pe (|C| = 1)."""
    f = _harmonic_factor(delta_tilde, omega_tilde)
    return math.pi - cmath.phase(f)


def harmonic_optimal_amplitude(delta_tilde: float, omega_tilde: float) -> float:
    """Amplitude nulling harmonic_Pe: 1 / (sqrt(2) pi |1F1~|)."""
    f = _harmonic_factor(delta_tilde, omega_tilde)
    if abs(f) < 1e-14:
        raise NumericalError("resonance.harmonic_optimal_amplitude",
                             "hypergeometric factor vanishes; optimum undefined")
    return 1.0 / (math.sqrt(2.0) * math.pi * abs(f))


@dataclass
class ScalingReport:
    slope: float
    residual_rms: float
    alphas: np.ndarray
    pes: np.ndarray


def large_amplitude_scaling_report(params: ModelParams,
                                   geometry: StokesGeometry | None = None,
                                   m_lo: float = 10.0, m_hi: float = 100.0,
                                   n_points: int = 25) -> ScalingReport:
    """Log-log slope of the perturbative P_e against the drive amplitude for
    amplitudes well past the optimum (all components scaled together)."""
    geo = geometry or default_geometry(params)
    opt = optimal_amplitudes(params, geo)
    ms = np.logspace(math.log10(m_lo), math.log10(m_hi), n_points)
    ref = abs(opt[0])
    pes = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PerturbativeValidityWarning)
        for m in ms:
            pes.append(predict_Pe_perturbative(params, m * opt, geo))
    pes = np.array(pes)
    x = np.log(ms * ref)
    y = np.log(pes)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return ScalingReport(float(slope), float(np.sqrt(np.mean(resid**2))),
                         ms * ref, pes)
