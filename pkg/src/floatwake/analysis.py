"""Frequency-domain experiment suite.

Chirp excitation with FFT-ratio frequency response estimation, a
stepped-sine sweep that waits for quasi-steady power before averaging,
Strouhal conversion and spectral peak extraction for control signals.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import SimConfig
from .coupled import (discrete_platform, set_bottom_fixed, spin_up,
                      step_coupled)


class AnalysisError(ValueError):
    pass


# ---------------------------------------------------------------------------
# excitation signals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChirpSpec:
    f_start: float   # [Hz]
    f_end: float     # [Hz]
    duration: float  # [s]
    mean: float      # a_bar
    amplitude: float

    def __post_init__(self):
        if not (0.0 < self.f_start < self.f_end):
            raise AnalysisError("need 0 < f_start < f_end")
        if self.duration <= 0.0:
            raise AnalysisError("duration must be positive")


def chirp_signal(spec: ChirpSpec, dt: float, n_samples: int) -> np.ndarray:
    """Linear chirp a(t) = mean + amplitude sin(2 pi theta(t)).

    The instantaneous frequency rises linearly from f_start to f_end
    over the sweep duration; theta is its running integral.
    """
    if n_samples * dt > spec.duration + dt:
        raise AnalysisError("requested samples exceed the chirp duration")
    t = np.arange(n_samples) * dt
    theta = spec.f_start * t \
        + 0.5 * (spec.f_end - spec.f_start) * t * t / spec.duration
    return spec.mean + spec.amplitude * np.sin(2.0 * math.pi * theta)


# ---------------------------------------------------------------------------
# spectra
# ---------------------------------------------------------------------------

def dft(signal, dt: float):
    """Discrete Fourier transform with bin frequencies k / (N dt)."""
    x = np.asarray(signal, dtype=float)
    if x.size < 2:
        raise AnalysisError("need at least two samples")
    spectrum = np.fft.fft(x)
    freqs = np.arange(x.size) / (x.size * dt)
    return freqs, spectrum


@dataclass(frozen=True)
class FrfEstimate:
    """Complex response ratio on bins where the input has energy."""

    frequencies: np.ndarray
    values: np.ndarray
    input_label: str
    output_label: str

    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)

    def phase(self) -> np.ndarray:
        return np.angle(self.values)


def estimate_frf(input_signal, output_signal, dt: float,
                 magnitude_floor: float = 1.0e-3,
                 input_label: str = "input",
                 output_label: str = "output") -> FrfEstimate:
    """FFT-ratio H(f) = Y(f) / U(f) of mean-removed records.

    Bins whose input magnitude falls below magnitude_floor times the
    peak input magnitude are dropped; if none survive the input carried
    no usable excitation.
    """
    u = np.asarray(input_signal, dtype=float)
    y = np.asarray(output_signal, dtype=float)
    if u.shape != y.shape:
        raise AnalysisError("input and output lengths differ")
    if u.size < 2:
        raise AnalysisError("need at least two samples")
    u_spec = np.fft.rfft(u - u.mean())
    y_spec = np.fft.rfft(y - y.mean())
    freqs = np.fft.rfftfreq(u.size, dt)
    mag = np.abs(u_spec)
    noise = u.size * 1e-12 * max(1.0, float(np.abs(u).max()))
    if mag.max() <= noise:
        raise AnalysisError("input record carries no excitation")
    valid = mag >= magnitude_floor * mag.max()
    if not np.any(valid):
        raise AnalysisError("no frequency bin clears the input floor")
    return FrfEstimate(frequencies=freqs[valid],
                       values=y_spec[valid] / u_spec[valid],
                       input_label=input_label, output_label=output_label)


def strouhal(f: float, diameter: float, u_mag: float) -> float:
    """Dimensionless frequency f D / |u|."""
    if u_mag <= 0.0:
        raise AnalysisError("velocity magnitude must be positive")
    return f * diameter / u_mag


def dominant_frequency(signal, dt: float):
    """Peak of the magnitude spectrum and its near-integer harmonics.

    Returns (f0, harmonics); harmonics are local spectrum maxima within
    one bin of an integer multiple of f0.
    """
    x = np.asarray(signal, dtype=float)
    x = x - x.mean()
    if np.allclose(x, 0.0):
        raise AnalysisError("flat signal has no spectral peak")
    spec = np.abs(np.fft.rfft(x))
    freqs = np.fft.rfftfreq(x.size, dt)
    peak = 1 + int(np.argmax(spec[1:]))
    f0 = freqs[peak]
    harmonics = []
    for mult in range(2, int(freqs[-1] / f0) + 1):
        centre = mult * peak
        lo = max(1, centre - 1)
        hi = min(len(spec) - 1, centre + 1)
        if lo > hi:
            break
        k = lo + int(np.argmax(spec[lo:hi + 1]))
        if 0 < k < len(spec) - 1 and spec[k] >= spec[k - 1] and spec[k] >= spec[k + 1]:
            harmonics.append(freqs[k])
    return f0, harmonics


# ---------------------------------------------------------------------------
# coupled-model experiments
# ---------------------------------------------------------------------------

def run_control_signal(config: SimConfig, controls, spinup_steps=None,
                       spinup_control=None):
    """Drive the coupled model with a prescribed induction signal.

    Spins up first (default: two buffer lengths at the signal's first
    value), then applies the samples in order. Returns a dict of
    per-step arrays for the quantities the experiments consume.
    """
    controls = np.asarray(controls, dtype=float)
    disc = discrete_platform(config)
    a_init = controls[0] if spinup_control is None else spinup_control
    state = spin_up(config, disc, float(a_init), steps=spinup_steps)
    rows = {key: np.empty(len(controls)) for key in
            ("a0", "power_t0", "power_t1", "thrust", "nacelle_x",
             "phi", "phi_dot", "x", "x_dot")}
    for k, a0 in enumerate(controls):
        state, out = step_coupled(state, float(a0), config, disc)
        rows["a0"][k] = a0
        rows["power_t0"][k] = out.power_t0
        rows["power_t1"][k] = out.power_t1
        rows["thrust"][k] = out.thrust_t0
        rows["nacelle_x"][k] = out.nacelle_x
        rows["phi"][k] = state.platform.phi
        rows["phi_dot"][k] = state.platform.phi_dot
        rows["x"][k] = state.platform.x
        rows["x_dot"][k] = state.platform.x_dot
    return rows, state


def chirp_response(config: SimConfig, spec: ChirpSpec):
    """Chirp the induction and estimate the standard response channels.

    Returns FRF estimates for induction to nacelle position and
    induction to thrust, plus the raw records.
    """
    dt = config.numerics.dt_wake
    n_samples = int(spec.duration / dt)
    controls = chirp_signal(spec, dt, n_samples)
    rows, _ = run_control_signal(config, controls, spinup_control=spec.mean)
    label = config.platform_dofs
    frf_nacelle = estimate_frf(rows["a0"], rows["nacelle_x"], dt,
                               input_label="induction",
                               output_label=f"nacelle_x[{label}]")
    frf_thrust = estimate_frf(rows["a0"], rows["thrust"], dt,
                              input_label="induction",
                              output_label=f"thrust[{label}]")
    return frf_nacelle, frf_thrust, rows


# ---------------------------------------------------------------------------
# quasi-steady mean power (static and stepped-sine)
# ---------------------------------------------------------------------------

QUASI_STEADY_RTOL = 1.0e-3   # period-to-period change in mean total power
MIN_PERIODS = 5


def _window_mean_power(config, disc, state, controls):
    total = 0.0
    for a0 in controls:
        state, out = step_coupled(state, float(a0), config, disc)
        total += out.total_power
    return total / len(controls), state


def static_power(config: SimConfig, a: float, window_steps: int = 30,
                 max_windows: int = 40):
    """Quasi-steady total power under constant induction [W]."""
    disc = discrete_platform(config)
    state = spin_up(config, disc, a)
    controls = np.full(window_steps, a)
    prev, state = _window_mean_power(config, disc, state, controls)
    for _ in range(max_windows):
        mean, state = _window_mean_power(config, disc, state, controls)
        if abs(mean - prev) <= QUASI_STEADY_RTOL * abs(prev):
            return mean
        prev = mean
    return prev


@dataclass(frozen=True)
class SweepResult:
    frequencies: np.ndarray
    mean_power: np.ndarray     # [W]
    strouhal: np.ndarray
    converged: np.ndarray      # bool per frequency


def _sweep_window_steps(f: float, dt: float, max_periods: int = 8):
    """Steps covering close to an integer number of excitation periods.

    The window length is chosen so that its mismatch to a whole number
    of periods is minimal; otherwise the window mean oscillates with the
    sampling phase and the convergence test never settles.
    """
    best_m, best_steps, best_err = 1, max(1, round(1.0 / (f * dt))), math.inf
    for m in range(1, max_periods + 1):
        steps = max(1, round(m / (f * dt)))
        err = abs(steps * dt - m / f) / (m / f)
        if err < best_err:
            best_m, best_steps, best_err = m, steps, err
    return best_steps, best_m


def _sweep_single_frequency(args):
    config, f, a_bar, a_amp, max_windows = args
    dt = config.numerics.dt_wake
    disc = discrete_platform(config)
    state = spin_up(config, disc, a_bar)
    steps, periods = _sweep_window_steps(f, dt)
    t0 = 0.0
    prev = None
    converged = False
    windows = 0
    mean = math.nan
    while windows < max_windows:
        t = t0 + np.arange(steps) * dt
        controls = a_bar + a_amp * np.sin(2.0 * math.pi * f * t)
        mean, state = _window_mean_power(config, disc, state, controls)
        t0 += steps * dt
        windows += 1
        if prev is not None and windows * periods >= MIN_PERIODS \
                and abs(mean - prev) <= QUASI_STEADY_RTOL * abs(prev):
            converged = True
            break
        prev = mean
    return mean, converged


def stepped_sine_sweep(frequencies, a_bar: float, a_amp: float,
                       config: SimConfig, mode: str = "floating",
                       max_windows: int = 40, workers: int = 1) -> SweepResult:
    """Quasi-steady mean total power under sinusoidal induction.

    Each frequency runs until the period-averaged power settles; entries
    that exhaust the window budget are flagged, not fatal. Frequencies
    are independent jobs, so the sweep parallelises across processes.
    """
    if mode not in ("fixed", "floating"):
        raise AnalysisError("mode must be 'fixed' or 'floating'")
    run_config = set_bottom_fixed(config) if mode == "fixed" else config
    freqs = np.asarray(frequencies, dtype=float)
    if np.any(freqs <= 0.0):
        raise AnalysisError("sweep frequencies must be positive")
    jobs = [(run_config, float(f), a_bar, a_amp, max_windows) for f in freqs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_single_frequency, jobs))
    else:
        results = [_sweep_single_frequency(j) for j in jobs]
    means = np.array([r[0] for r in results])
    converged = np.array([r[1] for r in results])
    d = config.turbine.rotor_diameter
    u_mag = float(np.linalg.norm(config.numerics.inflow_vector))
    st = np.array([strouhal(f, d, u_mag) for f in freqs])
    return SweepResult(frequencies=freqs, mean_power=means,
                       strouhal=st, converged=converged)
